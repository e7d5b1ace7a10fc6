"""Deterministic numerical kernels shared by the rest of the package.

Three tools live here:

* ``quad_adaptive``  -- globally adaptive Gauss-Kronrod (7/15) quadrature.
* ``integrate_ode``  -- embedded Runge-Kutta 4(5) integration of real or
  complex state vectors with a per-step observer and dense output.
* ``MonotoneTable`` / ``invert_monotone`` -- monotone cubic Hermite tables
  and their inversion by safeguarded Newton/bisection.
"""

from __future__ import annotations

import bisect
import heapq
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import RK45
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, NonConvergenceError

__all__ = [
    "Tolerance",
    "QUAD_TOL",
    "ODE_TOL",
    "quad_adaptive",
    "gk15_panels",
    "integrate_ode",
    "MonotoneTable",
    "invert_monotone",
]


@dataclass(frozen=True)
class Tolerance:
    rel: float
    abs: float = 0.0
    max_steps: int = 100_000

    def __post_init__(self):
        if not self.rel > 0:
            raise ValueError(f"rel tolerance must be > 0, got {self.rel}")
        if not self.abs >= 0:
            raise ValueError(f"abs tolerance must be >= 0, got {self.abs}")
        if not self.max_steps > 0:
            raise ValueError(f"max_steps must be > 0, got {self.max_steps}")

    def scaled(self, factor: float) -> "Tolerance":
        return Tolerance(self.rel * factor, self.abs * factor, self.max_steps)


QUAD_TOL = Tolerance(rel=1e-10, abs=0.0, max_steps=20_000)
ODE_TOL = Tolerance(rel=1e-9, abs=1e-12, max_steps=2_000_000)


# --------------------------------------------------------------------------
# Gauss-Kronrod quadrature
# --------------------------------------------------------------------------

# QUADPACK 15-point Kronrod abscissae (non-negative half) and weights.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full 15-node layout: -x_0..-x_6, 0, x_6..x_0
_NODES = np.concatenate([-_XGK[:7], [0.0], _XGK[6::-1]])
_WK15 = np.concatenate([_WGK[:7], [_WGK[7]], _WGK[6::-1]])
_WG7 = np.zeros(15)
# Gauss nodes are the odd entries of _XGK (indices 1, 3, 5) and the centre.
for _i, _w in zip((1, 3, 5), _WG[:3]):
    _WG7[_i] = _w
    _WG7[14 - _i] = _w
_WG7[7] = _WG[3]


def _gk15(f, a, b):
    half = 0.5 * (b - a)
    centre = 0.5 * (a + b)
    x = centre + half * _NODES
    fx = np.asarray(f(x), dtype=float)
    if fx.shape != x.shape:
        fx = np.broadcast_to(fx, x.shape)
    if not np.all(np.isfinite(fx)):
        raise DomainError(f"integrand is not finite on [{a}, {b}]")
    k15 = half * float(np.dot(_WK15, fx))
    g7 = half * float(np.dot(_WG7, fx))
    # QUADPACK-style error scaling, with a roundoff floor.
    mean = 0.5 * k15 / half if half else 0.0
    resasc = abs(half) * float(np.dot(_WK15, np.abs(fx - mean)))
    err = abs(k15 - g7)
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    resabs = abs(half) * float(np.dot(_WK15, np.abs(fx)))
    if resabs > np.finfo(float).tiny / (50 * np.finfo(float).eps):
        err = max(50 * np.finfo(float).eps * resabs, err)
    return k15, err


def gk15_panels(f, edges):
    """Gauss-Kronrod 15-point rule on every panel ``[edges[i], edges[i+1]]``.

    Evaluates ``f`` once on all nodes. Returns ``(values, error_estimates)``
    where the error estimate is the plain ``|K15 - G7|`` difference.
    """
    edges = np.asarray(edges, dtype=float)
    half = 0.5 * np.diff(edges)
    centre = 0.5 * (edges[:-1] + edges[1:])
    x = centre[:, None] + half[:, None] * _NODES[None, :]
    fx = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    if not np.all(np.isfinite(fx)):
        raise DomainError("integrand is not finite on the panels")
    k15 = half * (fx @ _WK15)
    g7 = half * (fx @ _WG7)
    return k15, np.abs(k15 - g7)


def quad_adaptive(
    integrand: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: Tolerance = QUAD_TOL,
    points: Sequence[float] = (),
) -> float:
    """Integrate ``integrand`` over ``[a, b]``.

    The integrand is called with a 1-d array of abscissae and must return an
    array of the same shape. ``points`` are interior breakpoints used for the
    initial subdivision (e.g. the location of a sharp peak).

    Subdivision is global: the interval with the largest error estimate is
    bisected until the summed estimate satisfies
    ``err <= max(tol.abs, tol.rel * |I|)``. ``tol.max_steps`` bounds the
    number of bisections; exceeding it raises :class:`NonConvergenceError`
    with the partial estimate attached.
    """
    a = float(a)
    b = float(b)
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b = b, a
        sign = -1.0
    edges = [a] + sorted(float(p) for p in points if a < p < b) + [b]

    heap = []
    total = 0.0
    total_err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, err = _gk15(integrand, lo, hi)
        heapq.heappush(heap, (-err, lo, hi, val))
        total += val
        total_err += err

    steps = 0
    while total_err > max(tol.abs, tol.rel * abs(total)):
        if steps >= tol.max_steps:
            raise NonConvergenceError(
                f"quadrature did not converge in {steps} subdivisions "
                f"(estimate {total!r}, error {total_err:.3e})",
                partial=sign * total,
            )
        neg_err, lo, hi, val = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            # interval can no longer be split in floating point
            raise NonConvergenceError(
                "quadrature hit floating-point resolution", partial=sign * total
            )
        v1, e1 = _gk15(integrand, lo, mid)
        v2, e2 = _gk15(integrand, mid, hi)
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))
        steps += 1
        total += v1 + v2 - val
        total_err += e1 + e2 + neg_err
        if steps % 64 == 0:
            # drift control for the running sums
            total = math.fsum(item[3] for item in heap)
            total_err = math.fsum(-item[0] for item in heap)
    items = sorted(heap, key=lambda item: item[1])
    return sign * math.fsum(item[3] for item in items)


# --------------------------------------------------------------------------
# ODE integration
# --------------------------------------------------------------------------

Observer = Callable[[float, float, np.ndarray, Callable[[float], np.ndarray]], None]


def integrate_ode(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    state0,
    t0: float,
    t1: float,
    tol: Tolerance = ODE_TOL,
    observer: Optional[Observer] = None,
    first_step: Optional[float] = None,
    max_step: float = np.inf,
    breakpoints: Sequence[float] = (),
) -> np.ndarray:
    """Integrate ``dy/dt = rhs(t, y)`` from ``t0`` to ``t1``.

    Uses the Dormand-Prince 4(5) pair with its quartic dense output. After
    every accepted step ``observer(t_prev, t, y, dense)`` is called, where
    ``dense(t)`` interpolates the solution inside ``[t_prev, t]``.
    Integrating backwards (``t1 < t0``) is allowed. The solver is restarted
    at every interior point of ``breakpoints``, where the right-hand side
    may jump.

    Raises :class:`NonConvergenceError` (``partial`` = last good state, and
    ``t`` = its time) on step-size underflow or when ``tol.max_steps`` is
    exhausted.
    """
    y0 = np.array(state0, dtype=complex if np.iscomplexobj(state0) else float)
    scalar = y0.ndim == 0
    y0 = np.atleast_1d(y0)
    shape = y0.shape
    flat0 = y0.ravel()

    if t0 == t1:
        return y0.reshape(shape)[0] if scalar else y0.reshape(shape)

    lo, hi = min(t0, t1), max(t0, t1)
    inner = sorted({float(b) for b in breakpoints if lo < b < hi}, reverse=t1 < t0)
    if inner:
        budget = tol.max_steps
        y = y0.reshape(shape)
        edges = [t0, *inner, t1]
        used = [0]

        def counting(t_prev, t_now, yy, dense):
            used[0] += 1
            if observer is not None:
                observer(t_prev, t_now, yy, dense)

        for a, b in zip(edges[:-1], edges[1:]):
            # evaluate one-sided limits at the segment ends
            a_in, b_in = math.nextafter(a, b), math.nextafter(b, a)
            lo_in, hi_in = min(a_in, b_in), max(a_in, b_in)

            def seg_rhs(t, yy, lo_in=lo_in, hi_in=hi_in):
                return rhs(min(max(t, lo_in), hi_in), yy)

            seg_tol = Tolerance(tol.rel, tol.abs, max(budget - used[0], 0))
            y = integrate_ode(seg_rhs, y, a, b, seg_tol, counting, first_step, max_step)
        return y[0] if scalar else y

    def fun(t, y):
        return np.asarray(rhs(t, y.reshape(shape)), dtype=y.dtype).ravel()

    kwargs = {}
    if first_step is not None:
        kwargs["first_step"] = first_step
    solver = RK45(
        fun, t0, flat0, t1,
        rtol=tol.rel, atol=tol.abs, max_step=max_step, vectorized=False,
        **kwargs,
    )
    steps = 0
    while solver.status == "running":
        if steps >= tol.max_steps:
            raise NonConvergenceError(
                f"ODE integration exceeded {tol.max_steps} steps at t={solver.t}",
                partial=solver.y.reshape(shape).copy(), t=solver.t,
            )
        t_prev = solver.t
        y_prev = solver.y.copy()
        msg = solver.step()
        if solver.status == "failed":
            raise NonConvergenceError(
                f"ODE integration failed at t={t_prev}: {msg}",
                partial=y_prev.reshape(shape), t=t_prev,
            )
        steps += 1
        if observer is not None:
            dense = solver.dense_output()
            observer(
                t_prev, solver.t, solver.y.reshape(shape),
                lambda t, _d=dense: _d(t).reshape(shape),
            )
    out = solver.y.reshape(shape)
    return out[0] if scalar else out


# --------------------------------------------------------------------------
# Monotone tables
# --------------------------------------------------------------------------


class MonotoneTable:
    """Strictly increasing cubic Hermite interpolant ``y(x)``.

    If ``slopes`` is omitted the Fritsch-Carlson (PCHIP) slopes are used,
    which guarantee a monotone interpolant. User-supplied slopes are checked
    against the Fritsch-Carlson sufficient condition.
    """

    def __init__(self, x, y, slopes=None):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or x.size < 2:
            raise ValueError("need matching 1-d knot arrays with at least 2 knots")
        if not (np.all(np.diff(x) > 0) and np.all(np.diff(y) > 0)):
            raise ValueError("knots must be strictly increasing in x and y")
        if slopes is None:
            slopes = PchipInterpolator(x, y).derivative()(x)
        else:
            slopes = np.asarray(slopes, dtype=float)
            if slopes.shape != x.shape:
                raise ValueError("slopes must match knots")
            bad = monotonicity_violations(x, y, slopes)
            if bad.size:
                raise ValueError(
                    f"slopes break monotonicity on {bad.size} interval(s), "
                    f"first at x={x[bad[0]]!r}"
                )
        self.x = x
        self.y = y
        self.slopes = slopes
        # plain lists for the scalar fast path
        self._xl = x.tolist()
        self._yl = y.tolist()
        self._dl = slopes.tolist()

    @property
    def x_range(self):
        return self._xl[0], self._xl[-1]

    @property
    def y_range(self):
        return self._yl[0], self._yl[-1]

    def _interval(self, knots, v):
        k = bisect.bisect_right(knots, v) - 1
        return min(max(k, 0), len(knots) - 2)

    def _coeffs(self, k):
        x0, x1 = self._xl[k], self._xl[k + 1]
        h = x1 - x0
        return x0, h, self._yl[k], self._yl[k + 1], self._dl[k] * h, self._dl[k + 1] * h

    @staticmethod
    def _hermite(u, y0, y1, m0, m1):
        u2 = u * u
        u3 = u2 * u
        return ((2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * m0
                + (-2 * u3 + 3 * u2) * y1 + (u3 - u2) * m1)

    @staticmethod
    def _hermite_du(u, y0, y1, m0, m1):
        u2 = u * u
        return ((6 * u2 - 6 * u) * (y0 - y1) + (3 * u2 - 4 * u + 1) * m0
                + (3 * u2 - 2 * u) * m1)

    def _check_x(self, x):
        lo, hi = self._xl[0], self._xl[-1]
        if not lo <= x <= hi:
            raise DomainError(f"x={x!r} outside table range [{lo}, {hi}]")

    def value(self, x: float) -> float:
        self._check_x(x)
        x0, h, y0, y1, m0, m1 = self._coeffs(self._interval(self._xl, x))
        return self._hermite((x - x0) / h, y0, y1, m0, m1)

    def derivative(self, x: float) -> float:
        self._check_x(x)
        x0, h, y0, y1, m0, m1 = self._coeffs(self._interval(self._xl, x))
        return self._hermite_du((x - x0) / h, y0, y1, m0, m1) / h

    def derivatives(self, xs) -> np.ndarray:
        """Vectorised :meth:`derivative`."""
        xs = np.asarray(xs, dtype=float)
        if np.any(xs < self.x[0]) or np.any(xs > self.x[-1]):
            raise DomainError("x outside table range")
        k = np.clip(np.searchsorted(self.x, xs, side="right") - 1, 0, self.x.size - 2)
        h = self.x[k + 1] - self.x[k]
        u = (xs - self.x[k]) / h
        return self._hermite_du(
            u, self.y[k], self.y[k + 1], self.slopes[k] * h, self.slopes[k + 1] * h
        ) / h

    def __call__(self, x):
        if np.ndim(x) == 0:
            return self.value(float(x))
        return np.array([self.value(float(v)) for v in np.ravel(x)]).reshape(np.shape(x))

    def inverse(self, y: float, xtol: float = 1e-15) -> float:
        """Return x with ``self(x) == y``; see :func:`invert_monotone`."""
        lo_y, hi_y = self._yl[0], self._yl[-1]
        if not lo_y <= y <= hi_y:
            raise DomainError(f"y={y!r} outside table range [{lo_y}, {hi_y}]")
        k = self._interval(self._yl, y)
        x0, h, y0, y1, m0, m1 = self._coeffs(k)
        if y == y0:
            return x0
        if y == y1:
            return self._xl[k + 1]
        # Newton in the unit variable, bracketed by bisection.
        lo, hi = 0.0, 1.0
        u = (y - y0) / (y1 - y0)
        for _ in range(100):
            r = self._hermite(u, y0, y1, m0, m1) - y
            if r > 0:
                hi = u
            else:
                lo = u
            dr = self._hermite_du(u, y0, y1, m0, m1)
            step_ok = False
            if dr > 0:
                u_new = u - r / dr
                if lo < u_new < hi:
                    step_ok = True
            if not step_ok:
                u_new = 0.5 * (lo + hi)
            if abs(u_new - u) * h <= xtol * max(1.0, abs(x0)) or hi - lo <= 4e-16:
                u = u_new
                break
            u = u_new
        return x0 + u * h


def monotonicity_violations(x, y, slopes) -> np.ndarray:
    """Indices of intervals where the Hermite cubic may fail to be monotone."""
    delta = np.diff(y) / np.diff(x)
    alpha = slopes[:-1] / delta
    beta = slopes[1:] / delta
    bad = (alpha < 0) | (beta < 0) | (alpha**2 + beta**2 > 9.0)
    return np.flatnonzero(bad)


def invert_monotone(table: MonotoneTable, y: float) -> float:
    """Solve ``table(x) = y`` for x (unique by monotonicity)."""
    return table.inverse(float(y))
