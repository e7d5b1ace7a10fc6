"""Locally adiabatic schedules s(t) and minimum running times.

The adiabatic criterion |<E+|dH/dt|E->| / omega^2 <= eps is saturated at
every instant by choosing ds/dt = eps * omega^2 / |M(s)|, with
M = <E+|dH/ds|E->. Integrating dt/ds = |M| / (eps omega^2) gives the
time table t(s) and the minimum running time T_min = t(1).
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, NonConvergenceError, ScheduleDegenerateError
from .model import PathSpec, spectrum_arrays
from .numerics import QUAD_TOL, MonotoneTable, Tolerance, gk15_panels, quad_adaptive
from .numerics import monotonicity_violations

log = logging.getLogger(__name__)

__all__ = [
    "ProblemSpec",
    "Schedule",
    "SynthesizedSchedule",
    "ScaledSchedule",
    "LinearRamp",
    "ExplicitSchedule",
    "saturating_sdot",
    "criterion_value",
    "t_min",
    "synthesize",
    "ScanRow",
    "scan_alpha",
]


@dataclass(frozen=True)
class ProblemSpec:
    path: PathSpec
    epsilon: float

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise DomainError(f"epsilon must lie in (0, 1), got {self.epsilon}")


def _time_density(path: PathSpec):
    """Vectorised |M(s)| / omega(s)^2 (the eps = 1 value of dt/ds)."""

    def density(s):
        _, _, _, _, omega, M = spectrum_arrays(path, s)
        return np.abs(M) / (omega * omega)

    return density


def _breakpoints(path: PathSpec):
    if path.family == "tabulated":
        return tuple(path.table[0][1:-1])
    return (0.5,)


def saturating_sdot(spec: ProblemSpec, s: float) -> float:
    """ds/dt that makes the adiabatic criterion hold with equality at ``s``."""
    _, _, _, _, omega, M = spectrum_arrays(spec.path, float(s))
    if M == 0.0:
        raise ScheduleDegenerateError(f"coupling vanishes at s={s}; cannot saturate")
    return spec.epsilon * omega * omega / abs(M)


def criterion_value(path: PathSpec, s, sdot):
    """|<E+|dH/dt|E->| / omega^2 for a given ds/dt."""
    _, _, _, _, omega, M = spectrum_arrays(path, s)
    return np.abs(sdot * M) / (omega * omega)


def t_min(spec: ProblemSpec, tol: Tolerance = QUAD_TOL) -> float:
    """Minimum running time (1/eps) * integral_0^1 |M| / omega^2 ds."""
    integral = quad_adaptive(
        _time_density(spec.path), 0.0, 1.0, tol=tol, points=_breakpoints(spec.path)
    )
    return integral / spec.epsilon


# --------------------------------------------------------------------------
# Schedules
# --------------------------------------------------------------------------


class Schedule:
    """A monotone map t -> s(t) on [0, T] with s(0) = 0 and s(T) = 1.

    Subclasses provide ``s_at``, ``sdot_at`` and ``dt_ds`` (use ``inf`` where
    the schedule pauses). ``t_breaks`` lists times where the schedule is
    only piecewise smooth.
    """

    T: float

    def s_at(self, t: float) -> float:
        raise NotImplementedError

    def sdot_at(self, t: float) -> float:
        raise NotImplementedError

    def dt_ds(self, s):
        raise NotImplementedError

    @property
    def t_breaks(self) -> Sequence[float]:
        return ()

    @property
    def s_breaks(self) -> Sequence[float]:
        return ()

    @property
    def rate_jumps(self) -> Sequence[float]:
        """Times where ds/dt may be discontinuous; ODE solvers restart there."""
        return ()

    def scaled(self, factor: float) -> "ScaledSchedule":
        return ScaledSchedule(self, factor)


class SynthesizedSchedule(Schedule):
    """Saturating schedule backed by a cubic Hermite table t(s).

    ``s_at`` inverts the table and ``sdot_at`` is the reciprocal of the
    table's own derivative, so s(t) and ds/dt are exactly consistent.
    """

    def __init__(self, spec: ProblemSpec, t_of_s: MonotoneTable, T_min: float,
                 saturation_residual: float):
        self.spec = spec
        self.t_of_s = t_of_s
        self.T_min = T_min
        self.T = t_of_s.y_range[1]
        self.saturation_residual = saturation_residual

    def s_at(self, t):
        t = min(max(float(t), 0.0), self.T)
        return self.t_of_s.inverse(t)

    def sdot_at(self, t):
        return 1.0 / self.t_of_s.derivative(self.s_at(t))

    def dt_ds(self, s):
        if np.ndim(s) == 0:
            return self.t_of_s.derivative(float(s))
        return self.t_of_s.derivatives(s)

    @property
    def t_breaks(self):
        return tuple(self.t_of_s.y[1:-1])

    @property
    def s_breaks(self):
        return tuple(self.t_of_s.x[1:-1])

    def __repr__(self):
        return (f"SynthesizedSchedule({self.spec.path.label}, eps={self.spec.epsilon:g}, "
                f"T={self.T:.10g}, knots={self.t_of_s.x.size})")


class ScaledSchedule(Schedule):
    """``base`` run ``factor`` times slower: s(t) = base.s(t / factor)."""

    def __init__(self, base: Schedule, factor: float):
        if not factor > 0:
            raise DomainError(f"time scale factor must be > 0, got {factor}")
        self.base = base
        self.factor = float(factor)
        self.T = base.T * self.factor

    def s_at(self, t):
        return self.base.s_at(t / self.factor)

    def sdot_at(self, t):
        return self.base.sdot_at(t / self.factor) / self.factor

    def dt_ds(self, s):
        return self.factor * np.asarray(self.base.dt_ds(s))

    @property
    def t_breaks(self):
        return tuple(self.factor * t for t in self.base.t_breaks)

    @property
    def s_breaks(self):
        return self.base.s_breaks

    @property
    def rate_jumps(self):
        return tuple(self.factor * t for t in self.base.rate_jumps)


class LinearRamp(Schedule):
    """s(t) = t / T. With tiny T this is a sudden quench."""

    def __init__(self, T: float):
        if not T > 0:
            raise DomainError(f"T must be > 0, got {T}")
        self.T = float(T)

    def s_at(self, t):
        return min(max(t / self.T, 0.0), 1.0)

    def sdot_at(self, t):
        return 1.0 / self.T

    def dt_ds(self, s):
        return np.full_like(np.asarray(s, dtype=float), self.T)[()]


class ExplicitSchedule(Schedule):
    """Schedule from user callables ``s(t)`` and ``ds/dt(t)``.

    ``dt_ds`` is optional; without it the oracle action can only be taken by
    quadrature in t.
    """

    def __init__(self, T: float, s_func: Callable[[float], float],
                 sdot_func: Callable[[float], float],
                 dt_ds_func: Optional[Callable] = None,
                 t_breaks: Sequence[float] = ()):
        if not T > 0:
            raise DomainError(f"T must be > 0, got {T}")
        self.T = float(T)
        self._s = s_func
        self._sdot = sdot_func
        self._dt_ds = dt_ds_func
        self._t_breaks = tuple(t_breaks)

    def s_at(self, t):
        return min(max(float(self._s(t)), 0.0), 1.0)

    def sdot_at(self, t):
        return float(self._sdot(t))

    def dt_ds(self, s):
        if self._dt_ds is None:
            raise NotImplementedError("this schedule has no dt/ds")
        return self._dt_ds(s)

    @property
    def t_breaks(self):
        return self._t_breaks

    @property
    def rate_jumps(self):
        return self._t_breaks


# --------------------------------------------------------------------------
# Synthesis
# --------------------------------------------------------------------------

_DERIV_RTOL = 1e-7          # per-interval check; 10x margin under the 1e-6 residual
_PANEL_RTOL = 1e-14
_TABLE_RTOL = 1e-8
_MAX_KNOTS = 2_000_000


def synthesize(spec: ProblemSpec, grid_size: int = 64,
               tol: Tolerance = QUAD_TOL) -> SynthesizedSchedule:
    """Tabulate the saturating schedule t(s) on an adaptively refined grid.

    Knot values are exact panel integrals of dt/ds (Gauss-Kronrod per
    panel); knot slopes are the exact dt/ds. Intervals are bisected until
    the Hermite derivative reproduces dt/ds to 1e-7 relative at interior
    check points, the cubic is provably monotone, and each panel integral
    is converged.
    """
    if grid_size < 64:
        raise DomainError(f"grid_size must be >= 64, got {grid_size}")
    eps = spec.epsilon
    density = _time_density(spec.path)
    knots = np.union1d(np.linspace(0.0, 1.0, grid_size), np.asarray(_breakpoints(spec.path)))
    knots = _clean_knots(_equidistribute(density, knots, grid_size))

    check_u = np.array([0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875])
    while True:
        if knots.size > _MAX_KNOTS:
            raise NonConvergenceError(f"schedule table exceeded {_MAX_KNOTS} knots")
        panels, panel_err = gk15_panels(density, knots)
        slopes = density(knots)
        if np.any(slopes <= 0):
            raise ScheduleDegenerateError("coupling vanishes on the path")
        t_knots = np.concatenate([[0.0], np.cumsum(panels)])
        split = panel_err > _PANEL_RTOL * t_knots[-1]

        h = np.diff(knots)
        xs = knots[:-1, None] + h[:, None] * check_u[None, :]
        exact = density(xs.ravel()).reshape(xs.shape)
        approx = _hermite_slope(check_u[None, :], t_knots[:-1, None], t_knots[1:, None],
                                slopes[:-1, None] * h[:, None],
                                slopes[1:, None] * h[:, None]) / h[:, None]
        rel = np.max(np.abs(approx / exact - 1.0), axis=1)
        split |= rel > _DERIV_RTOL
        bad = monotonicity_violations(knots, t_knots, slopes)
        split[bad] = True
        if not split.any():
            break
        mids = 0.5 * (knots[:-1][split] + knots[1:][split])
        refined = _clean_knots(np.union1d(knots, mids))
        if refined.size == knots.size:
            raise NonConvergenceError("schedule table cannot be refined further")
        knots = refined
        log.debug("synthesize: %d knots, splitting %d", knots.size, int(split.sum()))

    table = MonotoneTable(knots, t_knots / eps, slopes / eps)
    T_ref = t_min(spec, tol=tol)
    T_tab = table.y_range[1]
    if abs(T_tab - T_ref) > _TABLE_RTOL * T_ref:
        raise NonConvergenceError(
            f"table end time {T_tab!r} disagrees with T_min {T_ref!r}"
        )
    residual = _saturation_residual(spec, table)
    return SynthesizedSchedule(spec, table, T_min=T_ref, saturation_residual=residual)


def _clean_knots(knots, min_gap=1e-13):
    keep = np.concatenate([[True], np.diff(knots) > min_gap])
    keep[-1] = True
    out = knots[keep]
    if out.size > 2 and out[-1] - out[-2] <= min_gap:
        out = np.delete(out, -2)
    return out


def _hermite_slope(u, y0, y1, m0, m1):
    u2 = u * u
    return (6 * u2 - 6 * u) * (y0 - y1) + (3 * u2 - 4 * u + 1) * m0 + (3 * u2 - 2 * u) * m1


def _equidistribute(density, knots, count):
    """Place ``count`` extra knots equidistributing the integrand."""
    fine = np.union1d(knots, np.linspace(0.0, 1.0, 64 * count + 1))
    panels, _ = gk15_panels(density, fine)
    cum = np.concatenate([[0.0], np.cumsum(panels)])
    targets = np.linspace(0.0, cum[-1], count + 1)[1:-1]
    extra = np.interp(targets, cum, fine)
    return np.union1d(knots, extra)


def _saturation_residual(spec: ProblemSpec, table: MonotoneTable, per_interval: int = 10):
    """max |(sdot |M| / omega^2) / eps - 1| on a grid 10x finer than the knots."""
    x = table.x
    u = np.arange(per_interval) / per_interval
    grid = np.concatenate([(x[:-1, None] + np.diff(x)[:, None] * u[None, :]).ravel(), [1.0]])
    sdot = 1.0 / table.derivatives(grid)
    crit = criterion_value(spec.path, grid, sdot)
    return float(np.max(np.abs(crit / spec.epsilon - 1.0)))


# --------------------------------------------------------------------------
# Scans
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ScanRow:
    N: int
    alpha: float
    A: float
    eps_Tmin: float
    error: Optional[str] = None


def _scan_cell(args):
    N, alpha, epsilon = args
    A = float(N) ** alpha
    try:
        spec = ProblemSpec(PathSpec.quadratic(N, A), epsilon)
        return ScanRow(N, alpha, A, epsilon * t_min(spec))
    except (ArithmeticError, ValueError, NonConvergenceError) as exc:
        return ScanRow(N, alpha, A, math.nan, error=f"{type(exc).__name__}: {exc}")


def scan_alpha(N_list, alpha_list, epsilon: float = 0.01, workers: int = 1):
    """eps * T_min for A = N**alpha over the N x alpha grid (N-major order)."""
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    for N in N_list:
        if int(N) != N or N < 2:
            raise DomainError(f"N must be an integer >= 2, got {N}")
    for alpha in alpha_list:
        if not alpha >= 0:
            raise DomainError(f"alpha must be >= 0, got {alpha}")
    cells = [(int(N), float(a), epsilon) for N in N_list for a in alpha_list]
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_scan_cell, cells))
    return [_scan_cell(c) for c in cells]
