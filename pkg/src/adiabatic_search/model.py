"""Interpolation paths and closed-form spectral data of H = f(s) H0 + g(s) H1.

With H0 = I - |psi0><psi0| and H1 = I - |m><m| the Hamiltonian only acts
non-trivially on span{|psi0>, |m>}; everything here follows from the 2x2
block on that span. Units have hbar = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import minimize_scalar

from .errors import DegeneracyError, DomainError

__all__ = [
    "PathSpec",
    "SpectralPoint",
    "eval_path",
    "path_peaks",
    "spectrum_at",
    "spectrum_arrays",
    "coupling_F",
    "max_ground_energy",
]

_BC_TOL = 1e-12
_VALIDATION_GRID = 2049


@dataclass(frozen=True)
class PathSpec:
    """A path s -> (f(s), g(s)) together with the database size ``N``.

    Build instances with :meth:`linear`, :meth:`quadratic` or
    :meth:`tabulated`; they validate boundary conditions and positivity.
    """

    family: str
    N: int
    A: float = 0.0
    table: Optional[tuple] = field(default=None, repr=False, compare=False)
    _splines: Optional[tuple] = field(default=None, repr=False, compare=False)

    @classmethod
    def linear(cls, N: int) -> "PathSpec":
        return cls.quadratic(N, 0.0, family="linear")

    @classmethod
    def quadratic(cls, N: int, A: float, family: str = "quadratic") -> "PathSpec":
        _check_N(N)
        A = float(A)
        if not (A >= 0 and math.isfinite(A)):
            raise DomainError(f"A must be a finite number >= 0, got {A}")
        path = cls(family=family, N=int(N), A=A)
        path._validate()
        return path

    @classmethod
    def tabulated(cls, N: int, s, f, g, df, dg) -> "PathSpec":
        """Path from samples of f, g and their s-derivatives.

        Between samples f and g are cubic Hermite interpolants through the
        given values and slopes; the returned derivatives are the exact
        derivatives of those interpolants.
        """
        _check_N(N)
        arrays = [np.asarray(v, dtype=float) for v in (s, f, g, df, dg)]
        s = arrays[0]
        if s.ndim != 1 or s.size < 2 or any(a.shape != s.shape for a in arrays):
            raise DomainError("tabulated path needs matching 1-d sample arrays")
        if not np.all(np.diff(s) > 0) or s[0] != 0.0 or s[-1] != 1.0:
            raise DomainError("sample abscissae must increase from 0 to 1")
        f_spl = CubicHermiteSpline(s, arrays[1], arrays[3])
        g_spl = CubicHermiteSpline(s, arrays[2], arrays[4])
        splines = (f_spl, g_spl, f_spl.derivative(), g_spl.derivative())
        path = cls(
            family="tabulated", N=int(N), A=float("nan"),
            table=tuple(a.copy() for a in arrays), _splines=splines,
        )
        path._validate()
        return path

    @property
    def label(self) -> str:
        if self.family == "tabulated":
            return f"tabulated(N={self.N})"
        return f"{self.family}(N={self.N}, A={self.A:g})"

    def _validate(self):
        f0, g0, _, _ = eval_path(self, 0.0)
        f1, g1, _, _ = eval_path(self, 1.0)
        if max(abs(f0 - 1), abs(g0), abs(f1), abs(g1 - 1)) > _BC_TOL:
            raise DomainError(
                "boundary conditions f(0)=1, g(0)=0, f(1)=0, g(1)=1 violated: "
                f"f(0)={f0}, g(0)={g0}, f(1)={f1}, g(1)={g1}"
            )
        grid = np.linspace(0.0, 1.0, _VALIDATION_GRID)
        f, g, _, _ = eval_path(self, grid)
        if np.any(f < -_BC_TOL) or np.any(g < -_BC_TOL):
            raise DomainError("f and g must be non-negative on [0, 1]")
        if np.any((np.abs(f) <= _BC_TOL) & (np.abs(g) <= _BC_TOL)):
            raise DomainError("f and g vanish simultaneously")


def _check_N(N):
    if int(N) != N or N < 2:
        raise DomainError(f"N must be an integer >= 2, got {N}")


def eval_path(path: PathSpec, s):
    """Return ``(f, g, f', g')`` at ``s`` (scalar or array) in [0, 1]."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0.0) or np.any(s_arr > 1.0) or np.any(np.isnan(s_arr)):
        raise DomainError(f"s must lie in [0, 1], got {s}")
    if path.family == "tabulated":
        f_spl, g_spl, df_spl, dg_spl = path._splines
        out = tuple(spl(s_arr) for spl in (f_spl, g_spl, df_spl, dg_spl))
    else:
        A = path.A
        bump = A * s_arr * (1.0 - s_arr)
        slope = A * (1.0 - 2.0 * s_arr)
        out = (1.0 - s_arr + bump, s_arr + bump, slope - 1.0, slope + 1.0)
    if s_arr.ndim == 0:
        return tuple(float(v) for v in out)
    return out


def path_peaks(path: PathSpec):
    """Interior maxima of f and g for the quadratic family.

    Returns ``(s_f_peak, f_peak, s_g_peak, g_peak)``. Both peaks have the
    value A/4 + 1/2 + 1/(4A), since g(s) = f(1 - s).
    """
    if path.family == "tabulated":
        raise DomainError("peak formula only defined for the quadratic family")
    A = path.A
    if A <= 1.0:
        raise DomainError(f"A={A:g}: f and g are monotone on [0,1], no interior peak")
    s_f = 0.5 * (1.0 - 1.0 / A)
    s_g = 0.5 * (1.0 + 1.0 / A)
    peak = A / 4.0 + 0.5 + 1.0 / (4.0 * A)
    return s_f, peak, s_g, peak


@dataclass(frozen=True)
class SpectralPoint:
    s: float
    f: float
    g: float
    E_minus: float
    E_plus: float
    omega: float
    degenerate_level: float
    M: float


def spectrum_arrays(path: PathSpec, s):
    """Vectorised spectral data: ``(f, g, df, dg, omega, M)``.

    ``M`` is <E+|dH/ds|E-> in the real eigenvector gauge used throughout the
    package. No degeneracy check is made here.
    """
    f, g, df, dg = eval_path(path, s)
    N = path.N
    omega = np.sqrt((f - g) ** 2 + 4.0 * f * g / N)
    with np.errstate(divide="ignore", invalid="ignore"):
        M = (math.sqrt(N - 1) / N) * (df * g - dg * f) / omega
    return f, g, df, dg, omega, M


def spectrum_at(path: PathSpec, s: float) -> SpectralPoint:
    f, g, df, dg, omega, M = spectrum_arrays(path, float(s))
    if not omega > 0.0:
        raise DegeneracyError(f"gap closes at s={s} (f={f}, g={g})")
    total = f + g
    return SpectralPoint(
        s=float(s), f=f, g=g,
        E_minus=0.5 * (total - omega), E_plus=0.5 * (total + omega),
        omega=omega, degenerate_level=total, M=float(M),
    )


def coupling_F(path: PathSpec, s: float, sdot: float, phi: float) -> complex:
    """F+ of the reduced equations da-/dt = F- a+, da+/dt = F+ a-.

    F- = -conj(F+). ``sdot`` is ds/dt and ``phi`` the accumulated phase
    integral of the gap.
    """
    f, g, df, dg, omega, _ = spectrum_arrays(path, float(s))
    if not omega > 0.0:
        raise DegeneracyError(f"gap closes at s={s}")
    N = path.N
    amp = (math.sqrt(N - 1) / N) * (dg * f - g * df) * sdot / (omega * omega)
    return amp * complex(math.cos(phi), math.sin(phi))


def max_ground_energy(path: PathSpec):
    """Return ``(s_star, max E-)`` over s in [0, 1]."""
    grid = np.linspace(0.0, 1.0, 4097)
    f, g, _, _, omega, _ = spectrum_arrays(path, grid)
    e_minus = 0.5 * (f + g - omega)
    k = int(np.argmax(e_minus))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, grid.size - 1)]

    def neg(s):
        return -spectrum_at(path, s).E_minus

    res = minimize_scalar(neg, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    s_star, e_star = float(res.x), -float(res.fun)
    if e_star < e_minus[k]:
        s_star, e_star = float(grid[k]), float(e_minus[k])
    return s_star, e_star
