"""Exact two-level dynamics of the ground and first excited amplitudes.

Writing psi(t) = sum_j a_j exp(-i int E_j) |E_j, t>, the amplitudes of the
two lowest levels obey the closed system

    da+/dt = F+ a-,    da-/dt = F- a+,    F- = -conj(F+),

with F+ = (sqrt(N-1)/N) (g' f - f' g) sdot / omega^2 * exp(i phi) and
phi = int_0^t omega. The degenerate levels never couple to these two, so the
reduction is exact for any schedule, adiabatic or not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import DomainError, NonConvergenceError
from .model import PathSpec, spectrum_arrays
from .numerics import ODE_TOL, Tolerance, integrate_ode
from .scheduler import ProblemSpec, Schedule

__all__ = [
    "TwoLevelState",
    "EvolutionTrace",
    "reduced_rhs",
    "evolve_reduced",
    "final_fidelity",
    "is_success",
    "sample_times",
]


@dataclass(frozen=True)
class TwoLevelState:
    a_minus: complex
    a_plus: complex
    phi: float

    @property
    def norm(self) -> float:
        return abs(self.a_minus) ** 2 + abs(self.a_plus) ** 2

    def as_vector(self) -> np.ndarray:
        return np.array([self.a_minus, self.a_plus, self.phi], dtype=complex)

    @classmethod
    def from_vector(cls, y) -> "TwoLevelState":
        return cls(complex(y[0]), complex(y[1]), float(y[2].real))

    @classmethod
    def ground(cls) -> "TwoLevelState":
        return cls(1.0 + 0j, 0j, 0.0)


@dataclass
class EvolutionTrace:
    """Uniformly sampled P-(t) together with the exact final state."""

    t: np.ndarray
    s: np.ndarray
    P_minus: np.ndarray
    E_minus: np.ndarray
    omega: np.ndarray
    final_state: Optional[TwoLevelState]
    metadata: dict = field(default_factory=dict)
    max_norm_drift: float = 0.0
    complete: bool = True

    @property
    def P_plus(self) -> np.ndarray:
        return 1.0 - self.P_minus

    def rows(self):
        return zip(self.t, self.s, self.P_minus, self.E_minus, self.omega)


def sample_times(T: float, samples: int) -> np.ndarray:
    if samples < 2:
        raise DomainError(f"need at least 2 samples, got {samples}")
    t = np.linspace(0.0, T, samples)
    t[-1] = T
    return t


def _as_path(problem: Union[ProblemSpec, PathSpec]) -> PathSpec:
    return problem.path if isinstance(problem, ProblemSpec) else problem


def reduced_rhs(path: PathSpec, schedule: Schedule):
    """Right-hand side for the state vector (a-, a+, phi)."""
    pref = math.sqrt(path.N - 1) / path.N

    def rhs(t, y):
        s = schedule.s_at(t)
        sdot = schedule.sdot_at(t)
        f, g, df, dg, omega, _ = spectrum_arrays(path, s)
        phi = y[2].real
        amp = pref * (dg * f - g * df) * sdot / (omega * omega)
        F_plus = amp * complex(math.cos(phi), math.sin(phi))
        return np.array([-F_plus.conjugate() * y[1], F_plus * y[0], omega], dtype=complex)

    return rhs


def _spectral_columns(path, s):
    f, g, _, _, omega, _ = spectrum_arrays(path, s)
    return 0.5 * (f + g - omega), omega


def evolve_reduced(
    problem: Union[ProblemSpec, PathSpec],
    schedule: Schedule,
    samples: int = 1000,
    tol: Tolerance = ODE_TOL,
    initial: Optional[TwoLevelState] = None,
) -> EvolutionTrace:
    """Integrate the reduced equations along ``schedule`` from t=0 to T.

    The system starts in the ground state (a- = 1) unless ``initial`` is
    given. Samples are uniform in t, read off the integrator's dense output.
    On integrator failure a :class:`NonConvergenceError` is raised whose
    ``partial`` is the trace up to the last good step.
    """
    path = _as_path(problem)
    T = schedule.T
    ts = sample_times(T, samples)
    amps = np.full((samples, 2), np.nan + 0j)
    y0 = (initial or TwoLevelState.ground()).as_vector()
    amps[0] = y0[:2]
    norm0 = abs(y0[0]) ** 2 + abs(y0[1]) ** 2
    state = {"next": 1, "drift": 0.0}

    def observer(t_prev, t_now, y, dense):
        state["drift"] = max(state["drift"], abs(abs(y[0]) ** 2 + abs(y[1]) ** 2 - norm0))
        k = state["next"]
        while k < samples and ts[k] <= t_now:
            amps[k] = y[:2] if ts[k] == t_now else dense(ts[k])[:2]
            k += 1
        state["next"] = k

    metadata = {"N": path.N, "path": path.label, "A": path.A, "T": T, "engine": "reduced"}
    if isinstance(problem, ProblemSpec):
        metadata["epsilon"] = problem.epsilon
    elif hasattr(schedule, "spec"):
        metadata["epsilon"] = schedule.spec.epsilon

    try:
        y_final = integrate_ode(reduced_rhs(path, schedule), y0, 0.0, T, tol, observer,
                               breakpoints=schedule.rate_jumps)
    except NonConvergenceError as exc:
        n = state["next"]
        exc.partial = _build_trace(path, schedule, ts[:n], amps[:n], None, metadata,
                                   state["drift"], complete=False)
        raise
    amps[-1] = y_final[:2]
    return _build_trace(path, schedule, ts, amps, TwoLevelState.from_vector(y_final),
                        metadata, state["drift"], complete=True)


def _build_trace(path, schedule, ts, amps, final, metadata, drift, complete):
    s = np.array([schedule.s_at(t) for t in ts])
    e_minus, omega = _spectral_columns(path, s)
    P = np.abs(amps[:, 0]) ** 2
    return EvolutionTrace(
        t=ts, s=s, P_minus=P, E_minus=np.asarray(e_minus), omega=np.asarray(omega),
        final_state=final, metadata=metadata, max_norm_drift=drift, complete=complete,
    )


def final_fidelity(trace: EvolutionTrace) -> float:
    """P-(T), the probability of ending in the instantaneous ground state."""
    if not trace.complete or trace.final_state is None:
        raise DomainError("trace did not reach t = T")
    return abs(trace.final_state.a_minus) ** 2


def is_success(trace: EvolutionTrace, epsilon: float, c: float = 10.0) -> bool:
    """True when P-(T) >= 1 - c eps^2."""
    return final_fidelity(trace) >= 1.0 - c * epsilon**2
