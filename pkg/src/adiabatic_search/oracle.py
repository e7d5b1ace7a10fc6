"""Brute-force full-Hilbert-space simulation, used as ground truth.

H(s) = (f+g) I - f |psi0><psi0| - g |m><m| is applied as a rank-2 update, so
a matrix-vector product costs O(N). Several marked items can be evolved in
one batched integration (one column per marked index); the columns share
the step-size control but are otherwise independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .dynamics import _as_path, evolve_reduced, sample_times
from .errors import CapExceededError, DegeneracyError, DomainError, NonConvergenceError
from .model import PathSpec, eval_path, spectrum_arrays, spectrum_at
from .numerics import ODE_TOL, Tolerance, integrate_ode
from .scheduler import ProblemSpec, Schedule

__all__ = [
    "FULL_CAP",
    "FULL_ODE_TOL",
    "DENSE_CAP",
    "uniform_state",
    "basis_state",
    "apply_h",
    "dense_hamiltonian",
    "FullTrace",
    "evolve_full",
    "evolve_shifted",
    "evolve_marks",
    "ground_vector_2d",
    "ground_projection",
    "verify_reduction",
    "DegeneracyReport",
    "verify_degeneracy",
]

FULL_CAP = 4096
DENSE_CAP = 64
# Every amplitude of the lab-frame state rotates at O(1) frequency, so local
# errors accumulate in the norm; 1e-11 keeps the drift below 1e-9.
FULL_ODE_TOL = Tolerance(rel=1e-11, abs=1e-13, max_steps=5_000_000)


def uniform_state(N: int) -> np.ndarray:
    return np.full(N, 1.0 / math.sqrt(N), dtype=complex)


def basis_state(N: int, m: int) -> np.ndarray:
    v = np.zeros(N, dtype=complex)
    v[m] = 1.0
    return v


def _check_mark(N, m):
    if not 0 <= m < N:
        raise DomainError(f"marked index {m} outside [0, {N})")


def apply_h(f: float, g: float, m: int, v: np.ndarray) -> np.ndarray:
    """H v for H = (f+g) I - f |psi0><psi0| - g |m><m|, in O(N)."""
    v = np.asarray(v)
    if v.ndim != 1:
        raise DomainError(f"expected a vector, got shape {v.shape}")
    N = v.size
    _check_mark(N, m)
    out = (f + g) * v
    # <psi0|v> |psi0> = mean(v) * ones
    out -= f * v.mean()
    out[m] -= g * v[m]
    return out


def _apply_h_batch(f, g, marks, V):
    """Column k of ``V`` is evolved with marked index ``marks[k]``."""
    out = (f + g) * V
    out -= f * V.mean(axis=0)
    cols = np.arange(V.shape[1])
    out[marks, cols] -= g * V[marks, cols]
    return out


def dense_hamiltonian(f: float, g: float, m: int, N: int) -> np.ndarray:
    if N > DENSE_CAP:
        raise CapExceededError(f"dense matrices are capped at N={DENSE_CAP}")
    _check_mark(N, m)
    psi0 = np.full(N, 1.0 / math.sqrt(N))
    H = (f + g) * np.eye(N) - f * np.outer(psi0, psi0)
    H[m, m] -= g
    return H


# --------------------------------------------------------------------------
# ground-state projection
# --------------------------------------------------------------------------


def ground_vector_2d(path: PathSpec, s: float):
    """Ground eigenvector of H(s) in the basis (|m>, |u>).

    |u> is the normalised component of |psi0> orthogonal to |m>. Returns a
    real unit 2-vector ``(c_m, c_u)``.
    """
    f, g, _, _, omega, _ = spectrum_arrays(path, float(s))
    if not omega > 0:
        raise DegeneracyError(f"gap closes at s={s}")
    N = path.N
    a2 = 1.0 / N
    ab = math.sqrt(N - 1) / N
    h11 = f + g - f * a2 - g          # <m|H|m>
    h22 = f + g - f * (1.0 - a2)      # <u|H|u>
    h12 = -f * ab
    e_minus = 0.5 * (f + g - omega)
    # (H - E-) v = 0; use the better-conditioned row
    r1 = (h12, e_minus - h11)
    r2 = (e_minus - h22, h12)
    v = r1 if math.hypot(*r1) >= math.hypot(*r2) else r2
    norm = math.hypot(*v)
    if norm == 0.0:
        # H is diagonal in this basis
        return (1.0, 0.0) if h11 <= h22 else (0.0, 1.0)
    return v[0] / norm, v[1] / norm


def _uniform_and_mark_components(psi, m):
    N = psi.shape[0]
    a = 1.0 / math.sqrt(N)
    b = math.sqrt((N - 1) / N)
    c_m = psi[m]
    c_psi0 = psi.sum(axis=0) * a
    c_u = (c_psi0 - a * c_m) / b
    return c_m, c_u


def ground_projection(path: PathSpec, s: float, m: int, psi: np.ndarray) -> float:
    """|<E-, s|psi>|^2."""
    psi = np.asarray(psi)
    if psi.shape[0] != path.N:
        raise DomainError(f"state has length {psi.shape[0]}, expected N={path.N}")
    _check_mark(path.N, m)
    v_m, v_u = ground_vector_2d(path, s)
    c_m, c_u = _uniform_and_mark_components(psi, m)
    return float(abs(v_m * c_m + v_u * c_u) ** 2)


def _batch_ground_projection(path, s, marks, Psi):
    v_m, v_u = ground_vector_2d(path, s)
    N = Psi.shape[0]
    a = 1.0 / math.sqrt(N)
    b = math.sqrt((N - 1) / N)
    c_m = Psi[marks, np.arange(Psi.shape[1])]
    c_u = (Psi.sum(axis=0) * a - a * c_m) / b
    return np.abs(v_m * c_m + v_u * c_u) ** 2


# --------------------------------------------------------------------------
# full evolution
# --------------------------------------------------------------------------


@dataclass
class FullTrace:
    """Sampled full evolution for one or more marked indices.

    ``P_minus[k, j]`` is the ground-state population of column ``k`` (marked
    index ``marks[k]``) at time ``t[j]``; ``final_states[:, k]`` is the
    state at t = T.
    """

    t: np.ndarray
    s: np.ndarray
    marks: np.ndarray
    P_minus: np.ndarray
    final_states: Optional[np.ndarray]
    states: Optional[np.ndarray] = None
    max_norm_drift: float = 0.0
    shifted: bool = False
    metadata: dict = field(default_factory=dict)
    complete: bool = True

    @property
    def final_state(self) -> np.ndarray:
        return self.final_states[:, 0]

    def success_probability(self) -> np.ndarray:
        """|<m|psi(T)>|^2 for each column."""
        cols = np.arange(self.marks.size)
        return np.abs(self.final_states[self.marks, cols]) ** 2


def evolve_marks(
    problem: Union[ProblemSpec, PathSpec],
    schedule: Schedule,
    marks: Sequence[int],
    samples: int = 1000,
    tol: Tolerance = FULL_ODE_TOL,
    shift_ground: bool = False,
    keep_states: bool = False,
    cap: int = FULL_CAP,
) -> FullTrace:
    """Solve i dpsi/dt = H(t) psi from |psi0> for each marked index at once.

    With ``shift_ground`` the Hamiltonian is H(t) - E-(t) I.
    """
    path = _as_path(problem)
    N = path.N
    if N > cap:
        raise CapExceededError(f"N={N} exceeds the full-simulation cap {cap}")
    marks = np.asarray(marks, dtype=int)
    if marks.ndim != 1 or marks.size == 0:
        raise DomainError("need at least one marked index")
    for m in marks:
        _check_mark(N, int(m))
    K = marks.size
    ts = sample_times(schedule.T, samples)
    P = np.full((K, samples), np.nan)
    states = np.full((samples, N, K), np.nan + 0j) if keep_states else None
    Psi0 = np.repeat(uniform_state(N)[:, None], K, axis=1)
    P[:, 0] = _batch_ground_projection(path, schedule.s_at(0.0), marks, Psi0)
    if keep_states:
        states[0] = Psi0

    def rhs(t, Y):
        s = schedule.s_at(t)
        f, g, _, _ = eval_path(path, s)
        HY = _apply_h_batch(f, g, marks, Y)
        if shift_ground:
            HY -= spectrum_at(path, s).E_minus * Y
        return -1j * HY

    track = {"next": 1, "drift": 0.0}

    def observer(t_prev, t_now, Y, dense):
        norms = np.einsum("ij,ij->j", Y.conj(), Y).real
        track["drift"] = max(track["drift"], float(np.max(np.abs(norms - 1.0))))
        k = track["next"]
        while k < samples and ts[k] <= t_now:
            Yk = Y if ts[k] == t_now else dense(ts[k])
            P[:, k] = _batch_ground_projection(path, schedule.s_at(ts[k]), marks, Yk)
            if keep_states:
                states[k] = Yk
            k += 1
        track["next"] = k

    metadata = {"N": N, "path": path.label, "A": path.A, "T": schedule.T, "engine": "full"}
    try:
        Y_final = integrate_ode(rhs, Psi0, 0.0, schedule.T, tol, observer,
                               breakpoints=schedule.rate_jumps)
    except NonConvergenceError as exc:
        n = track["next"]
        exc.partial = FullTrace(
            t=ts[:n], s=np.array([schedule.s_at(t) for t in ts[:n]]), marks=marks,
            P_minus=P[:, :n], final_states=None, max_norm_drift=track["drift"],
            shifted=shift_ground, metadata=metadata, complete=False,
        )
        raise
    P[:, -1] = _batch_ground_projection(path, schedule.s_at(schedule.T), marks, Y_final)
    if keep_states:
        states[-1] = Y_final
    return FullTrace(
        t=ts, s=np.array([schedule.s_at(t) for t in ts]), marks=marks, P_minus=P,
        final_states=Y_final, states=states, max_norm_drift=track["drift"],
        shifted=shift_ground, metadata=metadata,
    )


def evolve_full(problem, schedule: Schedule, m: int = 0, samples: int = 1000,
                tol: Tolerance = FULL_ODE_TOL, shift_ground: bool = False,
                keep_states: bool = False, cap: int = FULL_CAP) -> FullTrace:
    """Full evolution for a single marked index ``m``."""
    return evolve_marks(problem, schedule, [m], samples, tol, shift_ground, keep_states, cap)


def evolve_shifted(problem, schedule: Schedule, m: int = 0, samples: int = 1000,
                   tol: Tolerance = FULL_ODE_TOL, keep_states: bool = False,
                   cap: int = FULL_CAP) -> FullTrace:
    """Full evolution under the ground-shifted Hamiltonian H(t) - E-(t) I."""
    return evolve_marks(problem, schedule, [m], samples, tol, True, keep_states, cap)


def verify_reduction(problem, schedule: Schedule, m: int = 0, samples: int = 200,
                     reduced_tol: Tolerance = ODE_TOL, full_tol: Tolerance = FULL_ODE_TOL,
                     cap: int = FULL_CAP) -> float:
    """max_t |P-(reduced) - P-(full)| on a common uniform time grid."""
    reduced = evolve_reduced(problem, schedule, samples=samples, tol=reduced_tol)
    full = evolve_full(problem, schedule, m=m, samples=samples, tol=full_tol, cap=cap)
    return float(np.max(np.abs(reduced.P_minus - full.P_minus[0])))


# --------------------------------------------------------------------------
# dense spectrum oracle
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DegeneracyReport:
    eigenvalues: np.ndarray
    spread: float            # max |dense eigenvalue - expected multiset|
    forbidden: float         # max |<E+-|dH/ds|E_i>| over the degenerate subspace
    coupling_error: float    # | |<E+|dH/ds|E->| - |M| |


def verify_degeneracy(path: PathSpec, s: float, m: int = 0) -> DegeneracyReport:
    """Dense diagonalisation check of the level structure at ``s``.

    Expected spectrum: {E-, E+} plus f+g with multiplicity N-2.
    """
    N = path.N
    if N > DENSE_CAP:
        raise CapExceededError(f"dense verification is capped at N={DENSE_CAP}")
    point = spectrum_at(path, s)
    f, g, df, dg = eval_path(path, float(s))
    H = dense_hamiltonian(f, g, m, N)
    dH = dense_hamiltonian(df, dg, m, N)
    w, V = np.linalg.eigh(H)
    expected = np.sort(np.array([point.E_minus, point.E_plus] + [f + g] * (N - 2)))
    spread = float(np.max(np.abs(w - expected)))

    e_minus = V[:, 0]
    level = f + g
    # eigenvectors at the degenerate level (E+ joins it at the endpoints)
    at_level = np.abs(w - level) <= 1e-8 * max(1.0, abs(level))
    if point.E_plus < level - 1e-8 * max(1.0, abs(level)):
        e_plus = V[:, 1]
        degenerate = V[:, at_level]
    else:
        c_m, c_u = _plus_vector_2d(path, s)
        e_plus = _embed_2d(N, m, c_m, c_u)
        Q = V[:, at_level]
        Q = Q - np.outer(e_plus, e_plus @ Q)
        U, sv, _ = np.linalg.svd(Q, full_matrices=False)
        degenerate = U[:, : N - 2]
    low = np.column_stack([e_minus, e_plus])
    forbidden = float(np.max(np.abs(low.T @ dH @ degenerate))) if N > 2 else 0.0
    coupling_error = abs(abs(e_plus @ dH @ e_minus) - abs(point.M))
    return DegeneracyReport(w, spread, forbidden, coupling_error)


def _plus_vector_2d(path, s):
    v_m, v_u = ground_vector_2d(path, s)
    return -v_u, v_m


def _embed_2d(N, m, c_m, c_u):
    a = 1.0 / math.sqrt(N)
    b = math.sqrt((N - 1) / N)
    u = (np.full(N, a) - a * np.eye(N)[m]) / b
    return c_m * np.eye(N)[m] + c_u * u
