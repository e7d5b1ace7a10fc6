"""Numerical laboratory for generalized adiabatic quantum search."""

from .errors import (
    CapExceededError,
    DegeneracyError,
    DomainError,
    NonConvergenceError,
    ScheduleDegenerateError,
)
from .model import PathSpec, SpectralPoint, coupling_F, eval_path, path_peaks, spectrum_at
from .scheduler import (
    LinearRamp,
    ProblemSpec,
    ScaledSchedule,
    SynthesizedSchedule,
    saturating_sdot,
    scan_alpha,
    synthesize,
    t_min,
)
from .dynamics import EvolutionTrace, TwoLevelState, evolve_reduced, final_fidelity
from .oracle import evolve_full, evolve_shifted, ground_projection, verify_degeneracy, verify_reduction
from .bounds import BbbvReport, audit_theorem, oracle_action

__version__ = "0.1.0"
