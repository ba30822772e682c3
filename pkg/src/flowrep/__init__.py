"""Flow-based reputation with absolute values: solvers, sensitivity, attacks, sweeps."""

from .errors import (
    DegenerateInstanceError,
    FlowRepError,
    NonConvergenceError,
    NumericalFailureError,
    SpectralFailureError,
    TheoremViolationError,
    ValidationError,
)
from .evidence import (
    EvidenceMatrix,
    RatingEvent,
    TransactionLog,
    aggregate,
    check_irreducible,
    read_ratings_csv,
)
from .solver import (
    ReputationResult,
    SolverConfig,
    SpectralInfo,
    diagonal_shift_predict,
    eval_f,
    linear_approx,
    solve,
    solve_alpha1,
    solve_alternative_t,
    solve_direct,
    solve_iterative,
    spectral_radius,
)

__version__ = "0.1.0"
