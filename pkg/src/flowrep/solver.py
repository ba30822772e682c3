"""Reputation vector solvers.

The reputation vector solves the implicit equation

    r = (1 - alpha) s + alpha * A r / (e^T r)

with ``s`` the starting vector and ``A`` the evidence matrix. Two routes are
provided and must agree: a fixed-point iteration (``solve_iterative``) and a
direct method (``solve_direct``) that first finds the norm ``ell = e^T r`` as
the root of a scalar decreasing function and then recovers ``r`` with one
linear solve.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .evidence import check_irreducible
from .errors import (
    DegenerateInstanceError,
    NonConvergenceError,
    NumericalFailureError,
    SpectralFailureError,
    TheoremViolationError,
    ValidationError,
)

METHODS = ("iterative", "direct")

# lower bracket edge sits this far (relative) above alpha * lambda_max
BRACKET_GAP = 1e-10
BISECTION_WIDTH = 1e-13
# tolerance for the f(n) <= 1 check at the upper bracket edge
UPPER_EDGE_SLACK = 1e-12
PERRON_OVERLAP_MIN = 1e-14
POLISH_STEPS = 5


@dataclass(frozen=True)
class SolverConfig:
    alpha: float = 0.5
    delta: float | None = None  # None -> n * 1e-15
    max_iterations: int = 1000
    method: str = "iterative"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValidationError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.delta is not None and not self.delta > 0:
            raise ValidationError(f"delta must be positive, got {self.delta}")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be >= 1")
        if self.method not in METHODS:
            raise ValidationError(f"method must be one of {METHODS}, got {self.method!r}")

    def tolerance(self, n: int) -> float:
        return n * 1e-15 if self.delta is None else self.delta


@dataclass(frozen=True)
class SpectralInfo:
    """Perron root and Perron vector (unit 1-norm, nonnegative)."""

    lambda_max: float
    v_max: np.ndarray
    iterations: int = 0
    residual: float = 0.0


@dataclass
class ReputationResult:
    r: np.ndarray
    ell: float
    iterations: int
    residual: float
    ell_star: float
    spectral: SpectralInfo | None = None
    method: str = "iterative"

    def to_dict(self) -> dict:
        return {
            "r": self.r.tolist(),
            "ell": self.ell,
            "iterations": self.iterations,
            "residual": self.residual,
            "ell_star": self.ell_star,
            "lambda_max": None if self.spectral is None else self.spectral.lambda_max,
            "method": self.method,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


# -- input handling ---------------------------------------------------------

def _matrix(A) -> np.ndarray:
    a = np.asarray(A, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"matrix must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    if a.size and a.min() < 0.0:
        raise TheoremViolationError("matrix has negative entries")
    return a


def start_vector(s, n: int | None = None) -> np.ndarray:
    """Validate a starting vector: entries in [0, 1], not all zero."""
    v = np.array(s, dtype=float).reshape(-1)
    if n is not None and v.shape[0] != n:
        raise ValidationError(f"starting vector has length {v.shape[0]}, expected {n}")
    if not np.all(np.isfinite(v)) or v.min() < 0.0 or v.max() > 1.0:
        raise ValidationError("starting vector entries must lie in [0, 1]")
    if not np.any(v > 0):
        raise ValidationError("starting vector must not be zero")
    return v


def uniform_start(n: int, c: float) -> np.ndarray:
    return start_vector(np.full(n, float(c)))


def pretrusted_start(n: int, count: int) -> np.ndarray:
    """``(1, ..., 1, 0, ..., 0)`` with ``count`` leading ones."""
    if not 1 <= count <= n:
        raise ValidationError(f"pre-trusted count must lie in [1, {n}], got {count}")
    s = np.zeros(n)
    s[:count] = 1.0
    return s


def _prepare(A, s, alpha):
    a = _matrix(A)
    v = start_vector(s, a.shape[0])
    if not 0.0 <= alpha <= 1.0:
        raise ValidationError(f"alpha must lie in [0, 1], got {alpha}")
    return a, v


def fixed_point_residual(A, s, alpha: float, r) -> float:
    """1-norm of ``(1-alpha) s + alpha A r / e^T r - r``."""
    a = np.asarray(A, dtype=float)
    r = np.asarray(r, dtype=float)
    return float(np.abs((1 - alpha) * np.asarray(s) + alpha * (a @ r) / r.sum() - r).sum())


# -- spectral ---------------------------------------------------------------

def spectral_radius(A, tol: float = 1e-13, max_iterations: int = 100_000,
                    shift: float | None = None) -> SpectralInfo:
    """Perron root and vector of a nonnegative matrix by power iteration.

    Iterates on ``A + shift * I`` (default shift: the mean entry of ``A``) so
    that periodic irreducible matrices still converge; the shift is removed
    from the returned eigenvalue.
    """
    a = _matrix(A)
    n = a.shape[0]
    if not np.any(a):
        raise ValidationError("spectral radius of the zero matrix is not defined here")
    c = float(a.mean()) if shift is None else float(shift)
    v = np.full(n, 1.0 / n)
    diff = np.inf
    for k in range(1, max_iterations + 1):
        w = a @ v + c * v
        w /= w.sum()
        diff = np.abs(w - v).sum()
        v = w
        if diff < tol:
            break
    else:
        lam = float((a @ v).sum())
        raise SpectralFailureError(
            f"power iteration did not converge in {max_iterations} steps (diff={diff:.3e})",
            last=SpectralInfo(lam, v, max_iterations, float(np.abs(a @ v - lam * v).sum())),
            iterations=max_iterations,
        )
    v = np.clip(v, 0.0, None)
    v /= v.sum()
    av = a @ v
    lam = float(av.sum())
    return SpectralInfo(lam, v, k, float(np.abs(av - lam * v).sum()))


# -- direct method ----------------------------------------------------------

def eval_f(ell: float, A, s, alpha: float) -> float:
    """``(1 - alpha) e^T (ell I - alpha A)^{-1} s`` via one dense solve."""
    a = np.asarray(A, dtype=float)
    m = ell * np.eye(a.shape[0]) - alpha * a
    try:
        x = np.linalg.solve(m, np.asarray(s, dtype=float))
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"singular system at ell={ell!r}: {exc}") from None
    return float((1 - alpha) * x.sum())


def _u(ell: float, a: np.ndarray, s: np.ndarray, alpha: float) -> np.ndarray:
    m = ell * np.eye(a.shape[0]) - alpha * a
    return (1 - alpha) * ell * np.linalg.solve(m, s)


def _f_robust(ell, lo, hi, a, s, alpha):
    # singular only if ell lands exactly on an eigenvalue of alpha*A; nudge inside the bracket
    try:
        return ell, eval_f(ell, a, s, alpha)
    except NumericalFailureError:
        ell = ell + 1e-3 * (hi - lo) if ell + 1e-3 * (hi - lo) < hi else 0.5 * (ell + hi)
        return ell, eval_f(ell, a, s, alpha)


def solve_direct(A, s, cfg: SolverConfig | None = None,
                 spectral: SpectralInfo | None = None) -> ReputationResult:
    """Bracketed bisection for the root of f(ell) = 1, then one linear solve for r."""
    cfg = cfg or SolverConfig(method="direct")
    alpha = cfg.alpha
    a, s = _prepare(A, s, alpha)
    n = a.shape[0]
    if alpha == 0.0:
        ell = float(s.sum())
        return ReputationResult(s.copy(), ell, 0, 0.0, ell, spectral, "direct")
    if alpha == 1.0:
        return replace(solve_alpha1(a, spectral=spectral), method="direct")

    spec = spectral if spectral is not None else spectral_radius(a)
    if float(spec.v_max @ s) <= PERRON_OVERLAP_MIN:
        raise TheoremViolationError(
            "starting vector is orthogonal to the Perron vector; no bracketed root exists"
        )
    edge = alpha * spec.lambda_max
    hi = float(n)
    f_hi = eval_f(hi, a, s, alpha)
    if f_hi > 1.0 + UPPER_EDGE_SLACK:
        raise TheoremViolationError(
            f"f(n) = {f_hi!r} > 1: root not bracketed on (alpha*lambda_max, n]"
        )
    lo = None
    for gap in (BRACKET_GAP, 1e-12, 1e-14):
        cand = edge * (1 + gap) if edge > 0 else gap
        if cand >= hi:
            continue
        cand, f_lo = _f_robust(cand, cand, hi, a, s, alpha)
        if f_lo >= 1.0:
            lo = cand
            break
    if lo is None:
        if f_hi >= 1.0:
            lo = hi  # root sits on the upper edge
        else:
            raise TheoremViolationError(
                "f stays below 1 at the lower bracket edge; root not bracketed"
            )
    while hi - lo > BISECTION_WIDTH:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        mid, fm = _f_robust(mid, lo, hi, a, s, alpha)
        if fm > 1.0:
            lo = mid
        else:
            hi = mid
    ell_star = 0.5 * (lo + hi)
    try:
        r = _u(ell_star, a, s, alpha)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"singular system at ell*={ell_star!r}: {exc}") from None
    # near the bracket edge the solve is ill-conditioned and e^T r drifts from ell*
    # by ~cond*eps; a few contraction steps clean up that rounding
    delta = cfg.tolerance(n)
    res = fixed_point_residual(a, s, alpha, r)
    for _ in range(POLISH_STEPS):
        if res <= delta:
            break
        r = (1 - alpha) * s + alpha * (a @ r) / r.sum()
        res = fixed_point_residual(a, s, alpha, r)
    return ReputationResult(r, float(r.sum()), 0, res, ell_star, spec, "direct")


# -- iterative method -------------------------------------------------------

def solve_iterative(A, s, cfg: SolverConfig | None = None) -> ReputationResult:
    """Fixed-point iteration from ``r = s`` until successive iterates differ by < delta (1-norm).

    At ``alpha = 1`` the map is normalized power iteration; it runs on
    ``A + c I`` (c = mean entry) so periodic matrices converge, and the
    result is rescaled back to the unshifted fixed point.
    """
    cfg = cfg or SolverConfig()
    alpha = cfg.alpha
    a, s = _prepare(A, s, alpha)
    n = a.shape[0]
    delta = cfg.tolerance(n)
    shift = float(a.mean()) if alpha == 1.0 else 0.0
    r = s.copy()
    diff = np.inf
    for k in range(1, cfg.max_iterations + 1):
        ell = r.sum()
        if not ell > 0:
            raise DegenerateInstanceError(
                f"reputation norm vanished at iteration {k}; A annihilates s"
            )
        rn = (1 - alpha) * s + alpha * (a @ r + shift * r) / ell
        diff = np.abs(rn - r).sum()
        r = rn
        if diff < delta:
            break
    else:
        raise NonConvergenceError(
            f"no convergence in {cfg.max_iterations} iterations (diff={diff:.3e})",
            last=r, iterations=cfg.max_iterations,
        )
    if shift:
        ell = r.sum()
        if not ell - shift > 0:
            raise DegenerateInstanceError("shifted power iteration collapsed")
        r = r * (ell - shift) / ell
    ell = float(r.sum())
    res = fixed_point_residual(a, s, alpha, r)
    return ReputationResult(r, ell, k, res, ell, None, "iterative")


def solve_alpha1(A, spectral: SpectralInfo | None = None) -> ReputationResult:
    """Closed form at alpha = 1: ``r = lambda_max v_max / e^T v_max``; independent of s."""
    a = _matrix(A)
    report = check_irreducible(a)
    if not report.irreducible:
        warnings.warn(
            f"evidence matrix is reducible ({len(report.components)} strongly connected "
            "components); the alpha=1 solution may not be unique",
            RuntimeWarning,
            stacklevel=2,
        )
    spec = spectral if spectral is not None else spectral_radius(a)
    r = spec.lambda_max * spec.v_max / spec.v_max.sum()
    res = float(np.abs(a @ r / r.sum() - r).sum()) if r.sum() > 0 else 0.0
    return ReputationResult(r, float(spec.lambda_max), 0, res, float(spec.lambda_max), spec, "alpha1")


def solve(A, s, cfg: SolverConfig | None = None) -> ReputationResult:
    """Dispatch on ``cfg.method``. At alpha = 1 both methods use the s-free closed form."""
    cfg = cfg or SolverConfig()
    if cfg.alpha == 1.0:
        start_vector(s, np.asarray(A).shape[0])
        return solve_alpha1(A)
    if cfg.method == "direct":
        return solve_direct(A, s, cfg)
    return solve_iterative(A, s, cfg)


# -- variants and closed-form laws -----------------------------------------

def solve_alternative_t(A, s, alpha: float, cfg: SolverConfig | None = None) -> np.ndarray:
    """Variant that excludes user x from both the sum and the normalization for t_x.

    ``t_x = (1-alpha) s_x + alpha * sum_{y != x} A_xy t_y / sum_{z != x} t_z``
    """
    cfg = cfg or SolverConfig(alpha=alpha)
    a, s = _prepare(A, s, alpha)
    n = a.shape[0]
    if n < 3:
        raise ValidationError("the alternative metric needs n >= 3")
    delta = cfg.tolerance(n)
    diag = np.diag(a).copy()
    t = s.copy()
    diff = np.inf
    for k in range(1, cfg.max_iterations + 1):
        den = t.sum() - t
        if np.any(den <= 0):
            raise DegenerateInstanceError(f"empty complement sum at iteration {k}")
        num = a @ t - diag * t
        tn = (1 - alpha) * s + alpha * num / den
        diff = np.abs(tn - t).sum()
        t = tn
        if diff < delta:
            return t
    raise NonConvergenceError(
        f"alternative metric did not converge in {cfg.max_iterations} iterations "
        f"(diff={diff:.3e})",
        last=t, iterations=cfg.max_iterations,
    )


def diagonal_shift_predict(r0, ell0: float, alpha: float, zeta: float) -> np.ndarray:
    """Exact solution for ``A + zeta I`` given the solution ``r0`` (norm ``ell0``) for ``A``."""
    return (1.0 + alpha * zeta / ell0) * np.asarray(r0, dtype=float)


def linear_approx(s, alpha: float, spectral: SpectralInfo) -> np.ndarray:
    """Straight-line interpolation between the alpha=0 and alpha=1 solutions."""
    v = spectral.v_max
    return (1 - alpha) * np.asarray(s, dtype=float) + alpha * spectral.lambda_max * v / v.sum()
