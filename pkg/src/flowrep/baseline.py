"""EigenTrust-style reference metric, kept for side-by-side comparison.

Local trust is the plain sum of ratings i gave j (weights ignored), negative
sums are clipped to zero and each row is normalized to a probability
distribution. Reputation is the damped Markov fixed point
``r = alpha a^T r + (1 - alpha) p``. Only relative information survives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonConvergenceError, ValidationError
from .evidence import TransactionLog


@dataclass(frozen=True)
class LocalTrustMatrix:
    s_matrix: np.ndarray
    normalized: np.ndarray


def local_trust(log: TransactionLog) -> np.ndarray:
    """``s[i, j]`` = sum of ratings user i gave user j (0-based indices)."""
    n = log.user_count
    s = np.zeros((n, n))
    for e in log.events:
        s[e.rater - 1, e.ratee - 1] += e.rating
    return s


def normalize(s_matrix) -> np.ndarray:
    """Row-normalize the positive part; rows with nothing positive become uniform 1/n."""
    s = np.asarray(s_matrix, dtype=float)
    pos = np.maximum(s, 0.0)
    tot = pos.sum(axis=1, keepdims=True)
    n = s.shape[1]
    with np.errstate(invalid="ignore", divide="ignore"):
        a = np.where(tot > 0, pos / np.where(tot > 0, tot, 1.0), 1.0 / n)
    return a


def local_trust_matrix(log: TransactionLog) -> LocalTrustMatrix:
    s = local_trust(log)
    return LocalTrustMatrix(s, normalize(s))


def eigentrust_solve(a_matrix, p, alpha: float, delta: float = 1e-12,
                     max_iterations: int = 10_000) -> np.ndarray:
    a = np.asarray(a_matrix, dtype=float)
    p = np.asarray(p, dtype=float)
    if p.shape != (a.shape[0],) or p.min() < 0 or not np.isclose(p.sum(), 1.0):
        raise ValidationError("p must be a probability vector of length n")
    if not 0.0 <= alpha <= 1.0:
        raise ValidationError(f"alpha must lie in [0, 1], got {alpha}")
    r = p.copy()
    diff = np.inf
    for _ in range(max_iterations):
        rn = alpha * (a.T @ r) + (1 - alpha) * p
        diff = np.abs(rn - r).sum()
        r = rn
        if diff < delta:
            return r
    raise NonConvergenceError(
        f"baseline iteration did not converge in {max_iterations} steps (diff={diff:.3e})",
        last=r, iterations=max_iterations,
    )
