"""First-order response of the reputation vector to changes in the evidence matrix.

With ``E = [ell I - alpha A + (alpha/ell) A r e^T]^{-1}`` evaluated at a solution,

    d r_x / d A_zy = alpha * E[x, z] * r[y].

An attacker y who wants to lower r_x can therefore push on A_zy through the
third parties z with the largest |E[x, z]|.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import NumericalFailureError, ValidationError


@dataclass(frozen=True)
class InfluenceMatrix:
    E: np.ndarray
    alpha: float
    ell: float
    r: np.ndarray

    def derivative(self, x: int, z: int, y: int) -> float:
        """d r_x / d A_zy."""
        return float(self.alpha * self.E[x, z] * self.r[y])

    def jacobian_column(self, z: int, y: int) -> np.ndarray:
        """d r / d A_zy for all x at once."""
        return self.alpha * self.E[:, z] * self.r[y]

    def predict(self, dA) -> np.ndarray:
        """Linear prediction of the change in r for a perturbation dA."""
        return self.alpha * self.E @ (np.asarray(dA, dtype=float) @ self.r)

    def to_csv(self) -> str:
        return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in self.E)


def influence_matrix(A, result, alpha: float) -> InfluenceMatrix:
    a = np.asarray(A, dtype=float)
    r = np.asarray(result.r, dtype=float)
    ell = float(r.sum())
    n = a.shape[0]
    m = ell * np.eye(n) - alpha * a + (alpha / ell) * np.outer(a @ r, np.ones(n))
    try:
        E = np.linalg.inv(m)
    except np.linalg.LinAlgError:
        raise NumericalFailureError(
            f"influence system is singular (condition estimate {np.linalg.cond(m):.3e})"
        ) from None
    return InfluenceMatrix(E, alpha, ell, r)


@dataclass(frozen=True)
class AttackChannel:
    z: int
    sign: int  # +1: raise A[z, attacker]; -1: lower it
    magnitude: float

    def to_dict(self):
        return {"z": self.z, "sign": self.sign, "magnitude": self.magnitude}


def rank_attack_channels(infl: InfluenceMatrix, target: int, attacker: int,
                         k: int) -> list[AttackChannel]:
    """The k users z != attacker with the largest |E[target, z]|.

    Harmful direction: raise A[z, attacker] where E[target, z] < 0, lower it
    otherwise. Asking for more than n - 1 channels just returns them all.
    """
    if target == attacker:
        raise ValidationError("target and attacker must differ")
    row = infl.E[target]
    cand = np.array([z for z in range(row.shape[0]) if z != attacker], dtype=int)
    if k <= 0 or cand.size == 0:
        return []
    order = cand[np.argsort(-np.abs(row[cand]), kind="stable")][:k]
    return [AttackChannel(int(z), 1 if row[z] < 0 else -1, float(abs(row[z]))) for z in order]


def channels_to_json(channels) -> str:
    return json.dumps([c.to_dict() for c in channels])
