"""Threat models: rewrites of the evidence matrix an attacker can perform.

Only columns belonging to attackers (their own judgments) are touched; a
Sybil attack additionally appends rows/columns for the fake accounts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..evidence import NEUTRAL, EvidenceMatrix

KINDS = ("self_promotion", "slandering", "sybil")


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    attacker: int
    target: int | None = None
    sybil_ratio: float = 0.0
    # rating given to third parties whose opinion of the target is exactly neutral
    tie_rating: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"attack kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind != "self_promotion":
            if self.target is None:
                raise ValidationError(f"{self.kind} needs a target")
            if self.target == self.attacker:
                raise ValidationError("attacker and target must differ")
        if self.sybil_ratio < 0:
            raise ValidationError("sybil_ratio must be >= 0")


def _check_user(a, *users):
    for u in users:
        if not 0 <= u < a.shape[0]:
            raise ValidationError(f"user index {u} out of range for n={a.shape[0]}")


def apply_self_promotion(A, attacker: int) -> EvidenceMatrix:
    """Attacker y rates x as 1 if x thinks well of y (A[y, x] > 1/2), 0 if badly.

    Exactly neutral opinions leave the attacker's rating of x unchanged.
    """
    a = np.array(A, dtype=float)
    y = attacker
    _check_user(a, y)
    opinion = np.asarray(A, dtype=float)[y, :]
    others = np.arange(a.shape[0]) != y
    a[others & (opinion > NEUTRAL), y] = 1.0
    a[others & (opinion < NEUTRAL), y] = 0.0
    return EvidenceMatrix(a)


def _slander_column(orig: np.ndarray, target: int, tie_rating: float) -> np.ndarray:
    """Ratings the slanderer hands out: 1 to those who rate the target below neutral,
    0 to those above, ``tie_rating`` to exactly neutral ones."""
    opinion = orig[target, :]
    return np.where(opinion < NEUTRAL, 1.0, np.where(opinion > NEUTRAL, 0.0, tie_rating))


def apply_slandering(A, attacker: int, target: int, *, direct: bool = True,
                     indirect: bool = True, tie_rating: float = 0.0) -> EvidenceMatrix:
    """Attacker y zeroes A[x, y] (direct part) and rewrites A[z, y] for third
    parties z (indirect part): 1 if A[x, z] < 1/2, otherwise 0."""
    orig = np.asarray(A, dtype=float)
    a = np.array(orig)
    x, y = target, attacker
    _check_user(a, x, y)
    if x == y:
        raise ValidationError("attacker and target must differ")
    if indirect:
        col = _slander_column(orig, x, tie_rating)
        third = np.ones(a.shape[0], dtype=bool)
        third[[x, y]] = False
        a[third, y] = col[third]
    if direct:
        a[x, y] = 0.0
    return EvidenceMatrix(a)


def sybil_count(n: int, m: float) -> int:
    # guard against 0.7 * 100 = 70.00000000000001 style float noise in either direction
    return int(math.floor(n * m + 1e-9))


def apply_sybil(A, s, attacker: int, target: int, m: float,
                *, tie_rating: float = 0.0) -> tuple[EvidenceMatrix, np.ndarray]:
    """Append floor(n m) sibling accounts that slander the target and promote the
    attacker and one another.

    Siblings rate the target 0, each other 1 and the attacker 1; third parties
    get 1 if they rate the target below neutral, otherwise 0. Honest users'
    (and the attacker's) opinions of siblings are neutral, and siblings are
    not pre-trusted (starting value 0).
    """
    orig = np.asarray(A, dtype=float)
    s = np.asarray(s, dtype=float)
    n = orig.shape[0]
    x, y = target, attacker
    _check_user(orig, x, y)
    if x == y:
        raise ValidationError("attacker and target must differ")
    if m < 0:
        raise ValidationError("m must be >= 0")
    k = sybil_count(n, m)
    if k == 0:
        return EvidenceMatrix(orig), s.copy()
    big = np.full((n + k, n + k), NEUTRAL)
    big[:n, :n] = orig
    sib = slice(n, n + k)
    big[sib, sib] = 1.0
    col = _slander_column(orig, x, tie_rating)
    third = np.ones(n, dtype=bool)
    third[[x, y]] = False
    big[np.flatnonzero(third), n:] = col[third, None]
    big[x, sib] = 0.0
    big[y, sib] = 1.0
    np.fill_diagonal(big, 0.0)
    return EvidenceMatrix(big), np.concatenate([s, np.zeros(k)])


def apply_attack(spec: AttackSpec, A, s) -> tuple[EvidenceMatrix, np.ndarray]:
    if spec.kind == "self_promotion":
        return apply_self_promotion(A, spec.attacker), np.asarray(s, dtype=float).copy()
    if spec.kind == "slandering":
        return (apply_slandering(A, spec.attacker, spec.target, tie_rating=spec.tie_rating),
                np.asarray(s, dtype=float).copy())
    return apply_sybil(A, s, spec.attacker, spec.target, spec.sybil_ratio,
                       tie_rating=spec.tie_rating)
