"""Random marketplace evidence matrices and the hand-built toy scenario."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..evidence import NEUTRAL, EvidenceMatrix


@dataclass(frozen=True)
class GeneratorConfig:
    n: int = 100
    tau_max: float = 0.6
    fill: float = 0.3
    noise: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValidationError("n must be >= 2")
        if not 0.0 < self.tau_max < 1.0:
            raise ValidationError("tau_max must lie in (0, 1)")
        if not 0.0 < self.fill < 1.0:
            raise ValidationError("fill must lie in (0, 1)")
        if self.noise < 0:
            raise ValidationError("noise must be >= 0")


def sample_tau(rng: np.random.Generator, size, tau_max: float = 0.6) -> np.ndarray:
    """Triangular density on [0, 1] peaking (height 2) at tau_max, by inverse CDF."""
    u = rng.random(size)
    return np.where(u <= tau_max, np.sqrt(u * tau_max), 1.0 - np.sqrt((1.0 - u) * (1.0 - tau_max)))


def fill_count(n: int, fill: float) -> int:
    return int(math.floor(fill * (n * n - n)))


def gen_matrix(cfg: GeneratorConfig, rng: np.random.Generator | None = None) -> EvidenceMatrix:
    """Neutral background, then a random subset of ordered pairs judged around the
    ratee's intrinsic trustworthiness.

    Uses ``rng`` when given, else a PCG64 generator seeded with ``cfg.seed``.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    n = cfg.n
    a = np.full((n, n), NEUTRAL)
    tau = sample_tau(rng, n, cfg.tau_max)
    k = fill_count(n, cfg.fill)
    # flat index over the n(n-1) off-diagonal ordered pairs
    idx = rng.choice(n * (n - 1), size=k, replace=False)
    x, j = np.divmod(idx, n - 1)
    y = j + (j >= x)
    lo = np.maximum(tau[x] - cfg.noise, 0.0)
    hi = np.minimum(tau[x] + cfg.noise, 1.0)
    a[x, y] = rng.uniform(lo, hi)
    np.fill_diagonal(a, 0.0)
    return EvidenceMatrix(a)


@dataclass(frozen=True)
class ToyScenarioConfig:
    n: int = 5
    epsilon: float = 1e-4
    sigma: float = 1.0
    b: float = 0.9
    zeta: float = 0.0
    s1: float = 1.0

    def __post_init__(self):
        if self.n < 3:
            raise ValidationError("toy scenario needs n >= 3")
        if not 0.0 < self.epsilon <= 0.01:
            raise ValidationError("epsilon must lie in (0, 0.01]")
        if not self.sigma > 0 or self.sigma * self.epsilon > 1:
            raise ValidationError("sigma must be positive with sigma*epsilon <= 1")
        for name in ("b", "zeta", "s1"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1]")


def toy_scenario(cfg: ToyScenarioConfig) -> tuple[np.ndarray, np.ndarray]:
    """One trusted user (index 0) rated b by everyone; everyone else rated epsilon.

    Returns a raw array (diagonal = zeta, so not an EvidenceMatrix unless
    zeta = 0) and the starting vector ``(s1, sigma*eps, ..., sigma*eps)``.
    """
    n, eps = cfg.n, cfg.epsilon
    a = np.full((n, n), eps)
    a[0, :] = cfg.b
    np.fill_diagonal(a, cfg.zeta)
    s = np.full(n, cfg.sigma * eps)
    s[0] = cfg.s1
    return a, s
