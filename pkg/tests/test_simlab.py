import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from flowrep.errors import ValidationError
from flowrep.evidence import EvidenceMatrix
from flowrep.simlab import (
    AttackSpec,
    GeneratorConfig,
    ToyScenarioConfig,
    apply_attack,
    apply_self_promotion,
    apply_slandering,
    apply_sybil,
    fill_count,
    gen_matrix,
    run_experiment,
    sample_tau,
    sybil_count,
    toy_scenario,
    trial_seeds,
)
from flowrep.simlab.experiments import KINDS, pick_attacker, pick_median_user
from flowrep.solver import SolverConfig, solve_iterative


class TestGenerator:
    def test_fill_count(self):
        assert fill_count(10, 0.3) == 27
        m = np.asarray(gen_matrix(GeneratorConfig(n=10, seed=1, noise=0.0)))
        off = ~np.eye(10, dtype=bool)
        # noise 0 puts every overwritten cell exactly on tau, almost surely != 0.5
        assert np.sum(m[off] != 0.5) == 27

    @given(st.integers(2, 30), st.floats(0, 1, exclude_min=True, exclude_max=True),
           st.floats(0, 1, exclude_min=True, exclude_max=True), st.floats(0, 1),
           st.integers(0, 2**32 - 1))
    def test_invariants(self, n, tau_max, fill, noise, seed):
        m = gen_matrix(GeneratorConfig(n=n, tau_max=tau_max, fill=fill, noise=noise, seed=seed))
        assert isinstance(m, EvidenceMatrix) and m.n == n

    def test_entries_within_noise_of_row_level(self):
        m = np.asarray(gen_matrix(GeneratorConfig(n=60, seed=2, noise=0.05)))
        off = ~np.eye(60, dtype=bool)
        for x in range(60):
            vals = m[x][off[x] & (m[x] != 0.5)]
            if vals.size > 1:
                assert vals.max() - vals.min() <= 0.1 + 1e-12

    @pytest.mark.parametrize("tau_max", [0.2, 0.6, 0.9])
    def test_tau_moments(self, tau_max):
        tau = sample_tau(np.random.default_rng(0), 200_000, tau_max)
        mean = (1 + tau_max) / 3
        var = (1 + tau_max**2 - tau_max) / 18
        assert tau.min() >= 0 and tau.max() <= 1
        assert abs(tau.mean() - mean) < 4 * np.sqrt(var / tau.size)
        assert tau.var() == pytest.approx(var, rel=0.02)

    def test_reproducible(self):
        cfg = GeneratorConfig(n=30, seed=11)
        assert gen_matrix(cfg) == gen_matrix(cfg)
        assert gen_matrix(cfg) != gen_matrix(GeneratorConfig(n=30, seed=12))

    @pytest.mark.parametrize("kw", [dict(n=1), dict(fill=1.5), dict(tau_max=-0.1), dict(noise=-1)])
    def test_bad_config(self, kw):
        with pytest.raises(ValidationError):
            GeneratorConfig(**kw)


class TestToy:
    def test_structure(self):
        A, s = toy_scenario(ToyScenarioConfig(n=4, epsilon=1e-3, b=0.8, zeta=0.25, s1=0.9))
        assert np.all(np.diag(A) == 0.25)
        assert np.all(A[0, 1:] == 0.8) and np.all(A[1:, 0] == 1e-3)
        np.testing.assert_array_equal(s, [0.9, 1e-3, 1e-3, 1e-3])

    @pytest.mark.parametrize("kw", [dict(n=2), dict(epsilon=0.1), dict(b=1.2)])
    def test_bad_config(self, kw):
        with pytest.raises(ValidationError):
            ToyScenarioConfig(**kw)


@pytest.fixture
def small():
    rng = np.random.default_rng(5)
    A = np.asarray(gen_matrix(GeneratorConfig(n=20), rng))
    return A, rng.random(20)


class TestAttacks:
    def test_self_promotion_rewrites_only_attacker_column(self, small):
        A, _ = small
        y = 3
        B = np.asarray(apply_self_promotion(A, y))
        others = np.delete(np.arange(20), y)
        np.testing.assert_array_equal(np.delete(B, y, axis=1), np.delete(A, y, axis=1))
        col = B[others, y]
        op = A[y, others]
        assert np.all(col[op > 0.5] == 1) and np.all(col[op < 0.5] == 0)
        np.testing.assert_array_equal(col[op == 0.5], A[others, y][op == 0.5])

    def test_self_promotion_helps(self, small):
        A, s = small
        cfg = SolverConfig(alpha=0.8)
        y = 3
        assert (solve_iterative(apply_self_promotion(A, y), s, cfg).r[y]
                >= solve_iterative(A, s, cfg).r[y])

    def test_slandering_parts(self, small):
        A, _ = small
        x, y = 1, 2
        B = np.asarray(apply_slandering(A, y, x))
        assert B[x, y] == 0
        third = np.delete(np.arange(20), [x, y])
        op = A[x, third]
        np.testing.assert_array_equal(B[third, y], np.where(op < 0.5, 1.0, 0.0))
        direct = np.asarray(apply_slandering(A, y, x, indirect=False))
        assert np.sum(direct != A) <= 1
        indirect = np.asarray(apply_slandering(A, y, x, direct=False))
        assert indirect[x, y] == A[x, y]

    def test_slandering_hurts(self, small):
        A, s = small
        cfg = SolverConfig(alpha=0.8)
        before = solve_iterative(A, s, cfg).r[1]
        assert solve_iterative(apply_slandering(A, 2, 1), s, cfg).r[1] < before

    def test_tie_rating(self, small):
        A, _ = small
        x, y = 1, 2
        B = np.asarray(apply_slandering(A, y, x, tie_rating=0.5))
        tied = [z for z in range(20) if z not in (x, y) and A[x, z] == 0.5]
        assert tied and np.all(B[tied, y] == 0.5)

    def test_sybil_shape(self, small):
        A, s = small
        B, s2 = apply_sybil(A, s, 2, 1, 0.5)
        k = sybil_count(20, 0.5)
        B = np.asarray(B)
        assert B.shape == (20 + k,) * 2 and s2.shape == (20 + k,)
        np.testing.assert_array_equal(s2[20:], 0)
        np.testing.assert_array_equal(B[:20, :20], A)
        assert np.all(B[1, 20:] == 0) and np.all(B[2, 20:] == 1)
        sib = B[20:, 20:]
        assert np.all(sib[~np.eye(k, dtype=bool)] == 1)
        assert np.all(B[20:, :20] == 0.5)

    def test_sybil_m_zero_is_identity(self, small):
        A, s = small
        B, s2 = apply_sybil(A, s, 2, 1, 0.0)
        np.testing.assert_array_equal(np.asarray(B), A)
        np.testing.assert_array_equal(s2, s)

    def test_sybil_count_float_noise(self):
        assert sybil_count(100, 0.7) == 70 and sybil_count(200, 1.2) == 240

    @given(st.floats(0, 1.5))
    def test_sybil_count_matches_floor(self, m):
        assert sybil_count(37, m) == int(np.floor(37 * m + 1e-9))

    def test_sybil_damage_grows_with_m(self, small):
        A, s = small
        cfg = SolverConfig(alpha=0.9)
        rs = [solve_iterative(*apply_sybil(A, s, 2, 1, m), cfg).r[1] for m in (0, 0.5, 1.0)]
        assert rs[0] > rs[1] > rs[2]

    def test_dispatch_and_validation(self, small):
        A, s = small
        B, _ = apply_attack(AttackSpec("slandering", attacker=2, target=1), A, s)
        assert B == apply_slandering(A, 2, 1)
        with pytest.raises(ValidationError):
            AttackSpec("slandering", attacker=2)
        with pytest.raises(ValidationError):
            AttackSpec("bribery", attacker=2)
        with pytest.raises(ValidationError):
            apply_slandering(A, 2, 2)
        with pytest.raises(ValidationError):
            apply_self_promotion(A, 20)


def test_pickers():
    r = np.array([0.1, 0.2, 0.3, 0.7, 0.8])
    assert pick_attacker(r, np.ones(5, bool)) == 1
    assert pick_median_user(r, np.ones(5, bool)) == 2
    el = np.array([False, False, False, True, True])
    assert pick_attacker(r, el) in (3, 4)  # nobody below neutral: whole pool


class TestExperiments:
    def test_seeds_are_spawned(self):
        a = trial_seeds(0, 5)
        assert len(set(a)) == 5 and a == trial_seeds(0, 5)
        assert trial_seeds(1, 5) != a

    @pytest.mark.parametrize("kind", KINDS)
    def test_every_kind_runs_small(self, kind):
        grids = {
            "method_comparison": {"n": [12], "alpha": [0.5]},
            "alpha_sweep": {"n": [12], "alpha": [0.0, 0.5, 1.0]},
            "s_scalar_sweep": {"n": [12], "tau_max": [0.6], "c": [0.1, 1.0]},
            "s_pretrusted_sweep": {"n": [12], "T": [1, 2, 3]},
            "selfref_study": {"n": [10, 20], "alpha": [0.5]},
            "self_promotion_study": {"n": [12], "alpha": [0.5], "T": [2], "c": [0.5]},
            "slandering_study": {"n": [12], "alpha": [0.5], "T": [2], "c": [0.5]},
            "sybil_study": {"n": [12], "alpha": [0.5], "T": [2], "m": [0, 0.5]},
        }
        rep = run_experiment(kind, grid=grids[kind], trials=2, seed=3)
        assert rep.records and not rep.failures
        assert len(rep.seeds) == len(rep.wall_times)
        lines = rep.to_csv().splitlines()
        assert lines[0].startswith("experiment,") and lines[0].endswith(",metric,value,seed")
        assert len(lines) == 1 + len(rep.records) + len(rep.summary)
        json.loads(rep.to_json())

    def test_bitwise_reproducible(self):
        kw = dict(grid={"n": [15], "alpha": [0.3, 0.8]}, trials=3, seed=9)
        a = run_experiment("method_comparison", workers=1, **kw)
        b = run_experiment("method_comparison", workers=3, **kw)
        assert json.dumps(a.data()) == json.dumps(b.data())
        assert a.to_csv() == b.to_csv()

    def test_unknown_kind_and_param(self):
        with pytest.raises(ValidationError):
            run_experiment("nope")
        with pytest.raises(ValidationError):
            run_experiment("alpha_sweep", grid={"beta": [1]})
        with pytest.raises(ValidationError):
            run_experiment("alpha_sweep", trials=0)

    def test_failures_are_logged_not_fatal(self):
        # T larger than n makes the pre-trusted start invalid for every unit
        rep = run_experiment("s_pretrusted_sweep", grid={"n": [5], "T": [9]}, trials=2)
        assert rep.flagged and len(rep.failures) == 2
        assert all("seed" in f and "ValidationError" in f["error"] for f in rep.failures)
