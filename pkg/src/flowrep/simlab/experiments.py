"""Seeded parameter sweeps behind the numerical studies.

Every sweep is split into independent units (one random matrix each). Unit
``i`` draws from its own PCG64 stream seeded with ``seeds[i]``, derived from
the master seed through ``numpy.random.SeedSequence.spawn``; rerunning a unit
with ``np.random.default_rng(seeds[i])`` regenerates it. Results are
collected in unit order, so a thread pool cannot change the report.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import FlowRepError, ValidationError
from ..solver import (
    SolverConfig,
    linear_approx,
    pretrusted_start,
    solve_alpha1,
    solve_direct,
    solve_iterative,
    spectral_radius,
)
from .attacks import apply_self_promotion, apply_slandering, apply_sybil
from .generator import GeneratorConfig, gen_matrix

log = logging.getLogger(__name__)

KINDS = (
    "method_comparison",
    "alpha_sweep",
    "s_scalar_sweep",
    "s_pretrusted_sweep",
    "selfref_study",
    "self_promotion_study",
    "slandering_study",
    "sybil_study",
)

_TENTHS = [round(0.1 * i, 1) for i in range(1, 10)]

DEFAULT_GRIDS = {
    "method_comparison": {"n": [50, 100, 200], "alpha": _TENTHS},
    "alpha_sweep": {"n": [500], "tau_max": [0.6], "alpha": [round(0.1 * i, 1) for i in range(11)]},
    "s_scalar_sweep": {"n": [1000], "alpha": [0.9], "tau_max": [0.2, 0.6, 0.9],
                       "c": [round(0.1 * i, 1) for i in range(1, 11)]},
    "s_pretrusted_sweep": {"n": [1000], "alpha": [0.9], "T": list(range(1, 21))},
    "selfref_study": {"n": [10, 20, 50, 100, 200, 500], "alpha": [0.1, 0.5, 0.9]},
    "self_promotion_study": {"n": [200], "alpha": [0.1, 0.3, 0.5, 0.7, 0.9],
                             "c": [round(0.1 * i, 1) for i in range(1, 11)],
                             "T": list(range(10, 200, 20))},
    "slandering_study": {"n": [100], "alpha": [0.1, 0.3, 0.5, 0.7, 0.9],
                         "c": [round(0.1 * i, 1) for i in range(1, 11)],
                         "T": list(range(10, 100, 10))},
    "sybil_study": {"n": [200], "alpha": [0.2, 0.5, 0.9], "T": [10, 50, 100],
                    "m": [round(0.2 * i, 1) for i in range(7)]},
}

DEFAULT_TRIALS = {
    "method_comparison": 20,
    "alpha_sweep": 50,
    "s_scalar_sweep": 1,
    "s_pretrusted_sweep": 1,
    "selfref_study": 20,
    "self_promotion_study": 1,
    "slandering_study": 1,
    "sybil_study": 1,
}


def default_workers() -> int:
    return max(1, int(os.environ.get("FLOWREP_THREADS", "1")))


def trial_seeds(seed: int, count: int) -> list[int]:
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


@dataclass
class ExperimentReport:
    experiment: str
    grid: dict
    records: list[dict]
    seeds: list[int]
    trials: int
    seed: int
    summary: list[dict] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)
    wall_times: list[float] = field(default_factory=list)

    @property
    def flagged(self) -> bool:
        return bool(self.failures)

    def data(self) -> dict:
        """Everything except timing; bitwise reproducible for a given seed."""
        return {
            "experiment": self.experiment,
            "grid": self.grid,
            "trials": self.trials,
            "seed": self.seed,
            "seeds": self.seeds,
            "records": self.records,
            "summary": self.summary,
            "failures": self.failures,
        }

    def to_dict(self) -> dict:
        d = self.data()
        d["metadata"] = {"wall_times": self.wall_times}
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def rows(self) -> list[dict]:
        return self.records + self.summary

    def to_csv(self) -> str:
        """Tidy table: experiment, parameters..., metric, value, seed."""
        rows = self.rows()
        params = sorted({k for r in rows for k in r} - {"metric", "value", "seed"})
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["experiment", *params, "metric", "value", "seed"])
        for r in rows:
            w.writerow([self.experiment, *(_cell(r.get(p, "")) for p in params),
                        r["metric"], _cell(r["value"]), r["seed"]])
        return buf.getvalue()

    def values(self, metric: str, **params) -> np.ndarray:
        return np.array([r["value"] for r in self.records if r["metric"] == metric
                         and all(r.get(k) == v for k, v in params.items())])

    def summary_value(self, metric: str, **params):
        for r in self.summary:
            if r["metric"] == metric and all(r.get(k) == v for k, v in params.items()):
                return r["value"]
        raise KeyError((metric, params))


def _cell(v):
    return repr(v) if isinstance(v, float) else v


def _rec(metric: str, value, seed: int, **params) -> dict:
    out = dict(params)
    out.update(metric=metric, value=float(value) if not isinstance(value, (int, str)) else value,
               seed=seed)
    return out


# -- user selection ---------------------------------------------------------

def pick_attacker(r, eligible) -> int:
    """A below-neutral user (r < 0.5) of median standing among the eligible ones."""
    r = np.asarray(r)
    idx = np.flatnonzero(eligible)
    low = idx[r[idx] < 0.5]
    pool = low if low.size else idx
    med = np.median(r[pool])
    return int(pool[np.argmin(np.abs(r[pool] - med))])


def pick_median_user(r, eligible) -> int:
    r = np.asarray(r)
    idx = np.flatnonzero(eligible)
    med = np.median(r[idx])
    return int(idx[np.argmin(np.abs(r[idx] - med))])


def _solve(A, s, alpha, spectral=None):
    if alpha == 1.0:
        return solve_alpha1(A, spectral=spectral)
    return solve_iterative(A, s, SolverConfig(alpha=alpha))


# -- unit runners -----------------------------------------------------------
# each takes (params, seed) and returns a list of records

def _unit_method_comparison(p, seed, grid):
    rng = np.random.default_rng(seed)
    n = p["n"]
    A = np.asarray(gen_matrix(GeneratorConfig(n=n), rng))
    s = rng.random(n)
    spec = spectral_radius(A)
    out = []
    for alpha in grid["alpha"]:
        rd = solve_direct(A, s, SolverConfig(alpha=alpha, method="direct"), spectral=spec)
        ri = solve_iterative(A, s, SolverConfig(alpha=alpha))
        kw = dict(n=n, alpha=alpha)
        out += [
            _rec("l1_diff", np.abs(rd.r - ri.r).sum(), seed, **kw),
            _rec("iterations", ri.iterations, seed, **kw),
            _rec("residual_direct", rd.residual, seed, **kw),
            _rec("residual_iterative", ri.residual, seed, **kw),
            _rec("ell_star_gap", rd.ell_star - alpha * spec.lambda_max, seed, **kw),
        ]
    return out


def _unit_alpha_sweep(p, seed, grid):
    rng = np.random.default_rng(seed)
    n, tau_max = p["n"], p["tau_max"]
    A = np.asarray(gen_matrix(GeneratorConfig(n=n, tau_max=tau_max), rng))
    s = np.zeros(n)
    s[0] = 1.0
    spec = spectral_radius(A)
    sols = {alpha: _solve(A, s, alpha, spec).r for alpha in grid["alpha"]}
    out = []
    for alpha, r in sols.items():
        kw = dict(n=n, tau_max=tau_max, alpha=alpha)
        out.append(_rec("ell_over_n", r.sum() / n, seed, **kw))
        out.append(_rec("linear_approx_max_dev",
                        np.abs(r - linear_approx(s, alpha, spec)).max(), seed, **kw))
    if p["trial"] == 0:
        r1 = spec.lambda_max * spec.v_max / spec.v_max.sum()
        order = np.argsort(r1, kind="stable")
        tracked = [0] + [int(order[int(q * (n - 1))]) for q in (0.0, 0.25, 0.5, 0.75, 1.0)]
        for alpha, r in sols.items():
            for u in dict.fromkeys(tracked):
                out.append(_rec("r_component", r[u], seed, n=n, tau_max=tau_max,
                                alpha=alpha, user=u))
    return out


def _unit_s_scalar(p, seed, grid):
    rng = np.random.default_rng(seed)
    n, tau_max, alpha = p["n"], p["tau_max"], p["alpha"]
    A = np.asarray(gen_matrix(GeneratorConfig(n=n, tau_max=tau_max), rng))
    sols = {c: _solve(A, np.full(n, c), alpha).r for c in grid["c"]}
    ref = sols[max(sols)]
    order = np.argsort(ref, kind="stable")
    tracked = dict.fromkeys(int(order[int(q * (n - 1))]) for q in (0.0, 0.25, 0.5, 0.75, 1.0))
    out = []
    for c, r in sols.items():
        kw = dict(n=n, tau_max=tau_max, alpha=alpha, c=c)
        out.append(_rec("ell_over_n", r.sum() / n, seed, **kw))
        for u in tracked:
            out.append(_rec("r_component", r[u], seed, user=u, **kw))
    return out


def _unit_s_pretrusted(p, seed, grid):
    rng = np.random.default_rng(seed)
    n, alpha = p["n"], p["alpha"]
    A = np.asarray(gen_matrix(GeneratorConfig(n=n), rng))
    Ts = sorted(grid["T"])
    sols = {T: _solve(A, pretrusted_start(n, T), alpha).r for T in Ts}
    tracked = range(min(n, Ts[-1] + 5))
    out = []
    for T, r in sols.items():
        kw = dict(n=n, alpha=alpha, T=T)
        out.append(_rec("ell_over_n", r.sum() / n, seed, **kw))
        for u in tracked:
            out.append(_rec("r_component", r[u], seed, user=u, **kw))
    for T in Ts:
        if T - 1 in sols:
            d = sols[T] - sols[T - 1]
            others = np.delete(np.abs(d), T - 1)
            kw = dict(n=n, alpha=alpha, T=T)
            out.append(_rec("jump", d[T - 1], seed, **kw))
            out.append(_rec("others_median_abs_change", np.median(others), seed, **kw))
    return out


def _unit_selfref(p, seed, grid):
    rng = np.random.default_rng(seed)
    n = p["n"]
    A = np.asarray(gen_matrix(GeneratorConfig(n=n), rng))
    s = rng.random(n)
    A1 = A + np.eye(n)
    out = []
    for alpha in grid["alpha"]:
        r0 = solve_iterative(A, s, SolverConfig(alpha=alpha)).r
        r1 = solve_iterative(A1, s, SolverConfig(alpha=alpha)).r
        l0, l1 = r0.sum(), r1.sum()
        kw = dict(n=n, alpha=alpha)
        out += [
            _rec("ell0", l0, seed, **kw),
            _rec("ell1", l1, seed, **kw),
            _rec("rel_change", (l1 - l0) / l0, seed, **kw),
            _rec("dell_minus_alpha", (l1 - l0) - alpha, seed, **kw),
            _rec("proportionality_error", np.abs(r1 - (1 + alpha / l0) * r0).max(), seed, **kw),
        ]
    return out


def _s_families(n, grid):
    for c in grid.get("c", []):
        yield "scalar", {"c": c}, np.full(n, c)
    for T in grid.get("T", []):
        yield "pretrusted", {"T": T}, pretrusted_start(n, T)


def _reference(A, n):
    return solve_iterative(A, np.full(n, 0.5), SolverConfig(alpha=0.5)).r


def _unit_self_promotion(p, seed, grid):
    rng = np.random.default_rng(seed)
    n = p["n"]
    A = np.asarray(gen_matrix(GeneratorConfig(n=n), rng))
    eligible = np.arange(n) >= max(grid.get("T", [0]) or [0])
    y = pick_attacker(_reference(A, n), eligible)
    B = np.asarray(apply_self_promotion(A, y))
    out = []
    for alpha in grid["alpha"]:
        for family, kw, s in _s_families(n, grid):
            d = _solve(B, s, alpha).r[y] - _solve(A, s, alpha).r[y]
            out.append(_rec("delta_r_attacker", d, seed, n=n, alpha=alpha, family=family,
                            attacker=y, **kw))
    return out


def _unit_slandering(p, seed, grid):
    rng = np.random.default_rng(seed)
    n = p["n"]
    A = np.asarray(gen_matrix(GeneratorConfig(n=n), rng))
    eligible = np.arange(n) >= max(grid.get("T", [0]) or [0])
    ref = _reference(A, n)
    y = pick_attacker(ref, eligible)
    eligible[y] = False
    x = pick_median_user(ref, eligible)
    variants = {
        "full": np.asarray(apply_slandering(A, y, x)),
        "direct": np.asarray(apply_slandering(A, y, x, indirect=False)),
        "indirect": np.asarray(apply_slandering(A, y, x, direct=False)),
    }
    out = []
    for alpha in grid["alpha"]:
        for family, kw, s in _s_families(n, grid):
            base = _solve(A, s, alpha).r[x]
            for part, B in variants.items():
                d = _solve(B, s, alpha).r[x] - base
                out.append(_rec("delta_r_target", d, seed, n=n, alpha=alpha, family=family,
                                part=part, attacker=y, target=x, **kw))
    return out


def _unit_sybil(p, seed, grid):
    rng = np.random.default_rng(seed)
    n = p["n"]
    A = np.asarray(gen_matrix(GeneratorConfig(n=n), rng))
    x = 0  # pre-trusted for every T >= 1
    eligible = np.arange(n) >= max(grid["T"])
    y = pick_attacker(_reference(A, n), eligible)
    out = []
    for alpha in grid["alpha"]:
        for T in grid["T"]:
            s = pretrusted_start(n, T)
            before = _solve(A, s, alpha).r[x]
            for m in grid["m"]:
                B, s2 = apply_sybil(A, s, y, x, m)
                after = _solve(B, s2, alpha).r[x]
                kw = dict(n=n, alpha=alpha, T=T, m=m, attacker=y, target=x)
                out += [
                    _rec("r_before", before, seed, **kw),
                    _rec("r_after", after, seed, **kw),
                    _rec("retained", after / before, seed, **kw),
                    _rec("reduction_pct", 100.0 * (1 - after / before), seed, **kw),
                ]
    return out


_UNITS = {
    "method_comparison": (_unit_method_comparison, ("n",)),
    "alpha_sweep": (_unit_alpha_sweep, ("n", "tau_max")),
    "s_scalar_sweep": (_unit_s_scalar, ("n", "tau_max", "alpha")),
    "s_pretrusted_sweep": (_unit_s_pretrusted, ("n", "alpha")),
    "selfref_study": (_unit_selfref, ("n",)),
    "self_promotion_study": (_unit_self_promotion, ("n",)),
    "slandering_study": (_unit_slandering, ("n",)),
    "sybil_study": (_unit_sybil, ("n",)),
}


# -- summaries --------------------------------------------------------------

def _group_mean(records, metric, keys):
    groups = {}
    for r in records:
        if r["metric"] == metric:
            groups.setdefault(tuple(r[k] for k in keys), []).append(r["value"])
    return {k: v for k, v in groups.items()}


def loglog_slope(ns, values) -> float:
    return float(np.polyfit(np.log(ns), np.log(values), 1)[0])


def _summarize(kind, records, grid, seed):
    out = []
    if kind == "method_comparison":
        for (n, a), v in _group_mean(records, "l1_diff", ("n", "alpha")).items():
            out.append(_rec("mean_l1_diff", np.mean(v), seed, n=n, alpha=a))
        for (n, a), v in _group_mean(records, "iterations", ("n", "alpha")).items():
            out.append(_rec("max_iterations", int(max(v)), seed, n=n, alpha=a))
    elif kind == "alpha_sweep":
        for (n, t, a), v in _group_mean(records, "ell_over_n", ("n", "tau_max", "alpha")).items():
            for name, fn in (("min", np.min), ("max", np.max), ("mean", np.mean)):
                out.append(_rec(f"{name}_ell_over_n", fn(v), seed, n=n, tau_max=t, alpha=a))
    elif kind == "selfref_study":
        means = _group_mean(records, "rel_change", ("alpha", "n"))
        for (a, n), v in means.items():
            out.append(_rec("mean_rel_change", np.mean(v), seed, alpha=a, n=n))
        for a in grid["alpha"]:
            ns = sorted(n for (aa, n) in means if aa == a)
            if len(ns) >= 2:
                vals = [np.mean(means[(a, n)]) for n in ns]
                out.append(_rec("loglog_slope", loglog_slope(ns, vals), seed, alpha=a))
    elif kind == "sybil_study":
        for (a, T, m), v in _group_mean(records, "retained", ("alpha", "T", "m")).items():
            out.append(_rec("mean_retained", np.mean(v), seed, alpha=a, T=T, m=m))
    return out


# -- driver -----------------------------------------------------------------

def run_experiment(kind: str, grid: dict | None = None, trials: int | None = None,
                   seed: int = 0, workers: int | None = None) -> ExperimentReport:
    """Run one sweep. ``grid`` entries override the defaults key by key."""
    if kind not in _UNITS:
        raise ValidationError(f"unknown experiment {kind!r}; choose from {KINDS}")
    g = {k: list(v) for k, v in DEFAULT_GRIDS[kind].items()}
    for k, v in (grid or {}).items():
        if k not in g:
            raise ValidationError(f"{kind} has no grid parameter {k!r}")
        g[k] = list(v) if isinstance(v, (list, tuple)) else [v]
    trials = DEFAULT_TRIALS[kind] if trials is None else int(trials)
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    fn, unit_keys = _UNITS[kind]
    units = [dict(zip(unit_keys, combo), trial=t)
             for combo in itertools.product(*(g[k] for k in unit_keys))
             for t in range(trials)]
    seeds = trial_seeds(seed, len(units))

    def run_unit(i):
        t0 = time.perf_counter()
        try:
            recs, fail = fn(units[i], seeds[i], g), None
        except FlowRepError as exc:
            log.warning("%s unit %d (seed %d) failed: %s", kind, i, seeds[i], exc)
            recs, fail = [], {"unit": i, "seed": seeds[i], "params": units[i],
                              "error": f"{type(exc).__name__}: {exc}"}
        return recs, fail, time.perf_counter() - t0

    workers = default_workers() if workers is None else workers
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_unit, range(len(units))))
    else:
        results = [run_unit(i) for i in range(len(units))]
    records = [r for recs, _, _ in results for r in recs]
    failures = [f for _, f, _ in results if f is not None]
    report = ExperimentReport(
        experiment=kind, grid=g, records=records, seeds=seeds, trials=trials, seed=seed,
        failures=failures, wall_times=[w for _, _, w in results],
    )
    report.summary = _summarize(kind, records, g, seed)
    return report
