"""``flowrep`` command line.

User ids on the command line are 1-based, like the ratings log. Exit codes:
0 success, 2 validation, 3 non-convergence, 4 theorem violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import baseline as bl
from .errors import FlowRepError, ValidationError
from .evidence import EvidenceMatrix, aggregate, check_irreducible, read_ratings_csv
from .sensitivity import influence_matrix, rank_attack_channels
from .simlab.attacks import AttackSpec, apply_attack
from .simlab.experiments import KINDS, run_experiment
from .simlab.generator import GeneratorConfig, gen_matrix
from .solver import SolverConfig, pretrusted_start, solve, start_vector, uniform_start


def _default_seed() -> int:
    return int(os.environ.get("FLOWREP_SEED", "0"))


# -- argument helpers -------------------------------------------------------

def _read_vector(path: str) -> np.ndarray:
    text = Path(path).read_text().strip()
    if text.startswith("["):
        return np.array(json.loads(text), dtype=float)
    try:
        return np.array([float(v) for v in text.replace("\n", ",").split(",") if v.strip()])
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def parse_s_spec(spec: str, n: int) -> np.ndarray:
    """``uniform:c``, ``pretrusted:T`` or a path to a JSON array / CSV row."""
    kind, _, arg = spec.partition(":")
    try:
        if kind == "uniform" and arg:
            return uniform_start(n, float(arg))
        if kind == "pretrusted" and arg:
            return pretrusted_start(n, int(arg))
    except ValueError as exc:
        raise ValidationError(f"bad s-spec {spec!r}: {exc}") from None
    if not Path(spec).exists():
        raise ValidationError(f"s-spec {spec!r} is neither uniform:c, pretrusted:T nor a file")
    return start_vector(_read_vector(spec), n)


def parse_p_spec(spec: str, n: int) -> np.ndarray:
    """Probability vector for the baseline: ``uniform``, ``pretrusted:T`` or a path."""
    if spec == "uniform":
        return np.full(n, 1.0 / n)
    kind, _, arg = spec.partition(":")
    if kind == "pretrusted" and arg:
        p = pretrusted_start(n, int(arg))
        return p / p.sum()
    if not Path(spec).exists():
        raise ValidationError(f"p-spec {spec!r} is neither uniform, pretrusted:T nor a file")
    p = _read_vector(spec)
    if p.shape != (n,):
        raise ValidationError(f"p has length {p.shape[0]}, expected {n}")
    return p


def parse_grid(items) -> dict:
    grid = {}
    for item in items or []:
        key, sep, vals = item.partition("=")
        if not sep:
            raise ValidationError(f"grid override {item!r} must look like key=v1,v2")
        out = []
        for v in vals.split(","):
            num = float(v)
            out.append(int(num) if num.is_integer() and "." not in v else num)
        grid[key.strip().replace("-", "_")] = out
    return grid


def _user(uid: int | None, n: int, name: str) -> int | None:
    if uid is None:
        return None
    if not 1 <= uid <= n:
        raise ValidationError(f"--{name} {uid} outside [1, {n}]")
    return uid - 1


def _config(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def _emit(args, payload: dict) -> None:
    payload = {"config": _config(args), **payload}
    text = json.dumps(payload, indent=2)
    out = getattr(args, "out", None)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _solver_cfg(args) -> SolverConfig:
    return SolverConfig(alpha=args.alpha, delta=args.delta,
                        max_iterations=args.max_iterations, method=args.method)


def _write_matrix(m: EvidenceMatrix, out: str) -> list[str]:
    p = Path(out)
    csv_path, json_path = p.with_suffix(".csv"), p.with_suffix(".json")
    csv_path.write_text(m.to_csv())
    json_path.write_text(m.to_json())
    return [str(csv_path), str(json_path)]


def _matrix_stats(m: EvidenceMatrix) -> dict:
    a = m.entries
    off = ~np.eye(m.n, dtype=bool)
    return {
        "n": m.n,
        "non_neutral_fraction": float(np.mean(a[off] != 0.5)),
        "mean_off_diagonal": float(a[off].mean()),
        "irreducible": bool(check_irreducible(a).irreducible),
    }


# -- subcommands ------------------------------------------------------------

def cmd_aggregate(args):
    log = read_ratings_csv(args.log, args.users)
    m = aggregate(log)
    written = _write_matrix(m, args.out)
    print(json.dumps({"config": _config(args), "events": len(log.events),
                      "written": written, **_matrix_stats(m)}, indent=2))


def cmd_generate(args):
    cfg = GeneratorConfig(n=args.n, tau_max=args.tau_max, fill=args.fill,
                          noise=args.noise, seed=args.seed)
    m = gen_matrix(cfg)
    written = _write_matrix(m, args.out)
    print(json.dumps({"config": _config(args), "written": written, **_matrix_stats(m)},
                     indent=2))


def cmd_solve(args):
    A = EvidenceMatrix.load(args.matrix)
    s = parse_s_spec(args.s_spec, A.n)
    res = solve(A, s, _solver_cfg(args))
    _emit(args, res.to_dict())


def cmd_attack(args):
    A = EvidenceMatrix.load(args.matrix)
    n = A.n
    spec = AttackSpec(kind=args.kind, attacker=_user(args.attacker, n, "attacker"),
                      target=_user(args.target, n, "target"), sybil_ratio=args.m,
                      tie_rating=args.tie_rating)
    s = parse_s_spec(args.s_spec, n)
    cfg = _solver_cfg(args)
    before = solve(A, s, cfg)
    B, s2 = apply_attack(spec, A, s)
    after = solve(B, s2, cfg)
    delta = after.r[:n] - before.r
    summary = {
        "added_accounts": B.n - n,
        "delta_attacker": float(delta[spec.attacker]),
        "delta_l1_original_users": float(np.abs(delta).sum()),
    }
    if spec.target is not None:
        t = spec.target
        summary["delta_target"] = float(delta[t])
        summary["target_retained"] = float(after.r[t] / before.r[t]) if before.r[t] > 0 else None
    _emit(args, {"before": before.to_dict(), "after": after.to_dict(), "delta": summary})


def cmd_sensitivity(args):
    A = EvidenceMatrix.load(args.matrix)
    s = parse_s_spec(args.s_spec, A.n)
    res = solve(A, s, _solver_cfg(args))
    infl = influence_matrix(A, res, args.alpha)
    target = _user(args.target, A.n, "target")
    attacker = _user(args.attacker, A.n, "attacker")
    channels = rank_attack_channels(infl, target, attacker, args.k)
    if args.dump_e:
        Path(args.dump_e).write_text(infl.to_csv())
    _emit(args, {"channels": [{"z": c.z + 1, "sign": c.sign, "magnitude": c.magnitude}
                              for c in channels]})


def cmd_experiment(args):
    report = run_experiment(args.kind, parse_grid(args.grid), args.trials, args.seed,
                            args.workers)
    payload = report.to_dict()
    payload["config"] = _config(args)
    if args.out:
        prefix = Path(args.out)
        prefix.with_suffix(".json").write_text(json.dumps(payload, indent=2) + "\n")
        prefix.with_suffix(".csv").write_text(report.to_csv())
        print(json.dumps({"config": _config(args), "summary": report.summary,
                          "failures": report.failures}, indent=2))
    else:
        sys.stdout.write(report.to_csv())
    if report.flagged:
        logging.getLogger(__name__).warning("%d unit(s) failed", len(report.failures))


def cmd_baseline(args):
    log = read_ratings_csv(args.log, args.users)
    lt = bl.local_trust_matrix(log)
    p = parse_p_spec(args.p_spec, log.user_count)
    r = bl.eigentrust_solve(lt.normalized, p, args.alpha, args.delta)
    _emit(args, {"local_trust": lt.s_matrix.tolist(), "normalized": lt.normalized.tolist(),
                 "r": r.tolist()})


# -- parser -----------------------------------------------------------------

def _solver_args(p, alpha=0.5):
    p.add_argument("--alpha", type=float, default=alpha)
    p.add_argument("--method", choices=("iterative", "direct"), default="iterative")
    p.add_argument("--delta", type=float, default=None,
                   help="convergence threshold (default n*1e-15)")
    p.add_argument("--max-iterations", type=int, default=1000)
    p.add_argument("--s-spec", default="uniform:0.5",
                   help="uniform:c, pretrusted:T, or a JSON/CSV vector file")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="flowrep", description=__doc__.split("\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("aggregate", help="ratings log CSV -> evidence matrix CSV + JSON")
    p.add_argument("log")
    p.add_argument("--out", required=True, help="output path; .csv and .json are written")
    p.add_argument("--users", type=int, default=None, help="user count (default: max id)")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("generate", help="random marketplace evidence matrix")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--tau-max", type=float, default=0.6)
    p.add_argument("--fill", type=float, default=0.3)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="compute the reputation vector")
    p.add_argument("matrix")
    _solver_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("attack", help="apply an attack and report the change in r")
    p.add_argument("matrix")
    p.add_argument("--kind", choices=("self_promotion", "slandering", "sybil"), required=True)
    p.add_argument("--attacker", type=int, required=True)
    p.add_argument("--target", type=int)
    p.add_argument("--m", type=float, default=0.0, help="sybil accounts per original user")
    p.add_argument("--tie-rating", type=float, default=0.0,
                   help="rating slanderers give users neutral towards the target")
    _solver_args(p, alpha=0.9)
    p.add_argument("--out")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("sensitivity", help="rank indirect attack channels on a target")
    p.add_argument("matrix")
    p.add_argument("--target", type=int, required=True)
    p.add_argument("--attacker", type=int, required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--dump-e", help="write the influence matrix E as CSV")
    _solver_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("experiment", help="run a seeded sweep")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--grid", action="append", metavar="KEY=V1,V2",
                   help="override a grid axis, e.g. --grid n=10,20,50")
    p.add_argument("--out", help="prefix; writes PREFIX.json and PREFIX.csv (else CSV to stdout)")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("baseline", help="EigenTrust-style reference metric on a ratings log")
    p.add_argument("log")
    p.add_argument("--p-spec", default="uniform")
    p.add_argument("--alpha", type=float, default=0.85)
    p.add_argument("--delta", type=float, default=1e-12)
    p.add_argument("--users", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_baseline)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except FlowRepError as exc:
        print(f"flowrep: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"flowrep: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
