"""How much of the target survives a sybil attack, under two readings of how
attackers rate third parties with an exactly neutral opinion of the target.

tie=0.0 downvotes them (the default), tie=0.5 leaves them neutral. Prints the
mean retained fraction per m, then the seed-to-seed spread of the 20-seed
mean at m = 1.

    python3 scripts/sybil_tie_rule.py [--n 200] [--trials 20] [--blocks 10]
"""

import argparse

import numpy as np

from flowrep.simlab import GeneratorConfig, apply_sybil, gen_matrix, trial_seeds
from flowrep.simlab.experiments import pick_attacker
from flowrep.solver import SolverConfig, pretrusted_start, solve_iterative

MS = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2)


def retained(seed, n, alpha, T, tie, ms):
    rng = np.random.default_rng(seed)
    A = np.asarray(gen_matrix(GeneratorConfig(n=n), rng))
    ref = solve_iterative(A, np.full(n, 0.5), SolverConfig(alpha=0.5)).r
    y = pick_attacker(ref, np.arange(n) >= T)
    s = pretrusted_start(n, T)
    cfg = SolverConfig(alpha=alpha)
    before = solve_iterative(A, s, cfg).r[0]
    out = []
    for m in ms:
        B, s2 = apply_sybil(A, s, y, 0, m, tie_rating=tie)
        out.append(solve_iterative(B, s2, cfg).r[0] / before)
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--alpha", type=float, default=0.9)
    ap.add_argument("--T", type=int, default=50)
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--blocks", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    seeds = trial_seeds(args.seed, args.trials)
    print("m," + ",".join(f"tie={t}" for t in (0.0, 0.5)))
    table = {t: np.array([retained(sd, args.n, args.alpha, args.T, t, MS) for sd in seeds])
             for t in (0.0, 0.5)}
    for i, m in enumerate(MS):
        print(f"{m}," + ",".join(f"{table[t][:, i].mean():.4f}" for t in table))

    blocks = trial_seeds(args.seed + 1, args.blocks * args.trials)
    means = [np.mean([retained(sd, args.n, args.alpha, args.T, 0.0, (1.0,))[0]
                      for sd in blocks[b * args.trials:(b + 1) * args.trials]])
             for b in range(args.blocks)]
    print(f"\n{args.blocks} independent {args.trials}-seed means at m=1, tie=0: "
          f"{np.mean(means):.4f} +- {np.std(means):.4f}, "
          f"{np.mean(np.array(means) < 0.30):.0%} below 0.30")


if __name__ == "__main__":
    main()
