"""How far the first-order prediction of the influence matrix can be trusted.

For random generated instances, perturbs one whole rater column of A by h
(clipped to [0, 1]) and compares the true change in r with ``E``'s linear
prediction. Prints the median and worst relative error per h and alpha.

    python3 scripts/validity_radius.py [--n 100] [--instances 20]
"""

import argparse

import numpy as np

from flowrep.sensitivity import influence_matrix
from flowrep.simlab import GeneratorConfig, gen_matrix, trial_seeds
from flowrep.solver import SolverConfig, solve_iterative

STEPS = (1e-3, 1e-2, 0.05, 0.1, 0.2, 0.5)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--instances", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print("alpha,h,median_rel_err,max_rel_err")
    for alpha in (0.3, 0.6, 0.9):
        cfg = SolverConfig(alpha=alpha)
        errs = {h: [] for h in STEPS}
        for seed in trial_seeds(args.seed, args.instances):
            rng = np.random.default_rng(seed)
            A = np.asarray(gen_matrix(GeneratorConfig(n=args.n), rng))
            s = rng.random(args.n)
            res = solve_iterative(A, s, cfg)
            infl = influence_matrix(A, res, alpha)
            y = int(rng.integers(args.n))
            sign = rng.choice([-1.0, 1.0])
            for h in STEPS:
                B = A.copy()
                B[:, y] = np.clip(B[:, y] + sign * h, 0.0, 1.0)
                B[y, y] = 0.0
                true = solve_iterative(B, s, cfg).r - res.r
                pred = infl.predict(B - A)
                errs[h].append(np.abs(true - pred).sum() / np.abs(true).sum())
        for h in STEPS:
            print(f"{alpha},{h},{np.median(errs[h]):.3e},{np.max(errs[h]):.3e}")


if __name__ == "__main__":
    main()
