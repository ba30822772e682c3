"""Run every simulation sweep at its default grid and write JSON + CSV per sweep.

    python3 scripts/run_all.py --out results/ [--seed 0] [--only sybil_study ...]
"""

import argparse
import json
import logging
import time
from pathlib import Path

from flowrep.simlab import KINDS, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--only", nargs="*", choices=KINDS)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for kind in args.only or KINDS:
        t0 = time.perf_counter()
        rep = run_experiment(kind, seed=args.seed, workers=args.workers)
        (out / f"{kind}.json").write_text(rep.to_json(indent=1) + "\n")
        (out / f"{kind}.csv").write_text(rep.to_csv())
        logging.info("%-22s %6d records  %d failures  %.1fs", kind, len(rep.records),
                     len(rep.failures), time.perf_counter() - t0)
        for row in rep.summary[:12]:
            print(json.dumps(row))


if __name__ == "__main__":
    main()
