"""Cut-in experiment: 64 raster points, 6 batches of 10, then 200 mixture vs 200 uniform samples.

Runs one pipeline per seed and prints the conformity rates.

    python3 scripts/cutin_experiment.py --seeds 0 1 2 --workers 4
"""

import argparse
import json
import time
from pathlib import Path

from scenopt.cli import main

SCENARIO = Path(__file__).resolve().parent.parent / "scenarios" / "cutin.json"


def pipeline(out, seed, workers, threshold, n):
    common = ["--out", str(out), "--seed", str(seed), "--workers", str(workers)]
    steps = [
        ["optimize", str(SCENARIO), "--spec", "Spec1", "--init", "64", "--iters", "6", "--batch", "10"],
        ["fit-gmm", "--threshold", str(threshold)],
        ["sample", "--distribution", "gmm", "--n", str(n)],
        ["sample", "--distribution", "uniform", "--n", str(n)],
        ["evaluate", "--distribution", "gmm"],
        ["evaluate", "--distribution", "uniform"],
        ["compare"],
    ]
    for step in steps:
        if main(common + step) != 0:
            raise SystemExit(f"{step[0]} failed for seed {seed}")
    return json.loads((out / "report.json").read_text())


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--threshold", type=float, default=0.05)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--out", type=Path, default=Path("runs/cutin"))
    args = p.parse_args()
    print("seed  gmm_rate  uniform_rate  ratio  seconds")
    for seed in args.seeds:
        t0 = time.perf_counter()
        r = pipeline(args.out / f"seed{seed}", seed, args.workers, args.threshold, args.n)
        ratio = r["ratio"] if isinstance(r["ratio"], str) or r["ratio"] is None else f"{r['ratio']:.3f}"
        print(f"{seed:4d}  {r['gmm']['conformity_rate']:8.3f}  {r['uniform']['conformity_rate']:12.3f}  "
              f"{ratio:>5}  {time.perf_counter() - t0:7.1f}")
