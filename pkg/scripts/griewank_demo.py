"""2-D Griewank example: optimise, fit a mixture to the low-cost region, compare samples.

    python3 scripts/griewank_demo.py --seed 0 --out runs/griewank
"""

import argparse
import json
from pathlib import Path

from scenopt.cli import main


def run(args):
    common = ["--out", str(args.out), "--seed", str(args.seed)]
    if main(common + ["griewank-demo", "--threshold", str(args.threshold), "--n", str(args.n)]) != 0:
        raise SystemExit(1)
    report = json.loads((args.out / "report.json").read_text())
    for d in ("gmm", "uniform"):
        print(f"{d:8s} mean cost {report[d]['mean_cost']:.4f} over {report[d]['n']} samples")
    print(f"plot data: {args.out}/history.dat, {args.out}/scatter_gmm.dat, {args.out}/scatter_uniform.dat")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=0.25)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--out", type=Path, default=Path("runs/griewank"))
    run(p.parse_args())
