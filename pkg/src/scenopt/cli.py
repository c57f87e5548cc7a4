"""Command-line pipeline: optimise, fit a mixture, sample, evaluate, compare.

Every command works inside a run directory (``--out``)::

    scenario.json          copy of the logical scenario, later with its mixture
    history.json           optimiser evaluations and settings
    model.json             final surrogate (hyperparameters and training data)
    gmm.json               fitted mixture and fit statistics
    samples_<dist>.json    concrete scenarios drawn from gmm or uniform
    eval_<dist>.json       per-scenario costs and a summary
    report.json            comparison of the two evaluation sets
    store/                 trace store (manifest.jsonl and traces/)
    *.dat                  whitespace-separated plot data

Exit codes: 0 success, 1 invalid input, 2 runtime or numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .bo import BoConfig, BoEvaluationError, run_bo
from .gmm import GmmError, fit_low_cost_gmm
from .gp import GpFitError, KernelHyper, fit_posterior
from .scenario import (
    ConcreteScenario,
    Gmm,
    ScenarioError,
    Uniform,
    attach_distribution,
    concretize,
    from_dict,
    read_logical,
    write_logical,
)
from .sim import TraceStore, TraceStoreError, run_batch

log = logging.getLogger("scenopt")

DISTRIBUTIONS = ("gmm", "uniform")
HIST_BINS = 10

GRIEWANK_DEMO = {
    "name": "griewank_2d",
    "template": "griewank",
    "parameters": [{"name": "x1", "range": [-5.0, 5.0]}, {"name": "x2", "range": [-5.0, 5.0]}],
    "specs": [{"name": "zero", "stl": "0 - f >= 0"}],
    "distribution": {"type": "uniform"},
}


class CliError(Exception):
    """Invalid user input; exit code 1."""


# --- run directory helpers --------------------------------------------------


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _read_json(path: Path, what: str):
    if not path.is_file():
        raise CliError(f"{path} not found; run {what} first")
    return json.loads(path.read_text())


def _scenario(out: Path):
    path = out / "scenario.json"
    if not path.is_file():
        raise CliError(f"{path} not found; run optimize first")
    return read_logical(path)


def _write_dat(path: Path, columns: list, rows) -> None:
    lines = ["# " + " ".join(columns)]
    lines += [" ".join(repr(float(v)) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def _seed_rng(seed: int, *stream) -> np.random.Generator:
    return np.random.default_rng([seed, *stream])


def _batch_costs(results) -> list:
    bad = [r for r in results if r.status != "ok"]
    if bad:
        raise RuntimeError(f"simulation of scenario {bad[0].index} failed: {bad[0].error}")
    return [r.cost for r in results]


# --- optimise ---------------------------------------------------------------


def optimize(out: Path, logical, spec_name: str, config: BoConfig, workers: int) -> dict:
    spec = logical.spec(spec_name)
    out.mkdir(parents=True, exist_ok=True)
    write_logical(logical, out / "scenario.json")
    store = TraceStore(out / "store")
    space = logical.parameters
    counter = iter(range(10**6))

    def evaluate_batch(points):
        k = next(counter)
        scns = [ConcreteScenario(logical.name, i, space.as_dict(p)) for i, p in enumerate(points)]
        batch_id = "bo-init" if k == 0 else f"bo-iter{k:03d}"
        return _batch_costs(run_batch(scns, logical.template, spec, workers, store, batch_id))

    try:
        run = run_bo(None, space, config, evaluate_batch=evaluate_batch)
    except BoEvaluationError as exc:
        partial = [{"point": space.as_dict(e.point), "cost": e.cost, "iteration": e.iteration} for e in exc.history]
        _write_json(out / "history_partial.json", {"spec": spec_name, "error": str(exc), "evaluations": partial})
        raise
    history = {
        "spec": spec_name,
        "config": {k: getattr(config, k) for k in config.__dataclass_fields__},
        "converged": run.converged,
        "iterations": run.iterations,
        "best": {"point": space.as_dict(run.best.point), "cost": run.best.cost},
        "evaluations": [
            {"point": space.as_dict(e.point), "cost": e.cost, "iteration": e.iteration} for e in run.history
        ],
    }
    _write_json(out / "history.json", history)
    m = run.final_model
    _write_json(
        out / "model.json",
        {
            "kernel": "matern52",
            "input_scaling": "unit cube over the parameter ranges",
            "signal_variance": m.hyper.signal_variance,
            "lengthscales": list(m.hyper.lengthscales),
            "jitter": m.jitter,
            "target_offset": m.target_offset,
            "inputs": m.train_inputs.tolist(),
            "targets": [e.cost for e in run.history],
        },
    )
    _write_dat(
        out / "history.dat",
        space.names + ["cost", "iteration"],
        [list(e.point) + [e.cost, e.iteration] for e in run.history],
    )
    return history


def load_model(out: Path):
    doc = _read_json(out / "model.json", "optimize")
    return fit_posterior(doc["inputs"], doc["targets"], KernelHyper(doc["signal_variance"], doc["lengthscales"]))


# --- mixture ----------------------------------------------------------------


def fit_gmm(out: Path, threshold: float, probes: int, max_components: int, max_points: int, seed: int) -> dict:
    logical = _scenario(out)
    model = load_model(out)
    params, survivors = fit_low_cost_gmm(
        model, logical.parameters, threshold, probes, max_components, max_points, _seed_rng(seed, 1)
    )
    meta = {"threshold": threshold, "probes": probes, "survivors": survivors, "seed": seed}
    logical = attach_distribution(logical, params, meta)
    write_logical(logical, out / "scenario.json")
    doc = {"parameters": logical.parameters.names, **params.to_dict(), "meta": logical.distribution.meta}
    _write_json(out / "gmm.json", doc)
    return doc


# --- sampling and evaluation ------------------------------------------------


def _distribution(logical, name):
    if name == "uniform":
        return Uniform()
    if not isinstance(logical.distribution, Gmm):
        raise CliError("scenario has no fitted mixture; run fit-gmm first")
    return logical.distribution


def sample(out: Path, n: int, dist: str, seed: int) -> list:
    if n < 0:
        raise CliError("--n must be >= 0")
    logical = _scenario(out)
    scns = concretize(logical, n, _seed_rng(seed, 2, DISTRIBUTIONS.index(dist)), _distribution(logical, dist))
    doc = [{"index": s.index, "values": s.values} for s in scns]
    _write_json(out / f"samples_{dist}.json", {"distribution": dist, "seed": seed, "samples": doc})
    return scns


def _summary(costs) -> dict:
    costs = [c for c in costs if c is not None]
    if not costs:
        return {"n": 0, "conformity_rate": None, "mean_cost": None}
    return {
        "n": len(costs),
        "conformity_rate": sum(c == 0.0 for c in costs) / len(costs),
        "mean_cost": math.fsum(costs) / len(costs),
    }


def evaluate(out: Path, dist: str, workers: int) -> dict:
    logical = _scenario(out)
    spec_name = _read_json(out / "history.json", "optimize")["spec"]
    samples = _read_json(out / f"samples_{dist}.json", f"sample --distribution {dist}")["samples"]
    scns = [ConcreteScenario(logical.name, s["index"], s["values"]) for s in samples]
    store = TraceStore(out / "store")
    if f"eval-{dist}" in store.batches():
        raise CliError(f"{dist} samples were already evaluated in {out}")
    results = run_batch(scns, logical.template, logical.spec(spec_name), workers, store, f"eval-{dist}")
    doc = {
        "distribution": dist,
        "spec": spec_name,
        "summary": _summary([r.cost for r in results]),
        "failed": sum(r.status != "ok" for r in results),
        "runs": [
            {"index": r.index, "run_id": r.run_id, "cost": r.cost, "robustness": r.robustness, "status": r.status}
            for r in results
        ],
    }
    _write_json(out / f"eval_{dist}.json", doc)
    return doc


# --- comparison -------------------------------------------------------------


def _histogram(costs, edges):
    zero = sum(c == 0.0 for c in costs)
    positive = [c for c in costs if c > 0.0]
    counts = np.histogram(positive, bins=edges)[0].tolist() if positive else [0] * (len(edges) - 1)
    return {"zero": zero, "edges": list(edges), "counts": counts}


def compare(out: Path) -> dict:
    """Report from the trace-store manifest alone, so it can be regenerated at any time."""
    logical = _scenario(out)
    store = TraceStore(out / "store")
    rows = {d: [r for r in store.records() if r.get("batch") == f"eval-{d}"] for d in DISTRIBUTIONS}
    for d in DISTRIBUTIONS:
        if f"eval-{d}" not in store.batches():
            raise CliError(f"no {d} evaluation in {out}; run evaluate --distribution {d} first")
    costs = {d: [r["cost"] for r in rows[d] if r["status"] == "ok"] for d in DISTRIBUTIONS}
    top = max([c for d in DISTRIBUTIONS for c in costs[d]] + [0.0])
    edges = np.linspace(0.0, top if top > 0 else 1.0, HIST_BINS + 1).tolist()
    report = {}
    for d in DISTRIBUTIONS:
        report[d] = {**_summary(costs[d]), "histogram": _histogram(costs[d], edges)}
        names = logical.parameters.names
        _write_dat(
            out / f"scatter_{d}.dat",
            names + ["cost"],
            [[r["params"][n] for n in names] + [r["cost"]] for r in rows[d] if r["status"] == "ok"],
        )
    g, u = report["gmm"]["conformity_rate"], report["uniform"]["conformity_rate"]
    if g is None or u is None:
        ratio = None
    elif u == 0.0:
        ratio = None if g == 0.0 else math.inf
    else:
        ratio = g / u
    report["ratio"] = "inf" if ratio == math.inf else ratio
    _write_json(out / "report.json", report)
    return report


# --- argument parsing -------------------------------------------------------


def _add_common(p, suppress):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=default(0), help="random seed (default 0)")
    p.add_argument("--workers", type=int, default=default(1), help="simulation processes (default 1)")
    p.add_argument("--out", type=Path, default=default(Path("run")), help="run directory (default ./run)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scenopt", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    _add_common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, help):
        p = sub.add_parser(name, help=help)
        _add_common(p, suppress=True)
        return p

    p = command("optimize", help="initial design plus batch Thompson sampling")
    p.add_argument("scenario", type=Path, help="logical scenario document (JSON)")
    p.add_argument("--spec", required=True, help="name of the outcome specification to optimise")
    p.add_argument("--init", type=int, default=64, help="initial design size")
    p.add_argument("--init-mode", choices=("raster", "random"), default="raster")
    p.add_argument("--iters", type=int, default=6, help="maximum iterations")
    p.add_argument("--batch", type=int, default=10, help="candidates per iteration")
    p.add_argument("--pool", type=int, default=1000, help="Thompson candidate pool size")
    p.add_argument("--tol", type=float, default=1e-3, help="convergence tolerance on the best cost")
    p.add_argument(
        "--window", type=int, default=None, help="stop after this many stagnant iterations (default: run all --iters)"
    )

    p = command("fit-gmm", help="fit a mixture to the surrogate's low-cost region")
    p.add_argument("--threshold", type=float, required=True, help="surrogate cost threshold")
    p.add_argument("--probes", type=int, default=100_000)
    p.add_argument("--max-components", type=int, default=8)
    p.add_argument("--max-points", type=int, default=2000, help="cap on mixture training points")

    for name, help in (("sample", "draw concrete scenarios"), ("evaluate", "simulate drawn scenarios")):
        p = command(name, help=help)
        p.add_argument("--distribution", choices=DISTRIBUTIONS, required=True)
        if name == "sample":
            p.add_argument("--n", type=int, default=200)

    command("compare", help="compare gmm and uniform evaluations")

    p = command("griewank-demo", help="run the 2-D Griewank pipeline end to end")
    p.add_argument("--threshold", type=float, default=0.25)
    p.add_argument("--n", type=int, default=500)
    return parser


def _run(args) -> dict:
    out = args.out
    if args.workers < 1:
        raise CliError("--workers must be >= 1")
    if args.command == "optimize":
        try:
            logical = read_logical(args.scenario)
        except OSError as exc:
            raise CliError(f"cannot read {args.scenario}: {exc}") from None
        window = args.iters if args.window is None else args.window
        cfg = BoConfig(args.init_mode, args.init, args.batch, args.iters, args.pool, args.tol, window, args.seed)
        h = optimize(out, logical, args.spec, cfg, args.workers)
        return {"evaluations": len(h["evaluations"]), "best": h["best"], "converged": h["converged"]}
    if args.command == "fit-gmm":
        doc = fit_gmm(out, args.threshold, args.probes, args.max_components, args.max_points, args.seed)
        return {"components": len(doc["weights"]), "survivors": doc["meta"]["survivors"]}
    if args.command == "sample":
        return {"samples": len(sample(out, args.n, args.distribution, args.seed))}
    if args.command == "evaluate":
        return evaluate(out, args.distribution, args.workers)["summary"]
    if args.command == "compare":
        r = compare(out)
        return {d: r[d]["conformity_rate"] for d in DISTRIBUTIONS} | {"ratio": r["ratio"]}
    if args.command == "griewank-demo":
        cfg = BoConfig("random", 11, 5, 8, seed=args.seed)
        h = optimize(out, from_dict(GRIEWANK_DEMO), "zero", cfg, args.workers)
        fit_gmm(out, args.threshold, 100_000, 8, 2000, args.seed)
        for d in DISTRIBUTIONS:
            sample(out, args.n, d, args.seed)
            evaluate(out, d, args.workers)
        r = compare(out)
        return {"best": h["best"], "iterations": h["iterations"]} | {
            f"mean_cost_{d}": r[d]["mean_cost"] for d in DISTRIBUTIONS
        }
    raise CliError(f"unknown command {args.command}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        result = _run(args)
    except (CliError, ScenarioError, GmmError) as exc:
        print(f"scenopt: error: {exc}", file=sys.stderr)
        return 1
    except (GpFitError, BoEvaluationError, TraceStoreError, np.linalg.LinAlgError, RuntimeError, ArithmeticError) as exc:
        print(f"scenopt: failed: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"scenopt: error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(result, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
