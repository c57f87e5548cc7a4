"""Embarrassingly parallel evaluation of concrete scenarios."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

from ..stl import cost_from_robustness, eval_robustness
from .store import TraceStore
from .templates import get_template

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunResult:
    index: int
    run_id: str
    robustness: Optional[float]
    cost: Optional[float]
    status: str
    error: Optional[str] = None


def _run_one(job):
    template_id, values, spec, store_root, run_id = job
    store = TraceStore(store_root)
    try:
        trace = get_template(template_id).simulate(values)
        ref = store.store_trace(run_id, trace)
        rho = eval_robustness(spec, trace)
    except Exception as exc:  # recorded per scenario, never aborts the batch
        return None, None, "error", f"{type(exc).__name__}: {exc}", None
    return rho, cost_from_robustness(rho), "ok", None, ref


def run_batch(scenarios, template_id: str, spec, workers: int, store: TraceStore, batch_id: str | None = None) -> list:
    """Simulate and monitor every scenario; results are ordered by scenario index.

    Each worker writes its own trace files; manifest rows are appended here,
    in index order, once the whole batch is done, so the outcome does not
    depend on ``workers`` or completion order.
    """
    get_template(template_id)
    if workers < 1:
        raise ValueError("workers must be >= 1")
    scenarios = sorted(scenarios, key=lambda s: s.index)
    if not scenarios:
        return []
    if batch_id is None:
        batch_id = f"batch{len(store.batches()):04d}"
    jobs = [
        (template_id, dict(s.values), spec, str(store.root), f"{batch_id}-{s.index:05d}")
        for s in scenarios
    ]
    if workers == 1 or len(jobs) == 1:
        outcomes = [_run_one(job) for job in jobs]
    else:
        chunk = max(1, len(jobs) // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_one, jobs, chunksize=chunk))

    results, records = [], []
    for scn, job, (rho, xi, status, error, ref) in zip(scenarios, jobs, outcomes):
        run_id = job[4]
        if status != "ok":
            log.warning("scenario %s[%d] failed: %s", scn.name, scn.index, error)
        results.append(RunResult(scn.index, run_id, rho, xi, status, error))
        records.append(
            {
                "run_id": run_id,
                "batch": batch_id,
                "scenario": scn.name,
                "index": scn.index,
                "params": dict(scn.values),
                "robustness": rho,
                "cost": xi,
                "status": status,
                "error": error,
                "trace_path": ref,
            }
        )
    store.append(records)
    return results
