"""File-backed trace store.

Layout under the store root::

    manifest.jsonl        one JSON record per run (appended by a single writer)
    traces/<run_id>.csv   one trace per run

A trace file starts with a ``# dt=<dt> start_time=<t0>`` line, followed by a
header ``t,<signal>,...`` and one comma-separated row per sample. Values are
written with ``repr`` so they parse back bit-exactly.
"""

from __future__ import annotations

import json
import os
import re
from pathlib import Path

import numpy as np

from ..stl import Trace

_RUN_ID_RE = re.compile(r"^[A-Za-z0-9_.-]+$")
_META_RE = re.compile(r"^# dt=(\S+) start_time=(\S+)$")


class TraceStoreError(RuntimeError):
    pass


class TraceStore:
    def __init__(self, root):
        self.root = Path(root)
        (self.root / "traces").mkdir(parents=True, exist_ok=True)
        self.manifest_path.touch(exist_ok=True)

    def __repr__(self):
        return f"TraceStore({str(self.root)!r})"

    @property
    def manifest_path(self) -> Path:
        return self.root / "manifest.jsonl"

    def store_trace(self, run_id: str, trace: Trace) -> str:
        """Write ``trace`` under ``run_id``; returns the reference relative to the store root."""
        if not _RUN_ID_RE.match(run_id):
            raise TraceStoreError(f"invalid run id {run_id!r}")
        ref = f"traces/{run_id}.csv"
        names = list(trace.signals)
        columns = [trace.times] + [trace.signals[n] for n in names]
        lines = [f"# dt={trace.dt!r} start_time={trace.start_time!r}", ",".join(["t"] + names)]
        for row in zip(*columns):
            lines.append(",".join(repr(float(v)) for v in row))
        try:
            with open(self.root / ref, "x") as fh:
                fh.write("\n".join(lines) + "\n")
        except FileExistsError:
            raise TraceStoreError(f"duplicate run id {run_id!r}") from None
        return ref

    def load_trace(self, ref: str) -> Trace:
        path = self.root / ref
        if not path.is_file():
            raise TraceStoreError(f"no trace at {ref!r}")
        lines = path.read_text().splitlines()
        try:
            m = _META_RE.match(lines[0])
            dt, start = float(m.group(1)), float(m.group(2))
            header = lines[1].split(",")
            if header[0] != "t" or len(set(header)) != len(header):
                raise ValueError("bad header")
            rows = np.array([[float(v) for v in line.split(",")] for line in lines[2:]])
            if rows.shape != (len(lines) - 2, len(header)):
                raise ValueError("ragged rows")
            return Trace(dt=dt, start_time=start, signals={n: rows[:, i + 1] for i, n in enumerate(header[1:])})
        except (AttributeError, IndexError, ValueError) as exc:
            raise TraceStoreError(f"corrupt trace file {ref!r}: {exc}") from None

    # manifest

    def append(self, records) -> None:
        """Append manifest rows; only the coordinating process calls this."""
        records = list(records)
        if not records:
            return
        known = self.run_ids()
        for rec in records:
            if rec["run_id"] in known:
                raise TraceStoreError(f"duplicate run id {rec['run_id']!r} in manifest")
            known.add(rec["run_id"])
        with open(self.manifest_path, "a") as fh:
            for rec in records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def records(self) -> list:
        out = []
        for lineno, line in enumerate(self.manifest_path.read_text().splitlines(), 1):
            if not line.strip():
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise TraceStoreError(f"corrupt manifest line {lineno}: {exc}") from None
        return out

    def run_ids(self) -> set:
        return {rec["run_id"] for rec in self.records()}

    def batches(self) -> list:
        seen = []
        for rec in self.records():
            if rec.get("batch") not in seen:
                seen.append(rec.get("batch"))
        return seen

    def check(self) -> None:
        """Verify that every manifest row's trace exists and parses."""
        ids = set()
        for rec in self.records():
            if rec["run_id"] in ids:
                raise TraceStoreError(f"duplicate run id {rec['run_id']!r}")
            ids.add(rec["run_id"])
            if rec.get("trace_path"):
                self.load_trace(rec["trace_path"])

