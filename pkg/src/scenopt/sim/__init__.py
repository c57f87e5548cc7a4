"""Simulation backends, the batch runner and the trace store."""

from .cutin import CutinConfig, VehicleState, quintic_lateral, simulate_cutin, ttc, ttc_series
from .griewank import griewank, griewank_trace
from .runner import RunResult, run_batch
from .store import TraceStore, TraceStoreError
from .templates import Template, get_template, register_template, registered_templates

__all__ = [
    "CutinConfig",
    "RunResult",
    "Template",
    "TraceStore",
    "TraceStoreError",
    "VehicleState",
    "get_template",
    "griewank",
    "griewank_trace",
    "quintic_lateral",
    "register_template",
    "registered_templates",
    "run_batch",
    "simulate_cutin",
    "ttc",
    "ttc_series",
]
