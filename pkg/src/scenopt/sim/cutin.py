"""Kinematic cut-in-from-left highway scenario.

Two vehicles on a straight road. The ego drives at constant speed in lane 0.
``vehicle_1`` starts one lane to the left, ``dS`` metres ahead of the ego
(negative: behind), at a speed set by ``dV``, and at ``T`` seconds starts a
lane change into the ego lane along a quintic lateral profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..stl import Trace

CLOSING_EPS = 1e-6


@dataclass(frozen=True)
class CutinConfig:
    ego_s0: float = 1000.0
    ego_v: float = 16.667
    lane_width: float = 3.5
    lanechange_duration: float = 3.0
    dt: float = 0.05
    horizon: float = 20.0
    ttc_cap: float = 100.0
    dv_mode: str = "ratio"  # "ratio": v1 = ego_v * dV; "offset": v1 = ego_v + dV

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.horizon < self.lanechange_duration:
            raise ValueError("horizon must cover the lane change")
        if not self.ttc_cap > 0:
            raise ValueError("ttc_cap must be positive")
        if self.dv_mode not in ("ratio", "offset"):
            raise ValueError(f"unknown dv_mode {self.dv_mode!r}")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))


@dataclass(frozen=True)
class VehicleState:
    s: float  # longitudinal position, m
    d: float  # lateral position, m (lane 0 centre = 0, left positive)
    v: float  # longitudinal speed, m/s
    d_dot: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(x) for x in (self.s, self.d, self.v, self.d_dot)):
            raise ValueError("vehicle state must be finite")
        if self.v < 0:
            raise ValueError("longitudinal speed must be non-negative")


def ttc(ego: VehicleState, other: VehicleState, cap: float) -> float:
    """Time to collision from the projection of relative position on relative velocity."""
    rs, rd = other.s - ego.s, other.d - ego.d
    vs, vd = other.v - ego.v, other.d_dot - ego.d_dot
    dist = math.hypot(rs, rd)
    if dist == 0.0:
        return 0.0
    closing = -(rs * vs + rd * vd) / dist
    if closing <= CLOSING_EPS:
        return cap
    return min(dist / closing, cap)


def ttc_series(rs, rd, vs, vd, cap: float) -> np.ndarray:
    """Vectorised :func:`ttc` over relative position/velocity arrays."""
    dist = np.hypot(rs, rd)
    with np.errstate(divide="ignore", invalid="ignore"):
        closing = -(rs * vs + rd * vd) / dist
        out = np.where(closing > CLOSING_EPS, dist / closing, cap)
    out = np.minimum(out, cap)
    out[dist == 0.0] = 0.0
    return out


def quintic_lateral(t, start, duration, width):
    """Lateral offset and speed of a rest-to-rest quintic move from ``width`` to 0."""
    tau = np.clip((np.asarray(t, dtype=float) - start) / duration, 0.0, 1.0)
    blend = tau**3 * (10.0 - 15.0 * tau + 6.0 * tau**2)
    rate = 30.0 * tau**2 * (1.0 - tau) ** 2 / duration
    return width * (1.0 - blend), -width * rate


def vehicle1_speed(dV: float, config: CutinConfig) -> float:
    v1 = config.ego_v * dV if config.dv_mode == "ratio" else config.ego_v + dV
    if v1 < 0:
        raise ValueError(f"dV={dV} gives a negative speed for vehicle_1")
    return v1


def simulate_cutin(params: dict, config: CutinConfig = CutinConfig()) -> Trace:
    """Simulate the cut-in over the horizon; returns ttc, ds, dd, ego_v and v1_v signals."""
    try:
        dS, dV, T = float(params["dS"]), float(params["dV"]), float(params["T"])
    except KeyError as exc:
        raise ValueError(f"cut-in scenario needs parameter {exc.args[0]!r}") from None
    if not all(math.isfinite(v) for v in (dS, dV, T)):
        raise ValueError(f"non-finite cut-in parameters {params}")
    v1 = vehicle1_speed(dV, config)
    t = config.dt * np.arange(config.n_steps + 1)
    # constant speeds: exact position update at every step
    ds = dS + (v1 - config.ego_v) * t
    dd, dd_dot = quintic_lateral(t, T, config.lanechange_duration, config.lane_width)
    ttc_values = ttc_series(ds, dd, np.full_like(t, v1 - config.ego_v), dd_dot, config.ttc_cap)
    return Trace(
        dt=config.dt,
        start_time=0.0,
        signals={
            "ttc": ttc_values,
            "ds": ds,
            "dd": dd,
            "ego_v": np.full_like(t, config.ego_v),
            "v1_v": np.full_like(t, v1),
        },
    )
