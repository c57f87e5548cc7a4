"""Registry of simulator backends that logical scenarios bind to by ``template`` id."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from ..stl import Trace
from .cutin import CutinConfig, simulate_cutin
from .griewank import griewank_trace


@dataclass(frozen=True)
class Template:
    name: str
    simulate: Callable[[dict], Trace]
    parameters: Optional[tuple] = None  # required parameter names; None accepts any
    description: str = ""


_REGISTRY = {}


def register_template(template: Template, replace: bool = False) -> None:
    if template.name in _REGISTRY and not replace:
        raise ValueError(f"template {template.name!r} already registered")
    _REGISTRY[template.name] = template


def get_template(name: str) -> Template:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown scenario template {name!r}; registered: {sorted(_REGISTRY)}") from None


def registered_templates() -> list:
    return sorted(_REGISTRY)


def _cutin(config):
    return lambda values: simulate_cutin(values, config)


register_template(
    Template(
        "cutin",
        _cutin(CutinConfig()),
        ("dS", "dV", "T"),
        "cut-in from left; dV is the speed ratio of vehicle_1 to the ego",
    )
)
register_template(
    Template(
        "cutin_offset",
        _cutin(CutinConfig(dv_mode="offset")),
        ("dS", "dV", "T"),
        "cut-in from left; dV is added to the ego speed (m/s)",
    )
)
register_template(Template("griewank", griewank_trace, None, "Griewank function of all parameters, signal f"))
