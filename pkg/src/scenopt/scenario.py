"""Logical scenario documents and their concretisation.

A logical scenario is stored as JSON::

    {
      "name": "cut_in",
      "template": "cutin",
      "parameters": [{"name": "dS", "range": [-30, 0]}, ...],
      "specs": [{"name": "Spec1", "stl": "F (1 - ttc > 0)"}],
      "distribution": {"type": "uniform"}
    }

``distribution`` may be omitted, ``{"type": "uniform"}``, or
``{"type": "gmm", "weights": [...], "means": [[...]], "covariances": [[[...]]],
"meta": {...}}``. Numbers round-trip exactly because JSON floats are written
with the shortest repr.
"""

from __future__ import annotations

import datetime as _dt
import json
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .bo import ParameterSpace
from .gmm import GmmError, GmmParams, gmm_sample
from .sim import get_template
from .stl import StlSyntaxError, parse_formula


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Uniform:
    pass


@dataclass(frozen=True, eq=False)
class Gmm:
    params: GmmParams
    meta: dict = field(default_factory=dict)

    def __eq__(self, other):
        return (
            isinstance(other, Gmm)
            and self.meta == other.meta
            and all(
                np.array_equal(getattr(self.params, a), getattr(other.params, a))
                for a in ("weights", "means", "covariances")
            )
        )


@dataclass(frozen=True)
class LogicalScenario:
    name: str
    template: str
    parameters: ParameterSpace
    specs: tuple  # ((name, stl text), ...)
    distribution: Optional[object] = None  # Uniform | Gmm | None

    def __post_init__(self):
        object.__setattr__(self, "specs", tuple((str(n), str(s)) for n, s in self.specs))
        names = [n for n, _ in self.specs]
        if len(set(names)) != len(names):
            raise ScenarioError(f"duplicate spec names in {names}")
        try:
            tpl = get_template(self.template)
        except KeyError as exc:
            raise ScenarioError(str(exc.args[0])) from None
        if tpl.parameters is not None and set(tpl.parameters) != set(self.parameters.names):
            raise ScenarioError(
                f"template {self.template!r} needs parameters {sorted(tpl.parameters)}, "
                f"document declares {sorted(self.parameters.names)}"
            )
        for n, text in self.specs:
            try:
                parse_formula(text)
            except StlSyntaxError as exc:
                raise ScenarioError(f"spec {n!r}: {exc}") from None
        if isinstance(self.distribution, Gmm) and self.distribution.params.dim != self.parameters.dim:
            raise ScenarioError(
                f"mixture dimension {self.distribution.params.dim} does not match "
                f"{self.parameters.dim} parameters"
            )

    def spec(self, name: str):
        for n, text in self.specs:
            if n == name:
                return parse_formula(text)
        raise ScenarioError(f"scenario {self.name!r} has no spec {name!r}; available: {[n for n, _ in self.specs]}")


@dataclass(frozen=True)
class ConcreteScenario:
    name: str
    index: int
    values: dict


def check_concrete(logical: LogicalScenario, scn: ConcreteScenario) -> None:
    """Raise unless ``scn`` binds every declared parameter to a value inside its range."""
    for n, lo, hi in logical.parameters.params:
        if n not in scn.values:
            raise ScenarioError(f"scenario {scn.index} lacks parameter {n!r}")
        if not lo <= scn.values[n] <= hi:
            raise ScenarioError(f"scenario {scn.index}: {n}={scn.values[n]} outside [{lo}, {hi}]")
    extra = set(scn.values) - set(logical.parameters.names)
    if extra:
        raise ScenarioError(f"scenario {scn.index} has undeclared parameters {sorted(extra)}")


# --- documents --------------------------------------------------------------


def _require(doc, key, kind, where="document"):
    if key not in doc:
        raise ScenarioError(f"{where} lacks required key {key!r}")
    if not isinstance(doc[key], kind):
        raise ScenarioError(f"{where}: {key!r} has the wrong type")
    return doc[key]


def _parse_distribution(doc):
    if doc is None:
        return None
    kind = _require(doc, "type", str, "distribution")
    if kind == "uniform":
        return Uniform()
    if kind == "gmm":
        try:
            params = GmmParams.from_dict(doc)
        except GmmError as exc:
            raise ScenarioError(f"distribution: {exc}") from None
        return Gmm(params, dict(doc.get("meta", {})))
    raise ScenarioError(f"unknown distribution type {kind!r}")


def from_dict(doc: dict) -> LogicalScenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a mapping")
    if "constraints" in doc:
        raise ScenarioError("parameter constraints are not supported")
    params = []
    for i, p in enumerate(_require(doc, "parameters", list)):
        where = f"parameters[{i}]"
        rng = _require(p, "range", list, where)
        if len(rng) != 2:
            raise ScenarioError(f"{where}: range must be [lower, upper]")
        params.append((_require(p, "name", str, where), rng[0], rng[1]))
    try:
        space = ParameterSpace(params)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(str(exc)) from None
    specs = [
        (_require(s, "name", str, f"specs[{i}]"), _require(s, "stl", str, f"specs[{i}]"))
        for i, s in enumerate(_require(doc, "specs", list))
    ]
    return LogicalScenario(
        name=_require(doc, "name", str),
        template=_require(doc, "template", str),
        parameters=space,
        specs=specs,
        distribution=_parse_distribution(doc.get("distribution")),
    )


def to_dict(logical: LogicalScenario) -> dict:
    doc = {
        "name": logical.name,
        "template": logical.template,
        "parameters": [{"name": n, "range": [lo, hi]} for n, lo, hi in logical.parameters.params],
        "specs": [{"name": n, "stl": s} for n, s in logical.specs],
    }
    dist = logical.distribution
    if isinstance(dist, Uniform):
        doc["distribution"] = {"type": "uniform"}
    elif isinstance(dist, Gmm):
        doc["distribution"] = {"type": "gmm", **dist.params.to_dict(), "meta": dist.meta}
    return doc


def load_logical(text: str) -> LogicalScenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"not a JSON document: {exc}") from None
    return from_dict(doc)


def save_logical(logical: LogicalScenario) -> str:
    return json.dumps(to_dict(logical), indent=2) + "\n"


def read_logical(path) -> LogicalScenario:
    with open(path) as fh:
        return load_logical(fh.read())


def write_logical(logical: LogicalScenario, path) -> None:
    with open(path, "w") as fh:
        fh.write(save_logical(logical))


# --- distributions ----------------------------------------------------------


def attach_distribution(logical: LogicalScenario, params: GmmParams, meta: Optional[dict] = None) -> LogicalScenario:
    """Return a copy carrying ``params`` as its distribution.

    ``meta["history"]`` accumulates one creation timestamp per attachment.
    """
    if params.dim != logical.parameters.dim:
        raise ScenarioError(f"mixture dimension {params.dim} does not match {logical.parameters.dim} parameters")
    old = logical.distribution.meta if isinstance(logical.distribution, Gmm) else {}
    history = list(old.get("history", []))
    history.append(_dt.datetime.now(_dt.timezone.utc).isoformat())
    new_meta = {**(meta or {}), "parameters": logical.parameters.names, "history": history}
    return replace(logical, distribution=Gmm(params, new_meta))


def concretize(logical: LogicalScenario, n: int, rng, distribution=None) -> list:
    """``n`` concrete scenarios drawn from ``distribution`` (default: the scenario's own)."""
    dist = logical.distribution if distribution is None else distribution
    if dist is None:
        raise ScenarioError(f"scenario {logical.name!r} has no distribution to sample")
    if n < 0:
        raise ScenarioError("n must be >= 0")
    if n == 0:
        return []
    space = logical.parameters
    if isinstance(dist, Uniform):
        points = space.sample_uniform(n, rng)
    elif isinstance(dist, Gmm):
        points = gmm_sample(dist.params, n, space, rng)
    else:
        raise ScenarioError(f"unsupported distribution {dist!r}")
    return [ConcreteScenario(logical.name, i, space.as_dict(p)) for i, p in enumerate(points)]
