"""Scenario configuration files.

A scenario is a YAML mapping::

    command: check            # check | witness-demo | periodic-demo | norm-decay | sweep
    mode: exact               # exact | float
    space:  {kind: lp, p: 2}
    map:    {kind: shift, a: [1]}
    weight: {kind: halfline, threshold: 0, low: "1/2", high: "2"}
    K:      {interval: [-2, 2]}
    budget: {max_n: 200, L_max: 64, tol: 1.0e-8, terms: 3}
    decay:  {n_min: 1, n_max: 60, series_terms: 8}
    witness:  {n: 40}                 # optional f, g (default chi_K)
    periodic: {n: 10, L: 12}          # optional f (default chi_K)
    sweep:  {grid: {high: ["3/2", "2", "3"]}}
    output_dir: out

Rationals are written as "num/den" strings to keep exact mode end to end.
Errors carry the line of the offending key.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import yaml

from .criteria import Budget
from .dynamics import DynMap, OperatorHandle, WeightFn, map_from_json, weight_from_json
from .space import CompactSet, GridFunction, ParameterError, SpaceNorm, as_scalar, as_site

COMMANDS = ("check", "witness-demo", "periodic-demo", "norm-decay", "sweep")
MODES = ("exact", "float")


class ScenarioError(ParameterError):
    def __init__(self, message: str, line: int | None = None, source: str = "<config>"):
        self.line = line
        self.source = source
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")


class _Located:
    """Plain data plus the source line of every mapping key."""

    def __init__(self, text: str, source: str):
        self.source = source
        self.lines: dict[tuple, int] = {}
        try:
            node = yaml.compose(text)
        except yaml.MarkedYAMLError as exc:
            mark = exc.problem_mark or exc.context_mark
            line = mark.line + 1 if mark else None
            raise ScenarioError(f"YAML syntax error: {exc.problem}", line, source) from None
        if node is None:
            raise ScenarioError("empty configuration", 1, source)
        self._index(node, ())
        self.data = yaml.safe_load(text)

    def _index(self, node, path: tuple) -> None:
        self.lines.setdefault(path, node.start_mark.line + 1)
        if isinstance(node, yaml.MappingNode):
            for key_node, value_node in node.value:
                key = key_node.value
                self.lines[path + (key,)] = key_node.start_mark.line + 1
                self._index(value_node, path + (key,))
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                self._index(v, path + (i,))

    def line(self, path: tuple) -> int | None:
        while path and path not in self.lines:
            path = path[:-1]
        return self.lines.get(path)

    def error(self, path: tuple, message: str) -> ScenarioError:
        label = ".".join(str(p) for p in path) or "config"
        return ScenarioError(f"{label}: {message}", self.line(path), self.source)


@dataclass
class Scenario:
    space: SpaceNorm
    map: DynMap
    weight: WeightFn
    K: CompactSet
    command: str = "check"
    mode: str = "exact"
    budget: Budget = field(default_factory=Budget)
    output_dir: Path = Path("out")
    decay: dict = field(default_factory=lambda: {"n_min": 1, "n_max": 60, "series_terms": 8})
    witness: dict = field(default_factory=dict)
    periodic: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @property
    def op(self) -> OperatorHandle:
        return OperatorHandle(self.map, self.weight)

    def function(self, value: Any) -> GridFunction:
        """A target vector from config: None -> chi_K, list of sites -> indicator."""
        if value is None:
            f = self.K.indicator()
        elif isinstance(value, list):
            f = CompactSet(value).indicator()
        else:
            f = GridFunction.from_json(value)
        return f.to_float() if self.mode == "float" else f

    def echo(self) -> dict:
        return {
            "command": self.command,
            "mode": self.mode,
            "space": self.space.to_json(),
            "map": self.map.to_json(),
            "weight": self.weight.to_json(),
            "K": self.K.to_json(),
            "budget": {
                "max_n": self.budget.max_n,
                "L_max": self.budget.L_max,
                "tol": self.budget.tol,
                "terms": self.budget.terms,
                "ratio_run": self.budget.ratio_run,
            },
            "decay": dict(self.decay),
        }

    def with_weight_values(self, overrides: dict) -> Scenario:
        data = {**self.weight.to_json(), **overrides}
        return replace(self, weight=_float_weight(weight_from_json(data), self.mode))


def _float_weight(w: WeightFn, mode: str) -> WeightFn:
    if mode != "float":
        return w
    data = w.to_json()
    for key in ("value", "low", "high", "default"):
        if key in data:
            data[key] = float(as_scalar(data[key]))
    if "entries" in data:
        data["entries"] = [[s, float(as_scalar(v))] for s, v in data["entries"]]
    return weight_from_json(data)


def _parse_K(loc: _Located, value) -> CompactSet:
    path = ("K",)
    if isinstance(value, dict):
        if "interval" in value:
            lo, hi = value["interval"]
            return CompactSet.interval(int(lo), int(hi))
        if "box" in value:
            lo, hi = value["box"]
            return CompactSet.box(as_site(lo), as_site(hi))
        if "sites" in value:
            return CompactSet(value["sites"])
        raise loc.error(path, "expected one of interval, box, sites")
    if isinstance(value, list):
        return CompactSet(value)
    raise loc.error(path, "expected a mapping or a list of sites")


def _section(loc: _Located, name: str, required: bool = True) -> dict | None:
    data = loc.data
    if name not in data:
        if required:
            raise loc.error((), f"missing required section {name!r}")
        return None
    value = data[name]
    if not isinstance(value, dict):
        raise loc.error((name,), "expected a mapping")
    return value


def parse_scenario(text: str, source: str = "<config>", overrides: dict | None = None) -> Scenario:
    loc = _Located(text, source)
    if not isinstance(loc.data, dict):
        raise ScenarioError("top level must be a mapping", 1, source)
    overrides = overrides or {}
    data = loc.data

    command = overrides.get("command") or data.get("command", "check")
    if command not in COMMANDS:
        raise loc.error(("command",), f"unknown command {command!r}; choose from {COMMANDS}")
    mode = overrides.get("mode") or data.get("mode", "exact")
    if mode not in MODES:
        raise loc.error(("mode",), f"unknown mode {mode!r}")

    def parsed(name, fn):
        section = _section(loc, name)
        try:
            return fn(section)
        except ParameterError as exc:
            raise loc.error((name,), str(exc)) from None
        except (TypeError, ValueError, KeyError) as exc:
            raise loc.error((name,), f"invalid value ({exc})") from None

    space = parsed("space", SpaceNorm.from_json)
    dyn_map = parsed("map", map_from_json)
    weight = parsed("weight", lambda d: _float_weight(weight_from_json(d), mode))
    if "K" not in data:
        raise loc.error((), "missing required section 'K'")
    try:
        K = _parse_K(loc, data["K"])
    except (TypeError, ValueError) as exc:
        raise loc.error(("K",), f"invalid sites ({exc})") from None
    if not K:
        raise loc.error(("K",), "K must be non-empty")
    if K.dim != dyn_map.dim:
        raise loc.error(("K",), f"K has dimension {K.dim} but the map has dimension {dyn_map.dim}")

    budget_data = dict(_section(loc, "budget", required=False) or {})
    for key, value in (("max_n", overrides.get("budget_n")), ("tol", overrides.get("tol"))):
        if value is not None:
            budget_data[key] = value
    try:
        budget = Budget(
            max_n=int(budget_data.get("max_n", 200)),
            L_max=int(budget_data.get("L_max", 64)),
            tol=float(budget_data.get("tol", 1e-8)),
            terms=int(budget_data.get("terms", 3)),
            ratio_run=int(budget_data.get("ratio_run", 3)),
        )
    except (ParameterError, TypeError, ValueError) as exc:
        raise loc.error(("budget",), str(exc)) from None

    decay = {"n_min": 1, "n_max": 60, "series_terms": 8}
    decay.update(_section(loc, "decay", required=False) or {})
    try:
        decay = {k: int(v) for k, v in decay.items()}
    except (TypeError, ValueError) as exc:
        raise loc.error(("decay",), str(exc)) from None
    if not 1 <= decay["n_min"] <= decay["n_max"] or decay["series_terms"] < 1:
        raise loc.error(("decay",), "need 1 <= n_min <= n_max and series_terms >= 1")

    witness = _section(loc, "witness", required=False) or {}
    periodic = _section(loc, "periodic", required=False) or {}
    sweep = _section(loc, "sweep", required=False) or {}
    if command == "sweep":
        grid = sweep.get("grid")
        if not isinstance(grid, dict) or not grid:
            raise loc.error(("sweep",), "sweep needs a non-empty 'grid' mapping of weight fields")
        for key, values in grid.items():
            if key not in weight.to_json() or key == "kind":
                raise loc.error(("sweep", "grid", key), f"{key!r} is not a field of the weight")
            if not isinstance(values, list) or not values:
                raise loc.error(("sweep", "grid", key), "expected a non-empty list of values")

    scenario = Scenario(
        space=space,
        map=dyn_map,
        weight=weight,
        K=K,
        command=command,
        mode=mode,
        budget=budget,
        output_dir=Path(overrides.get("out") or data.get("output_dir", "out")),
        decay=decay,
        witness=witness,
        periodic=periodic,
        sweep=sweep,
        raw=data,
    )
    # Validate target vectors early so errors are line-anchored.
    for name, section, keys in (("witness", witness, ("f", "g")), ("periodic", periodic, ("f",))):
        for key in keys:
            try:
                scenario.function(section.get(key))
            except (ParameterError, TypeError, ValueError) as exc:
                raise loc.error((name, key), str(exc)) from None
    return scenario


def load_scenario(path: str | Path, overrides: dict | None = None) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read config: {exc.strerror}", None, str(path)) from None
    return parse_scenario(text, str(path), overrides)


def sweep_cells(scenario: Scenario) -> list[tuple[dict, Scenario]]:
    grid = scenario.sweep["grid"]
    keys = sorted(grid)
    cells = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        overrides = {k: str(v) for k, v in zip(keys, combo)}
        cells.append((overrides, scenario.with_weight_values(overrides)))
    return cells
