"""Scenario file format: dynamics, workspace, predicates, formula, weights.

Scenarios are TOML files; predicates are given as 2D vertex lists (converted
to halfspaces over the position dimensions) or as explicit halfspaces in any
dimension. Scripted predicate-update events live in separate JSON files.
"""
from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import milp, mtl
from .dynamics import LinearSystem, double_integrator_2d
from .geometry import Box, Predicate, predicate_from_halfspaces, predicate_from_vertices

__all__ = [
    "Scenario",
    "ScenarioError",
    "PredicateEvent",
    "load_scenario",
    "write_scenario",
    "load_events",
    "scenario_to_dict",
]


class ScenarioError(ValueError):
    """Schema violation, reported with the offending field path."""


@dataclass
class PredicateEvent:
    """A scripted or recorded geometry change applied at a step boundary."""

    name: str
    A: np.ndarray
    b: np.ndarray
    t: Optional[float] = None
    step: Optional[int] = None

    def applies_at(self, step: int, dt: float) -> bool:
        if self.step is not None:
            return step == self.step
        if self.t is not None:
            boundary = (step - 1) * dt
            prev_boundary = (step - 2) * dt
            return boundary >= self.t - 1e-9 and (step == 1 or prev_boundary < self.t - 1e-9)
        return False


@dataclass
class Scenario:
    """A full problem instance: dynamics, workspace, predicates, formula."""

    name: str
    dynamics: LinearSystem
    workspace: Box
    predicates: dict[str, Predicate]
    formula_text: str
    rho_d: float
    R: np.ndarray
    x0: np.ndarray
    n_override: Optional[int] = None
    rhc_step_deadline: Optional[float] = None
    rhc_max_solves_per_step: Optional[int] = None
    formula: mtl.MTLFormula = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.formula = mtl.parse(self.formula_text)
        self.R = np.asarray(self.R, dtype=float).reshape(-1)
        self.x0 = np.asarray(self.x0, dtype=float).reshape(-1)
        self._validate()

    @property
    def N(self) -> int:
        if self.n_override is not None:
            return self.n_override
        return mtl.horizon(mtl.to_nnf(self.formula), self.dynamics.dt)

    @property
    def dt(self) -> float:
        return self.dynamics.dt

    def _validate(self) -> None:
        if self.rho_d < 0:
            raise ScenarioError("rho_d: must be non-negative")
        if np.any(self.R < 0):
            raise ScenarioError("inputs.weights: must be non-negative")
        if self.R.shape != (self.dynamics.m,):
            raise ScenarioError(
                f"inputs.weights: expected {self.dynamics.m} entries, got {self.R.shape[0]}"
            )
        if not self.workspace.bounded:
            raise ScenarioError("workspace: box must be bounded")
        if self.workspace.dim != self.dynamics.n:
            raise ScenarioError(
                f"workspace: dimension {self.workspace.dim} does not match state "
                f"dimension {self.dynamics.n}"
            )
        if self.x0.shape != (self.dynamics.n,):
            raise ScenarioError(
                f"initial.state: expected {self.dynamics.n} entries, got {self.x0.shape[0]}"
            )
        nnf = mtl.to_nnf(self.formula)
        for occ in mtl.classify_occurrences(nnf):
            if occ.name not in self.predicates:
                raise ScenarioError(
                    f"formula: predicate {occ.name!r} is not declared in [[predicates]]"
                )
        if self.n_override is not None and self.n_override < mtl.horizon(nnf, self.dt):
            raise ScenarioError(
                "horizon.n: override is shorter than the formula horizon"
            )
        for name, pred in self.predicates.items():
            if pred.dim != self.dynamics.n:
                raise ScenarioError(
                    f"predicates.{name}: dimension {pred.dim} does not match state "
                    f"dimension {self.dynamics.n}"
                )
            _check_predicate_well_posed(name, pred)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Scenario):
            return NotImplemented
        return (
            self.name == other.name
            and self.formula_text == other.formula_text
            and self.rho_d == other.rho_d
            and self.n_override == other.n_override
            and self.rhc_step_deadline == other.rhc_step_deadline
            and self.rhc_max_solves_per_step == other.rhc_max_solves_per_step
            and np.array_equal(self.R, other.R)
            and np.array_equal(self.x0, other.x0)
            and np.array_equal(self.workspace.lo, other.workspace.lo)
            and np.array_equal(self.workspace.hi, other.workspace.hi)
            and np.array_equal(self.dynamics.A, other.dynamics.A)
            and np.array_equal(self.dynamics.B, other.dynamics.B)
            and self.dynamics.dt == other.dynamics.dt
            and np.array_equal(self.dynamics.u_lo, other.dynamics.u_lo)
            and np.array_equal(self.dynamics.u_hi, other.dynamics.u_hi)
            and set(self.predicates) == set(other.predicates)
            and all(
                np.array_equal(self.predicates[k].A, other.predicates[k].A)
                and np.array_equal(self.predicates[k].b, other.predicates[k].b)
                for k in self.predicates
            )
        )


def _check_predicate_well_posed(name: str, pred: Predicate) -> None:
    """Non-empty, and bounded along every dimension it actually constrains."""
    from .encoding import polytope_interior_radius

    radius = polytope_interior_radius(pred)
    if radius < -1e-9:
        raise ScenarioError(f"predicates.{name}: polyhedron is empty")
    constrained = [d for d in range(pred.dim) if np.any(pred.A[:, d] != 0.0)]
    for d in constrained:
        for sense in (1.0, -1.0):
            model = milp.MILPModel(f"bound-{name}-{d}")
            xs = [model.add_variable(f"x{e}") for e in range(pred.dim)]
            for i in range(pred.faces):
                coeffs = {
                    xs[e]: float(pred.A[i, e]) for e in range(pred.dim) if pred.A[i, e] != 0.0
                }
                model.add_row(f"f{i}", coeffs, "<=", float(pred.b[i]))
            model.set_objective({xs[d]: sense})
            if milp.solve_lp(model).status == "unbounded":
                raise ScenarioError(
                    f"predicates.{name}: unbounded along constrained dimension {d}"
                )


# ---------------------------------------------------------------------------
# TOML loading
# ---------------------------------------------------------------------------


def _require(table: dict, key: str, path: str) -> Any:
    if key not in table:
        raise ScenarioError(f"{path}.{key}: missing required field")
    return table[key]


def load_scenario(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as e:
        raise ScenarioError(f"{path}: invalid TOML: {e}") from e
    return scenario_from_dict(data, default_name=path.stem)


def scenario_from_dict(data: dict, default_name: str = "scenario") -> Scenario:
    name = data.get("name", default_name)
    formula_text = _require(data, "formula", "")
    rho_d = float(_require(data, "rho_d", ""))

    dyn = _require(data, "dynamics", "")
    dt = float(_require(dyn, "dt", "dynamics"))
    kind = dyn.get("kind", "double_integrator_2d")
    inputs = _require(data, "inputs", "")
    u_lo = np.asarray(_require(inputs, "lower", "inputs"), dtype=float)
    u_hi = np.asarray(_require(inputs, "upper", "inputs"), dtype=float)
    if kind == "double_integrator_2d":
        system = double_integrator_2d(dt, u_lo, u_hi)
    elif kind == "custom":
        system = LinearSystem(
            np.asarray(_require(dyn, "A", "dynamics"), dtype=float),
            np.asarray(_require(dyn, "B", "dynamics"), dtype=float),
            dt,
            tuple(_require(dyn, "state_labels", "dynamics")),
            tuple(_require(dyn, "input_labels", "dynamics")),
            u_lo,
            u_hi,
        )
    else:
        raise ScenarioError(f"dynamics.kind: unknown kind {kind!r}")

    ws = _require(data, "workspace", "")
    workspace = Box(
        np.asarray(_require(ws, "lower", "workspace"), dtype=float),
        np.asarray(_require(ws, "upper", "workspace"), dtype=float),
    )

    init = _require(data, "initial", "")
    x0 = np.asarray(_require(init, "state", "initial"), dtype=float)

    weights = np.asarray(
        inputs.get("weights", np.ones(system.m).tolist()), dtype=float
    )

    predicates: dict[str, Predicate] = {}
    for idx, ptab in enumerate(data.get("predicates", [])):
        ppath = f"predicates[{idx}]"
        pname = _require(ptab, "name", ppath)
        if pname in predicates:
            raise ScenarioError(f"{ppath}.name: duplicate predicate {pname!r}")
        if "vertices" in ptab:
            dims = tuple(ptab.get("dims", (0, 1)))
            predicates[pname] = predicate_from_vertices(
                pname, ptab["vertices"], dims=dims, state_dim=system.n
            )
        elif "halfspaces" in ptab:
            hs = ptab["halfspaces"]
            dims = hs.get("dims")
            predicates[pname] = predicate_from_halfspaces(
                pname,
                np.asarray(_require(hs, "A", f"{ppath}.halfspaces"), dtype=float),
                np.asarray(_require(hs, "b", f"{ppath}.halfspaces"), dtype=float),
                dims=tuple(dims) if dims is not None else None,
                state_dim=system.n,
            )
        else:
            raise ScenarioError(f"{ppath}: needs either 'vertices' or 'halfspaces'")

    horizon_tab = data.get("horizon", {})
    n_override = horizon_tab.get("n")
    rhc = data.get("rhc", {})

    try:
        return Scenario(
            name=name,
            dynamics=system,
            workspace=workspace,
            predicates=predicates,
            formula_text=formula_text,
            rho_d=rho_d,
            R=weights,
            x0=x0,
            n_override=int(n_override) if n_override is not None else None,
            rhc_step_deadline=(
                float(rhc["step_deadline"]) if "step_deadline" in rhc else None
            ),
            rhc_max_solves_per_step=(
                int(rhc["max_solves_per_step"]) if "max_solves_per_step" in rhc else None
            ),
        )
    except mtl.MTLSyntaxError as e:
        raise ScenarioError(f"formula: {e}") from e


# ---------------------------------------------------------------------------
# TOML writing (restricted to this schema; floats kept at full precision)
# ---------------------------------------------------------------------------


def _toml_value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if math.isinf(f) or math.isnan(f):
            raise ScenarioError("cannot serialize non-finite float")
        text = repr(f)
        return text
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def write_scenario(scenario: Scenario, path: Union[str, Path]) -> None:
    lines = [
        f"name = {_toml_value(scenario.name)}",
        f"formula = {_toml_value(scenario.formula_text)}",
        f"rho_d = {_toml_value(scenario.rho_d)}",
        "",
        "[dynamics]",
    ]
    system = scenario.dynamics
    builtin = double_integrator_2d(system.dt, system.u_lo, system.u_hi)
    if (
        np.array_equal(system.A, builtin.A)
        and np.array_equal(system.B, builtin.B)
        and system.state_labels == builtin.state_labels
    ):
        lines.append('kind = "double_integrator_2d"')
        lines.append(f"dt = {_toml_value(system.dt)}")
    else:
        lines.append('kind = "custom"')
        lines.append(f"dt = {_toml_value(system.dt)}")
        lines.append(f"A = {_toml_value([list(r) for r in system.A])}")
        lines.append(f"B = {_toml_value([list(r) for r in system.B])}")
        lines.append(f"state_labels = {_toml_value(list(system.state_labels))}")
        lines.append(f"input_labels = {_toml_value(list(system.input_labels))}")
    lines += [
        "",
        "[workspace]",
        f"lower = {_toml_value(scenario.workspace.lo)}",
        f"upper = {_toml_value(scenario.workspace.hi)}",
        "",
        "[initial]",
        f"state = {_toml_value(scenario.x0)}",
        "",
        "[inputs]",
        f"lower = {_toml_value(system.u_lo)}",
        f"upper = {_toml_value(system.u_hi)}",
        f"weights = {_toml_value(scenario.R)}",
    ]
    if scenario.n_override is not None:
        lines += ["", "[horizon]", f"n = {scenario.n_override}"]
    if scenario.rhc_step_deadline is not None or scenario.rhc_max_solves_per_step is not None:
        lines += ["", "[rhc]"]
        if scenario.rhc_step_deadline is not None:
            lines.append(f"step_deadline = {_toml_value(scenario.rhc_step_deadline)}")
        if scenario.rhc_max_solves_per_step is not None:
            lines.append(f"max_solves_per_step = {scenario.rhc_max_solves_per_step}")
    for name, pred in scenario.predicates.items():
        lines += [
            "",
            "[[predicates]]",
            f"name = {_toml_value(name)}",
            "[predicates.halfspaces]",
            f"A = {_toml_value([list(r) for r in pred.A])}",
            f"b = {_toml_value(pred.b)}",
        ]
    Path(path).write_text("\n".join(lines) + "\n")


def scenario_to_dict(scenario: Scenario) -> dict:
    """JSON-friendly snapshot of a scenario (used by the reactive server)."""
    return {
        "name": scenario.name,
        "formula": scenario.formula_text,
        "rho_d": scenario.rho_d,
        "dt": scenario.dt,
        "n": scenario.N,
        "workspace": {
            "lower": scenario.workspace.lo.tolist(),
            "upper": scenario.workspace.hi.tolist(),
        },
        "initial": scenario.x0.tolist(),
        "inputs": {
            "lower": scenario.dynamics.u_lo.tolist(),
            "upper": scenario.dynamics.u_hi.tolist(),
            "weights": scenario.R.tolist(),
        },
        "predicates": {
            name: {"A": pred.A.tolist(), "b": pred.b.tolist()}
            for name, pred in scenario.predicates.items()
        },
    }


# ---------------------------------------------------------------------------
# Scripted event files
# ---------------------------------------------------------------------------


def load_events(path: Union[str, Path], state_dim: int) -> list[PredicateEvent]:
    """Load scripted predicate updates from a JSON file.

    Each entry carries ``name`` plus geometry (``vertices`` or ``A``/``b``)
    and either ``t`` (seconds) or ``step`` (RHC step index)."""
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, list):
        raise ScenarioError("events file must contain a JSON array")
    return [event_from_dict(entry, state_dim) for entry in raw]


def event_from_dict(entry: dict, state_dim: int) -> PredicateEvent:
    name = entry["name"]
    if "vertices" in entry:
        pred = predicate_from_vertices(
            name, entry["vertices"], dims=tuple(entry.get("dims", (0, 1))), state_dim=state_dim
        )
        A, b = pred.A, pred.b
    else:
        A = np.asarray(entry["A"], dtype=float)
        b = np.asarray(entry["b"], dtype=float)
    return PredicateEvent(
        name=name,
        A=A,
        b=b,
        t=float(entry["t"]) if "t" in entry else None,
        step=int(entry["step"]) if "step" in entry else None,
    )
