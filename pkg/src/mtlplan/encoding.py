"""Translate a scenario into a MILP with pre-encoded, inactive predicate rows.

Every predicate occurrence gets one constraint row group per time index,
built up front and switched off; lazy synthesis then activates groups one
at a time. Safe occurrences contribute pure linear rows A x_k <= b_resized;
unsafe occurrences contribute big-M rows A x_k + M z >= b_resized plus the
cardinality row sum(z) <= f - 1 over f fresh binaries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from . import milp, mtl
from .geometry import (
    Box,
    Predicate,
    convex_hull_2d,
    predicate_from_halfspaces,
    predicate_from_vertices,
)

if TYPE_CHECKING:  # pragma: no cover
    from .scenario import Scenario

__all__ = [
    "Predicate",
    "Box",
    "ResizedPredicate",
    "EncodedScenario",
    "EncodingError",
    "encode",
    "compute_bigM",
    "polytope_interior_radius",
    "add_safe_group",
    "add_unsafe_group",
    "predicate_from_halfspaces",
    "predicate_from_vertices",
    "convex_hull_2d",
]

_INTERIOR_TOL = 1e-9

# Rows are tightened slightly beyond the resize margin so that a trajectory
# satisfying them within solver feasibility tolerance still has strictly
# non-negative monitored robustness on the resized sets.
ROW_TIGHTEN = 1e-6


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class ResizedPredicate:
    """A predicate shrunk (safe) or bloated (unsafe) by the robustness margin."""

    base: Predicate
    polarity: mtl.Polarity
    margin: float

    def __post_init__(self) -> None:
        if self.margin < 0:
            raise ValueError("resize margin must be non-negative")

    @property
    def b_tilde(self) -> np.ndarray:
        if self.polarity == "safe":
            return self.base.b - self.margin
        return self.base.b + self.margin

    def as_predicate(self) -> Predicate:
        return Predicate(self.base.name, self.base.A, self.b_tilde)


def polytope_interior_radius(pred: Predicate) -> float:
    """Largest inscribed-ball radius (may be negative for empty sets).

    Computed by one LP: max r subject to A x + r <= b. Unbounded polyhedra
    report infinity.
    """
    model = milp.MILPModel("interior-radius")
    xs = [model.add_variable(f"x{d}") for d in range(pred.dim)]
    r = model.add_variable("r")
    for i in range(pred.faces):
        coeffs = {xs[d]: float(pred.A[i, d]) for d in range(pred.dim) if pred.A[i, d] != 0.0}
        coeffs[r] = 1.0
        model.add_row(f"f{i}", coeffs, "<=", float(pred.b[i]))
    model.set_objective({r: -1.0})
    sol = milp.solve_lp(model)
    if sol.status == "unbounded":
        return math.inf
    if sol.status != "optimal":
        raise EncodingError(f"interior-radius LP failed with status {sol.status}")
    return -sol.objective


def compute_bigM(resized: ResizedPredicate, box: Box) -> float:
    """Relaxation constant covering every box point for every face.

    M = max_i (b_tilde_i - min_{x in box} a_i . x) + 1, the +1 a safety
    margin; with z_i = 1 the face row then holds anywhere in the box.
    """
    if not box.bounded:
        raise EncodingError("big-M requires a bounded workspace box")
    b_t = resized.b_tilde
    worst = max(
        float(b_t[i]) - box.support_min(resized.base.A[i]) for i in range(resized.base.faces)
    )
    return max(worst, 0.0) + 1.0


def add_safe_group(
    model: milp.MILPModel,
    x_ids: Sequence[int],
    resized: ResizedPredicate,
    prefix: str,
    active: bool = False,
) -> list[int]:
    """Rows A x <= b_tilde forcing a state into the shrunk safe set."""
    A, b_t = resized.base.A, resized.b_tilde
    rows = []
    for i in range(A.shape[0]):
        coeffs = {x_ids[d]: float(A[i, d]) for d in range(A.shape[1]) if A[i, d] != 0.0}
        rows.append(model.add_row(f"{prefix}_f{i}", coeffs, "<=", float(b_t[i]), active=active))
    return rows


def add_unsafe_group(
    model: milp.MILPModel,
    x_ids: Sequence[int],
    resized: ResizedPredicate,
    big_m: float,
    prefix: str,
    active: bool = False,
) -> tuple[list[int], list[int]]:
    """Big-M rows A x + M z >= b_tilde with sum(z) <= f - 1.

    Feasible for some binary z exactly when the state lies outside the
    bloated unsafe set.
    """
    A, b_t = resized.base.A, resized.b_tilde
    f = A.shape[0]
    z_ids = [model.add_variable(f"{prefix}_z{i}", kind=milp.BINARY) for i in range(f)]
    rows = []
    for i in range(f):
        coeffs = {x_ids[d]: float(A[i, d]) for d in range(A.shape[1]) if A[i, d] != 0.0}
        coeffs[z_ids[i]] = big_m
        rows.append(model.add_row(f"{prefix}_f{i}", coeffs, ">=", float(b_t[i]), active=active))
    rows.append(
        model.add_row(
            f"{prefix}_card", {z: 1.0 for z in z_ids}, "<=", float(f - 1), active=active
        )
    )
    return rows, z_ids


class EncodedScenario:
    """A scenario's MILP together with its variable/row index maps."""

    def __init__(self, scenario: "Scenario"):
        sys = scenario.dynamics
        n, m = sys.n, sys.m
        N = scenario.N
        box = scenario.workspace
        if not box.bounded:
            raise EncodingError("workspace box must be bounded")
        if box.dim != n:
            raise EncodingError(f"workspace box dimension {box.dim} != state dimension {n}")
        x0 = np.asarray(scenario.x0, dtype=float)
        if x0.shape != (n,):
            raise EncodingError(f"initial state has dimension {x0.shape}, expected ({n},)")
        if not box.contains(x0, tol=1e-9):
            raise EncodingError("initial state lies outside the workspace box")

        self.scenario = scenario
        self.formula = mtl.to_nnf(scenario.formula)
        self.occurrences = mtl.classify_occurrences(self.formula)
        self.N = N
        self.predicates: dict[str, Predicate] = dict(scenario.predicates)
        for occ in self.occurrences:
            if occ.name not in self.predicates:
                raise EncodingError(f"formula references unknown predicate {occ.name!r}")
            if self.predicates[occ.name].dim != n:
                raise EncodingError(
                    f"predicate {occ.name!r} has dimension "
                    f"{self.predicates[occ.name].dim}, expected {n}"
                )

        model = milp.MILPModel(scenario.name)
        self.model = model

        self.x_ids = [
            [model.add_variable(f"x{k}_{d}", box.lo[d], box.hi[d]) for d in range(n)]
            for k in range(N + 1)
        ]
        for d in range(n):
            model.set_bounds(self.x_ids[0][d], x0[d], x0[d])
        self.u_ids = [
            [model.add_variable(f"u{k}_{j}", sys.u_lo[j], sys.u_hi[j]) for j in range(m)]
            for k in range(N)
        ]
        self.s_ids = [
            [model.add_variable(f"s{k}_{j}", 0.0, milp.INF) for j in range(m)]
            for k in range(N)
        ]

        # dynamics equality rows x_{k+1} = A x_k + B u_k
        for k in range(N):
            for d in range(n):
                coeffs = {self.x_ids[k + 1][d]: 1.0}
                for e in range(n):
                    if sys.A[d, e] != 0.0:
                        coeffs[self.x_ids[k][e]] = coeffs.get(self.x_ids[k][e], 0.0) - sys.A[d, e]
                for j in range(m):
                    if sys.B[d, j] != 0.0:
                        coeffs[self.u_ids[k][j]] = -sys.B[d, j]
                model.add_row(f"dyn{k}_{d}", coeffs, "=", 0.0)

        # effort objective J = sum_k R . s_k with -s <= u <= s
        obj: dict[int, float] = {}
        R = np.asarray(scenario.R, dtype=float).reshape(-1)
        if R.shape != (m,):
            raise EncodingError(f"weight vector R has shape {R.shape}, expected ({m},)")
        if np.any(R < 0):
            raise EncodingError("weights R must be non-negative")
        for k in range(N):
            for j in range(m):
                u, s = self.u_ids[k][j], self.s_ids[k][j]
                model.add_row(f"absp{k}_{j}", {u: 1.0, s: -1.0}, "<=", 0.0)
                model.add_row(f"absm{k}_{j}", {u: -1.0, s: -1.0}, "<=", 0.0)
                obj[s] = float(R[j])
        model.set_objective(obj)

        # pre-encode every occurrence row group at every index, inactive
        self.resized: dict[int, ResizedPredicate] = {}
        self._row_resized: dict[int, ResizedPredicate] = {}
        self.big_m: dict[int, float] = {}
        self.group_rows: dict[tuple[int, int], list[int]] = {}
        self.group_z: dict[tuple[int, int], list[int]] = {}
        self.active: set[tuple[int, int]] = set()
        for occ in self.occurrences:
            base = self.predicates[occ.name]
            resized = ResizedPredicate(base, occ.polarity, scenario.rho_d)
            row_resized = ResizedPredicate(base, occ.polarity, scenario.rho_d + ROW_TIGHTEN)
            self._check_resized(row_resized)
            self.resized[occ.occurrence_id] = resized
            self._row_resized[occ.occurrence_id] = row_resized
            if occ.polarity == "unsafe":
                self.big_m[occ.occurrence_id] = compute_bigM(row_resized, box)
            for k in range(N + 1):
                prefix = f"{occ.polarity}{occ.occurrence_id}_k{k}"
                if occ.polarity == "safe":
                    rows = add_safe_group(model, self.x_ids[k], row_resized, prefix)
                    zs: list[int] = []
                else:
                    rows, zs = add_unsafe_group(
                        model, self.x_ids[k], row_resized, self.big_m[occ.occurrence_id], prefix
                    )
                self.group_rows[(occ.occurrence_id, k)] = rows
                self.group_z[(occ.occurrence_id, k)] = zs

    @staticmethod
    def _check_resized(resized: ResizedPredicate) -> None:
        if resized.polarity == "safe":
            radius = polytope_interior_radius(resized.as_predicate())
            if radius <= _INTERIOR_TOL:
                raise EncodingError(
                    f"safe predicate {resized.base.name!r} resized by "
                    f"{resized.margin:g} has empty interior"
                )

    # -- lazy activation -----------------------------------------------------

    def activate(self, occurrence_id: int, k: int) -> None:
        """Switch on the pre-encoded row group for (occurrence, time index)."""
        key = (occurrence_id, k)
        if key not in self.group_rows:
            raise EncodingError(f"no encoded row group for occurrence {occurrence_id} at k={k}")
        if key in self.active:
            return
        for rid in self.group_rows[key]:
            self.model.set_row_active(rid, True)
        self.active.add(key)

    def activate_all(self) -> None:
        for occ_id, k in self.group_rows:
            self.activate(occ_id, k)

    def activate_full_encoding(self) -> None:
        """Activate every (occurrence, index) pair in its relevant window.

        This reproduces the non-lazy encoding that enforces each predicate
        at every time index its operator windows can reach, and serves as
        the optimality oracle for the conjunction/Globally fragment.
        """
        from .robustness import occurrence_windows

        windows = occurrence_windows(self.formula, self.scenario.dt, self.N)
        for occ_id, ks in windows.items():
            for k in sorted(ks):
                self.activate(occ_id, k)

    def is_active(self, occurrence_id: int, k: int) -> bool:
        return (occurrence_id, k) in self.active

    # -- dynamic geometry ------------------------------------------------------

    def update_predicate(self, name: str, A, b) -> None:
        """Swap in new geometry for every occurrence of a predicate.

        The face count must not change (declare max-face placeholders up
        front); the big-M constant is enlarged when the new geometry needs
        it, never shrunk.
        """
        old = self.predicates.get(name)
        if old is None:
            raise EncodingError(f"unknown predicate {name!r}")
        new = Predicate(name, A, b)
        if new.faces != old.faces:
            raise EncodingError(
                f"face count change {old.faces} -> {new.faces} for {name!r}; "
                "declare placeholder faces up front"
            )
        if new.dim != old.dim:
            raise EncodingError("dimension change in predicate update")
        self.predicates[name] = new
        box = self.scenario.workspace
        for occ in self.occurrences:
            if occ.name != name:
                continue
            resized = ResizedPredicate(new, occ.polarity, self.scenario.rho_d)
            row_resized = ResizedPredicate(new, occ.polarity, self.scenario.rho_d + ROW_TIGHTEN)
            self._check_resized(row_resized)
            self.resized[occ.occurrence_id] = resized
            self._row_resized[occ.occurrence_id] = row_resized
            b_t = row_resized.b_tilde
            if occ.polarity == "unsafe":
                m_new = max(
                    self.big_m[occ.occurrence_id], compute_bigM(row_resized, box)
                )
                self.big_m[occ.occurrence_id] = m_new
            for k in range(self.N + 1):
                rows = self.group_rows[(occ.occurrence_id, k)]
                zs = self.group_z[(occ.occurrence_id, k)]
                for i in range(new.faces):
                    coeffs = {
                        self.x_ids[k][d]: float(new.A[i, d])
                        for d in range(new.dim)
                        if new.A[i, d] != 0.0
                    }
                    if occ.polarity == "unsafe":
                        coeffs[zs[i]] = self.big_m[occ.occurrence_id]
                    self.model.update_row(rows[i], coeffs, float(b_t[i]))
                # cardinality row (last row of unsafe groups) is unchanged

    # -- monitoring helpers ----------------------------------------------------

    def snapshot_dict(self) -> dict:
        """JSON world snapshot: scenario data plus per-occurrence resizing."""
        from .scenario import scenario_to_dict

        data = scenario_to_dict(self.scenario)
        data["predicates"] = {
            name: {"A": pred.A.tolist(), "b": pred.b.tolist()}
            for name, pred in self.predicates.items()
        }
        data["occurrences"] = [
            {
                "id": occ.occurrence_id,
                "name": occ.name,
                "polarity": occ.polarity,
                "resized_b": self.resized[occ.occurrence_id].b_tilde.tolist(),
            }
            for occ in self.occurrences
        ]
        return data

    def resized_geoms(self) -> dict[int, Predicate]:
        return {occ_id: rp.as_predicate() for occ_id, rp in self.resized.items()}

    def original_geoms(self) -> dict[int, Predicate]:
        return {
            occ.occurrence_id: self.predicates[occ.name] for occ in self.occurrences
        }

    # -- solution extraction ----------------------------------------------------

    def extract_states(self, solution: milp.MILPSolution) -> np.ndarray:
        n = self.scenario.dynamics.n
        out = np.empty((self.N + 1, n))
        for k in range(self.N + 1):
            for d in range(n):
                out[k, d] = solution.value_of(self.x_ids[k][d])
        return out

    def extract_inputs(self, solution: milp.MILPSolution) -> np.ndarray:
        m = self.scenario.dynamics.m
        out = np.empty((self.N, m))
        for k in range(self.N):
            for j in range(m):
                out[k, j] = solution.value_of(self.u_ids[k][j])
        return out

    # -- receding-horizon support -------------------------------------------------

    def pin_state(self, k: int, value: np.ndarray) -> None:
        value = np.asarray(value, dtype=float)
        for d, vid in enumerate(self.x_ids[k]):
            self.model.set_bounds(vid, value[d], value[d])

    def pin_input(self, k: int, value: np.ndarray) -> None:
        value = np.asarray(value, dtype=float)
        for j, vid in enumerate(self.u_ids[k]):
            self.model.set_bounds(vid, value[j], value[j])


def encode(scenario: "Scenario") -> EncodedScenario:
    """Build the full inactive encoding of a scenario."""
    return EncodedScenario(scenario)
