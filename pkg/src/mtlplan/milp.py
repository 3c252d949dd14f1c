"""Self-contained mixed-integer linear programming.

A dense bounded-variable primal simplex solves LP relaxations; best-bound
branch-and-bound with plunging handles binary variables. Constraint rows
carry activation flags: an inactive row stays in the standard form with a
free slack, so toggling activation never re-encodes the problem and warm
bases remain valid across toggles.

All pivot rules are deterministic: Dantzig pricing with lowest-index tie
breaks, falling back to Bland's rule after a run of degenerate pivots.
"""
from __future__ import annotations

import abc
import heapq
import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "MILPModel",
    "MILPSolution",
    "Variable",
    "Row",
    "MILPError",
    "NumericalFailure",
    "UnknownRowError",
    "UnknownVariableError",
    "solve_lp",
    "solve_milp",
    "SolverAdapter",
    "BuiltinSolver",
    "CONTINUOUS",
    "BINARY",
    "FEAS_TOL",
    "INT_TOL",
    "GAP_TOL",
]

INF = math.inf

FEAS_TOL = 1e-7  # bound/row feasibility
INT_TOL = 1e-6  # binary integrality
GAP_TOL = 1e-6  # absolute branch-and-bound gap
RC_TOL = 1e-9  # reduced-cost optimality threshold
PIVOT_TOL = 1e-9  # smallest acceptable pivot element
DEGEN_LIMIT = 60  # consecutive degenerate pivots before Bland fallback
REFACTOR_EVERY = 100  # pivots between basis refactorizations

CONTINUOUS = "continuous"
BINARY = "binary"

# nonbasic/basic status codes
_AT_LB, _AT_UB, _FREE, _BASIC = 0, 1, 2, 3


class MILPError(Exception):
    pass


class NumericalFailure(MILPError):
    """Pivot degeneracy or basis singularity beyond the recovery budget."""


class UnknownRowError(MILPError, KeyError):
    pass


class UnknownVariableError(MILPError, KeyError):
    pass


class _DeadlineExceeded(Exception):
    pass


@dataclass
class Variable:
    id: int
    name: str
    lb: float
    ub: float
    kind: str = CONTINUOUS


@dataclass
class Row:
    id: int
    name: str
    coeffs: dict[int, float]
    rel: str  # "<=", "=", ">="
    rhs: float
    active: bool = True


@dataclass
class MILPSolution:
    status: str  # optimal | infeasible | unbounded | budget-exceeded
    values: Optional[np.ndarray] = None
    objective: Optional[float] = None
    simplex_iterations: int = 0
    nodes_explored: int = 0
    duals: Optional[np.ndarray] = None
    reduced_costs: Optional[np.ndarray] = None
    best_bound: Optional[float] = None

    def value_of(self, var_id: int) -> float:
        if self.values is None:
            raise MILPError(f"no solution values available (status={self.status})")
        return float(self.values[var_id])


class MILPModel:
    """Variables, activatable constraint rows, and a linear minimize objective."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: list[Variable] = []
        self.rows: list[Row] = []
        self.objective: dict[int, float] = {}
        self._var_names: dict[str, int] = {}
        self._row_names: dict[str, int] = {}
        # warm-start state: basis column indices and nonbasic statuses
        self._warm: Optional[tuple[np.ndarray, np.ndarray]] = None

    # -- construction -------------------------------------------------------

    def add_variable(
        self, name: str, lb: float = -INF, ub: float = INF, kind: str = CONTINUOUS
    ) -> int:
        if kind not in (CONTINUOUS, BINARY):
            raise ValueError(f"unknown variable kind {kind!r}")
        if kind == BINARY:
            lb, ub = 0.0, 1.0
        if ub < lb:
            raise ValueError(f"variable {name!r} has ub < lb")
        if name in self._var_names:
            raise ValueError(f"duplicate variable name {name!r}")
        vid = len(self.variables)
        self.variables.append(Variable(vid, name, float(lb), float(ub), kind))
        self._var_names[name] = vid
        self._warm = None
        return vid

    def add_row(
        self,
        name: str,
        coeffs: dict[int, float],
        rel: str,
        rhs: float,
        active: bool = True,
    ) -> int:
        if rel not in ("<=", "=", ">="):
            raise ValueError(f"unknown relation {rel!r}")
        for vid in coeffs:
            if not 0 <= vid < len(self.variables):
                raise UnknownVariableError(vid)
        if name in self._row_names:
            raise ValueError(f"duplicate row name {name!r}")
        rid = len(self.rows)
        self.rows.append(Row(rid, name, dict(coeffs), rel, float(rhs), active))
        self._row_names[name] = rid
        self._warm = None
        return rid

    def set_objective(self, coeffs: dict[int, float]) -> None:
        for vid in coeffs:
            if not 0 <= vid < len(self.variables):
                raise UnknownVariableError(vid)
        self.objective = dict(coeffs)

    def set_bounds(self, var_id: int, lb: float, ub: float) -> None:
        if not 0 <= var_id < len(self.variables):
            raise UnknownVariableError(var_id)
        if ub < lb:
            raise ValueError(f"variable {var_id} would get ub < lb")
        self.variables[var_id].lb = float(lb)
        self.variables[var_id].ub = float(ub)

    # -- lazy-activation surface --------------------------------------------

    def set_row_active(self, row_id: int, active: bool) -> None:
        """Include or exclude a row from subsequent solves.

        The row keeps its slot in the standard form (the slack just becomes
        free), so the warm-start basis stays valid.
        """
        if not 0 <= row_id < len(self.rows):
            raise UnknownRowError(row_id)
        self.rows[row_id].active = bool(active)

    def update_row(
        self,
        row_id: int,
        coeffs: Optional[dict[int, float]] = None,
        rhs: Optional[float] = None,
    ) -> None:
        """In-place parameter update for dynamic predicate geometry."""
        if not 0 <= row_id < len(self.rows):
            raise UnknownRowError(row_id)
        row = self.rows[row_id]
        if coeffs is not None:
            for vid in coeffs:
                if not 0 <= vid < len(self.variables):
                    raise UnknownVariableError(vid)
            row.coeffs = dict(coeffs)
        if rhs is not None:
            row.rhs = float(rhs)

    # -- introspection -------------------------------------------------------

    def var_id(self, name: str) -> int:
        try:
            return self._var_names[name]
        except KeyError:
            raise UnknownVariableError(name) from None

    def row_id(self, name: str) -> int:
        try:
            return self._row_names[name]
        except KeyError:
            raise UnknownRowError(name) from None

    @property
    def binary_ids(self) -> list[int]:
        return [v.id for v in self.variables if v.kind == BINARY]

    def write_lp(self) -> str:
        """Model in LP text format (active rows only), for diffing encodings."""

        def term(coef: float, name: str) -> str:
            sign = "-" if coef < 0 else "+"
            mag = abs(coef)
            if mag == 1.0:
                return f"{sign} {name}"
            return f"{sign} {mag:.12g} {name}"

        def expr(coeffs: dict[int, float]) -> str:
            parts = [
                term(c, self.variables[vid].name)
                for vid, c in sorted(coeffs.items())
                if c != 0.0
            ]
            if not parts:
                return "0"
            text = " ".join(parts)
            return text[2:] if text.startswith("+ ") else text

        rel_text = {"<=": "<=", "=": "=", ">=": ">="}
        lines = [f"\\ {self.name}", "Minimize", f" obj: {expr(self.objective)}"]
        lines.append("Subject To")
        for row in self.rows:
            if row.active:
                lines.append(f" {row.name}: {expr(row.coeffs)} {rel_text[row.rel]} {row.rhs:.12g}")
        lines.append("Bounds")
        for v in self.variables:
            if v.lb == v.ub:
                lines.append(f" {v.name} = {v.lb:.12g}")
            else:
                lo = f"{v.lb:.12g}" if v.lb > -INF else "-inf"
                hi = f"{v.ub:.12g}" if v.ub < INF else "+inf"
                lines.append(f" {lo} <= {v.name} <= {hi}")
        binaries = [v.name for v in self.variables if v.kind == BINARY]
        if binaries:
            lines.append("Binaries")
            lines.append(" " + " ".join(binaries))
        lines.append("End")
        return "\n".join(lines) + "\n"


def set_row_active(model: MILPModel, row_id: int, active: bool) -> None:
    model.set_row_active(row_id, active)


def update_row(
    model: MILPModel,
    row_id: int,
    coeffs: Optional[dict[int, float]] = None,
    rhs: Optional[float] = None,
) -> None:
    model.update_row(row_id, coeffs, rhs)

# ---------------------------------------------------------------------------
# Bounded-variable primal simplex
# ---------------------------------------------------------------------------


class _Simplex:
    """Dense-basis simplex over the model's ACTIVE rows: A x + I s = rhs.

    Columns 0..n-1 are structural, n..n+m-1 are the active rows' slacks in
    row-id order. The constraint matrix is stored both dense (refactorization,
    value recomputation) and as sparse columns (pricing, ratio tests). The
    basis inverse is kept explicitly and updated by eta transformations,
    refactorizing periodically.

    Warm bases live in a model-global id space (slack of row r is n + r) so
    they survive activation toggles: slacks of newly active rows enter the
    basis, slacks of deactivated rows drop out, and phase 1 repairs the rest.
    """

    def __init__(self, model: MILPModel):
        n = len(model.variables)
        self.n = n
        self.total_rows = len(model.rows)
        self.row_ids = np.array(
            [row.id for row in model.rows if row.active], dtype=np.int64
        )
        m = len(self.row_ids)
        self.m = m
        self.ncols = n + m
        self.A = np.zeros((m, self.ncols))
        self.rhs = np.zeros(m)
        self.lb = np.empty(self.ncols)
        self.ub = np.empty(self.ncols)
        self.c = np.zeros(self.ncols)
        for v in model.variables:
            self.lb[v.id] = v.lb
            self.ub[v.id] = v.ub
        for vid, coef in model.objective.items():
            self.c[vid] = coef
        col_entries: list[list[tuple[int, float]]] = [[] for _ in range(self.ncols)]
        for pos, rid in enumerate(self.row_ids.tolist()):
            row = model.rows[rid]
            for vid, coef in row.coeffs.items():
                if coef != 0.0:
                    self.A[pos, vid] = coef
                    col_entries[vid].append((pos, coef))
            self.A[pos, n + pos] = 1.0
            col_entries[n + pos].append((pos, 1.0))
            self.rhs[pos] = row.rhs
            s = n + pos
            if row.rel == "<=":
                self.lb[s], self.ub[s] = 0.0, INF
            elif row.rel == ">=":
                self.lb[s], self.ub[s] = -INF, 0.0
            else:
                self.lb[s], self.ub[s] = 0.0, 0.0
        # flat sparse-by-column arrays for pricing and ratio tests
        self.col_rows = [
            np.array([i for i, _ in entries], dtype=np.int64) for entries in col_entries
        ]
        self.col_vals = [
            np.array([v for _, v in entries]) for entries in col_entries
        ]
        self._flat_rows = np.concatenate(
            [r for r in self.col_rows if len(r)] or [np.zeros(0, dtype=np.int64)]
        )
        self._flat_vals = np.concatenate(
            [v for v in self.col_vals if len(v)] or [np.zeros(0)]
        )
        self._flat_cols = np.concatenate(
            [
                np.full(len(r), j, dtype=np.int64)
                for j, r in enumerate(self.col_rows)
                if len(r)
            ]
            or [np.zeros(0, dtype=np.int64)]
        )

        # column norms deflate big-M columns in pricing (static steepest edge)
        self._price_scale = np.ones(self.ncols)
        for j in range(self.ncols):
            if len(self.col_vals[j]):
                self._price_scale[j] = max(
                    1.0, float(np.linalg.norm(self.col_vals[j]))
                )

        self.basis = np.empty(m, dtype=np.int64)
        self.status = np.empty(self.ncols, dtype=np.int8)
        self.x = np.zeros(self.ncols)
        self.Binv = np.eye(m)
        self.iterations = 0
        self._pivots_since_refactor = 0
        self._binv_valid = False
        self._eta_buf = np.empty((m, m))
        self._deadline: Optional[float] = None

    # -- basis management ----------------------------------------------------

    def _cold_basis(self) -> None:
        lb_s, ub_s = self.lb[: self.n], self.ub[: self.n]
        prefer_lb = (lb_s > -INF) & ((np.abs(lb_s) <= np.abs(ub_s)) | (ub_s >= INF))
        st = np.where(prefer_lb, _AT_LB, np.where(ub_s < INF, _AT_UB, _FREE))
        self.status[: self.n] = st
        self.basis = self.n + np.arange(self.m, dtype=np.int64)
        self.status[self.n :] = _BASIC

    def _load_basis(self, basis_g: np.ndarray, status_g: np.ndarray) -> bool:
        if status_g.shape != (self.n + self.total_rows,):
            return False
        slack_local = np.full(self.total_rows, -1, dtype=np.int64)
        slack_local[self.row_ids] = self.n + np.arange(self.m)
        gl = basis_g.astype(np.int64)
        mapped = np.where(gl < self.n, gl, slack_local[np.clip(gl - self.n, 0, self.total_rows - 1)])
        mapped = mapped[mapped >= 0]
        # dedupe, preserving first occurrence, cap at m entries
        _, first_idx = np.unique(mapped, return_index=True)
        mapped = mapped[np.sort(first_idx)][: self.m]
        if len(mapped) < self.m:
            # slacks of newly active rows come in basic, lowest position first
            present = np.zeros(self.ncols, dtype=bool)
            present[mapped] = True
            fill = [
                self.n + pos
                for pos in range(self.m)
                if not present[self.n + pos]
            ][: self.m - len(mapped)]
            mapped = np.concatenate([mapped, np.array(fill, dtype=np.int64)])
        if len(mapped) != self.m:
            return False
        self.basis = mapped
        st = np.empty(self.ncols, dtype=np.int8)
        st[: self.n] = status_g[: self.n]
        st[self.n :] = status_g[self.n + self.row_ids]
        st[self.basis] = _BASIC
        basic_mask = np.zeros(self.ncols, dtype=bool)
        basic_mask[self.basis] = True
        nb = ~basic_mask
        # repair statuses that are stale or incompatible with current bounds
        st[nb & (st == _BASIC)] = _AT_LB
        lb_inf = self.lb <= -INF
        ub_inf = self.ub >= INF
        fix = nb & (st == _AT_LB) & lb_inf
        st[fix] = np.where(ub_inf[fix], _FREE, _AT_UB)
        fix = nb & (st == _AT_UB) & ub_inf
        st[fix] = np.where(lb_inf[fix], _FREE, _AT_LB)
        fix = nb & (st == _FREE) & ~(lb_inf & ub_inf)
        st[fix] = np.where(lb_inf[fix], _AT_UB, _AT_LB)
        self.status = st
        return True

    def _refactorize(self) -> None:
        B = self.A[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            self._binv_valid = False
            raise NumericalFailure("singular basis matrix") from None
        self._pivots_since_refactor = 0
        self._binv_valid = True

    def _recompute_x(self) -> None:
        xN = np.zeros(self.ncols)
        nb_lb = self.status == _AT_LB
        nb_ub = self.status == _AT_UB
        xN[nb_lb] = self.lb[nb_lb]
        xN[nb_ub] = self.ub[nb_ub]
        resid = self.rhs - self.A @ xN
        xB = self.Binv @ resid
        self.x = xN
        self.x[self.basis] = xB

    # -- pivoting core ---------------------------------------------------------

    def _check_deadline(self) -> None:
        if self._deadline is not None and time.monotonic() > self._deadline:
            raise _DeadlineExceeded()

    def _reduced_costs(self, cost: np.ndarray) -> np.ndarray:
        y = cost[self.basis] @ self.Binv
        if len(self._flat_rows):
            prods = y[self._flat_rows] * self._flat_vals
            yA = np.bincount(self._flat_cols, weights=prods, minlength=self.ncols)
        else:
            yA = np.zeros(self.ncols)
        return cost - yA

    def _price(self, cost: np.ndarray, bland: bool) -> Optional[tuple[int, int]]:
        """Entering column and direction, or None at optimality."""
        d = self._reduced_costs(cost)
        score = np.zeros(self.ncols)
        movable = self.ub > self.lb  # fixed columns can never move
        at_lb = (self.status == _AT_LB) & movable
        at_ub = (self.status == _AT_UB) & movable
        free = self.status == _FREE
        score[at_lb] = -d[at_lb]
        score[at_ub] = d[at_ub]
        score[free] = np.abs(d[free])
        eligible = score > RC_TOL
        if not eligible.any():
            return None
        if bland:
            j = int(np.flatnonzero(eligible)[0])
        else:
            j = int(np.argmax(score))
        if at_lb[j]:
            return j, +1
        if at_ub[j]:
            return j, -1
        return j, (+1 if d[j] < 0 else -1)

    def _ftran(self, j: int) -> np.ndarray:
        rows = self.col_rows[j]
        if len(rows) == 0:
            return np.zeros(self.m)
        return self.Binv[:, rows] @ self.col_vals[j]

    def _ratio_test(
        self, j: int, s: int, phase1: bool
    ) -> tuple[float, int, int, np.ndarray]:
        """Step length; returns (t, leaving_position, leaving_status, w).

        leaving_position -1 encodes a bound flip of the entering column.
        """
        w = self._ftran(j)
        delta = -s * w  # per-unit change of each basic value
        xB = self.x[self.basis]
        lbB = self.lb[self.basis]
        ubB = self.ub[self.basis]
        moving_dn = delta < -PIVOT_TOL
        moving_up = delta > PIVOT_TOL
        if phase1:
            below = xB < lbB - FEAS_TOL
            above = xB > ubB + FEAS_TOL
            feas = ~(below | above)
            # infeasible variables block only when moving toward the violated
            # bound; feasible ones block at whichever bound they approach
            to_lb = (feas & moving_dn & (lbB > -INF)) | (below & moving_up)
            to_ub = (feas & moving_up & (ubB < INF)) | (above & moving_dn)
        else:
            to_lb = moving_dn & (lbB > -INF)
            to_ub = moving_up & (ubB < INF)
        t_cand = np.full(self.m, INF)
        if to_lb.any():
            t_cand[to_lb] = (lbB[to_lb] - xB[to_lb]) / delta[to_lb]
        if to_ub.any():
            t_cand[to_ub] = (ubB[to_ub] - xB[to_ub]) / delta[to_ub]
        np.maximum(t_cand, 0.0, out=t_cand)
        t_best = float(np.min(t_cand)) if self.m else INF
        # the entering column may flip to its own opposite bound
        span = self.ub[j] - self.lb[j]
        if span < INF and span < t_best - 1e-12:
            return span, -1, _AT_LB, w
        if t_best >= INF:
            return INF, -1, _AT_LB, w
        # among blockers within tolerance pick the largest pivot, lowest index
        ties = np.flatnonzero(t_cand <= t_best + 1e-12)
        r_best = int(ties[np.argmax(np.abs(delta[ties]))])
        leave_status = _AT_LB if to_lb[r_best] else _AT_UB
        return t_best, r_best, leave_status, w

    def _apply_step(
        self, j: int, s: int, t: float, r: int, leave_status: int, w: np.ndarray
    ) -> None:
        if t != 0.0:
            self.x[self.basis] -= s * t * w
            self.x[j] += s * t
        if r < 0:
            # bound flip
            self.status[j] = _AT_UB if s > 0 else _AT_LB
            self.x[j] = self.ub[j] if s > 0 else self.lb[j]
            return
        leaving = self.basis[r]
        self.status[leaving] = leave_status
        self.x[leaving] = self.lb[leaving] if leave_status == _AT_LB else self.ub[leaving]
        self.basis[r] = j
        self.status[j] = _BASIC
        # eta update of the explicit inverse
        piv = w[r]
        if abs(piv) < PIVOT_TOL:
            raise NumericalFailure("vanishing pivot element")
        self.Binv[r, :] /= piv
        col = w.copy()
        col[r] = 0.0
        buf = self._eta_buf
        np.multiply(col[:, None], self.Binv[r, :][None, :], out=buf)
        self.Binv -= buf
        self._pivots_since_refactor += 1
        if self._pivots_since_refactor >= REFACTOR_EVERY:
            self._refactorize()
            self._recompute_x()

    def _infeasibility(self) -> np.ndarray:
        xB = self.x[self.basis]
        lo = self.lb[self.basis] - xB
        hi = xB - self.ub[self.basis]
        return np.maximum(np.maximum(lo, hi), 0.0)

    def _run_phase(self, phase1: bool, max_iter: int) -> str:
        degenerate_run = 0
        bland = False
        local_iter = 0
        while True:
            self.iterations += 1
            local_iter += 1
            if local_iter % 128 == 0:
                self._check_deadline()
            if local_iter > max_iter:
                raise NumericalFailure("simplex iteration limit exceeded")
            if phase1:
                if self.m == 0:
                    return "feasible"
                xB = self.x[self.basis]
                below = xB < self.lb[self.basis] - FEAS_TOL
                above = xB > self.ub[self.basis] + FEAS_TOL
                if not below.any() and not above.any():
                    return "feasible"
                cost = np.zeros(self.ncols)
                cost[self.basis[below]] = -1.0
                cost[self.basis[above]] = 1.0
            else:
                cost = self.c
            entering = self._price(cost, bland)
            if entering is None:
                return "infeasible" if phase1 else "optimal"
            j, s = entering
            t, r, leave_status, w = self._ratio_test(j, s, phase1)
            if t >= INF:
                if phase1:
                    raise NumericalFailure("phase-1 ray without blocking variable")
                return "unbounded"
            self._apply_step(j, s, t, r, leave_status, w)
            if t <= 1e-12:
                degenerate_run += 1
                if degenerate_run >= DEGEN_LIMIT:
                    bland = True
            else:
                degenerate_run = 0
                bland = False

    def solve(
        self,
        warm: Optional[tuple[np.ndarray, np.ndarray]] = None,
        deadline_at: Optional[float] = None,
        polish: bool = True,
        in_place: bool = False,
    ) -> tuple[str, Optional[np.ndarray], Optional[np.ndarray]]:
        """Run phases 1 and 2; returns (status, duals, reduced_costs).

        With ``in_place`` the current basis and statuses are reused as-is
        (diving continuation after a bound change).
        """
        self._deadline = deadline_at
        self._check_deadline()
        if not in_place:
            reusable = self.basis.copy() if self._binv_valid else None
            loaded = False
            if warm is not None:
                loaded = self._load_basis(warm[0], warm[1])
            if not loaded:
                self._cold_basis()
            if reusable is None or not np.array_equal(reusable, self.basis):
                try:
                    self._refactorize()
                except NumericalFailure:
                    self._cold_basis()
                    self._refactorize()
        elif not self._binv_valid:
            self._refactorize()
        self._recompute_x()
        max_iter = 20000 + 60 * (self.m + self.n)
        status = self._run_phase(phase1=True, max_iter=max_iter)
        if status == "infeasible":
            return "infeasible", None, None
        status = self._run_phase(phase1=False, max_iter=max_iter)
        if status == "unbounded":
            return "unbounded", None, None
        if not polish:
            return "optimal", None, None
        # polish: refactorize and recompute at the claimed optimum
        self._refactorize()
        self._recompute_x()
        y = self.c[self.basis] @ self.Binv
        d = self._reduced_costs(self.c)
        return "optimal", y, d[: self.n]

    def objective_value(self) -> float:
        return float(self.c @ self.x)

    def snapshot(self) -> tuple[np.ndarray, np.ndarray]:
        """Warm-start state in the model-global id space."""
        basis_g = self.basis.copy()
        slack_mask = basis_g >= self.n
        basis_g[slack_mask] = self.n + self.row_ids[basis_g[slack_mask] - self.n]
        status_g = np.full(self.n + self.total_rows, _BASIC, dtype=np.int8)
        status_g[: self.n] = self.status[: self.n]
        status_g[self.n + self.row_ids] = self.status[self.n :]
        return basis_g, status_g


# ---------------------------------------------------------------------------
# Public solve entry points
# ---------------------------------------------------------------------------


def _deadline_at(budget: Optional[float]) -> Optional[float]:
    return None if budget is None else time.monotonic() + budget


def solve_lp(model: MILPModel, budget: Optional[float] = None) -> MILPSolution:
    """Solve the LP relaxation (binaries relaxed to their [0,1] bounds)."""
    sx = _Simplex(model)
    try:
        status, duals, rcosts = sx.solve(model._warm, _deadline_at(budget))
    except _DeadlineExceeded:
        return MILPSolution(status="budget-exceeded", simplex_iterations=sx.iterations)
    if status != "optimal":
        return MILPSolution(status=status, simplex_iterations=sx.iterations)
    model._warm = sx.snapshot()
    duals_full = np.zeros(len(model.rows))
    if duals is not None:
        duals_full[sx.row_ids] = duals
    return MILPSolution(
        status="optimal",
        values=sx.x[: sx.n].copy(),
        objective=sx.objective_value(),
        simplex_iterations=sx.iterations,
        duals=duals_full,
        reduced_costs=rcosts,
        best_bound=sx.objective_value(),
    )


def solve_milp(
    model: MILPModel,
    budget: Optional[float] = None,
    node_limit: int = 1_000_000,
) -> MILPSolution:
    """Branch-and-bound over binary variables.

    Dive-first exploration (the up-branch continues from the live basis), a
    best-bound heap for the remaining open nodes, branching on the most
    fractional binary. status=optimal only when the tree is exhausted within
    the absolute gap tolerance; a deadline returns the incumbent (if any) as
    budget-exceeded.
    """
    binaries = model.binary_ids
    if not binaries:
        return solve_lp(model, budget)
    bin_arr = np.array(binaries, dtype=np.int64)
    deadline_at = _deadline_at(budget)
    sx = _Simplex(model)
    base_lb = sx.lb.copy()
    base_ub = sx.ub.copy()

    total_iters = 0
    nodes = 0
    incumbent: Optional[np.ndarray] = None
    incumbent_obj = INF
    incumbent_basis: Optional[tuple[np.ndarray, np.ndarray]] = None
    seq = 0
    # heap entries: (bound, -depth, seq, fixings, warm-snapshot)
    heap: list = []
    exhausted = True
    # current dive state: fixings dict, or None to pop from the heap
    dive: Optional[tuple[dict[int, float], int]] = ({}, 0)
    dive_warm: Optional[tuple] = model._warm
    dive_in_place = False

    def out_of_budget() -> bool:
        return (deadline_at is not None and time.monotonic() > deadline_at) or (
            nodes >= node_limit
        )

    while dive is not None or heap:
        if dive is not None:
            fixings, depth = dive
            warm = dive_warm
            in_place = dive_in_place
            dive = None
        else:
            bound, negdepth, _, fixings, warm = heapq.heappop(heap)
            depth = -negdepth
            in_place = False
            if bound >= incumbent_obj - GAP_TOL:
                continue  # within gap of the incumbent
        if out_of_budget():
            exhausted = False
            break
        nodes += 1
        sx.lb[:] = base_lb
        sx.ub[:] = base_ub
        for vid, val in fixings.items():
            sx.lb[vid] = val
            sx.ub[vid] = val
        try:
            status, _, _ = sx.solve(warm, deadline_at, polish=False, in_place=in_place)
        except _DeadlineExceeded:
            total_iters += sx.iterations
            sx.iterations = 0
            exhausted = False
            break
        except NumericalFailure:
            # retry once from a cold basis before giving up on the node
            try:
                status, _, _ = sx.solve(None, deadline_at, polish=False)
            except (NumericalFailure, _DeadlineExceeded):
                total_iters += sx.iterations
                sx.iterations = 0
                exhausted = False
                break
        total_iters += sx.iterations
        sx.iterations = 0
        if status == "infeasible":
            continue
        if status == "unbounded":
            return MILPSolution(
                status="unbounded", simplex_iterations=total_iters, nodes_explored=nodes
            )
        obj = sx.objective_value()
        if obj >= incumbent_obj - GAP_TOL:
            continue
        vals = sx.x[: sx.n]
        frac = np.abs(vals[bin_arr] - np.round(vals[bin_arr]))
        worst = int(np.argmax(frac))
        if frac[worst] <= INT_TOL:
            incumbent = vals.copy()
            incumbent_obj = obj
            incumbent_basis = sx.snapshot()
            continue
        frac_id = int(bin_arr[worst])
        # dive on the up-branch in place: for big-M style rows the 1-side
        # keeps the relaxation feasible, reaching integral incumbents quickly
        snap = sx.snapshot()
        seq += 1
        heapq.heappush(heap, (obj, -(depth + 1), seq, {**fixings, frac_id: 0.0}, snap))
        dive = ({**fixings, frac_id: 1.0}, depth + 1)
        dive_warm = None
        dive_in_place = True

    if incumbent is None:
        if exhausted:
            return MILPSolution(
                status="infeasible", simplex_iterations=total_iters, nodes_explored=nodes
            )
        return MILPSolution(
            status="budget-exceeded", simplex_iterations=total_iters, nodes_explored=nodes
        )
    model._warm = incumbent_basis
    best_bound = incumbent_obj
    if heap and not exhausted:
        best_bound = min(entry[0] for entry in heap)
    return MILPSolution(
        status="optimal" if exhausted else "budget-exceeded",
        values=incumbent,
        objective=incumbent_obj,
        simplex_iterations=total_iters,
        nodes_explored=nodes,
        best_bound=best_bound,
    )

# ---------------------------------------------------------------------------
# External solver adapter
# ---------------------------------------------------------------------------


class SolverAdapter(abc.ABC):
    """Single substitution point for an external MILP solver."""

    @abc.abstractmethod
    def solve(self, model: MILPModel, budget: Optional[float] = None) -> MILPSolution:
        ...


class BuiltinSolver(SolverAdapter):
    """The required default: the in-process simplex + branch-and-bound."""

    def solve(self, model: MILPModel, budget: Optional[float] = None) -> MILPSolution:
        return solve_milp(model, budget)
