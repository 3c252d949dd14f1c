"""Discrete-time space-robustness monitor for MTL over sampled trajectories.

Returns the robustness value together with the critical time index and the
critical predicate occurrence, i.e. the leaf and sample realizing the min/max
recursion. The distance metric per predicate is the min-over-faces signed
value with unit normals: exact Euclidean distance inside a polyhedron, a
conservative underestimate outside near vertices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import mtl
from .geometry import Predicate

__all__ = [
    "Trajectory",
    "RobustnessWitness",
    "HorizonMismatchError",
    "predicate_robustness",
    "evaluate",
    "evaluate_brute",
    "occurrence_geometry",
]

_IDX_EPS = 1e-9


class HorizonMismatchError(ValueError):
    """An operator window extends beyond the end of the trajectory."""


@dataclass(frozen=True)
class Trajectory:
    """Time-indexed state sequence with uniform sample time.

    ``states`` has shape (N+1, n); index k corresponds to time k*dt.
    """

    states: np.ndarray
    dt: float

    def __post_init__(self) -> None:
        states = np.asarray(self.states, dtype=float)
        if states.ndim != 2 or states.shape[0] < 1:
            raise ValueError("states must be a non-empty (N+1, n) array")
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "states", states)

    @property
    def last_index(self) -> int:
        return self.states.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def time_of(self, k: int) -> float:
        return k * self.dt


@dataclass(frozen=True)
class RobustnessWitness:
    value: float
    critical_index: int
    critical_occurrence: int


def predicate_robustness(x: np.ndarray, pred: Predicate) -> float:
    """Signed face distance min_i (b_i - a_i . x); positive inside."""
    x = np.asarray(x, dtype=float)
    if x.shape != (pred.A.shape[1],):
        raise ValueError(
            f"state dimension {x.shape} does not match predicate dimension "
            f"({pred.A.shape[1]},)"
        )
    return float(np.min(pred.b - pred.A @ x))


def occurrence_geometry(
    f: mtl.MTLFormula, by_name: Mapping[str, Predicate]
) -> dict[int, Predicate]:
    """Map occurrence ids of an NNF formula to predicate geometry by name."""
    geoms: dict[int, Predicate] = {}
    for occ in mtl.classify_occurrences(f):
        if occ.name not in by_name:
            raise KeyError(f"no geometry for predicate {occ.name!r}")
        geoms[occ.occurrence_id] = by_name[occ.name]
    return geoms


def _window(
    interval: mtl.Interval, dt: float, at: int, last: int, child_tail: int = 0
) -> range:
    """Index window for an operator interval anchored at index ``at``.

    [a,b] maps to [at + ceil(a/dt), at + floor(b/dt)] with a small epsilon
    absorbing the floating-point representation of quotients like 8.5/0.5.
    An unbounded interval runs to the last anchor at which the child's own
    horizon (``child_tail`` indices) still fits inside the trajectory.
    """
    lo = at + math.ceil(interval.lo / dt - _IDX_EPS)
    if interval.hi is None:
        hi = last - child_tail
    else:
        hi = at + math.floor(interval.hi / dt + _IDX_EPS)
        if hi > last:
            raise HorizonMismatchError(
                f"window {interval} at index {at} ends at index {hi}, "
                f"beyond trajectory end {last}"
            )
    if lo > hi:
        raise HorizonMismatchError(
            f"window {interval} at index {at} contains no sample indices"
        )
    return range(lo, hi + 1)


def _child_tail(f: mtl.MTLFormula, dt: float) -> int:
    """Indices a child formula needs beyond its anchor."""
    return math.ceil(mtl.horizon_seconds(f) / dt - _IDX_EPS)


@dataclass(frozen=True)
class _Cand:
    """A robustness value with the (index, occurrence) leaf realizing it."""

    value: float
    index: int
    occ: int

    def _preferred_over(self, other: "_Cand") -> bool:
        # Deterministic tie rule: earliest time index, then lowest occurrence.
        return (self.index, self.occ) < (other.index, other.occ)


def _pick_min(a: _Cand, b: _Cand) -> _Cand:
    if b.value < a.value or (b.value == a.value and b._preferred_over(a)):
        return b
    return a


def _pick_max(a: _Cand, b: _Cand) -> _Cand:
    if b.value > a.value or (b.value == a.value and b._preferred_over(a)):
        return b
    return a


def evaluate(
    f: mtl.MTLFormula,
    traj: Trajectory,
    geoms: Mapping[int, Predicate],
    at: int = 0,
) -> RobustnessWitness:
    """Robustness of an NNF formula at index ``at`` with witness tracking.

    ``geoms`` maps occurrence ids (left-to-right leaf order, as assigned by
    :func:`mtl.classify_occurrences`) to predicate geometry, so distinct
    occurrences of one name may carry differently resized sets.
    """
    counter = [0]
    cand = _eval(f, traj, geoms, at, counter)
    return RobustnessWitness(cand.value, cand.index, cand.occ)


def _eval(
    f: mtl.MTLFormula,
    traj: Trajectory,
    geoms: Mapping[int, Predicate],
    at: int,
    counter: list[int],
) -> _Cand:
    if at < 0 or at > traj.last_index:
        raise HorizonMismatchError(f"index {at} outside trajectory [0, {traj.last_index}]")
    if isinstance(f, mtl.Pred):
        occ = counter[0]
        counter[0] += 1
        return _Cand(predicate_robustness(traj.states[at], geoms[occ]), at, occ)
    if isinstance(f, mtl.Not):
        if not isinstance(f.child, mtl.Pred):
            raise ValueError("evaluate requires negation normal form")
        occ = counter[0]
        counter[0] += 1
        return _Cand(-predicate_robustness(traj.states[at], geoms[occ]), at, occ)
    if isinstance(f, (mtl.And, mtl.Or)):
        pick = _pick_min if isinstance(f, mtl.And) else _pick_max
        best: _Cand | None = None
        for term in f.terms:
            cand = _eval(term, traj, geoms, at, counter)
            best = cand if best is None else pick(best, cand)
        assert best is not None
        return best
    if isinstance(f, (mtl.Globally, mtl.Eventually)):
        tail = _child_tail(f.child, traj.dt) if f.interval.hi is None else 0
        window = _window(f.interval, traj.dt, at, traj.last_index, tail)
        pick = _pick_min if isinstance(f, mtl.Globally) else _pick_max
        base = counter[0]
        best = None
        for k in window:
            counter[0] = base
            cand = _eval(f.child, traj, geoms, k, counter)
            best = cand if best is None else pick(best, cand)
        assert best is not None
        return best
    if isinstance(f, mtl.Until):
        window = _window(f.interval, traj.dt, at, traj.last_index)
        base = counter[0]
        lhs_leaves = _leaf_count(f.lhs)
        best = None
        for k in window:
            # min of rhs at k and lhs over the strict prefix [at, k)
            inner: _Cand | None = None
            for kk in range(at, k):
                cand = _eval(f.lhs, traj, geoms, kk, [base])
                inner = cand if inner is None else _pick_min(inner, cand)
            rhs_cand = _eval(f.rhs, traj, geoms, k, [base + lhs_leaves])
            combined = rhs_cand if inner is None else _pick_min(inner, rhs_cand)
            best = combined if best is None else _pick_max(best, combined)
        counter[0] = base + lhs_leaves + _leaf_count(f.rhs)
        assert best is not None
        return best
    raise TypeError(f"unknown formula node {type(f).__name__}")


def _leaf_count(f: mtl.MTLFormula) -> int:
    return sum(1 for _ in mtl.iter_leaves(f))


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------

def occurrence_windows(
    f: mtl.MTLFormula, dt: float, last: int, at: int = 0
) -> dict[int, set[int]]:
    """Time indices at which each occurrence can be reached by the monitor.

    This is the per-occurrence relevant window: the non-lazy encoding
    activates exactly these (occurrence, index) pairs.
    """
    out: dict[int, set[int]] = {}
    _collect_windows(f, dt, last, {at}, [0], out)
    return out


def _collect_windows(f, dt, last, anchors, counter, out) -> None:
    if isinstance(f, (mtl.Pred, mtl.Not)):
        occ = counter[0]
        counter[0] += 1
        out.setdefault(occ, set()).update(anchors)
        return
    if isinstance(f, (mtl.And, mtl.Or)):
        for term in f.terms:
            _collect_windows(term, dt, last, anchors, counter, out)
        return
    if isinstance(f, (mtl.Globally, mtl.Eventually)):
        tail = _child_tail(f.child, dt) if f.interval.hi is None else 0
        child_anchors: set[int] = set()
        for at in anchors:
            child_anchors.update(_window(f.interval, dt, at, last, tail))
        _collect_windows(f.child, dt, last, child_anchors, counter, out)
        return
    if isinstance(f, mtl.Until):
        lhs_anchors: set[int] = set()
        rhs_anchors: set[int] = set()
        for at in anchors:
            window = _window(f.interval, dt, at, last)
            rhs_anchors.update(window)
            lhs_anchors.update(range(at, max(window)))
        if lhs_anchors:
            _collect_windows(f.lhs, dt, last, lhs_anchors, counter, out)
        else:
            counter[0] += _leaf_count(f.lhs)
        _collect_windows(f.rhs, dt, last, rhs_anchors, counter, out)
        return
    raise TypeError(f"unknown formula node {type(f).__name__}")


_BRUTE_ATOM_LIMIT = 200_000


def evaluate_brute(
    f: mtl.MTLFormula,
    traj: Trajectory,
    geoms: Mapping[int, Predicate],
    at: int = 0,
) -> float:
    """Robustness by explicit expansion of temporal operators.

    Every Globally/Eventually/Until is unrolled into a finite min/max tree
    over (leaf, index) atoms before any arithmetic happens; no witness
    tracking. Guarded to small instances.
    """
    budget = [_BRUTE_ATOM_LIMIT]
    tree = _expand(f, at, traj, [0], budget)
    return _fold(tree, traj, geoms)


def _expand(f, at, traj, counter, budget):
    # tree nodes: ("atom", occ, index, negated) | ("min", [...]) | ("max", [...])
    budget[0] -= 1
    if budget[0] < 0:
        raise ValueError("brute-force expansion exceeds the size guard")
    last = traj.last_index
    if isinstance(f, mtl.Pred):
        occ = counter[0]
        counter[0] += 1
        return ("atom", occ, at, False)
    if isinstance(f, mtl.Not):
        occ = counter[0]
        counter[0] += 1
        return ("atom", occ, at, True)
    if isinstance(f, (mtl.And, mtl.Or)):
        kind = "min" if isinstance(f, mtl.And) else "max"
        return (kind, [_expand(t, at, traj, counter, budget) for t in f.terms])
    if isinstance(f, (mtl.Globally, mtl.Eventually)):
        kind = "min" if isinstance(f, mtl.Globally) else "max"
        tail = _child_tail(f.child, traj.dt) if f.interval.hi is None else 0
        window = _window(f.interval, traj.dt, at, last, tail)
        base = counter[0]
        parts = []
        for k in window:
            counter[0] = base
            parts.append(_expand(f.child, k, traj, counter, budget))
        return (kind, parts)
    if isinstance(f, mtl.Until):
        window = _window(f.interval, traj.dt, at, last)
        base = counter[0]
        lhs_leaves = _leaf_count(f.lhs)
        disjuncts = []
        for k in window:
            conj = [
                _expand(f.lhs, kk, traj, [base], budget) for kk in range(at, k)
            ]
            counter[0] = base + lhs_leaves
            conj.append(_expand(f.rhs, k, traj, counter, budget))
            disjuncts.append(("min", conj))
        return ("max", disjuncts)
    raise TypeError(f"unknown formula node {type(f).__name__}")


def _fold(tree, traj, geoms) -> float:
    if tree[0] == "atom":
        _, occ, k, negated = tree
        rho = predicate_robustness(traj.states[k], geoms[occ])
        return -rho if negated else rho
    _, parts = tree
    values = [_fold(p, traj, geoms) for p in parts]
    return min(values) if tree[0] == "min" else max(values)
