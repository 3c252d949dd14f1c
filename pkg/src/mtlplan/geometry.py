"""Polyhedral predicate geometry: unit-normalized halfspaces and boxes."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "Predicate",
    "Box",
    "predicate_from_halfspaces",
    "predicate_from_vertices",
    "convex_hull_2d",
]

_UNIT_TOL = 1e-9


@dataclass(frozen=True)
class Predicate:
    """Named polyhedron {x | Ax <= b} with unit-norm face normals.

    The constructor jointly rescales each (a_i, b_i) row so that
    ||a_i|| = 1; face distances are then plain signed values b_i - a_i.x.
    """

    name: str
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self) -> None:
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if A.shape[0] != b.shape[0]:
            raise ValueError(f"A has {A.shape[0]} rows but b has {b.shape[0]} entries")
        norms = np.linalg.norm(A, axis=1)
        if np.any(norms < _UNIT_TOL):
            raise ValueError(f"predicate {self.name!r} has a zero face normal")
        # skip already-unit rows so normalization is bitwise idempotent
        scale = np.where(np.abs(norms - 1.0) <= 1e-12, 1.0, norms)
        A = A / scale[:, None]
        b = b / scale
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def faces(self) -> int:
        return self.A.shape[0]

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        return bool(np.all(self.A @ np.asarray(x, dtype=float) <= self.b + tol))

    def with_offset(self, delta: float, name: Optional[str] = None) -> "Predicate":
        """Shift every face outward (delta > 0 grows the set)."""
        return Predicate(name or self.name, self.A, self.b + delta)


@dataclass(frozen=True)
class Box:
    """Axis-aligned bounded box, used as the workspace state domain."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self) -> None:
        lo = np.asarray(self.lo, dtype=float).reshape(-1)
        hi = np.asarray(self.hi, dtype=float).reshape(-1)
        if lo.shape != hi.shape:
            raise ValueError("box bounds have mismatched dimensions")
        if np.any(hi < lo):
            raise ValueError("box has hi < lo in some dimension")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def bounded(self) -> bool:
        return bool(np.all(np.isfinite(self.lo)) and np.all(np.isfinite(self.hi)))

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def support_min(self, a: np.ndarray) -> float:
        """min over the box of a . x, in closed form by sign of a."""
        a = np.asarray(a, dtype=float)
        return float(np.sum(np.where(a > 0, a * self.lo, a * self.hi)))


def predicate_from_halfspaces(
    name: str,
    A: Sequence[Sequence[float]],
    b: Sequence[float],
    dims: Optional[Sequence[int]] = None,
    state_dim: Optional[int] = None,
) -> Predicate:
    """Build a predicate, optionally embedding low-dimensional rows.

    When ``dims`` is given, column j of A applies to state dimension
    dims[j]; remaining state dimensions get zero coefficients.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if dims is not None:
        if state_dim is None:
            raise ValueError("state_dim is required when dims is given")
        full = np.zeros((A.shape[0], state_dim))
        for j, d in enumerate(dims):
            full[:, d] = A[:, j]
        A = full
    return Predicate(name, A, np.asarray(b, dtype=float))


def convex_hull_2d(points: Sequence[Sequence[float]]) -> np.ndarray:
    """Counterclockwise convex hull of 2D points (monotone chain)."""
    pts = sorted({(float(p[0]), float(p[1])) for p in points})
    if len(pts) < 3:
        raise ValueError("need at least 3 distinct vertices for a 2D polytope")

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[tuple[float, float]] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[tuple[float, float]] = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise ValueError("vertices are collinear, polytope has empty interior")
    return np.asarray(hull, dtype=float)


def predicate_from_vertices(
    name: str,
    vertices: Sequence[Sequence[float]],
    dims: Sequence[int] = (0, 1),
    state_dim: Optional[int] = None,
) -> Predicate:
    """2D vertex list to halfspace form via the convex hull.

    Hull edge (p, q) in counterclockwise order has outward normal
    (q_y - p_y, -(q_x - p_x)).
    """
    hull = convex_hull_2d(vertices)
    rows = []
    rhs = []
    for i in range(len(hull)):
        p = hull[i]
        q = hull[(i + 1) % len(hull)]
        normal = np.array([q[1] - p[1], -(q[0] - p[0])])
        rows.append(normal)
        rhs.append(float(normal @ p))
    return predicate_from_halfspaces(
        name, rows, rhs, dims=dims, state_dim=state_dim if state_dim else 2
    )
