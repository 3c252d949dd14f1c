"""SVG scene rendering for plan/rhc artifacts (workspace, predicates, paths)."""
from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_COLORS = {"safe": "tab:green", "unsafe": "tab:red"}


def polygon_from_halfspaces(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vertices of a bounded 2D polytope {x | Ax <= b}, ordered by angle.

    Brute-force pairwise line intersection; fine at plotting face counts.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    pts = []
    f = A.shape[0]
    for i in range(f):
        for j in range(i + 1, f):
            M = np.array([A[i], A[j]])
            if abs(np.linalg.det(M)) < 1e-12:
                continue
            p = np.linalg.solve(M, np.array([b[i], b[j]]))
            if np.all(A @ p <= b + 1e-7):
                pts.append(p)
    if not pts:
        return np.zeros((0, 2))
    pts = np.array(pts)
    center = pts.mean(axis=0)
    order = np.argsort(np.arctan2(pts[:, 1] - center[1], pts[:, 0] - center[0]))
    return pts[order]


def _position_halfspaces(pred: dict) -> tuple[np.ndarray, np.ndarray]:
    """Restrict full-state halfspaces to the position plane (dims 0, 1)."""
    A = np.asarray(pred["A"], dtype=float)
    b = np.asarray(pred["b"], dtype=float)
    keep = [i for i in range(A.shape[0]) if np.any(A[i, :2] != 0.0)]
    return A[keep][:, :2], b[keep]


def _draw_world(ax, snap: dict) -> None:
    lo = snap["workspace"]["lower"]
    hi = snap["workspace"]["upper"]
    ax.set_xlim(lo[0] - 0.3, hi[0] + 0.3)
    ax.set_ylim(lo[1] - 0.3, hi[1] + 0.3)
    ax.add_patch(
        plt.Rectangle(
            (lo[0], lo[1]), hi[0] - lo[0], hi[1] - lo[1],
            fill=False, edgecolor="black", linewidth=1.0,
        )
    )
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")

    occurrences = snap.get("occurrences", [])
    for occ in occurrences:
        pred = snap["predicates"][occ["name"]]
        A2, b2 = _position_halfspaces(pred)
        color = _COLORS[occ["polarity"]]
        poly = polygon_from_halfspaces(A2, b2)
        if len(poly):
            ax.fill(poly[:, 0], poly[:, 1], color=color, alpha=0.35, linewidth=0)
            ax.plot(
                np.append(poly[:, 0], poly[0, 0]),
                np.append(poly[:, 1], poly[0, 1]),
                color=color, linewidth=1.2,
            )
        # resized outline: shrunk goal / bloated obstacle
        b_res = np.asarray(occ["resized_b"], dtype=float)
        keep = [i for i in range(len(pred["A"])) if np.any(np.asarray(pred["A"])[i, :2] != 0.0)]
        poly_r = polygon_from_halfspaces(A2, b_res[keep])
        if len(poly_r):
            ax.plot(
                np.append(poly_r[:, 0], poly_r[0, 0]),
                np.append(poly_r[:, 1], poly_r[0, 1]),
                color=color, linewidth=1.0, linestyle="--",
            )


def plot_scene(snap: dict, states: np.ndarray, witness: dict | None, out: Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 6))
    _draw_world(ax, snap)
    ax.plot(states[:, 0], states[:, 1], "-o", color="tab:blue", markersize=3, linewidth=1.2)
    ax.plot(states[0, 0], states[0, 1], "s", color="tab:cyan", markersize=9)
    if witness is not None:
        w = witness.get("robustness_resized") or witness
        if w and w.get("value") is not None and w["value"] < 0:
            k = w["critical_index"]
            ax.plot(states[k, 0], states[k, 1], "x", color="black", markersize=11, markeredgewidth=2.5)
    ax.set_title(snap.get("name", ""))
    fig.savefig(out, format="svg", bbox_inches="tight")
    plt.close(fig)


def plot_step_frames(snap: dict, steps_path: Path, outdir: Path) -> int:
    count = 0
    for line in Path(steps_path).read_text().splitlines():
        rec = json.loads(line)
        if rec.get("plan") is None:
            continue
        plan = np.asarray(rec["plan"], dtype=float)
        fig, ax = plt.subplots(figsize=(6, 6))
        _draw_world(ax, snap)
        i = rec["step"]
        ax.plot(plan[:i, 0], plan[:i, 1], "-", color="tab:blue", linewidth=1.8)
        dashed_color = "tab:blue" if rec["status"] == "feasible" else "tab:orange"
        ax.plot(plan[i - 1 :, 0], plan[i - 1 :, 1], "--", color=dashed_color, linewidth=1.2)
        if rec["status"] != "feasible" and rec.get("critical_index") is not None:
            k = rec["critical_index"]
            ax.plot(plan[k, 0], plan[k, 1], "x", color="black", markersize=11, markeredgewidth=2.5)
        ax.set_title(f"{snap.get('name', '')} step {i} ({rec['status']})")
        fig.savefig(outdir / f"frame_{i:03d}.svg", format="svg", bbox_inches="tight")
        plt.close(fig)
        count += 1
    return count
