import numpy as np
import pytest

from mtlplan import mtl
from mtlplan.geometry import predicate_from_vertices
from mtlplan.robustness import (
    HorizonMismatchError,
    Trajectory,
    evaluate,
    evaluate_brute,
    occurrence_geometry,
    occurrence_windows,
    predicate_robustness,
)

import gen

UNIT_SQUARE = predicate_from_vertices("sq", [[0, 0], [1, 0], [1, 1], [0, 1]])


def test_predicate_robustness_center():
    assert predicate_robustness(np.array([0.5, 0.5]), UNIT_SQUARE) == pytest.approx(0.5)


def test_predicate_robustness_one_face_violated():
    assert predicate_robustness(np.array([2.0, 0.5]), UNIT_SQUARE) == pytest.approx(-1.0)


def test_predicate_robustness_corner_underestimate():
    # true Euclidean distance from (2,2) is sqrt(2); the face metric reports 1
    assert predicate_robustness(np.array([2.0, 2.0]), UNIT_SQUARE) == pytest.approx(-1.0)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        predicate_robustness(np.array([0.5, 0.5, 0.0]), UNIT_SQUARE)


def _fig1_setup():
    """Avoid box B during [t0, t2], be inside box A at time T."""
    b = predicate_from_vertices("B", [[3, 3], [5, 3], [5, 5], [3, 5]])
    a = predicate_from_vertices("A", [[7, 3], [9, 3], [9, 5], [7, 5]])
    f = mtl.to_nnf(mtl.parse("(G[1,3] !B) & (G[5,5] A)"))
    geoms = occurrence_geometry(f, {"B": b, "A": a})
    return f, geoms


def test_fig1_infeasible_critical_at_window_start():
    f, geoms = _fig1_setup()
    # enters B deep at t0 = 1 s (index 1), ends inside A
    states = np.array([[1, 4], [4, 4], [5.2, 4], [6, 4], [7, 4], [8, 4]], dtype=float)
    w = evaluate(f, Trajectory(states, 1.0), geoms)
    assert w.value < 0
    assert w.critical_index == 1
    assert w.critical_occurrence == 0  # the B leaf


def test_fig1_feasible_grazing_positive():
    f, geoms = _fig1_setup()
    # stays just below B, grazing at t1 = 2 s, ends deep inside A
    states = np.array(
        [[1, 2], [2.5, 2.2], [4, 2.5], [5.5, 2.2], [7, 3.0], [8, 4]], dtype=float
    )
    w = evaluate(f, Trajectory(states, 1.0), geoms)
    assert 0 < w.value < 1
    assert w.critical_index == 2
    assert w.critical_occurrence == 0


def test_single_state_globally():
    pred = UNIT_SQUARE.with_offset(0.0)
    f = mtl.to_nnf(mtl.parse("G[0,0] p"))
    geoms = occurrence_geometry(f, {"p": pred})
    states = np.array([[0.5, 0.7]])
    w = evaluate(f, Trajectory(states, 0.5), geoms)
    assert w.value == pytest.approx(0.3)
    assert w.critical_index == 0


def test_window_beyond_trajectory_errors():
    f = mtl.to_nnf(mtl.parse("G[0,10] p"))
    geoms = occurrence_geometry(f, {"p": UNIT_SQUARE})
    with pytest.raises(HorizonMismatchError):
        evaluate(f, Trajectory(np.zeros((4, 2)), 1.0), geoms)


def test_interval_index_conversion_absorbs_float_noise():
    # 8.5 / 0.5 must give exactly index 17
    f = mtl.to_nnf(mtl.parse("G[8.5,10] p"))
    geoms = occurrence_geometry(f, {"p": UNIT_SQUARE})
    states = np.zeros((21, 2))
    states[17:] = [0.5, 0.5]
    w = evaluate(f, Trajectory(states, 0.5), geoms)
    assert w.value == pytest.approx(0.5)
    assert w.critical_index == 17


def test_until_semantics_hand_case():
    # (a U[0,2] b) at dt=1: max over k of min(b at k, a before k)
    a = predicate_from_vertices("a", [[0, 0], [4, 0], [4, 4], [0, 4]])
    b = predicate_from_vertices("b", [[6, 0], [9, 0], [9, 4], [6, 4]])
    f = mtl.to_nnf(mtl.parse("(a U[0,2] b)"))
    geoms = occurrence_geometry(f, {"a": a, "b": b})
    states = np.array([[1, 2], [2, 2], [7, 2]], dtype=float)
    w = evaluate(f, Trajectory(states, 1.0), geoms)
    # best k is 2: min(rho_b(x2)=1, rho_a(x0)=1, rho_a(x1)=2) = 1
    assert w.value == pytest.approx(1.0)
    brute = evaluate_brute(f, Trajectory(states, 1.0), geoms)
    assert brute == pytest.approx(w.value, abs=1e-12)


def test_and_of_p_and_not_p():
    f = mtl.to_nnf(mtl.And((mtl.Pred("p"), mtl.Not(mtl.Pred("p")))))
    geoms = occurrence_geometry(f, {"p": UNIT_SQUARE})
    states = np.array([[0.5, 0.6]])
    traj = Trajectory(states, 1.0)
    rho = predicate_robustness(states[0], UNIT_SQUARE)
    assert evaluate_brute(f, traj, geoms) == pytest.approx(-abs(rho))
    assert evaluate(f, traj, geoms).value == pytest.approx(-abs(rho))


def test_eventually_one_state_inside():
    f = mtl.to_nnf(mtl.parse("F[0,5] p"))
    geoms = occurrence_geometry(f, {"p": UNIT_SQUARE})
    states = np.full((6, 2), 5.0)
    states[3] = [0.5, 0.8]
    traj = Trajectory(states, 1.0)
    assert evaluate(f, traj, geoms).value == pytest.approx(0.2)
    assert evaluate_brute(f, traj, geoms) == pytest.approx(0.2)


def test_evaluate_matches_brute_on_random_instances():
    rng = np.random.default_rng(11)
    for _ in range(300):
        f = mtl.to_nnf(
            gen.random_formula(rng, ["a", "b", "c"], depth=4, budget_steps=10, dt=0.5)
        )
        by_name = gen.geometry_by_name(rng, f)
        geoms = occurrence_geometry(f, by_name)
        traj = gen.random_trajectory(rng, last_index=12, dt=0.5)
        v_fast = evaluate(f, traj, geoms).value
        v_brute = evaluate_brute(f, traj, geoms)
        assert v_fast == pytest.approx(v_brute, abs=1e-9)


def test_witness_tie_break_earliest_index_lowest_occurrence():
    # two leaves with identical robustness at every index
    f = mtl.to_nnf(mtl.parse("G[0,2] (p & q)"))
    geoms = occurrence_geometry(f, {"p": UNIT_SQUARE, "q": UNIT_SQUARE})
    states = np.tile([0.5, 0.5], (3, 1))
    w = evaluate(f, Trajectory(states, 1.0), geoms)
    assert (w.critical_index, w.critical_occurrence) == (0, 0)


def test_sign_soundness_safe_formulas():
    # positive robustness on safe-only formulas bounds the perturbation ball
    rng = np.random.default_rng(12)
    checked = 0
    while checked < 40:
        f = mtl.to_nnf(
            gen.random_formula(
                rng, ["a", "b"], depth=3, budget_steps=6, dt=0.5, allow_negation=False
            )
        )
        by_name = gen.geometry_by_name(rng, f)
        geoms = occurrence_geometry(f, by_name)
        traj = gen.random_trajectory(rng, last_index=8, dt=0.5)
        value = evaluate(f, traj, geoms).value
        if value <= 1e-6:
            continue
        checked += 1
        for _ in range(5):
            direction = rng.normal(size=traj.states.shape)
            norms = np.linalg.norm(direction, axis=1, keepdims=True)
            direction = direction / np.maximum(norms, 1e-12)
            radius = value * (1 - 1e-9) * rng.random()
            moved = Trajectory(traj.states + radius * direction, traj.dt)
            assert evaluate(f, moved, geoms).value >= -1e-12


def test_witness_validity_conjunction_globally():
    # moving only the critical state in the improving direction raises robustness
    rng = np.random.default_rng(13)
    checked = 0
    while checked < 40:
        f = mtl.to_nnf(
            gen.random_formula(
                rng, ["a", "b"], depth=3, budget_steps=6, dt=0.5, allow_negation=False
            )
        )
        if not mtl.is_globally_conjunction_fragment(f):
            continue
        by_name = gen.geometry_by_name(rng, f)
        geoms = occurrence_geometry(f, by_name)
        traj = gen.random_trajectory(rng, last_index=8, dt=0.5)
        w = evaluate(f, traj, geoms)
        if w.value >= 0:
            continue
        checked += 1
        pred = geoms[w.critical_occurrence]
        x = traj.states[w.critical_index]
        # deepest-violated face normal points outward; move inward
        face = int(np.argmin(pred.b - pred.A @ x))
        states = traj.states.copy()
        states[w.critical_index] = x - pred.A[face] * (
            (pred.A[face] @ x - pred.b[face]) + 0.5
        )
        improved = evaluate(f, Trajectory(states, traj.dt), geoms)
        assert improved.value > w.value or improved.value >= 0


def test_monotone_in_safe_shrink():
    rng = np.random.default_rng(14)
    for _ in range(60):
        f = mtl.to_nnf(
            gen.random_formula(
                rng, ["a"], depth=2, budget_steps=5, dt=0.5, allow_negation=False
            )
        )
        by_name = gen.geometry_by_name(rng, f)
        traj = gen.random_trajectory(rng, last_index=6, dt=0.5)
        base = evaluate(f, traj, occurrence_geometry(f, by_name)).value
        shrunk = {k: p.with_offset(-0.2) for k, p in by_name.items()}
        smaller = evaluate(f, traj, occurrence_geometry(f, shrunk)).value
        assert smaller <= base + 1e-12


def test_occurrence_windows_phi1():
    f = mtl.to_nnf(mtl.parse("(G !u) & (G[8.5,10] g)"))
    windows = occurrence_windows(f, 0.5, 20)
    assert windows[0] == set(range(21))
    assert windows[1] == {17, 18, 19, 20}


def test_brute_size_guard():
    f = mtl.to_nnf(mtl.parse("F[0,6] F[0,6] F[0,6] F[0,6] F[0,6] F[0,6] F[0,6] p"))
    geoms = occurrence_geometry(f, {"p": UNIT_SQUARE})
    traj = Trajectory(np.zeros((43, 2)), 1.0)
    with pytest.raises(ValueError, match="size guard"):
        evaluate_brute(f, traj, geoms)
