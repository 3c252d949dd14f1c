import itertools

import numpy as np
import pytest

from mtlplan import milp
from mtlplan.dynamics import double_integrator_2d
from mtlplan.encoding import (
    Box,
    EncodingError,
    Predicate,
    ResizedPredicate,
    add_safe_group,
    add_unsafe_group,
    compute_bigM,
    encode,
    polytope_interior_radius,
    predicate_from_vertices,
)
from mtlplan.robustness import predicate_robustness
from mtlplan.scenario import Scenario

import gen


def _phi1_scenario(rho=0.5, goal=None):
    return Scenario(
        name="phi1",
        dynamics=double_integrator_2d(0.5, [-2, -2], [2, 2]),
        workspace=Box([0, 0, -3, -3], [10, 10, 3, 3]),
        predicates={
            "unsafe": predicate_from_vertices(
                "unsafe", [[4, 4], [6, 4], [6, 6], [4, 6]], state_dim=4
            ),
            "goal": goal
            or predicate_from_vertices(
                "goal", [[7.5, 4], [9.5, 4], [9.5, 6], [7.5, 6]], state_dim=4
            ),
        },
        formula_text="(G !unsafe) & (G[8.5,10] goal)",
        rho_d=rho,
        R=[1.0, 1.0],
        x0=[0.5, 5.0, 0.2, 0.0],
    )


def test_predicate_rows_unit_normalized():
    pred = Predicate("p", [[3.0, 4.0], [0.0, 2.0]], [10.0, 4.0])
    norms = np.linalg.norm(pred.A, axis=1)
    assert np.allclose(norms, 1.0, atol=1e-9)
    assert pred.b[0] == pytest.approx(2.0)  # 10 / 5
    assert pred.b[1] == pytest.approx(2.0)  # 4 / 2


def test_resize_identity_at_zero_margin():
    pred = predicate_from_vertices("p", [[0, 0], [1, 0], [1, 1], [0, 1]])
    resized = ResizedPredicate(pred, "safe", 0.0)
    assert np.array_equal(resized.b_tilde, pred.b)


def test_resize_directions():
    pred = predicate_from_vertices("p", [[0, 0], [1, 0], [1, 1], [0, 1]])
    safe = ResizedPredicate(pred, "safe", 0.2)
    unsafe = ResizedPredicate(pred, "unsafe", 0.2)
    assert np.allclose(safe.b_tilde, pred.b - 0.2)
    assert np.allclose(unsafe.b_tilde, pred.b + 0.2)


def test_empty_resized_safe_set_rejected():
    # goal square of side 1 shrunk by 0.5 per face has an empty interior
    goal = predicate_from_vertices(
        "goal", [[8, 4.5], [9, 4.5], [9, 5.5], [8, 5.5]], state_dim=4
    )
    with pytest.raises(EncodingError, match="empty interior"):
        encode(_phi1_scenario(rho=0.5, goal=goal))


def test_compute_bigM_examples():
    box = Box([0, 0], [10, 10])
    # face x <= 1: M covers b - min(a.x) = 1 - 0, plus the unit margin
    pred = Predicate("p", [[1.0, 0.0]], [1.0])
    assert compute_bigM(ResizedPredicate(pred, "safe", 0.0), box) == pytest.approx(2.0)
    # face -x <= 0 on the same box: min of -x is -10
    pred2 = Predicate("p2", [[-1.0, 0.0]], [0.0])
    assert compute_bigM(ResizedPredicate(pred2, "safe", 0.0), box) == pytest.approx(11.0)


def test_compute_bigM_symmetric_box():
    box = Box([-7, -7], [7, 7])
    pred = Predicate("p", [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]], [0, 0, 0, 0])
    assert compute_bigM(ResizedPredicate(pred, "safe", 0.0), box) == pytest.approx(8.0)


def test_compute_bigM_requires_bounded_box():
    pred = Predicate("p", [[1.0, 0.0]], [1.0])
    with pytest.raises(EncodingError):
        compute_bigM(ResizedPredicate(pred, "safe", 0.0), Box([0, 0], [np.inf, 1]))


def test_phi1_model_census():
    enc = encode(_phi1_scenario())
    model = enc.model
    import re

    names = [v.name for v in model.variables]
    assert sum(bool(re.match(r"x\d+_\d+$", n)) for n in names) == 4 * 21
    assert sum(bool(re.match(r"u\d+_\d+$", n)) for n in names) == 2 * 20
    assert sum(bool(re.match(r"s\d+_\d+$", n)) for n in names) == 2 * 20
    # one unsafe occurrence: 4 binaries at each of 21 indices, all present
    assert len(model.binary_ids) == 4 * 21
    # 21 row groups per occurrence, all initially inactive
    assert len(enc.group_rows) == 2 * 21
    for rows in enc.group_rows.values():
        assert all(not model.rows[r].active for r in rows)
    # safe groups have no binaries; unsafe groups carry the cardinality row
    for (occ_id, k), zs in enc.group_z.items():
        polarity = enc.occurrences[occ_id].polarity
        assert (len(zs) == 0) == (polarity == "safe")
        assert len(enc.group_rows[(occ_id, k)]) == (4 if polarity == "safe" else 5)


def test_activation_and_idempotence():
    enc = encode(_phi1_scenario())
    enc.activate(1, 17)
    rows = enc.group_rows[(1, 17)]
    assert all(enc.model.rows[r].active for r in rows)
    enc.activate(1, 17)  # no-op
    assert enc.is_active(1, 17)
    with pytest.raises(EncodingError):
        enc.activate(1, 99)


def test_activate_goal_rows_bind_at_index_17():
    enc = encode(_phi1_scenario())
    enc.activate(1, 17)
    sol = milp.solve_milp(enc.model)
    assert sol.status == "optimal"
    states = enc.extract_states(sol)
    goal = enc.resized[1].as_predicate()
    assert predicate_robustness(states[17], goal) >= -1e-7


def test_point_membership_equivalence_unsafe_groups():
    """Group feasibility over binary z equals geometric non-membership."""
    rng = np.random.default_rng(31)
    box = Box([0, 0], [10, 10])
    mismatches = 0
    for trial in range(60):
        pred = gen.random_polytope(rng, f"p{trial}", dim=2)
        resized = ResizedPredicate(pred, "unsafe", float(rng.uniform(0, 0.4)))
        big_m = compute_bigM(resized, box)
        for _ in range(20):
            x_hat = rng.uniform(0, 10, size=2)
            inside = bool(np.all(pred.A @ x_hat <= resized.b_tilde))
            # brute force over z
            f = pred.faces
            brute_feasible = False
            for assign in itertools.product([0.0, 1.0], repeat=f):
                if sum(assign) > f - 1:
                    continue
                lhs = pred.A @ x_hat + big_m * np.array(assign)
                if np.all(lhs >= resized.b_tilde - 1e-9):
                    brute_feasible = True
                    break
            # MILP group with x fixed
            model = milp.MILPModel()
            xs = [model.add_variable(f"x{d}", x_hat[d], x_hat[d]) for d in range(2)]
            rows, zs = add_unsafe_group(model, xs, resized, big_m, "g", active=True)
            model.set_objective({})
            sol = milp.solve_milp(model)
            milp_feasible = sol.status == "optimal"
            if not (milp_feasible == brute_feasible == (not inside)):
                mismatches += 1
    assert mismatches == 0


def test_safe_group_equivalence():
    rng = np.random.default_rng(32)
    for trial in range(40):
        pred = gen.random_polytope(rng, f"p{trial}", dim=2)
        resized = ResizedPredicate(pred, "safe", 0.1)
        for _ in range(15):
            x_hat = rng.uniform(0, 10, size=2)
            inside = bool(np.all(pred.A @ x_hat <= resized.b_tilde))
            model = milp.MILPModel()
            xs = [model.add_variable(f"x{d}", x_hat[d], x_hat[d]) for d in range(2)]
            add_safe_group(model, xs, resized, "g", active=True)
            model.set_objective({})
            feasible = milp.solve_lp(model).status == "optimal"
            assert feasible == inside


def test_update_predicate_translation():
    enc = encode(_phi1_scenario())
    goal = enc.predicates["goal"]
    shift = np.zeros(4)
    shift[0] = 1.0
    new_b = goal.b + goal.A @ shift
    enc.update_predicate("goal", goal.A, new_b)
    # every goal row's rhs moved by a_i . (1, 0, 0, 0) minus the resize terms
    for k in range(enc.N + 1):
        rows = enc.group_rows[(1, k)]
        for i, rid in enumerate(rows):
            expected = enc._row_resized[1].b_tilde[i]
            assert enc.model.rows[rid].rhs == pytest.approx(expected)
    assert np.allclose(enc.predicates["goal"].b, new_b)


def test_update_predicate_identity_noop():
    enc = encode(_phi1_scenario())
    before = {rid: (dict(r.coeffs), r.rhs) for rid, r in enumerate(enc.model.rows)}
    pred = enc.predicates["unsafe"]
    enc.update_predicate("unsafe", pred.A, pred.b)
    for rid, row in enumerate(enc.model.rows):
        coeffs, rhs = before[rid]
        assert row.rhs == pytest.approx(rhs)
        assert set(row.coeffs) == set(coeffs)
        for vid, c in row.coeffs.items():
            assert c == pytest.approx(coeffs[vid])


def test_update_predicate_face_count_change_rejected():
    enc = encode(_phi1_scenario())
    with pytest.raises(EncodingError, match="face count"):
        enc.update_predicate("goal", np.array([[1.0, 0, 0, 0]]), np.array([5.0]))


def test_update_predicate_enlarges_bigM_monotonically():
    enc = encode(_phi1_scenario())
    m_before = enc.big_m[0]
    small = predicate_from_vertices(
        "unsafe", [[1, 1], [1.5, 1], [1.5, 1.5], [1, 1.5]], state_dim=4
    )
    enc.update_predicate("unsafe", small.A, small.b)
    assert enc.big_m[0] >= m_before


def test_resize_soundness_on_activated_pairs():
    """States satisfying activated safe rows have robustness >= rho_d there."""
    enc = encode(_phi1_scenario(rho=0.5))
    for k in (17, 18, 19, 20):
        enc.activate(1, k)
    sol = milp.solve_milp(enc.model)
    states = enc.extract_states(sol)
    goal_original = enc.predicates["goal"]
    for k in (17, 18, 19, 20):
        assert predicate_robustness(states[k], goal_original) >= 0.5 - 1e-6


def test_interior_radius():
    square = predicate_from_vertices("p", [[0, 0], [2, 0], [2, 2], [0, 2]])
    assert polytope_interior_radius(square) == pytest.approx(1.0)
    halfplane = Predicate("h", [[1.0, 0.0]], [1.0])
    assert polytope_interior_radius(halfplane) == np.inf


def test_initial_state_outside_box_rejected():
    scn = _phi1_scenario()
    scn.x0 = np.array([50.0, 5.0, 0.0, 0.0])
    with pytest.raises(EncodingError):
        encode(scn)
