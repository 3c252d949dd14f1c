import numpy as np
import pytest

from mtlplan import mtl
from mtlplan.robustness import evaluate, evaluate_brute, occurrence_geometry

import gen


def test_parse_phi1_structure():
    f = mtl.parse("(G !unsafe) & (G[8.5,10] goal)")
    assert isinstance(f, mtl.And)
    left, right = f.terms
    assert isinstance(left, mtl.Globally) and left.interval == mtl.UNBOUNDED
    assert isinstance(left.child, mtl.Not) and left.child.child == mtl.Pred("unsafe")
    assert isinstance(right, mtl.Globally)
    assert right.interval == mtl.Interval(8.5, 10.0)
    assert right.child == mtl.Pred("goal")


def test_parse_phi2_nested():
    f = mtl.parse("(G !unsafe) & F[5.5,7.5] (G[0,1.5] goal)")
    assert isinstance(f, mtl.And)
    ev = f.terms[1]
    assert isinstance(ev, mtl.Eventually) and ev.interval == mtl.Interval(5.5, 7.5)
    assert isinstance(ev.child, mtl.Globally)
    assert ev.child.interval == mtl.Interval(0.0, 1.5)


def test_parse_single_predicate():
    assert mtl.parse("p") == mtl.Pred("p")


def test_parse_until_requires_parens_and_interval():
    f = mtl.parse("(a U[1,2] b)")
    assert isinstance(f, mtl.Until)
    assert f.interval == mtl.Interval(1.0, 2.0)
    with pytest.raises(mtl.MTLSyntaxError):
        mtl.parse("(a U b)")


def test_parse_precedence_and_associativity():
    f = mtl.parse("a & b | c & d")
    assert isinstance(f, mtl.Or)
    assert all(isinstance(t, mtl.And) for t in f.terms)
    g = mtl.parse("a -> b -> c")  # right-associative
    assert isinstance(g, mtl.Implies)
    assert isinstance(g.rhs, mtl.Implies)


def test_parse_errors_carry_position():
    with pytest.raises(mtl.MTLSyntaxError) as exc:
        mtl.parse("a &\n& b")
    assert exc.value.line == 2
    with pytest.raises(mtl.MTLSyntaxError):
        mtl.parse("G[2,1] p")  # inverted interval
    with pytest.raises(mtl.MTLSyntaxError):
        mtl.parse("G[1,2")
    with pytest.raises(mtl.MTLSyntaxError):
        mtl.parse("")


def test_reserved_names_rejected():
    with pytest.raises(mtl.MTLSyntaxError):
        mtl.parse("G & p")


def test_nnf_globally_duality():
    f = mtl.Not(mtl.Globally(mtl.Interval(0, 2), mtl.Pred("p")))
    out = mtl.to_nnf(f)
    assert out == mtl.Eventually(mtl.Interval(0, 2), mtl.Not(mtl.Pred("p")))


def test_nnf_de_morgan():
    f = mtl.Not(mtl.And((mtl.Pred("p"), mtl.Pred("q"))))
    assert mtl.to_nnf(f) == mtl.Or((mtl.Not(mtl.Pred("p")), mtl.Not(mtl.Pred("q"))))


def test_nnf_implication_rewrite():
    f = mtl.Implies(mtl.Pred("p"), mtl.Pred("q"))
    assert mtl.to_nnf(f) == mtl.Or((mtl.Not(mtl.Pred("p")), mtl.Pred("q")))


def test_nnf_rejects_negated_until():
    f = mtl.Not(mtl.Until(mtl.Interval(0, 1), mtl.Pred("p"), mtl.Pred("q")))
    with pytest.raises(mtl.UnsupportedFragmentError):
        mtl.to_nnf(f)


def test_nnf_idempotent_on_random_formulas():
    rng = np.random.default_rng(3)
    for _ in range(200):
        f = gen.random_formula(rng, ["a", "b", "c"], depth=4, budget_steps=8, dt=0.5)
        once = mtl.to_nnf(f)
        assert mtl.to_nnf(once) == once


def test_nnf_preserves_robustness():
    rng = np.random.default_rng(4)
    for _ in range(150):
        f = gen.random_formula(rng, ["a", "b"], depth=3, budget_steps=6, dt=0.5)
        nnf = mtl.to_nnf(f)
        by_name = gen.geometry_by_name(rng, nnf)
        traj = gen.random_trajectory(rng, last_index=8, dt=0.5)
        # evaluate both via brute expansion: to_nnf must not change the value
        v1 = evaluate_brute(nnf, traj, occurrence_geometry(nnf, by_name))
        v2 = evaluate(nnf, traj, occurrence_geometry(nnf, by_name)).value
        assert v1 == pytest.approx(v2, abs=1e-9)


def test_horizon_phi1():
    f = mtl.to_nnf(mtl.parse("(G !unsafe) & (G[8.5,10] goal)"))
    assert mtl.horizon(f, 0.5) == 20


def test_horizon_phi2_by_rule():
    # 7.5 + 1.5 = 9 s at dt = 0.5 gives 18 steps
    f = mtl.to_nnf(mtl.parse("(G !unsafe) & F[5.5,7.5] (G[0,1.5] goal)"))
    assert mtl.horizon(f, 0.5) == 18


def test_horizon_bare_predicate():
    assert mtl.horizon(mtl.parse("p"), 0.5) == 0


def test_horizon_unbounded_eventually_rejected():
    with pytest.raises(mtl.HorizonError):
        mtl.horizon(mtl.parse("F p"), 0.5)


def test_horizon_monotone_in_upper_bounds():
    rng = np.random.default_rng(5)
    for _ in range(100):
        hi = float(rng.integers(1, 10)) * 0.5
        widen = hi + 0.5 * float(rng.integers(1, 5))
        inner = mtl.Pred("p")
        f1 = mtl.Globally(mtl.Interval(0, hi), inner)
        f2 = mtl.Globally(mtl.Interval(0, widen), inner)
        assert mtl.horizon(f2, 0.5) >= mtl.horizon(f1, 0.5)


def test_classify_phi1():
    f = mtl.to_nnf(mtl.parse("(G !unsafe) & (G[8.5,10] goal)"))
    occs = mtl.classify_occurrences(f)
    assert [(o.name, o.polarity, o.occurrence_id) for o in occs] == [
        ("unsafe", "unsafe", 0),
        ("goal", "safe", 1),
    ]


def test_classify_same_name_opposite_polarity():
    f = mtl.to_nnf(mtl.And((mtl.Pred("p"), mtl.Not(mtl.Pred("p")))))
    occs = mtl.classify_occurrences(f)
    assert len(occs) == 2
    assert occs[0].polarity == "safe" and occs[1].polarity == "unsafe"
    assert occs[0].occurrence_id == 0 and occs[1].occurrence_id == 1


def test_classify_phi3_three_occurrences():
    f = mtl.to_nnf(mtl.parse("(G !unsafe1) & (G !unsafe2) & (G[17.5,20] goal)"))
    occs = mtl.classify_occurrences(f)
    assert [(o.name, o.polarity) for o in occs] == [
        ("unsafe1", "unsafe"),
        ("unsafe2", "unsafe"),
        ("goal", "safe"),
    ]


def test_format_round_trip():
    rng = np.random.default_rng(6)
    for _ in range(200):
        f = gen.random_formula(rng, ["a", "b", "c"], depth=4, budget_steps=8, dt=0.5)
        text = mtl.format_formula(f)
        assert mtl.parse(text) == f


def test_fragment_detection():
    phi1 = mtl.to_nnf(mtl.parse("(G !u) & (G[8.5,10] g)"))
    phi2 = mtl.to_nnf(mtl.parse("(G !u) & F[5.5,7.5] (G[0,1.5] g)"))
    assert mtl.is_globally_conjunction_fragment(phi1)
    assert not mtl.is_globally_conjunction_fragment(phi2)
