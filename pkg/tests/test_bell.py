import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rotbox import bell
from rotbox.trigpoly import TrigPoly, evaluate, extrema


def cos_box(t0=0.0, r=0.5):
    return TrigPoly([0.5, r * np.cos(t0)], [r * np.sin(t0)])


def test_is_unbiased_examples():
    assert bell.is_unbiased(cos_box())
    assert bell.is_unbiased(TrigPoly.constant(0.5, 1))
    beta = np.pi / 3
    # (1 + cos a)(1 + cos b)/4 at fixed b
    biased = TrigPoly([(1 + np.cos(beta)) / 4, (1 + np.cos(beta)) / 4], [0])
    assert not bell.is_unbiased(biased)
    with pytest.raises(bell.DegreeViolation):
        bell.is_unbiased(TrigPoly.constant(0.5, 2))


def test_unbiased_equivalent_to_antipodal_symmetry():
    rng = np.random.default_rng(0)
    for _ in range(50):
        p = TrigPoly([rng.choice([0.5, rng.uniform(0.3, 0.7)]), rng.normal() * 0.2], [rng.normal() * 0.2])
        t = rng.uniform(0, 2 * np.pi, 20)
        symmetric = np.allclose(evaluate(p, t), 1 - evaluate(p, t + np.pi), atol=1e-12)
        assert bell.is_unbiased(p) == symmetric


def test_product_behavior_conditionals_recover_factors():
    pa, pb = cos_box(0.3, 0.4), cos_box(1.2, 0.5)
    P = bell.product_behavior(pa, pb)
    chk = P.checks()
    assert chk["nonnegative"] and chk["no_signalling"] and chk["normalization_error"] < 1e-15
    for t in (0.0, 1.0, 2.5):
        assert bell.conditional_box(P, "B", 1, t).allclose(pa, atol=1e-12)
        assert bell.conditional_box(P, "B", -1, t).allclose(pa, atol=1e-12)
        assert bell.conditional_box(P, "A", 1, t).allclose(pb, atol=1e-12)
    with pytest.raises(bell.DegreeViolation):
        bell.product_behavior(TrigPoly.constant(0.5, 2), pb)


def test_zero_marginal_and_party_errors():
    P = bell.product_behavior(cos_box(), cos_box())
    with pytest.raises(bell.ZeroMarginal):
        bell.conditional_box(P, "B", 1, np.pi)  # 1/2 + cos(pi)/2 = 0
    with pytest.raises(ValueError):
        bell.conditional_box(P, "C", 1, 0.0)


def test_pr_wiring():
    r = bell.pr_wiring_report()
    assert r["no_signalling"] and r["nonnegative"] and r["normalization_error"] < 1e-15
    assert r["pr_table_error"] == 0.0
    assert r["marginal_error"] < 1e-15
    assert r["conditional_degree_ok"]
    assert r["c0_error"] <= 1e-12
    assert not r["unbiased"]


def test_pr_table_values():
    P = bell.pr_wiring_behavior()
    for a, b, x, y in itertools.product(bell.OUTCOMES, bell.OUTCOMES, (0, 1), (0, 1)):
        assert P(a, b, bell.PR_ANGLES[x], bell.PR_ANGLES[y]) == pytest.approx(
            0.5 * ((1 - a * b) // 2 == x * y), abs=1e-15)


def test_pr_conditional_is_twice_joint():
    P = bell.pr_wiring_behavior()
    for beta in (0.0, 0.9, np.pi):
        q = bell.conditional_box_outcome(P, "B", -1, beta, 1)
        alpha = np.linspace(0, 2 * np.pi, 17)
        assert np.allclose(evaluate(q, alpha), 2 * P(1, -1, alpha, beta), atol=1e-14)
    assert bell.conditional_box_outcome(P, "B", -1, 0.0, 1).c[0] == pytest.approx(0.5)
    assert bell.conditional_box_outcome(P, "B", -1, np.pi, 1).c[0] == pytest.approx(0.0, abs=1e-15)


@st.composite
def behaviors(draw):
    """Random no-signalling mixtures of product behaviors."""
    rng = np.random.default_rng(draw(st.integers(0, 2 ** 32 - 1)))
    k = int(rng.integers(1, 4))
    w = rng.dirichlet(np.ones(k))
    coeffs = {key: np.zeros((3, 3)) for key in itertools.product(bell.OUTCOMES, bell.OUTCOMES)}
    for wi in w:
        P = bell.product_behavior(cos_box(rng.uniform(0, 6), rng.uniform(0, 0.5)),
                                  cos_box(rng.uniform(0, 6), rng.uniform(0, 0.5)))
        for key in coeffs:
            coeffs[key] += wi * P.coeffs[key]
    return bell.Behavior(coeffs)


@given(behaviors(), st.floats(0, 2 * np.pi), st.sampled_from(["A", "B"]), st.sampled_from([1, -1]))
def test_conditional_boxes_are_local_boxes(P, angle, party, outcome):
    assert P.checks()["no_signalling"]
    if bell.marginal(P, party, outcome, angle) <= 1e-6:
        return
    q = bell.conditional_box(P, party, outcome, angle)
    assert q.degree <= 1
    lo, _, hi, _ = extrema(q)
    assert lo >= -1e-9 and hi <= 1 + 1e-9


def test_nagata_examples():
    r = bell.nagata_inequality(np.array([1.0, 0, 0]))
    assert r.lhs == pytest.approx(np.pi) and r.t_max == pytest.approx(1) and r.rhs == pytest.approx(4)
    assert not r.violated
    T = np.zeros((3, 3))
    T[0, 0] = T[1, 1] = 1
    r = bell.nagata_inequality(T)
    assert r.lhs == pytest.approx(2 * np.pi ** 2) and r.t_max == pytest.approx(1, abs=1e-9)
    assert r.violated
    r = bell.nagata_inequality(np.zeros((3, 3, 3)))
    assert r.lhs == 0 and not r.violated


def test_nagata_validation():
    with pytest.raises(ValueError):
        bell.nagata_inequality(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        bell.nagata_inequality(np.full((3,), 1.5))


@given(st.integers(1, 3), st.integers(0, 2 ** 32 - 1))
def test_nagata_optimizer_beats_grid(n, seed):
    T = np.random.default_rng(seed).uniform(-1, 1, size=(3,) * n)
    r = bell.nagata_inequality(T, seed=seed)
    assert r.t_max >= r.grid_check - 1e-12
    assert bell.correlation(T, r.argmax) == pytest.approx(r.t_max, abs=1e-9)


def test_nagata_many_parties_deterministic():
    T = np.random.default_rng(1).uniform(-1, 1, size=(3,) * 4)
    a, b = bell.nagata_inequality(T, seed=3), bell.nagata_inequality(T, seed=3)
    assert a.t_max == b.t_max and a.grid_check is None
