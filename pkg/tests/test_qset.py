import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rotbox import qset, rset
from rotbox.trigpoly import TrigPoly, evaluate, extrema

INV_SQRT3 = 1 / np.sqrt(3)
TH = np.linspace(0, 2 * np.pi, 1000, endpoint=False)


def grid_error(r, p, outcome=0):
    return float(np.max(np.abs(r.probability(outcome, TH) - evaluate(p, TH))))


def random_realization(rng, two_j, outcomes=2):
    dim = two_j + 1
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    psi /= np.linalg.norm(psi)
    # random POVM from a random unitary's columns grouped into outcomes
    g = rng.normal(size=(dim * outcomes, dim)) + 1j * rng.normal(size=(dim * outcomes, dim))
    q, _ = np.linalg.qr(g)  # isometry: q^dag q = I
    blocks = np.array_split(np.arange(dim * outcomes), outcomes)
    povm = [q[b].conj().T @ q[b] for b in blocks]
    return qset.QuantumRealization(psi, povm, two_j)


# ---------------------------------------------------------------------------
# Born rule


def test_born_sin_squared():
    psi = np.array([1, 0, -1]) / np.sqrt(2)
    phi = np.array([1, 0, 1]) / np.sqrt(2)
    r = qset.binary_realization(psi, np.outer(phi, phi))
    p = qset.born_polynomial(r)
    assert p.allclose(qset.sin2(), atol=1e-12)
    assert grid_error(r, p) < 1e-12


def test_born_sin4_half():
    r = qset.r1_quantum_realize(qset.sin4_half())
    assert np.allclose(np.abs(r.psi), np.array([1, np.sqrt(2), 1]) / 2, atol=1e-12)
    assert qset.born_polynomial(r).allclose(qset.sin4_half(), atol=1e-12)


def test_identity_effect_gives_one():
    r = qset.QuantumRealization(np.array([0.6, 0.8j, 0]), [np.eye(3)], 2)
    assert qset.born_polynomial(r).allclose(TrigPoly.constant(1.0, 2), atol=1e-14)


def test_realization_validation():
    with pytest.raises(qset.RealizationError):
        qset.QuantumRealization(np.array([1, 1]), [np.eye(2)]).validate()
    with pytest.raises(qset.RealizationError):
        qset.QuantumRealization(np.array([1, 0]), [np.eye(2) * 0.5]).validate()
    with pytest.raises(qset.RealizationError):
        qset.QuantumRealization(np.array([1, 0]), [np.diag([2.0, 0.0]), np.diag([-1.0, 1.0])]).validate()


def test_realization_json():
    r = qset.r1_quantum_realize(qset.sin2())
    obj = json.loads(json.dumps(r.to_json()))
    assert obj["two_j"] == 2 and len(obj["povm"]) == 2


def test_schur_pair_realization():
    rng = np.random.default_rng(0)
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    v /= np.linalg.norm(v)
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    w, u = np.linalg.eigh((g + g.conj().T) / 2)
    E = (u * np.clip(w, 0, 1)) @ u.conj().T
    pair = qset.SchurPair(np.outer(v, v.conj()), E)
    assert np.linalg.eigvalsh(pair.Q)[0] >= -1e-12
    r = pair.realization()
    assert grid_error(r, pair.polynomial()) < 1e-12


@given(st.integers(0, 4), st.integers(2, 4), st.integers(0, 2 ** 32 - 1))
def test_born_outcomes_sum_to_one(two_j, outcomes, seed):
    r = random_realization(np.random.default_rng(seed), two_j, outcomes)
    r.validate(1e-9)
    total = sum((qset.born_polynomial(r, a) for a in range(outcomes)[1:]), qset.born_polynomial(r, 0))
    assert np.max(np.abs(total.flat() - TrigPoly.constant(1.0, two_j).flat())) <= 1e-12
    for a in range(outcomes):
        assert grid_error(r, qset.born_polynomial(r, a), a) < 1e-12


@given(st.integers(0, 3), st.integers(0, 2 ** 32 - 1))
def test_lift_spin_keeps_statistics(two_j, seed):
    r = random_realization(np.random.default_rng(seed), two_j)
    big = qset.lift_spin(r)
    big.validate(1e-9)
    assert big.two_j == two_j + 1
    p, q = qset.born_polynomial(r), qset.born_polynomial(big)
    assert np.max(np.abs(q.flat() - p.pad(two_j + 1).flat())) <= 1e-12


def test_lift_examples():
    r = qset.r1_quantum_realize(qset.sin2())
    assert grid_error(qset.lift_spin(r), qset.sin2()) < 1e-12
    trivial = qset.QuantumRealization(np.array([1.0]), [np.eye(1)], 0)
    assert qset.born_polynomial(qset.lift_spin(trivial)).allclose(TrigPoly.constant(1.0, 1), atol=1e-14)


# ---------------------------------------------------------------------------
# see-saw and the gap


def test_seesaw_c2_s3():
    res = qset.seesaw(rset.direction(3, c2=1, s3=1), 3, restarts=20, seed=0)
    assert abs(res.value - INV_SQRT3) < 1e-5
    assert max(res.restart_values) <= INV_SQRT3 + 1e-9
    # every iterate is a genuine quantum point: the pair realizes its value
    p = res.polynomial()
    assert p.coefficient("c", 2) + p.coefficient("s", 3) == pytest.approx(res.value, abs=1e-12)
    assert grid_error(res.pair.realization(), p) < 1e-9


def test_seesaw_constant_direction():
    for two_j in (0, 2, 3):
        assert qset.seesaw(rset.direction(two_j, c0=1), two_j, restarts=3).value == pytest.approx(1, abs=1e-12)


def test_seesaw_spin_two():
    res = qset.seesaw(rset.direction(4, c3=1, s4=1), 4, restarts=20, seed=0)
    assert INV_SQRT3 - 1e-4 <= res.value <= INV_SQRT3 + 1e-6


def test_seesaw_trace_monotone_and_deterministic():
    n = np.random.default_rng(3).normal(size=7)
    a = qset.seesaw(n, 3, restarts=4, seed=11, record=True)
    b = qset.seesaw(n, 3, restarts=4, seed=11, workers=4)
    assert a.value == b.value and a.best_restart == b.best_restart
    by_restart = {}
    for i, it, half, full in a.trace:
        by_restart.setdefault(i, []).extend([half, full])
    for vals in by_restart.values():
        assert all(y >= x - 1e-10 * (1 + abs(x)) for x, y in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        qset.seesaw(n, 3, restarts=0)


def test_seesaw_tie_break_lowest_index():
    res = qset.seesaw(rset.direction(2, c0=1), 2, restarts=5, seed=0)
    assert res.best_restart == 0


@pytest.mark.parametrize("two_j", [3, 4, 5, 6])
def test_analytic_gap_bound(two_j):
    g = qset.analytic_gap_bound(two_j)
    assert g.beta == INV_SQRT3
    assert abs(g.checks["trace_M_rho"] - INV_SQRT3) <= 1e-12
    assert g.checks["E_min_eig"] >= -1e-12 and g.checks["E_max_eig"] <= 1 + 1e-12
    assert abs(g.checks["born_value"] - INV_SQRT3) <= 1e-12
    assert g.E.shape == (two_j + 1, two_j + 1)


def test_gap_bound_needs_spin_three_halves():
    with pytest.raises(ValueError):
        qset.analytic_gap_bound(2)


def test_gap_at_three_halves():
    r = rset.optimize_direction(rset.direction(3, c2=1, s3=1), 3).value
    q = qset.seesaw(rset.direction(3, c2=1, s3=1), 3, restarts=20).value
    assert r - q >= 0.047


def test_polytope():
    pm = qset.polytope_max()
    assert pm.value == pytest.approx(2 / 3, abs=1e-12)
    assert np.allclose(pm.point, [1 / 6, 1 / 12, 1 / 6], atol=1e-12)
    assert qset.polytope_objective(0, 0, 0) == 0
    val, _ = qset.polytope_grid_max(5e-3)
    assert val <= 2 / 3 + 1e-12


# ---------------------------------------------------------------------------
# spin-1 faces


def test_face_examples():
    assert [p.allclose(qset.sin2(), 1e-12) for p in qset.r1_face_extremals(0, np.pi / 2)] == [True]
    assert qset.r1_face_extremals(0, 3 * np.pi / 2)[0].allclose(qset.sin2(), 1e-12)
    pair = qset.r1_face_extremals(0, np.pi)
    other = TrigPoly([5 / 8, -1 / 2, -1 / 8], [0, 0])  # (1 - cos)(3 + cos)/4
    assert len(pair) == 2
    assert any(p.allclose(qset.sin4_half(), 1e-12) for p in pair)
    assert any(p.allclose(other, 1e-12) for p in pair)
    with pytest.raises(qset.EmptyFace):
        qset.r1_face_extremals(0, np.pi / 4)


@pytest.mark.parametrize("t1", np.linspace(np.pi / 2, 3 * np.pi / 2, 9))
@pytest.mark.parametrize("t0", [0.0, 0.7, 4.0])
def test_face_extremals_touch_zero_and_one(t0, t1):
    for p in qset.r1_face_extremals(t0, t0 + t1):
        lo, _, hi, _ = extrema(p)
        assert lo == pytest.approx(0, abs=1e-9) and hi == pytest.approx(1, abs=1e-9)
        assert abs(evaluate(p, t0)) < 1e-9 and abs(evaluate(p, t0 + t1) - 1) < 1e-9
        r = qset.r1_quantum_realize(p)
        assert grid_error(r, p) < 1e-9


def test_general_case_three_quarter_pi():
    p = qset.general_extremal(3 * np.pi / 4)
    assert grid_error(qset.r1_quantum_realize(p), p) < 1e-9


def test_not_extremal():
    with pytest.raises(qset.NotExtremalForm):
        qset.r1_quantum_realize(TrigPoly.constant(0.5, 2))
    with pytest.raises(qset.NotExtremalForm):
        qset.r1_quantum_realize(TrigPoly([0.5, 0, 0, 0.5], [0, 0, 0]))


# ---------------------------------------------------------------------------
# large spin


def test_approx_constant_is_exact():
    a = qset.approximate_continuous(lambda t: 0.5 + 0 * t, 3, 2)
    assert a.sup_error < 1e-12 and a.clipping < 1e-12


def test_approx_tail_matches_sinc_coefficients():
    J, n = 6, 3.0
    j = np.arange(1, 20000)
    tail = 2 * np.sum((n / np.pi) * (np.sin(j / n) / j) ** 2 * (j > J))
    assert qset.boxcar_tail(J, n) == pytest.approx(tail, abs=1e-4)
    # Parseval: the full boxcar has unit norm
    assert qset.boxcar_tail(200000, n) < 1e-5


def test_approx_cosine_and_monotone():
    f = lambda t: (1 + np.cos(t)) / 2  # noqa: E731
    a5 = qset.approximate_continuous(f, 5, 10)
    a20 = qset.approximate_continuous(f, 20, 10)
    assert a20.bound <= a5.bound
    for a in (a5, a20):
        assert a.sup_error <= a.bound + a.averaging_error
        a.realization.validate(1e-9)
    # the averaging error of a cosine over a window of half-width 1/n
    assert a5.averaging_error == pytest.approx((1 - 10 * np.sin(1 / 10)) / 2, rel=1e-3)


def test_approx_preconditions():
    with pytest.raises(ValueError):
        qset.approximate_continuous(np.cos, 0, 2)
    with pytest.raises(ValueError):
        qset.approximate_continuous(np.cos, 2, 0.5)
