import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rotbox import sdp
from rotbox.fixtures import get_fixture
from rotbox.rset import membership_problem
from rotbox.trigpoly import TrigPoly


def rand_herm(rng, n):
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (g + g.conj().T) / 2


def test_lambda_max_diag():
    sol = sdp.solve(sdp.max_eigen_problem(np.diag([3.0, 1.0, -1.0])))
    assert sol.status == sdp.OPTIMAL
    assert sol.objective == pytest.approx(3.0, abs=1e-8)
    rep = sdp.verify_solution(sdp.max_eigen_problem(np.diag([3.0, 1.0, -1.0])), sol)
    assert rep["passed"]


def test_scalar_block():
    # maximize x s.t. x + s = 1 with x, s >= 0 as 1x1 blocks
    prob = sdp.SDPProblem([1, 1], [np.ones((1, 1)), None],
                          [([np.ones((1, 1)), np.ones((1, 1))], 1.0)])
    assert sdp.solve(prob).objective == pytest.approx(1.0, abs=1e-8)


def test_pstar_feasibility():
    p = TrigPoly([0.4, 0, 0.35, 0], [0.25, 0, 0.25])
    prob = membership_problem(p, 3)
    sol = sdp.solve(prob)
    assert sol.status == sdp.OPTIMAL
    assert sdp.verify_solution(prob, sol.X, tol=1e-7)["passed"]


def test_verify_external_certificate_and_flipped_sign():
    fx = get_fixture("q32")
    Q, S = fx.certificate.Q, fx.certificate.S
    prob = membership_problem(fx.poly, 3)
    good = sdp.verify_solution(prob, [Q, S], tol=1e-9)
    assert good["passed"] and min(good["min_eigenvalues"]) >= -1e-9
    Qbad = Q.copy()
    Qbad[0, 1] = -Qbad[0, 1]
    Qbad[1, 0] = -Qbad[1, 0]
    assert not sdp.verify_solution(prob, [Qbad, S], tol=1e-9)["passed"]


def test_identity_trace_constraint():
    n = 4
    prob = sdp.SDPProblem([n], None, [([np.eye(n)], float(n))], sense="feasibility")
    assert sdp.verify_solution(prob, [np.eye(n)])["passed"]


def test_infeasible_returns_farkas_ray():
    prob = sdp.SDPProblem([2], None, [([np.eye(2)], -1.0)], sense="feasibility")
    sol = sdp.solve(prob)
    assert sol.status == sdp.INFEASIBLE
    assert sdp.verify_farkas(prob, sol.farkas)["passed"]


def test_affinely_inconsistent():
    E = np.diag([1.0, 0.0])
    prob = sdp.SDPProblem([2], None, [([E], 1.0), ([E], 2.0)], sense="feasibility")
    sol = sdp.solve(prob)
    assert sol.status == sdp.INFEASIBLE and sdp.verify_farkas(prob, sol.farkas)["passed"]


def test_maximize_on_infeasible_problem_reports_infeasible():
    prob = sdp.SDPProblem([2], [np.eye(2)], [([np.eye(2)], -1.0)])
    assert sdp.solve(prob).status == sdp.INFEASIBLE


def test_tolerance_and_shape_validation():
    with pytest.raises(ValueError):
        sdp.solve(sdp.max_eigen_problem(np.eye(2)), tol=1e-2)
    with pytest.raises(ValueError):
        sdp.SDPProblem([2], [np.array([[0, 1], [0, 0]])], [])
    with pytest.raises(ValueError):
        sdp.SDPProblem([], [], [])


def test_json_round_trip():
    rng = np.random.default_rng(3)
    prob = sdp.max_eigen_problem(rand_herm(rng, 3))
    back = sdp.SDPProblem.from_json(json.loads(json.dumps(prob.to_json())))
    s1, s2 = sdp.solve(prob), sdp.solve(back)
    assert s1.objective == s2.objective
    json.dumps(s1.to_json())


def test_deterministic():
    rng = np.random.default_rng(4)
    prob = sdp.max_eigen_problem(rand_herm(rng, 6))
    a, b = sdp.solve(prob), sdp.solve(prob)
    assert a.objective == b.objective and np.array_equal(a.X[0], b.X[0])


def test_weak_duality_random():
    rng = np.random.default_rng(5)
    for _ in range(20):
        n = int(rng.integers(2, 7))
        C = rand_herm(rng, n)
        A = rand_herm(rng, n)
        prob = sdp.SDPProblem([n], [C], [([np.eye(n)], 1.0), ([A], float(np.trace(A).real / n))])
        sol = sdp.solve(prob)
        assert sol.status == sdp.OPTIMAL
        assert sol.dual_bound >= sol.objective - 1e-8
        assert sdp.verify_solution(prob, sol, tol=1e-7)["passed"]


@given(st.integers(1, 8), st.integers(0, 2 ** 32 - 1))
def test_embedding_doubles_spectrum(n, seed):
    H = rand_herm(np.random.default_rng(seed), n)
    ev = np.linalg.eigvalsh(H)
    emb = np.linalg.eigvalsh(sdp.embed(H))
    assert np.allclose(np.sort(np.repeat(ev, 2)), emb, atol=1e-10)
    assert np.allclose(sdp.unembed(sdp.embed(H)), H)


@given(st.integers(1, 10), st.integers(0, 2 ** 32 - 1))
def test_lambda_max_property(n, seed):
    H = rand_herm(np.random.default_rng(seed), n)
    sol = sdp.solve(sdp.max_eigen_problem(H))
    assert sol.objective == pytest.approx(np.linalg.eigvalsh(H)[-1], abs=1e-7)
