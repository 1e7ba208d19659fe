import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rotbox.trigpoly import (HermitianSymmetryError, TrigPoly, evaluate, extrema,
                             fourier_project, from_complex, level_angles, range_valid,
                             to_complex)

PSTAR = TrigPoly([0.4, 0, 0.35, 0], [0.25, 0, 0.25])
coef = st.floats(-2, 2, allow_nan=False, allow_infinity=False)


@st.composite
def polys(draw, max_degree=6):
    d = draw(st.integers(0, max_degree))
    c = draw(arrays(float, d + 1, elements=coef))
    s = draw(arrays(float, d, elements=coef))
    return TrigPoly(c, s)


def test_evaluate_examples():
    assert evaluate(TrigPoly([0.5, 0.5], [0]), 0.0) == pytest.approx(1.0)
    assert evaluate(PSTAR, 0.0) == pytest.approx(0.75)
    w = TrigPoly([0, 0, 1, 0], [0, 0, 1])
    assert abs(evaluate(w, 3 * np.pi / 10)) < 1e-15


def test_complex_view_examples():
    a = to_complex(TrigPoly([0, 1], [0]))
    assert np.allclose(a, [0.5, 0, 0.5])
    ap = PSTAR.positive_complex()
    assert np.allclose(ap, [0.4, -0.125j, 0.175, -0.125j])
    assert np.allclose(to_complex(TrigPoly.constant(0.0, 3)), 0)


def test_complex_view_grid_agreement():
    th = np.linspace(0, 2 * np.pi, 1000, endpoint=False)
    a = to_complex(PSTAR)
    d = PSTAR.degree
    vals = sum(a[d + k] * np.exp(1j * k * th) for k in range(-d, d + 1))
    assert np.max(np.abs(vals.imag)) < 1e-14
    assert np.max(np.abs(vals.real - evaluate(PSTAR, th))) < 1e-14


def test_from_complex_rejects_asymmetry():
    with pytest.raises(HermitianSymmetryError):
        from_complex(np.array([0.1, 0.5, 0.3]))


def test_extrema_examples():
    sin2 = TrigPoly([0.5, 0, -0.5], [0, 0])
    lo, tlo, hi, thi = extrema(sin2)
    assert lo == pytest.approx(0, abs=1e-12) and hi == pytest.approx(1, abs=1e-12)
    assert min(abs(tlo), abs(tlo - np.pi), abs(tlo - 2 * np.pi)) < 1e-6
    assert min(abs(thi - np.pi / 2), abs(thi - 3 * np.pi / 2)) < 1e-6
    lo, _, hi, _ = extrema(PSTAR)
    assert lo >= 0 and hi <= 1
    assert extrema(TrigPoly.constant(0.3)) == (0.3, 0.0, 0.3, 0.0)


def test_extrema_random_degree_six_against_dense_grid():
    from scipy.optimize import minimize_scalar
    rng = np.random.default_rng(1)
    th = np.linspace(0, 2 * np.pi, 100_000, endpoint=False)
    for _ in range(5):
        p = TrigPoly(rng.normal(size=7), rng.normal(size=6))
        v = evaluate(p, th)
        k = int(np.argmax(v))
        ref = -minimize_scalar(lambda t: -evaluate(p, t), bracket=(th[k - 1], th[k], th[(k + 1) % th.size]),
                               method="golden", tol=1e-12).fun
        assert extrema(p)[2] == pytest.approx(ref, abs=1e-8)


def test_range_valid_examples():
    assert range_valid(PSTAR)
    assert range_valid(TrigPoly.constant(0.5))
    assert not range_valid(TrigPoly([0.5, 0.6], [0]))


def test_fourier_project_examples():
    p = fourier_project(lambda t: np.cos(3 * t), 3)
    assert np.allclose(p.flat(), [0, 0, 0, 0, 0, 1, 0], atol=1e-12)
    assert fourier_project(lambda t: 1.0 + 0 * t, 2).c[0] == pytest.approx(1.0)


def test_fourier_project_boxcar_matches_closed_form():
    n, t0 = 4.0, 0.7

    def box(t):
        d = np.angle(np.exp(1j * (t - t0)))
        return (np.abs(d) <= 1 / n).astype(float)

    # smooth the indicator's jump out of the comparison by using scipy quad
    from scipy.integrate import quad
    for k in (1, 2, 3):
        re = quad(lambda t: np.cos(k * t), t0 - 1 / n, t0 + 1 / n)[0] / (2 * np.pi)
        im = -quad(lambda t: np.sin(k * t), t0 - 1 / n, t0 + 1 / n)[0] / (2 * np.pi)
        closed = np.exp(-1j * k * t0) * np.sin(k / n) / (k * np.pi)
        assert re + 1j * im == pytest.approx(closed, abs=1e-12)
    p = fourier_project(box, 3, tol=1e-3, max_nodes=2 ** 18)
    a = p.positive_complex()
    assert a[1] == pytest.approx(np.exp(-1j * t0) * np.sin(1 / n) / np.pi, abs=1e-3)


def test_json_round_trip_and_schema():
    obj = PSTAR.to_json()
    assert obj["two_j"] == 3 and len(obj["c"]) == 4 and len(obj["s"]) == 3
    assert TrigPoly.from_json(json.dumps(obj)).allclose(PSTAR, atol=0)
    with pytest.raises(ValueError):
        TrigPoly.from_json({"two_j": 2, "c": [1, 0, 0, 0], "s": [0, 0, 0]})


def test_level_angles():
    sin2 = TrigPoly([0.5, 0, -0.5], [0, 0])
    assert np.allclose(np.sort(level_angles(sin2, 1.0)), [np.pi / 2, 3 * np.pi / 2], atol=1e-6)


@given(polys(), st.floats(-10, 10))
def test_periodic(p, t):
    assert evaluate(p, t) == pytest.approx(evaluate(p, t + 2 * np.pi), abs=1e-9)


@given(polys())
def test_complex_round_trip(p):
    q = from_complex(to_complex(p))
    assert np.max(np.abs(q.flat() - p.pad(q.degree).flat())) <= 1e-14


@given(polys(4), polys(4), st.floats(0, 1), st.floats(-7, 7))
def test_linearity(p, q, lam, t):
    mix = p * lam + q * (1 - lam)
    assert evaluate(mix, t) == pytest.approx(lam * evaluate(p, t) + (1 - lam) * evaluate(q, t), abs=1e-9)


@given(polys(), st.integers(0, 2 ** 32 - 1))
def test_extrema_bracket_random_angles(p, seed):
    th = np.random.default_rng(seed).uniform(0, 2 * np.pi, 10_000)
    v = evaluate(p, th)
    lo, _, hi, _ = extrema(p)
    scale = 1 + np.max(np.abs(p.flat()))
    assert lo <= v.min() + 1e-10 * scale and hi >= v.max() - 1e-10 * scale
