"""The spin-3/2 sign-guessing game and the two-setting correlation sets.

The referee draws theta with density mu = |w| / n, w = cos 2t + sin 3t, and the
player must guess the sign of w(theta).  For a box p the success probability
is 1/2 + (pi/n)(c_2 + s_3).
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import rset
from .trigpoly import TrigPoly, evaluate, extrema, level_angles

log = logging.getLogger(__name__)

TABLE_SIZE = 2 ** 16


class MembershipFailure(ValueError):
    pass


class PreconditionFailure(ValueError):
    pass


def _antiderivative(t):
    return np.sin(2 * t) / 2 - np.cos(3 * t) / 3


@dataclass
class GameSpec:
    n: float = field(default_factory=lambda: 5 / 3 * np.sqrt(5 + 2 * np.sqrt(5)))
    weight: TrigPoly = field(default_factory=lambda: TrigPoly([0, 0, 1, 0], [0, 0, 1]))
    # sign changes of w on (0, 2 pi); w also touches 0 at 3pi/2 without changing sign
    breaks: tuple = (3 * np.pi / 10, 7 * np.pi / 10, 11 * np.pi / 10, 19 * np.pi / 10)

    @property
    def positive_region(self):
        b = self.breaks
        return [(0.0, b[0]), (b[1], b[2]), (b[3], 2 * np.pi)]

    def mu(self, theta):
        return np.abs(evaluate(self.weight, theta)) / self.n

    def in_positive(self, theta):
        return evaluate(self.weight, theta) > 0

    def cdf(self, theta):
        """Exact cumulative distribution of mu on [0, 2 pi]."""
        theta = np.asarray(theta, dtype=float)
        edges = np.concatenate([[0.0], self.breaks, [2 * np.pi]])
        signs = [1, -1, 1, -1, 1]
        out = np.zeros_like(theta)
        for (a, b), s in zip(zip(edges[:-1], edges[1:]), signs):
            hi = np.clip(theta, a, b)
            out += s * (_antiderivative(hi) - _antiderivative(a))
        return out / self.n

    def checks(self) -> dict:
        from scipy.integrate import quad
        pts = list(self.breaks) + [1.5 * np.pi]
        total = quad(self.mu, 0, 2 * np.pi, points=pts, limit=200, epsabs=1e-13)[0]
        plus = sum(quad(self.mu, a, b, epsabs=1e-13)[0] for a, b in self.positive_region)
        roots = [float(evaluate(self.weight, t)) for t in self.breaks]
        return {"normalization": total, "positive_mass": plus,
                "cdf_end": float(self.cdf(2 * np.pi)), "w_at_breaks": max(map(abs, roots))}


GAME = GameSpec()


def game_success(p: TrigPoly, check: bool = True, spec: GameSpec = GAME) -> float:
    if p.degree > 3:
        raise MembershipFailure("game boxes have degree at most 3")
    if check and not rset.membership(p.pad(3), 3).feasible:
        raise MembershipFailure("box is not in R_{3/2}")
    return 0.5 + np.pi / spec.n * (p.coefficient("c", 2) + p.coefficient("s", 3))


def success_from_value(value: float, spec: GameSpec = GAME) -> float:
    """Success probability for a box with c_2 + s_3 = value."""
    return 0.5 + np.pi / spec.n * value


class AngleSampler:
    """Inverse-CDF sampler of mu from a 2^16-point table."""

    def __init__(self, spec: GameSpec = GAME, size: int = TABLE_SIZE):
        self.grid = np.linspace(0.0, 2 * np.pi, size)
        self.table = spec.cdf(self.grid)
        self.table[-1] = 1.0

    def __call__(self, rng, count: int) -> np.ndarray:
        u = rng.random(count)
        return np.interp(u, self.table, self.grid)


def _box_function(box):
    from .gpt import GPTEffect, omega
    from .qset import QuantumRealization
    if isinstance(box, TrigPoly):
        return lambda t: evaluate(box, t)
    if isinstance(box, QuantumRealization):
        return lambda t: box.probability(0, t)
    if isinstance(box, tuple) and len(box) == 2:
        state_fn, effect = box  # (angle -> GPT state, GPTEffect or vector)
        e = effect.e if isinstance(effect, GPTEffect) else np.asarray(effect, float)
        return lambda t: np.array([e @ state_fn(x) for x in np.atleast_1d(t)])
    if callable(box):
        return box
    raise TypeError("unsupported box type")


@dataclass
class MonteCarloResult:
    empirical: float
    stderr: float
    trials: int
    positive_fraction: float


def game_monte_carlo(box, trials: int, seed: int = 0, shards: int = 8,
                     workers: int = 1, spec: GameSpec = GAME) -> MonteCarloResult:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    prob = _box_function(box)
    sampler = AngleSampler(spec)
    shards = max(1, min(shards, trials))
    sizes = [trials // shards + (i < trials % shards) for i in range(shards)]
    seqs = np.random.SeedSequence(seed).spawn(shards)

    def run(i):
        rng = np.random.default_rng(seqs[i])
        theta = sampler(rng, sizes[i])
        plus = spec.in_positive(theta)
        p = np.clip(prob(theta), 0.0, 1.0)
        guess_plus = rng.random(sizes[i]) < p
        return int(np.sum(guess_plus == plus)), int(np.sum(plus))

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(run, range(shards)))
    else:
        parts = [run(i) for i in range(shards)]
    wins = sum(w for w, _ in parts)
    pos = sum(q for _, q in parts)
    est = wins / trials
    return MonteCarloResult(est, float(np.sqrt(max(est * (1 - est), 1e-300) / trials)),
                            trials, pos / trials)


# ---------------------------------------------------------------------------
# two settings


def delta(two_j: int, alpha: float) -> float:
    ja = abs(two_j * alpha / 2)
    return float(np.cos(ja)) if ja < np.pi / 2 else 0.0


@dataclass
class TwoSettingBoundary:
    lower: float
    upper: float
    delta: float


def _gamma(d):
    return float(np.arccos(np.clip(d, 0.0, 1.0)))


def two_setting_quantum_boundary(two_j: int, alpha: float, e1: float) -> TwoSettingBoundary:
    """Range of E2 allowed together with E1.

    Writing E1 = cos 2u, E2 = cos 2v with u, v in [0, pi/2], the defining
    inequality reads cos(u - v) >= delta, i.e. |u - v| <= arccos(delta).
    """
    if not -1.0 <= e1 <= 1.0:
        raise ValueError("E1 must lie in [-1, 1]")
    d = delta(two_j, alpha)
    g = _gamma(d)
    u = 0.5 * np.arccos(e1)
    lo = float(np.cos(2 * min(np.pi / 2, u + g)))
    hi = float(np.cos(2 * max(0.0, u - g)))
    return TwoSettingBoundary(lo, hi, d)


def in_two_setting_region(two_j, alpha, e1, e2, tol=1e-12) -> bool:
    d = delta(two_j, alpha)
    lhs = 0.5 * (np.sqrt(1 + e1) * np.sqrt(1 + e2) + np.sqrt(1 - e1) * np.sqrt(1 - e2))
    return bool(lhs >= d - tol)


def two_setting_support(two_j: int, alpha: float, w) -> float:
    """max w1 E1 + w2 E2 over the closed-form region (1-D search over E1)."""
    w1, w2 = map(float, w)
    g = _gamma(delta(two_j, alpha))

    def best(u):
        lo, hi = max(0.0, u - g), min(np.pi / 2, u + g)
        v = lo if w2 >= 0 else hi
        return w1 * np.cos(2 * u) + w2 * np.cos(2 * v)

    us = np.linspace(0, np.pi / 2, 4001)
    vals = np.array([best(u) for u in us])
    k = int(np.argmax(vals))
    a, b = us[max(k - 1, 0)], us[min(k + 1, us.size - 1)]
    if b > a:
        r = minimize_scalar(lambda u: -best(u), bounds=(a, b), method="bounded",
                            options={"xatol": 1e-12})
        return float(max(vals[k], -r.fun))
    return float(vals[k])


def two_setting_direction(two_j: int, alpha: float, w) -> tuple:
    """Direction n on flat coefficients with w.E = 2 n.flat(p) - (w1 + w2)."""
    w1, w2 = map(float, w)
    n = np.zeros(2 * two_j + 1)
    n[0] = w1 + w2
    k = np.arange(1, two_j + 1)
    n[1::2] = w1 + w2 * np.cos(k * alpha)
    n[2::2] = w2 * np.sin(k * alpha)
    return n, w1 + w2


def two_setting_seesaw_check(two_j: int, alpha: float, w, restarts: int = 10,
                             seed: int = 0) -> dict:
    from .qset import seesaw
    n, off = two_setting_direction(two_j, alpha, w)
    res = seesaw(n, two_j, restarts=restarts, seed=seed)
    quantum = 2 * res.value - off
    closed = two_setting_support(two_j, alpha, w)
    return {"seesaw": float(quantum), "closed_form": closed,
            "difference": float(abs(quantum - closed)), "delta": delta(two_j, alpha)}


def randomness_curve(two_j: int, alpha: float, num: int = 101) -> list:
    rows = []
    for e1 in np.linspace(-1, 1, num):
        b = two_setting_quantum_boundary(two_j, alpha, float(e1))
        rows.append((float(e1), b.lower, b.upper))
    return rows


# ---------------------------------------------------------------------------
# distance between a zero and a one


def _circ(a, b):
    d = abs((a - b) % (2 * np.pi))
    return min(d, 2 * np.pi - d)


def min_distinguish_angle(p: TrigPoly, two_j: int, tol: float = 1e-9) -> dict:
    if p.degree > two_j:
        raise PreconditionFailure("degree exceeds 2J")
    lo, tlo, hi, thi = extrema(p)
    if abs(lo) > tol or abs(hi - 1) > tol:
        raise PreconditionFailure(f"need min 0 and max 1, got [{lo:.3g}, {hi:.3g}]")
    zeros = list(level_angles(p, 0.0, 1e-7)) or [tlo]
    ones = list(level_angles(p, 1.0, 1e-7)) or [thi]
    dist = min(_circ(a, b) for a in zeros for b in ones)
    bound = np.pi / two_j  # pi / (2J)
    ok = dist >= bound - 1e-6
    if not ok:
        raise AssertionError(f"zero and one only {dist:.6f} apart, below {bound:.6f}")
    return {"distance": dist, "bound": bound, "saturated": abs(dist - bound) < 1e-6}


def sample_extremal_boxes(two_j: int, count: int, seed: int = 0) -> list:
    """Boxes with min 0 and max 1: |(1 - e^{i(t - t0)}) h(t)|^2 rescaled."""
    from .fejer import FactorVector
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        h = rng.normal(size=two_j) + 1j * rng.normal(size=two_j)
        t0 = rng.uniform(0, 2 * np.pi)
        b = np.convolve([1.0, -np.exp(-1j * t0)], h)
        q = FactorVector(b).reconstruct()
        hi = extrema(q)[2]
        if hi <= 1e-9:
            continue
        out.append(q * (1.0 / hi))
    return out
