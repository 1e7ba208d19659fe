"""Bipartite rotation-box behaviors and the planar Nagata inequality.

A behavior P(a, b | alpha, beta) with a, b in {+1, -1} is stored, per outcome
pair, as a 3x3 matrix C with P = f(alpha)^T C f(beta), f(t) = (1, cos t, sin t).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .trigpoly import TrigPoly

OUTCOMES = (1, -1)


class ZeroMarginal(ValueError):
    pass


class DegreeViolation(ValueError):
    pass


def local_basis(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return np.stack([np.ones_like(t), np.cos(t), np.sin(t)])


def _poly_vector(p: TrigPoly) -> np.ndarray:
    if p.degree > 1:
        raise DegreeViolation("local boxes here have degree at most 1")
    p = p.pad(1)
    return np.array([p.c[0], p.c[1], p.s[0]])


def _vector_poly(v) -> TrigPoly:
    return TrigPoly([v[0], v[1]], [v[2]])


@dataclass
class Behavior:
    coeffs: dict  # (a, b) -> 3x3

    def __call__(self, a, b, alpha, beta):
        return local_basis(alpha).T @ self.coeffs[(a, b)] @ local_basis(beta)

    def total(self) -> np.ndarray:
        return sum(self.coeffs.values())

    def marginal_a(self, a) -> np.ndarray:
        return sum(self.coeffs[(a, b)] for b in OUTCOMES)

    def marginal_b(self, b) -> np.ndarray:
        return sum(self.coeffs[(a, b)] for a in OUTCOMES)

    def checks(self, grid: int = 64) -> dict:
        t = np.linspace(0, 2 * np.pi, grid, endpoint=False)
        F = local_basis(t)
        lowest = min(float(np.min(F.T @ C @ F)) for C in self.coeffs.values())
        one = np.zeros((3, 3))
        one[0, 0] = 1.0
        norm = float(np.max(np.abs(self.total() - one)))
        # Alice's marginal may not depend on beta (columns 1, 2 vanish) and
        # Bob's may not depend on alpha (rows 1, 2 vanish)
        ns_a = max(float(np.max(np.abs(self.marginal_a(a)[:, 1:]))) for a in OUTCOMES)
        ns_b = max(float(np.max(np.abs(self.marginal_b(b)[1:, :]))) for b in OUTCOMES)
        return {"min_value": lowest, "normalization_error": norm,
                "signalling_a_to_b": ns_b, "signalling_b_to_a": ns_a,
                "nonnegative": lowest >= -1e-10,
                "no_signalling": max(ns_a, ns_b) <= 1e-12}


def product_behavior(pa: TrigPoly, pb: TrigPoly) -> Behavior:
    """Independent local boxes, P(+|.) = pa and pb."""
    va, vb = _poly_vector(pa), _poly_vector(pb)
    one = np.array([1.0, 0, 0])
    A = {1: va, -1: one - va}
    B = {1: vb, -1: one - vb}
    return Behavior({(a, b): np.outer(A[a], B[b]) for a in OUTCOMES for b in OUTCOMES})


def is_unbiased(local: TrigPoly, tol: float = 1e-10) -> bool:
    if local.degree > 1:
        raise DegreeViolation("unbiasedness is defined for degree <= 1")
    return abs(local.c[0] - 0.5) <= tol


def marginal(P: Behavior, party: str, outcome: int, angle: float) -> float:
    if party == "B":
        v = P.marginal_b(outcome) @ local_basis(angle)
    else:
        v = P.marginal_a(outcome).T @ local_basis(angle)
    return float(v[0])


def conditional_box(P: Behavior, party: str, outcome: int, angle: float) -> TrigPoly:
    """Box of the other party given `party` saw `outcome` at `angle`.

    Returns P(+1 | free angle) of the other party's conditional box.
    """
    if party not in ("A", "B"):
        raise ValueError("party must be 'A' or 'B'")
    m = marginal(P, party, outcome, angle)
    if m <= 1e-9:
        raise ZeroMarginal(f"P^{party}({outcome}|{angle:.6f}) = {m:.3g}")
    if party == "B":
        v = P.coeffs[(1, outcome)] @ local_basis(angle)
    else:
        v = P.coeffs[(outcome, 1)].T @ local_basis(angle)
    return _vector_poly(v / m)


def conditional_box_outcome(P: Behavior, party: str, outcome: int, angle: float,
                            other_outcome: int) -> TrigPoly:
    """Like conditional_box but for an arbitrary outcome of the other party."""
    m = marginal(P, party, outcome, angle)
    if m <= 1e-9:
        raise ZeroMarginal(f"P^{party}({outcome}|{angle:.6f}) = {m:.3g}")
    if party == "B":
        v = P.coeffs[(other_outcome, outcome)] @ local_basis(angle)
    else:
        v = P.coeffs[(outcome, other_outcome)].T @ local_basis(angle)
    return _vector_poly(v / m)


def pr_box(a: int, b: int, x: int, y: int) -> float:
    return 0.5 * float((1 - a * b) // 2 == x * y)


# Q(1|t) = 1/2 + cos(t)/2, Q(0|t) = 1/2 - cos(t)/2
_LOCAL = {1: np.array([0.5, 0.5, 0.0]), 0: np.array([0.5, -0.5, 0.0])}
PR_ANGLES = {0: np.pi, 1: 0.0}


def pr_wiring_behavior() -> Behavior:
    coeffs = {}
    for a in OUTCOMES:
        for b in OUTCOMES:
            coeffs[(a, b)] = sum(pr_box(a, b, c, d) * np.outer(_LOCAL[c], _LOCAL[d])
                                 for c in (0, 1) for d in (0, 1))
    return Behavior(coeffs)


def pr_wiring_report(beta_grid: int = 16) -> dict:
    P = pr_wiring_behavior()
    chk = P.checks()
    table_err = 0.0
    for a, b, x, y in itertools.product(OUTCOMES, OUTCOMES, (0, 1), (0, 1)):
        table_err = max(table_err, abs(P(a, b, PR_ANGLES[x], PR_ANGLES[y]) - pr_box(a, b, x, y)))
    betas = np.linspace(0, 2 * np.pi, beta_grid, endpoint=False)
    degrees_ok = True
    marg = []
    for party in ("A", "B"):
        for o in OUTCOMES:
            for t in betas:
                marg.append(marginal(P, party, o, t))
                for other in OUTCOMES:
                    q = conditional_box_outcome(P, party, o, t, other)
                    degrees_ok &= q.degree <= 1
    c0_err = 0.0
    unbiased_everywhere = True
    for t in betas:
        q = conditional_box_outcome(P, "B", -1, t, 1)  # P^A_{-1,beta}(+1|alpha)
        c0_err = max(c0_err, abs(q.c[0] - (1 + np.cos(t)) / 4))
        unbiased_everywhere &= is_unbiased(q)
    return {
        **chk,
        "pr_table_error": float(table_err),
        "marginal_error": float(np.max(np.abs(np.array(marg) - 0.5))),
        "conditional_degree_ok": bool(degrees_ok),
        "c0_error": float(c0_err),
        "unbiased": bool(unbiased_everywhere),
    }


# ---------------------------------------------------------------------------
# Nagata inequality


@dataclass
class NagataResult:
    lhs: float
    rhs: float
    violated: bool
    t_max: float
    argmax: np.ndarray
    grid_check: float | None = None


def _planar(alpha):
    return np.array([np.cos(alpha), np.sin(alpha), 0.0])


def correlation(T: np.ndarray, angles) -> float:
    out = T
    for a in angles:
        out = np.tensordot(out, _planar(a), axes=([0], [0]))
    return float(out)


def _coordinate_ascent(T, angles, tol=1e-12, max_sweeps=500):
    # E is A cos(a_j) + B sin(a_j) in each coordinate, maximized in closed form
    angles = np.array(angles, dtype=float)
    val = correlation(T, angles)
    N = T.ndim
    for _ in range(max_sweeps):
        old = val
        for j in range(N):
            S = np.moveaxis(T, j, 0)
            rest = [angles[i] for i in range(N) if i != j]
            coef = S
            for a in rest:
                coef = np.tensordot(coef, _planar(a), axes=([1], [0]))
            A, B = float(coef[0]), float(coef[1])
            angles[j] = np.arctan2(B, A)
            val = float(np.hypot(A, B))
        if val - old <= tol:
            break
    return val, np.mod(angles, 2 * np.pi)


def _grid_values(T, size):
    g = np.linspace(0, 2 * np.pi, size, endpoint=False)
    V = np.stack([np.cos(g), np.sin(g), np.zeros_like(g)])  # 3 x size
    out = T
    for _ in range(T.ndim):
        out = np.tensordot(out, V, axes=([0], [0]))
    return out, g


def nagata_inequality(T, seed: int = 0, validate: bool = True) -> NagataResult:
    T = np.asarray(T, dtype=float)
    N = T.ndim
    if T.shape != (3,) * N or N < 1 or N > 5:
        raise ValueError("T must have shape (3,)*N with 1 <= N <= 5")
    if np.max(np.abs(T)) > 1 + 1e-12:
        raise ValueError("correlation tensor entries must lie in [-1, 1]")
    planar = T[(slice(0, 2),) * N]
    lhs = np.pi ** N * float(np.sum(planar ** 2))
    if N <= 3:
        vals, g = _grid_values(T, 32)
        flat = np.argsort(vals, axis=None)[::-1][:16]
        starts = [g[np.array(np.unravel_index(k, vals.shape))] for k in flat]
    else:
        rng = np.random.default_rng(seed)
        starts = list(rng.uniform(0, 2 * np.pi, size=(500, N)))
    best, arg = -np.inf, None
    for s in starts:
        v, a = _coordinate_ascent(T, s)
        if v > best + 1e-15:
            best, arg = v, a
    best = max(best, 0.0)
    rhs = 4.0 ** N * best
    res = NagataResult(lhs, rhs, lhs > rhs + 1e-9, best, arg)
    if validate and N <= 3:
        vals, _ = _grid_values(T, 64)
        res.grid_check = float(np.max(vals))
    return res
