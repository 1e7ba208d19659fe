"""The rotation-box GPT system: orbit states in R^{4J+1}, SO(2) action, effects.

A normalized state is (1, x) with x in the Caratheodory orbitope; an effect e
acts as e . omega(theta) = p(theta) for the polynomial with flat coefficient
vector e, so effects are exactly the range-valid polynomials.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import comb

from . import rset
from .trigpoly import TrigPoly, evaluate, range_valid


class NotInRJA(ValueError):
    pass


class ResidualTooLarge(RuntimeError):
    pass


def dimension(two_j: int) -> int:
    return 2 * two_j + 1


def omega(two_j: int, theta: float) -> np.ndarray:
    k = np.arange(1, two_j + 1)
    v = np.empty(dimension(two_j))
    v[0] = 1.0
    v[1::2] = np.cos(k * theta)
    v[2::2] = np.sin(k * theta)
    return v


def rotation_matrix(two_j: int, theta: float) -> np.ndarray:
    T = np.zeros((dimension(two_j), dimension(two_j)))
    T[0, 0] = 1.0
    for k in range(1, two_j + 1):
        c, s = np.cos(k * theta), np.sin(k * theta)
        i = 2 * k - 1
        T[i:i + 2, i:i + 2] = [[c, -s], [s, c]]
    return T


def unit_effect(two_j: int) -> np.ndarray:
    u = np.zeros(dimension(two_j))
    u[0] = 1.0
    return u


@dataclass
class GPTState:
    v: np.ndarray

    @classmethod
    def mixture(cls, two_j: int, parts) -> "GPTState":
        """Convex combination of orbit points, parts = [(weight, theta), ...]."""
        w = np.array([p[0] for p in parts], dtype=float)
        if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
            raise ValueError("weights must be a probability vector")
        return cls(sum(wi * omega(two_j, t) for wi, (_, t) in zip(w, parts)))

    @property
    def two_j(self) -> int:
        return (self.v.size - 1) // 2

    def is_valid(self, tol: float = 1e-9) -> bool:
        if abs(self.v[0] - 1) > tol:
            return False
        return rset.toeplitz_membership(self.v[1:], tol)


@dataclass
class GPTEffect:
    e: np.ndarray

    def polynomial(self) -> TrigPoly:
        return TrigPoly.from_flat(self.e)

    def is_valid(self, tol: float = 1e-10) -> bool:
        return range_valid(self.polynomial(), tol)

    def __call__(self, state) -> float:
        v = state.v if isinstance(state, GPTState) else np.asarray(state, float)
        return float(self.e @ v)


def measurement_from_correlations(polys, two_j: int | None = None, check: bool = True) -> list:
    polys = list(polys)
    two_j = max(p.degree for p in polys) if two_j is None else two_j
    polys = [p.pad(two_j) for p in polys]
    if check:
        res = rset.membership_multi(polys, two_j)
        if not res.feasible:
            raise NotInRJA("correlation tuple is not in R_J^A")
    effects = [GPTEffect(p.flat()) for p in polys]
    total = sum(e.e for e in effects)
    if np.max(np.abs(total - unit_effect(two_j))) > 1e-9:
        raise NotInRJA("effects do not sum to the unit effect")
    return effects


# ---------------------------------------------------------------------------
# spin-1 distinguishability


def fourier_triple():
    """P(a|theta) = |<w^a|psi(theta)>|^2 with psi uniform on three levels."""
    from .qset import QuantumRealization, born_polynomial
    m = np.arange(3)
    vecs = [np.exp(2j * np.pi * a * m / 3) / np.sqrt(3) for a in range(3)]
    # levels ordered by charge 0, 1, 2 there; reverse to charge +1, 0, -1 here
    # (an overall phase is irrelevant)
    povm = [np.outer(v, v.conj())[::-1, ::-1] for v in vecs]
    r = QuantumRealization(np.ones(3) / np.sqrt(3), povm, 2)
    return [born_polynomial(r, a) for a in range(3)]


PAIR_EFFECTS = {
    "pm_half_pi": np.array([0.5, 0, 0, 0.5, 0]),
    "zero_pi": np.array([0.5, 0.5, 0, 0, 0]),
    "half_pi_three_half_pi": np.array([0.5, 0, 0.5, 0, 0]),
}


def distinguishability_tables() -> dict:
    polys = fourier_triple()
    effects = measurement_from_correlations(polys, 2)
    joint = np.array([[e(omega(2, 2 * np.pi * b / 3)) for b in range(3)] for e in effects])
    angles = [0.0, np.pi / 2, np.pi, 3 * np.pi / 2]
    values = {name: [float(e @ omega(2, t)) for t in angles] for name, e in PAIR_EFFECTS.items()}
    # which pairs each two-outcome measurement separates perfectly
    pairs = {}
    for i in range(4):
        for j in range(i + 1, 4):
            for name, vals in values.items():
                if {round(vals[i], 12), round(vals[j], 12)} == {0.0, 1.0}:
                    pairs[(i, j)] = name
                    break
    grid = np.linspace(0, 2 * np.pi, 100, endpoint=False)
    valid = {name: bool(GPTEffect(e).is_valid()) for name, e in PAIR_EFFECTS.items()}
    closed = float(np.max(np.abs(
        np.array([PAIR_EFFECTS["pm_half_pi"] @ omega(2, t) for t in grid]) - (0.5 + 0.5 * np.cos(2 * grid)))))
    return {
        "joint": joint,
        "joint_error": float(np.max(np.abs(joint - np.eye(3)))),
        "effects": [e.e for e in effects],
        "pair_values": values,
        "separated_pairs": pairs,
        "all_pairs_separated": len(pairs) == 6,
        "effects_valid": valid,
        "pm_half_pi_closed_form_error": closed,
    }


def bit_symmetry_witness() -> dict:
    """Invariant inner products diag(a,b,b,c,c) between distinguishable pairs.

    <w(0), w(theta)> = a + b cos(theta) + c cos(2 theta).  Equality of the pairs
    (0, 3pi/2), (0, pi), (0, 2pi/3) is a homogeneous system in (b, c).
    """
    system = np.array([[1.0, -2.0], [0.5, -0.5]])
    _, sv, vt = np.linalg.svd(system)
    null = vt[np.sum(sv > 1e-12):]
    first = system[:1]
    _, sv1, vt1 = np.linalg.svd(first)
    null1 = vt1[np.sum(sv1 > 1e-12):]
    rng = np.random.default_rng(0)
    a, b, c = rng.uniform(0.5, 2.0, 3)
    M = np.diag([a, b, b, c, c])

    def ip(t):
        return float(omega(2, 0.0) @ M @ omega(2, t))

    symbolic = {"0,3pi/2": a - c, "0,pi": a - b + c, "0,2pi/3": a - b / 2 - c / 2}
    numeric = {"0,3pi/2": ip(3 * np.pi / 2), "0,pi": ip(np.pi), "0,2pi/3": ip(2 * np.pi / 3)}
    return {
        "system": system,
        "rank": int(np.sum(sv > 1e-12)),
        "null_space": null,
        "only_trivial": null.shape[0] == 0,
        "first_pair_null_space": null1,  # spans b = 2c
        "symbolic_matches": max(abs(symbolic[k] - numeric[k]) for k in symbolic),
    }


# ---------------------------------------------------------------------------
# symmetric-subspace orbit


L_MAP = np.sqrt(4 / 3) * np.array([[1, 0, 0, 0], [0, 0.5, 0.5, 0], [0, 0, 0, 1]])
M_MAP = np.sqrt(3 / 4) * np.array([[1, 0, 0], [0, 1, 0], [0, 1, 0], [0, 0, 1]])


def qubit_orbit(theta: float) -> np.ndarray:
    return np.array([np.exp(0.5j * theta), np.exp(-0.5j * theta)]) / np.sqrt(2)


def dicke_orbit(two_j: int, theta: float) -> np.ndarray:
    """|psi(theta)>^{(x) 2J} in the normalized Hamming-weight basis j = 0..2J."""
    j = np.arange(two_j + 1)
    return 2.0 ** (-two_j / 2) * np.sqrt(comb(two_j, j)) * np.exp(1j * (two_j / 2 - j) * theta)


def hamming_vector(two_j: int, weight: int) -> np.ndarray:
    """Unnormalized sum of all computational basis states of a given weight."""
    n = 2 ** two_j
    v = np.zeros(n)
    for x in range(n):
        if bin(x).count("1") == weight:
            v[x] = 1.0
    return v


def symmetric_witness(p: TrigPoly, two_j: int) -> np.ndarray:
    """Minimum-norm Hermitian E with <v(theta)|E|v(theta)> = p(theta)."""
    a = p.pad(two_j).positive_complex()
    j = np.arange(two_j + 1)
    C = comb(two_j, j)
    E = np.zeros((two_j + 1, two_j + 1), complex)
    scale = 2.0 ** two_j
    for m in range(two_j + 1):
        # <v|E|v> collects E_{k, k+m} conj(v_k) v_{k+m} = 2^{-2J} sqrt(C_k C_{k+m}) e^{-i m theta}
        w = np.sqrt(C[: two_j + 1 - m] * C[m:])
        vals = scale * np.conj(a[m]) * w / np.dot(w, w)
        E += np.diag(vals, m)
        if m:
            E += np.diag(np.conj(vals), -m)
    return E


def symmetric_orbit_isomorphism(two_j: int, p: TrigPoly | None = None,
                                num_angles: int = 100, tol: float = 1e-8) -> dict:
    if two_j not in (1, 2, 3, 4):
        raise ValueError("supported for J in {1/2, 1, 3/2, 2}")
    angles = np.linspace(0, 2 * np.pi, num_angles, endpoint=False)
    report = {"two_j": two_j}
    if two_j == 2:
        from .qset import rotation
        psi = np.ones(3) / np.sqrt(3)
        errL = errM = 0.0
        for t in angles:
            q = np.kron(qubit_orbit(t), qubit_orbit(t))
            R = np.outer(q, q.conj())
            u = rotation(2, t) @ psi
            S = np.outer(u, u.conj())
            errL = max(errL, float(np.max(np.abs(L_MAP @ R @ L_MAP.T - S))))
            errM = max(errM, float(np.max(np.abs(M_MAP @ S @ M_MAP.T - R))))
        report.update(L_residual=errL, M_residual=errM)
    # check the Hamming basis against the explicit tensor power at one angle
    t = 0.37
    full = np.array([1.0 + 0j])
    for _ in range(two_j):
        full = np.kron(full, qubit_orbit(t))
    proj = np.array([hamming_vector(two_j, j) @ full / np.sqrt(comb(two_j, j))
                     for j in range(two_j + 1)])
    report["hamming_basis_error"] = float(np.max(np.abs(proj - dicke_orbit(two_j, t))))
    if p is None:
        p = TrigPoly.constant(0.5, two_j)
    E = symmetric_witness(p, two_j)
    vals = np.array([np.vdot(dicke_orbit(two_j, t), E @ dicke_orbit(two_j, t)).real for t in angles])
    resid = float(np.max(np.abs(vals - evaluate(p, angles))))
    ev = np.linalg.eigvalsh(E)
    report.update(witness=E, residual=resid, min_eigenvalue=float(ev[0]),
                  max_eigenvalue=float(ev[-1]))
    if resid > tol:
        raise ResidualTooLarge(f"witness residual {resid:.2e} exceeds {tol:g}")
    return report
