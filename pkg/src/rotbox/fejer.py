"""Fejer-Riesz spectral factorization and Gram certificates.

A nonnegative p of degree d is written p(theta) = |Q(theta)|^2 with
Q(theta) = sum_j b_j e^{i j theta}, j = 0..d.  In coefficients this reads
a_k = sum_j conj(b_j) b_{j+k}, and ||b||^2 = a_0.

Phase convention (the factor is only unique up to a global phase): the first
entry of b with |b_j| > 1e-12 is made real and nonnegative.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .trigpoly import TrigPoly, evaluate, extrema

log = logging.getLogger(__name__)

NONNEG_TOL = 1e-9
GRID = 10_000


class NotNonnegative(ValueError):
    pass


class RootPairingFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class FactorVector:
    b: np.ndarray

    @property
    def degree(self) -> int:
        return self.b.size - 1

    def reconstruct(self) -> TrigPoly:
        b = self.b
        d = b.size - 1
        a_pos = np.array([np.vdot(b[: d + 1 - k], b[k:]) for k in range(d + 1)])
        return TrigPoly.from_positive_complex(a_pos)

    def q_values(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return np.exp(1j * np.multiply.outer(theta, np.arange(self.b.size))) @ self.b

    def to_json(self):
        return [[float(v.real), float(v.imag)] for v in self.b]

    @classmethod
    def from_json(cls, obj):
        arr = np.asarray(obj, dtype=float)
        return cls(arr[:, 0] + 1j * arr[:, 1])


def fix_phase(b, tol: float = 1e-12) -> np.ndarray:
    b = np.asarray(b, dtype=complex)
    nz = np.flatnonzero(np.abs(b) > tol)
    if nz.size == 0:
        return b.copy()
    return b * np.exp(-1j * np.angle(b[nz[0]]))


def _cluster_angles(z, ang_tol):
    ang = np.mod(np.angle(z), 2 * np.pi)
    order = np.argsort(ang)
    ang, z = ang[order], z[order]
    clusters = [[0]]
    for i in range(1, ang.size):
        if ang[i] - ang[i - 1] > ang_tol:
            clusters.append([i])
        else:
            clusters[-1].append(i)
    if len(clusters) > 1 and ang[0] + 2 * np.pi - ang[-1] <= ang_tol:
        clusters[0] = clusters.pop() + clusters[0]
    return [z[c] for c in clusters]


def _pick_roots(roots, d, circ_tol, ang_tol):
    mod = np.abs(roots)
    outside = roots[mod > 1 + circ_tol]
    inside = roots[mod < 1 - circ_tol]
    circle = roots[np.abs(mod - 1) <= circ_tol]
    if outside.size != inside.size:
        raise RootPairingFailure("unequal numbers of roots inside/outside the circle")
    for r in outside:
        if np.min(np.abs(inside - 1 / np.conj(r))) > 1e-6 * max(1.0, abs(r)):
            raise RootPairingFailure(f"root {r} has no reflected partner")
    chosen = list(outside)
    if circle.size:
        for cl in _cluster_angles(circle, ang_tol):
            if cl.size % 2:
                raise RootPairingFailure(
                    f"unit-circle root near angle {np.angle(cl[0]):.6f} "
                    f"has odd multiplicity {cl.size}")
            u = np.mean(cl / np.abs(cl))
            chosen.extend([u / abs(u)] * (cl.size // 2))
    if len(chosen) != d:
        raise RootPairingFailure("could not select d roots")
    return np.array(chosen, dtype=complex)


def factorize(p: TrigPoly) -> FactorVector:
    """Fejer-Riesz factor of a nonnegative trigonometric polynomial."""
    lo = extrema(p)[0]
    if lo < -NONNEG_TOL:
        raise NotNonnegative(f"polynomial takes the value {lo:.3e} < 0")
    full = p.degree
    a = p.to_complex()
    d = full
    while d > 0 and abs(a[full + d]) < 1e-12:
        d -= 1
    a0 = float(p.c[0])
    if a0 <= 0.0:
        return FactorVector(np.zeros(full + 1, dtype=complex))
    if d == 0:
        b = np.zeros(full + 1, dtype=complex)
        b[0] = np.sqrt(a0)
        return FactorVector(b)

    # z^d p(z): coefficients of z^0..z^2d are a_{-d}..a_d
    coeffs = a[full - d: full + d + 1]
    roots = np.roots(coeffs[::-1])
    theta = np.linspace(0.0, 2 * np.pi, GRID, endpoint=False)
    target = evaluate(p, theta)
    scale = max(1.0, float(np.max(np.abs(target))))
    last = None
    for circ_tol, ang_tol in ((1e-7, 1e-5), (1e-5, 1e-4), (1e-4, 1e-3),
                               (1e-3, 1e-2), (1e-2, 5e-2)):
        try:
            chosen = _pick_roots(roots, d, circ_tol, ang_tol)
        except RootPairingFailure as exc:
            last = exc
            continue
        q = np.poly(chosen)[::-1]  # monic, ascending powers
        q = q * np.sqrt(a0 / np.vdot(q, q).real)
        b = np.zeros(full + 1, dtype=complex)
        b[: d + 1] = q
        fv = FactorVector(fix_phase(b))
        err = np.max(np.abs(np.abs(fv.q_values(theta)) ** 2 - target))
        if err <= 1e-7 * scale:
            return fv
        last = RootPairingFailure(f"reconstruction error {err:.2e} at tolerance {circ_tol:g}")
    raise last


def gram_certificate(p: TrigPoly) -> np.ndarray:
    """Rank-one PSD Q with a_k = sum_j Q_{j,j+k}."""
    b = factorize(p).b
    v = np.conj(b)
    return np.outer(v, v.conj())


@dataclass
class RelaxedModel:
    psi: np.ndarray
    E: np.ndarray
    max_eigenvalue: float
    exceeds_identity: bool


def relaxed_quantum_model(p: TrigPoly, two_j: int | None = None) -> RelaxedModel:
    """Uniform state and E_+ = (2J+1)|b><b| with <psi|U^dag E U|psi> = p."""
    two_j = p.degree if two_j is None else int(two_j)
    if p.degree > two_j:
        raise ValueError("polynomial degree exceeds 2J")
    b = factorize(p.pad(two_j)).b
    dim = two_j + 1
    psi = np.ones(dim, dtype=complex) / np.sqrt(dim)
    E = dim * np.outer(b, b.conj())
    lam = float(np.linalg.eigvalsh(E)[-1])
    return RelaxedModel(psi, E, lam, lam > 1 + 1e-12)
