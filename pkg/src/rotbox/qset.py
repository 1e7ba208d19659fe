"""The quantum spin-J correlation set Q_J.

Conventions
-----------
Basis vectors are indexed m = 0..2J with Z = diag(J, J-1, ..., -J), so index m
carries eigenvalue J - m and U_theta = exp(i theta Z).  The Born rule

    P(theta) = Tr(U_theta rho U_theta^dag E)

gives a_k = sum_m rho_{m,m+k} E_{m+k,m}.  A SchurPair (rho, E) stands for the
Gram matrix Q = E o rho (entrywise), which is the Born polynomial of the POVM
element E^T; both E and E^T are valid effects.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .rset import bands, functional_weights
from .trigpoly import TrigPoly, evaluate, level_angles

log = logging.getLogger(__name__)

INV_SQRT3 = 1.0 / np.sqrt(3.0)


class RealizationError(ValueError):
    pass


class NotExtremalForm(ValueError):
    pass


class EmptyFace(ValueError):
    pass


class NonMonotone(AssertionError):
    pass


def z_diagonal(two_j: int) -> np.ndarray:
    return two_j / 2.0 - np.arange(two_j + 1)


def rotation(two_j: int, theta: float) -> np.ndarray:
    return np.diag(np.exp(1j * theta * z_diagonal(two_j)))


def _herm(a):
    a = np.asarray(a, dtype=complex)
    return 0.5 * (a + a.conj().T)


def born_coefficients(rho, E) -> np.ndarray:
    """a_0..a_d of Tr(U rho U^dag E)."""
    rho, E = np.asarray(rho, complex), np.asarray(E, complex)
    return bands(rho * E.T)


def born_from_pair(rho, E) -> TrigPoly:
    return TrigPoly.from_positive_complex(born_coefficients(rho, E))


@dataclass
class QuantumRealization:
    psi: np.ndarray
    povm: list
    two_j: int = field(default=None)

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=complex).reshape(-1)
        self.povm = [np.asarray(e, dtype=complex) for e in self.povm]
        if self.two_j is None:
            self.two_j = self.psi.size - 1

    @property
    def Z(self) -> np.ndarray:
        return np.diag(z_diagonal(self.two_j))

    @property
    def rho(self) -> np.ndarray:
        return np.outer(self.psi, self.psi.conj())

    def validate(self, tol: float = 1e-10) -> None:
        dim = self.two_j + 1
        if self.psi.size != dim:
            raise RealizationError("state dimension does not match 2J+1")
        if abs(np.linalg.norm(self.psi) - 1) > tol:
            raise RealizationError("state is not normalized")
        total = np.zeros((dim, dim), complex)
        for e in self.povm:
            if np.max(np.abs(e - e.conj().T)) > tol:
                raise RealizationError("POVM element not Hermitian")
            ev = np.linalg.eigvalsh(_herm(e))
            if ev[0] < -tol or ev[-1] > 1 + tol:
                raise RealizationError(f"POVM element spectrum [{ev[0]:.3g}, {ev[-1]:.3g}] not in [0,1]")
            total = total + e
        if np.max(np.abs(total - np.eye(dim))) > tol:
            raise RealizationError("POVM elements do not sum to the identity")

    def probability(self, outcome: int, theta) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        ph = np.exp(1j * np.outer(theta, z_diagonal(self.two_j))) * self.psi
        E = self.povm[outcome]
        return np.einsum("ti,ij,tj->t", ph.conj(), E, ph).real

    def to_json(self):
        from .sdp import _mat_json
        return {"two_j": self.two_j,
                "psi": [[float(v.real), float(v.imag)] for v in self.psi],
                "povm": [_mat_json(e) for e in self.povm]}


def born_polynomial(r: QuantumRealization, outcome: int = 0, check: bool = True) -> TrigPoly:
    if check:
        r.validate()
    return born_from_pair(r.rho, r.povm[outcome])


def binary_realization(psi, E) -> QuantumRealization:
    E = np.asarray(E, complex)
    return QuantumRealization(psi, [E, np.eye(E.shape[0]) - E])


@dataclass
class SchurPair:
    rho: np.ndarray
    E: np.ndarray

    @property
    def Q(self) -> np.ndarray:
        return self.E * self.rho

    def polynomial(self) -> TrigPoly:
        return TrigPoly.from_positive_complex(bands(self.Q))

    def realization(self, tol: float = 1e-8) -> QuantumRealization:
        """Pure-state realization; the POVM element is E^T."""
        w, v = np.linalg.eigh(_herm(self.rho))
        if w[-2:-1].size and w[-2] > tol:
            raise RealizationError("rho is not pure")
        return binary_realization(v[:, -1], self.E.T)


# ---------------------------------------------------------------------------
# see-saw


def _weight_matrix(n, dim) -> np.ndarray:
    om = functional_weights(n)
    W = np.zeros((dim, dim), complex)
    for k in range(dim):
        W += np.diag(np.full(dim - k, om[k]), k)
    return W


def effective_operator(weights: np.ndarray, other) -> np.ndarray:
    """Hermitian M with F = Tr(M X), F = Re sum_{j<=l} w_jl other_jl X_jl."""
    N = weights * np.asarray(other, complex)
    return 0.5 * (N.T + N.conj())


def schur_objective(weights, rho, E) -> float:
    return float(np.real(np.sum(weights * E * rho)))


def m_operator(E) -> np.ndarray:
    """M[E] with Tr(M[E] rho) = (c_2 + s_3) of the Schur pair, for 4x4 E."""
    E = np.asarray(E, complex)
    return np.array([
        [0, 0, E[2, 0], -1j * E[3, 0]],
        [0, 0, 0, E[3, 1]],
        [E[0, 2], 0, 0, 0],
        [1j * E[0, 3], E[1, 3], 0, 0]])


@dataclass
class SeesawResult:
    value: float
    pair: SchurPair
    restart_values: list
    best_restart: int
    trace: list = field(default_factory=list)

    def polynomial(self) -> TrigPoly:
        return self.pair.polynomial()


def _top_vector(M):
    w, v = np.linalg.eigh(_herm(M))
    return v[:, -1]


def _positive_projector(M):
    w, v = np.linalg.eigh(_herm(M))
    keep = w > 0
    return (v[:, keep] * 1.0) @ v[:, keep].conj().T


def _one_restart(weights, dim, rng, max_rounds, gain_tol, record):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    w, v = np.linalg.eigh(_herm(g))
    E = (v * np.clip(w, 0, 1)) @ v.conj().T
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    psi /= np.linalg.norm(psi)
    rho = np.outer(psi, psi.conj())
    val = schur_objective(weights, rho, E)
    rows = []
    for it in range(max_rounds):
        psi = _top_vector(effective_operator(weights, E))
        rho = np.outer(psi, psi.conj())
        half = schur_objective(weights, rho, E)
        if half < val - 1e-10 * (1 + abs(val)):
            raise NonMonotone(f"state step decreased objective {val} -> {half}")
        E = _positive_projector(effective_operator(weights, rho))
        new = schur_objective(weights, rho, E)
        if new < half - 1e-10 * (1 + abs(half)):
            raise NonMonotone(f"effect step decreased objective {half} -> {new}")
        if record:
            rows.append((it, half, new))
        gain = new - val
        val = new
        if gain < gain_tol:
            break
    return val, SchurPair(rho, E), rows


def seesaw(n, two_j: int, restarts: int = 20, seed: int = 0, max_rounds: int = 500,
           gain_tol: float = 1e-10, workers: int = 1, record: bool = False) -> SeesawResult:
    """Lower bound on max n . (c, s) over Q_J by alternating state/effect steps.

    State step: top eigenvector of the effective operator.  Effect step: the
    projector onto the positive eigenspace, which is the exact maximizer of
    the linear effect problem over 0 <= E <= I.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    dim = two_j + 1
    weights = _weight_matrix(n, dim)
    seeds = np.random.SeedSequence(seed).spawn(restarts)

    def run(i):
        return _one_restart(weights, dim, np.random.default_rng(seeds[i]),
                            max_rounds, gain_tol, record)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(run, range(restarts)))
    else:
        results = [run(i) for i in range(restarts)]
    vals = [r[0] for r in results]
    best = int(np.argmax(vals))  # first index wins ties
    trace = [(i,) + row for i, r in enumerate(results) for row in r[2]]
    return SeesawResult(vals[best], results[best][1], vals, best, trace)


# ---------------------------------------------------------------------------
# analytic bound for c_{2J-1} + s_{2J}


def gap_witness_matrices():
    """The optimal 4x4 effect and state saturating 1/sqrt(3)."""
    r6, r3 = 1 / np.sqrt(6), 1 / (2 * np.sqrt(3))
    E = np.array([
        [0.5, 0, r6, -1j * r3],
        [0, 0.5, -1j * r3, r6],
        [r6, 1j * r3, 0.5, 0],
        [1j * r3, r6, 0, 0.5]])
    a = 1 / (3 * np.sqrt(2))
    rho = np.array([
        [1 / 3, a, a, 1 / 3],
        [a, 1 / 6, 1 / 6, a],
        [a, 1 / 6, 1 / 6, a],
        [1 / 3, a, a, 1 / 3]], dtype=complex)
    return E, rho


@dataclass
class GapBound:
    beta: float
    E: np.ndarray
    rho: np.ndarray
    value: float
    checks: dict


def analytic_gap_bound(two_j: int) -> GapBound:
    if two_j < 3:
        raise ValueError("the bound is stated for J >= 3/2")
    E4, rho4 = gap_witness_matrices()
    dim = two_j + 1
    idx = [0, 1, dim - 2, dim - 1]
    E = np.zeros((dim, dim), complex)
    rho = np.zeros((dim, dim), complex)
    E[np.ix_(idx, idx)] = E4
    rho[np.ix_(idx, idx)] = rho4
    pair = SchurPair(rho, E)
    p = pair.polynomial()
    value = p.coefficient("c", two_j - 1) + p.coefficient("s", two_j)
    ev_E = np.linalg.eigvalsh(_herm(E))
    ev_r = np.linalg.eigvalsh(_herm(rho))
    M = m_operator(E4)
    checks = {
        "trace_M_rho": float(np.trace(M @ rho4).real),
        "lambda_max_M": float(np.linalg.eigvalsh(_herm(M))[-1]),
        "E_min_eig": float(ev_E[0]),
        "E_max_eig": float(ev_E[-1]),
        "rho_min_eig": float(ev_r[0]),
        "rho_trace": float(np.trace(rho).real),
        "born_value": _born_check(pair, two_j),
    }
    return GapBound(INV_SQRT3, E, rho, float(value), checks)


def _born_check(pair, two_j):
    r = pair.realization()
    q = born_polynomial(r)
    return q.coefficient("c", two_j - 1) + q.coefficient("s", two_j)


def polytope_objective(x, y, z):
    s = x + y + z
    return s + np.sqrt(np.maximum(s * s - 4 * x * z, 0.0))


POLYTOPE_VERTICES = np.array([
    [0, 0, 0], [0, 0, 0.25], [0, 0.25, 0], [0.25, 0, 0], [0.25, 0, 0.25]])
POLYTOPE_EDGES = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 4), (2, 3), (3, 4), (2, 4)]


@dataclass
class PolytopeMax:
    value: float
    point: np.ndarray
    vertex_values: list
    edge_stationary: dict


def polytope_max() -> PolytopeMax:
    """max of x+y+z+sqrt((x+y+z)^2-4xz) over x,y,z>=0, x+y<=1/4, y+z<=1/4.

    The objective has no stationary points in the interior or on the open
    2-faces, so only vertices and edges are inspected.  Interior stationary
    points of each edge are located from sign changes of the derivative.
    """
    from scipy.optimize import brentq

    vvals = [float(polytope_objective(*v)) for v in POLYTOPE_VERTICES]
    best_val = max(vvals)
    best_pt = POLYTOPE_VERTICES[int(np.argmax(vvals))].astype(float)
    found = {}
    for i, j in POLYTOPE_EDGES:
        a, b = POLYTOPE_VERTICES[i], POLYTOPE_VERTICES[j]
        f = lambda t: polytope_objective(*(a + t * (b - a)))
        h = 1e-7
        df = lambda t: (f(t + h) - f(t - h)) / (2 * h)
        ts = np.linspace(1e-4, 1 - 1e-4, 2001)
        d = np.array([df(t) for t in ts])
        roots = [brentq(df, ts[k], ts[k + 1], xtol=1e-15)
                 for k in np.flatnonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)]
        found[(i, j)] = roots
        for t in roots:
            if f(t) > best_val:
                best_val, best_pt = float(f(t)), a + t * (b - a)
    # the one edge with an interior stationary point: y = 1/4 - x, z = x;
    # f' = 0 reduces to 12 x^2 - 2 x = 0, so x = 1/6 exactly
    x = 1.0 / 6.0
    exact = np.array([x, 0.25 - x, x])
    if abs(polytope_objective(*exact) - best_val) < 1e-9:
        best_pt, best_val = exact, float(polytope_objective(*exact))
    return PolytopeMax(best_val, best_pt, vvals, found)


def polytope_grid_max(step: float = 1e-3):
    g = np.arange(0.0, 0.25 + step / 2, step)
    x, y = np.meshgrid(g, g, indexing="ij")
    ok = x + y <= 0.25 + 1e-12
    x, y = x[ok], y[ok]
    best, arg = -np.inf, None
    for z in g:
        sel = y + z <= 0.25 + 1e-12
        v = polytope_objective(x[sel], y[sel], z)
        if v.size and v.max() > best:
            k = int(np.argmax(v))
            best, arg = float(v[k]), (x[sel][k], y[sel][k], z)
    return best, np.array(arg)


# ---------------------------------------------------------------------------
# spin-1 faces and their quantum realizations


def _on_circle(t):
    return float(np.mod(t, 2 * np.pi))


def _close(a, b, tol=1e-9):
    d = abs(_on_circle(a - b))
    return min(d, 2 * np.pi - d) < tol


def sin2():
    return TrigPoly([0.5, 0.0, -0.5], [0.0, 0.0])


def sin4_half():
    # sin^4(t/2) = (1 - cos t)^2 / 4 = 3/8 - cos t / 2 + cos 2t / 8
    return TrigPoly([3 / 8, -0.5, 1 / 8], [0.0, 0.0])


def tilde(p: TrigPoly, theta0: float, theta1: float) -> TrigPoly:
    """q(theta) = 1 - p(theta0 + theta1 - theta)."""
    return 1.0 - p.shift(theta0 + theta1).reflect()


def general_extremal(theta1: float) -> TrigPoly:
    """c (1 - cos t)(1 - cos(t - 2 theta1)), c = 1 / (4 sin^4(theta1 / 2))."""
    c = 1.0 / (4.0 * np.sin(theta1 / 2) ** 4)
    a = TrigPoly([1.0, -1.0])
    b = TrigPoly([1.0, -np.cos(2 * theta1)], [-np.sin(2 * theta1)])
    return c * a.product(b)


def r1_face_extremals(theta0: float, theta1: float) -> list:
    """Extremal points of the face {p in R_1: p(theta0) = 0, p(theta1) = 1}."""
    t = _on_circle(theta1 - theta0)
    if t < np.pi / 2 - 1e-12 or t > 3 * np.pi / 2 + 1e-12:
        raise EmptyFace(f"face ({theta0:.6f}, {theta1:.6f}) is empty")
    if _close(t, np.pi / 2) or _close(t, 3 * np.pi / 2):
        base = [sin2()]
    elif _close(t, np.pi):
        base = [sin4_half(), tilde(sin4_half(), 0.0, np.pi)]
    else:
        p = general_extremal(t)
        base = [p, tilde(p, 0.0, t)]
    return [q.shift(-theta0) for q in base]


def _realize_sin2():
    psi = np.array([1, 0, -1]) / np.sqrt(2)
    phi = np.array([1, 0, 1]) / np.sqrt(2)
    return psi, np.outer(phi, phi.conj())


def _realize_sin4():
    psi = np.array([1, np.sqrt(2), 1]) / 2
    phi = np.array([-1, np.sqrt(2), -1]) / 2
    return psi, np.outer(phi, phi.conj())


def _realize_general(theta1):
    alpha = np.sqrt(1 - 1 / (1 - np.cos(theta1)))
    beta = 1 / np.sqrt(2 * (1 - np.cos(theta1)))

    def orbit(t):
        return np.array([beta * np.exp(1j * t), alpha, beta * np.exp(-1j * t)])

    psi = orbit(0.0)
    v = orbit(theta1)
    return psi, np.outer(v, v.conj())


_FLIP = np.eye(3)[::-1]


def _tilde_realization(psi, E, theta_sum):
    # E' = 1 - U^dag E U at theta_sum, read with the reversed rotation U_{-theta};
    # reversing the rotation is the same as flipping the basis order
    U = rotation(2, theta_sum)
    Ep = np.eye(3) - U.conj().T @ E @ U
    return _FLIP @ psi, _FLIP @ Ep @ _FLIP


def _shift_realization(psi, E, theta0):
    """Realizes q(theta) = p(theta - theta0) from a realization of p."""
    return rotation(2, -theta0) @ psi, E


def _base_realizations(t):
    if _close(t, np.pi / 2) or _close(t, 3 * np.pi / 2):
        return [(sin2(), _realize_sin2())]
    if _close(t, np.pi):
        psi, E = _realize_sin4()
        return [(sin4_half(), (psi, E)),
                (tilde(sin4_half(), 0.0, np.pi), _tilde_realization(psi, E, t))]
    p = general_extremal(t)
    psi, E = _realize_general(t)
    return [(p, (psi, E)), (tilde(p, 0.0, t), _tilde_realization(psi, E, t))]


def r1_quantum_realize(p: TrigPoly, tol: float = 1e-7) -> QuantumRealization:
    """Spin-1 quantum model of an extremal point of R_1 (any rotation)."""
    if p.degree > 2:
        raise NotExtremalForm("degree exceeds 2")
    p = p.pad(2)
    zeros = level_angles(p, 0.0, tol)
    ones = level_angles(p, 1.0, tol)
    for t0 in zeros:
        for t1 in ones:
            t = _on_circle(t1 - t0)
            if t < np.pi / 2 - 1e-6 or t > 3 * np.pi / 2 + 1e-6:
                continue
            for q, (psi, E) in _base_realizations(t):
                if q.shift(-t0).allclose(p, atol=1e-6):
                    psi, E = _shift_realization(psi, E, t0)
                    r = binary_realization(psi, E)
                    r.validate(1e-9)
                    return r
    raise NotExtremalForm("polynomial does not match any extremal family of R_1")


# ---------------------------------------------------------------------------
# lifting and the large-J limit


def lift_spin(r: QuantumRealization) -> QuantumRealization:
    """Embed a spin-J model into spin J+1/2 without changing its statistics."""
    dim = r.two_j + 1
    psi = np.concatenate([r.psi, [0.0]])
    extra = np.zeros((dim + 1, dim + 1), complex)
    extra[dim, dim] = 1.0 / len(r.povm)
    povm = []
    for e in r.povm:
        big = np.zeros((dim + 1, dim + 1), complex)
        big[:dim, :dim] = e
        povm.append(big + extra)
    return QuantumRealization(psi, povm, r.two_j + 1)


def boxcar_amplitudes(J: int, n: float, theta0: float = 0.0) -> np.ndarray:
    """<phi_j|f> for the unit-norm boxcar of half-width 1/n, j = -J..J."""
    j = np.arange(-J, J + 1)
    amp = np.empty(j.size, dtype=complex)
    nz = j != 0
    amp[nz] = np.sqrt(n / np.pi) * np.sin(j[nz] / n) / j[nz]
    amp[~nz] = np.sqrt(n / np.pi) / n
    return amp * np.exp(-1j * j * theta0)


def boxcar_tail(J: int, n: float) -> float:
    """epsilon = 1 - sum_{|j|<=J} |<phi_j|f>|^2."""
    return float(max(0.0, 1.0 - np.sum(np.abs(boxcar_amplitudes(J, n)) ** 2)))


@dataclass
class Approximation:
    realization: QuantumRealization
    polynomial: TrigPoly
    epsilon: float
    bound: float
    averaging_error: float
    sup_error: float
    clipping: float


def window_mean(f: Callable, n: float, theta, nodes: int = 2001) -> np.ndarray:
    """(n/2) int_{theta-1/n}^{theta+1/n} f."""
    from scipy.integrate import simpson
    theta = np.atleast_1d(np.asarray(theta, float))
    u = np.linspace(-1 / n, 1 / n, nodes)
    vals = f(np.add.outer(theta, u))
    return simpson(vals, x=u, axis=-1) * n / 2


def approximate_continuous(f: Callable, J: int, n: float, grid: int = 2000,
                           fourier: TrigPoly | None = None) -> Approximation:
    """Finite-spin quantum model of a continuous box 0 <= f <= 1.

    State: the boxcar of half-width 1/n around 0, truncated to |j| <= J and
    renormalized.  Effect: the compression of multiplication by f, entries
    a_{j-k}(f).  The model reproduces the window mean of f to within sqrt(eps).
    """
    from .trigpoly import fourier_project
    if J < 1 or n < 1:
        raise ValueError("need J >= 1 and n >= 1")
    dim = 2 * J + 1
    if fourier is None:
        fourier = fourier_project(f, 2 * J, tol=1e-12)
    fa = fourier.pad(max(2 * J, fourier.degree)).to_complex()
    mid = fa.size // 2
    j = np.arange(-J, J + 1)
    P = np.array([[fa[mid + (a - b)] if abs(a - b) <= mid else 0.0 for b in j] for a in j])
    # basis index m <-> j = m - J, so Z = diag(-j) reads J..-J
    amp = boxcar_amplitudes(J, n)
    eps = boxcar_tail(J, n)
    psi = amp / np.linalg.norm(amp)
    P = _herm(P)
    w, v = np.linalg.eigh(P)
    wc = np.clip(w, 0.0, 1.0)
    clip = float(np.max(np.abs(w - wc)))
    Ep = (v * wc) @ v.conj().T
    r = QuantumRealization(psi, [Ep, np.eye(dim) - Ep], 2 * J)
    # U_theta psi_j = e^{-i j theta} psi_j matches index order j = -J..J with
    # eigenvalue -j, which is z_m = J - m after reversing; flip to our order
    flip = np.eye(dim)[::-1]
    r = QuantumRealization(flip @ psi, [flip @ e @ flip for e in r.povm], 2 * J)
    q = born_polynomial(r, 0, check=False)
    th = np.linspace(0, 2 * np.pi, grid, endpoint=False)
    avg = float(np.max(np.abs(f(th) - window_mean(f, n, th))))
    sup = float(np.max(np.abs(f(th) - evaluate(q, th))))
    return Approximation(r, q, eps, float(np.sqrt(eps)), avg, sup, clip)
