"""The general spin-J correlation set R_J.

p is in R_J iff 0 <= p <= 1 and deg p <= 2J.  Membership is decided by a
Gram-pair SDP: there are PSD (2J+1)x(2J+1) matrices Q, S, indexed 0..2J, with

    a_k = sum_j Q_{j,j+k}            (all k)
    a_k = -sum_j S_{j,j+k}           (k != 0)
    1 - a_0 = Tr S

Q certifies p >= 0 and S certifies 1 - p >= 0.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import sdp
from .trigpoly import TrigPoly, extrema

log = logging.getLogger(__name__)

CERT_TOL = 1e-7


class NormalizationViolation(ValueError):
    pass


class SolverFailure(RuntimeError):
    pass


def spin_dim(two_j: int) -> int:
    return int(two_j) + 1


def band(Q, k: int) -> complex:
    """sum_j Q_{j,j+k}."""
    return complex(np.trace(np.asarray(Q), offset=k))


def bands(Q) -> np.ndarray:
    """a_0..a_d read off a Gram matrix."""
    return np.array([band(Q, k) for k in range(np.asarray(Q).shape[0])])


def band_operators(dim: int, k: int):
    """Hermitian (R, I) with Tr(R Q) = Re band_k(Q), Tr(I Q) = Im band_k(Q)."""
    B = np.eye(dim, k=-k, dtype=complex)  # Tr(B Q) = sum_j Q_{j,j+k}
    return 0.5 * (B + B.conj().T), (B - B.conj().T) / 2j


def direction(two_j: int, **weights) -> np.ndarray:
    """Flat direction on (c_0, c_1, s_1, ..., c_2J, s_2J), e.g. c2=1, s3=1."""
    v = np.zeros(2 * two_j + 1)
    for key, w in weights.items():
        kind, k = key[0], int(key[1:])
        if k > two_j or kind not in "cs" or (kind == "s" and k == 0):
            raise ValueError(f"bad coefficient name {key!r} for 2J = {two_j}")
        v[0 if k == 0 else 2 * k - (kind == "c")] = w
    return v


def functional_weights(n) -> np.ndarray:
    """omega_k with n . flat(p) = Re sum_{k>=0} omega_k a_k."""
    n = np.asarray(n, dtype=float)
    d = (n.size - 1) // 2
    om = np.zeros(d + 1, dtype=complex)
    om[0] = n[0]
    om[1:] = 2 * n[1::2] + 2j * n[2::2]
    return om


@dataclass
class Certificate:
    Q: np.ndarray
    S: np.ndarray

    def polynomial(self) -> TrigPoly:
        return TrigPoly.from_positive_complex(bands(self.Q))

    def check(self, p: TrigPoly | None = None, tol: float = CERT_TOL) -> dict:
        Q, S = np.asarray(self.Q, complex), np.asarray(self.S, complex)
        dim = Q.shape[0]
        aq, as_ = bands(Q), bands(S)
        herm = max(np.max(np.abs(Q - Q.conj().T)), np.max(np.abs(S - S.conj().T)))
        link = np.abs(aq[1:] + as_[1:])
        trace = abs(as_[0].real - (1 - aq[0].real))
        target = np.zeros(0)
        if p is not None:
            target = np.abs(aq - p.pad(dim - 1).positive_complex())
        out = {
            "min_eig_Q": float(np.linalg.eigvalsh(0.5 * (Q + Q.conj().T))[0]),
            "min_eig_S": float(np.linalg.eigvalsh(0.5 * (S + S.conj().T))[0]),
            "hermitian_error": float(herm),
            "link_residual": float(np.max(link, initial=0.0)),
            "trace_residual": float(trace),
            "coefficient_residual": float(np.max(target, initial=0.0)),
        }
        out["passed"] = bool(
            out["min_eig_Q"] >= -tol and out["min_eig_S"] >= -tol
            and herm <= tol and out["link_residual"] <= tol
            and trace <= tol and out["coefficient_residual"] <= tol)
        return out

    def to_json(self):
        return {"Q": sdp._mat_json(self.Q), "S": sdp._mat_json(self.S)}

    @classmethod
    def from_json(cls, obj):
        return cls(sdp._mat_from_json(obj["Q"]), sdp._mat_from_json(obj["S"]))


@dataclass
class MembershipResult:
    feasible: bool
    certificate: Certificate | None = None
    certificates: list | None = None
    report: dict = field(default_factory=dict)
    solution: sdp.SDPSolution | None = None


def _fixed_coefficient_constraints(nblocks, bidx, dim, a_pos, sign=1.0):
    cons = []
    for k in range(dim):
        R, I = band_operators(dim, k)
        mats = [None] * nblocks
        mats[bidx] = R
        cons.append((list(mats), sign * a_pos[k].real))
        if k:
            mats = [None] * nblocks
            mats[bidx] = I
            cons.append((list(mats), sign * a_pos[k].imag))
    return cons


def _s_block_constraints(nblocks, sidx, dim, a_pos):
    cons = []
    for k in range(1, dim):
        R, I = band_operators(dim, k)
        for op, val in ((R, -a_pos[k].real), (I, -a_pos[k].imag)):
            mats = [None] * nblocks
            mats[sidx] = op
            cons.append((mats, val))
    mats = [None] * nblocks
    mats[sidx] = np.eye(dim)
    cons.append((mats, 1.0 - a_pos[0].real))
    return cons


def membership_problem(p: TrigPoly, two_j: int) -> sdp.SDPProblem:
    dim = spin_dim(two_j)
    a = p.pad(two_j).positive_complex()
    cons = _fixed_coefficient_constraints(2, 0, dim, a) + \
        _s_block_constraints(2, 1, dim, a)
    return sdp.SDPProblem([dim, dim], None, cons, sense="feasibility")


def _range_report(p: TrigPoly) -> dict:
    lo, tlo, hi, thi = extrema(p)
    rep = {"min": lo, "argmin": tlo, "max": hi, "argmax": thi}
    if lo < 0:
        rep["violation"] = f"p({tlo:.6f}) = {lo:.6g} < 0"
    elif hi > 1:
        rep["violation"] = f"p({thi:.6f}) = {hi:.6g} > 1"
    return rep


def membership(p: TrigPoly, two_j: int, tol: float = 1e-9) -> MembershipResult:
    """Decide p in R_J by the feasibility SDP."""
    if p.degree > two_j:
        raise ValueError(f"degree {p.degree} exceeds 2J = {two_j}")
    prob = membership_problem(p, two_j)
    sol = sdp.solve(prob, tol=tol)
    rep = _range_report(p)
    rep["status"] = sol.status
    if sol.status == sdp.OPTIMAL:
        cert = Certificate(sol.X[0], sol.X[1])
        rep["certificate_check"] = cert.check(p)
        return MembershipResult(True, cert, report=rep, solution=sol)
    if sol.status == sdp.INFEASIBLE:
        rep["phase_one_t"] = sol.phase_one_t
        rep["farkas"] = sdp.verify_farkas(prob, sol.farkas)
        return MembershipResult(False, report=rep, solution=sol)
    raise SolverFailure(f"membership SDP ended with status {sol.status}")


def membership_multi(polys, two_j: int, tol: float = 1e-9) -> MembershipResult:
    """Feasibility of an outcome tuple (P(a|.))_a in R_J^A."""
    polys = [q.pad(two_j) if q.degree <= two_j else None for q in polys]
    if any(q is None for q in polys):
        raise ValueError("polynomial degree exceeds 2J")
    n = len(polys)
    total = sum(polys[1:], polys[0])
    dev = abs(total.c[0] - 1.0)
    dev = max(dev, np.max(np.abs(total.c[1:]), initial=0.0),
              np.max(np.abs(total.s), initial=0.0))
    if dev > 1e-9:
        raise NormalizationViolation(f"outcome polynomials do not sum to 1 (off by {dev:.2e})")
    dim = spin_dim(two_j)
    nb = n  # n-1 Q blocks and one S block
    cons = []
    for i in range(n - 1):
        cons += _fixed_coefficient_constraints(nb, i, dim, polys[i].positive_complex())
    partial = sum(polys[1:n - 1], polys[0]) if n > 1 else TrigPoly.constant(0.0, two_j)
    cons += _s_block_constraints(nb, n - 1, dim, partial.positive_complex())
    prob = sdp.SDPProblem([dim] * nb, None, cons, sense="feasibility")
    sol = sdp.solve(prob, tol=tol)
    rep = {"status": sol.status, "ranges": [_range_report(q) for q in polys]}
    if sol.status == sdp.OPTIMAL:
        S = sol.X[-1]
        certs = [Certificate(Q, S) for Q in sol.X[:-1]]
        return MembershipResult(True, certificates=certs, report=rep, solution=sol)
    if sol.status == sdp.INFEASIBLE:
        return MembershipResult(False, report=rep, solution=sol)
    raise SolverFailure(f"multi-outcome SDP ended with status {sol.status}")


def objective_operator(n, dim: int) -> np.ndarray:
    """Hermitian C with Tr(C Q) = n . flat(p) when p is read off Q's bands."""
    n = np.asarray(n, dtype=float)
    if n.size != 2 * dim - 1:
        raise ValueError("direction length must be 4J+1")
    C = n[0] * np.eye(dim, dtype=complex)
    for k in range(1, dim):
        R, I = band_operators(dim, k)
        C = C + 2 * n[2 * k - 1] * R - 2 * n[2 * k] * I
    return C


def rotation_box_problem(n, two_j: int) -> sdp.SDPProblem:
    dim = spin_dim(two_j)
    cons = []
    for k in range(1, dim):
        R, I = band_operators(dim, k)
        cons.append(([R, R], 0.0))
        cons.append(([I, I], 0.0))
    cons.append(([np.eye(dim), np.eye(dim)], 1.0))
    return sdp.SDPProblem([dim, dim], [objective_operator(n, dim), None], cons)


@dataclass
class Optimum:
    value: float
    poly: TrigPoly
    certificate: Certificate
    solution: sdp.SDPSolution


def optimize_direction(n, two_j: int, tol: float = 1e-9) -> Optimum:
    """max n . (c, s) over R_J."""
    prob = rotation_box_problem(n, two_j)
    sol = sdp.solve(prob, tol=tol)
    if sol.status != sdp.OPTIMAL:
        raise SolverFailure(f"rotation-box SDP ended with status {sol.status}")
    cert = Certificate(sol.X[0], sol.X[1])
    return Optimum(sol.objective, cert.polynomial(), cert, sol)


@dataclass
class SweepPoint:
    phi: float
    value: float
    poly: TrigPoly | None
    status: str


def boundary_sweep(v1, v2, two_j: int, num_angles: int = 64,
                   tol: float = 1e-8, workers: int = 1) -> list:
    """Support function of R_J along cos(phi) v1 + sin(phi) v2."""
    v1, v2 = np.asarray(v1, float), np.asarray(v2, float)
    if num_angles < 3:
        raise ValueError("num_angles must be at least 3")
    if np.linalg.matrix_rank(np.vstack([v1, v2])) < 2:
        raise ValueError("v1 and v2 must be linearly independent")
    phis = 2 * np.pi * np.arange(num_angles) / num_angles

    def one(phi):
        try:
            opt = optimize_direction(np.cos(phi) * v1 + np.sin(phi) * v2, two_j, tol)
            return SweepPoint(float(phi), opt.value, opt.poly, "optimal")
        except SolverFailure as exc:
            log.warning("sweep angle %.4f failed: %s", phi, exc)
            return SweepPoint(float(phi), float("nan"), None, "failed")

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(one, phis))
    return [one(phi) for phi in phis]


def sweep_rows(points) -> list:
    rows = []
    for pt in points:
        coeffs = pt.poly.flat().tolist() if pt.poly is not None else []
        rows.append([pt.phi, pt.value] + coeffs)
    return rows


def sweep_header(two_j: int) -> list:
    names = ["c0"]
    for k in range(1, two_j + 1):
        names += [f"c{k}", f"s{k}"]
    return ["phi", "value"] + names


def toeplitz_matrix(point) -> np.ndarray:
    x = np.asarray(point, dtype=float).reshape(-1)
    if x.size % 2:
        raise ValueError("point length must be even")
    d = x.size // 2
    z = np.concatenate([[1.0], x[0::2] + 1j * x[1::2]])
    T = np.empty((d + 1, d + 1), dtype=complex)
    for j in range(d + 1):
        for k in range(d + 1):
            T[j, k] = z[k - j] if k >= j else np.conj(z[j - k])
    return T


def toeplitz_membership(point, tol: float = 1e-9) -> bool:
    """Is (1, point) in the Caratheodory orbitope (= the state space)?"""
    return bool(np.linalg.eigvalsh(toeplitz_matrix(point))[0] >= -tol)


def dual_membership_value(point, tol: float = 1e-9) -> float:
    """min over effects e in R_d of e . (1, point); >= 0 iff the point is a state."""
    x = np.asarray(point, dtype=float)
    d = x.size // 2
    omega = np.concatenate([[1.0], x])
    return -optimize_direction(-omega, d, tol).value
