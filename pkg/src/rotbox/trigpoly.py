"""Real trigonometric polynomials on the circle.

A polynomial of degree d is stored in the real view

    p(theta) = c_0 + sum_k (c_k cos(k theta) + s_k sin(k theta)),   k = 1..d

and the complex view a_{-d}..a_d (a_0 = c_0, c_k = 2 Re a_k, s_k = -2 Im a_k,
a_{-k} = conj(a_k)) is computed on demand.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

TWO_PI = 2.0 * np.pi


class HermitianSymmetryError(ValueError):
    pass


class QuadratureError(RuntimeError):
    pass


def _frozen(x, n=None):
    arr = np.array(x, dtype=float).reshape(-1)
    if n is not None and arr.size != n:
        raise ValueError(f"expected {n} coefficients, got {arr.size}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TrigPoly:
    """Degree-d real trigonometric polynomial (d = 2J)."""

    c: np.ndarray
    s: np.ndarray

    def __init__(self, c, s=None):
        c = _frozen(c)
        if c.size == 0:
            raise ValueError("c must hold at least c_0")
        d = c.size - 1
        s = _frozen(np.zeros(d) if s is None else s, d)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "s", s)

    @property
    def degree(self) -> int:
        return self.c.size - 1

    two_j = degree

    # constructors

    @classmethod
    def constant(cls, value: float, degree: int = 0) -> "TrigPoly":
        c = np.zeros(degree + 1)
        c[0] = value
        return cls(c)

    @classmethod
    def from_complex(cls, a, tol: float = 1e-12) -> "TrigPoly":
        """Build from a_{-d}..a_d (length 2d+1)."""
        a = np.asarray(a, dtype=complex).reshape(-1)
        if a.size % 2 != 1:
            raise ValueError("complex coefficient vector must have odd length")
        d = a.size // 2
        pos, neg = a[d:], a[d::-1]
        bad = np.max(np.abs(pos - np.conj(neg))) if d else abs(a[0].imag)
        if bad > tol:
            raise HermitianSymmetryError(
                f"a_(-k) != conj(a_k): deviation {bad:.3e}")
        c = np.empty(d + 1)
        c[0] = a[d].real
        c[1:] = 2.0 * pos[1:].real
        s = -2.0 * pos[1:].imag
        return cls(c, s)

    @classmethod
    def from_positive_complex(cls, a_pos) -> "TrigPoly":
        """Build from a_0..a_d only; a_0 must be real."""
        a_pos = np.asarray(a_pos, dtype=complex).reshape(-1)
        full = np.concatenate([np.conj(a_pos[:0:-1]), a_pos])
        full[a_pos.size - 1] = a_pos[0].real
        return cls.from_complex(full, tol=np.inf)

    @classmethod
    def from_flat(cls, v) -> "TrigPoly":
        """Inverse of ``flat``: (c_0, c_1, s_1, ..., c_d, s_d)."""
        v = np.asarray(v, dtype=float).reshape(-1)
        if v.size % 2 != 1:
            raise ValueError("flat vector must have odd length 2d+1")
        return cls(np.concatenate([v[:1], v[1::2]]), v[2::2])

    # views

    def to_complex(self) -> np.ndarray:
        d = self.degree
        a = np.empty(2 * d + 1, dtype=complex)
        a[d] = self.c[0]
        pos = 0.5 * (self.c[1:] - 1j * self.s)
        a[d + 1:] = pos
        a[:d] = np.conj(pos[::-1])
        return a

    def positive_complex(self) -> np.ndarray:
        """a_0..a_d."""
        return self.to_complex()[self.degree:]

    def flat(self) -> np.ndarray:
        """(c_0, c_1, s_1, c_2, s_2, ..., c_d, s_d), length 2d+1."""
        v = np.empty(2 * self.degree + 1)
        v[0] = self.c[0]
        v[1::2] = self.c[1:]
        v[2::2] = self.s
        return v

    def coefficient(self, kind: str, k: int) -> float:
        if k > self.degree:
            return 0.0
        if kind == "c":
            return float(self.c[k])
        if k == 0:
            return 0.0
        return float(self.s[k - 1])

    # arithmetic

    def pad(self, degree: int) -> "TrigPoly":
        if degree < self.degree:
            raise ValueError("cannot pad to a smaller degree")
        c = np.zeros(degree + 1)
        s = np.zeros(degree)
        c[: self.c.size] = self.c
        s[: self.s.size] = self.s
        return TrigPoly(c, s)

    def trimmed(self, tol: float = 0.0) -> "TrigPoly":
        d = self.degree
        while d > 0 and abs(self.c[d]) <= tol and abs(self.s[d - 1]) <= tol:
            d -= 1
        return TrigPoly(self.c[: d + 1], self.s[:d])

    def _pair(self, other):
        d = max(self.degree, other.degree)
        return self.pad(d), other.pad(d)

    def __add__(self, other):
        if not isinstance(other, TrigPoly):
            other = TrigPoly.constant(float(other))
        p, q = self._pair(other)
        return TrigPoly(p.c + q.c, p.s + q.s)

    __radd__ = __add__

    def __neg__(self):
        return TrigPoly(-self.c, -self.s)

    def __sub__(self, other):
        return self + (-other if isinstance(other, TrigPoly) else -float(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, lam):
        if isinstance(lam, TrigPoly):
            return self.product(lam)
        lam = float(lam)
        return TrigPoly(lam * self.c, lam * self.s)

    __rmul__ = __mul__

    def product(self, other: "TrigPoly") -> "TrigPoly":
        a = np.convolve(self.to_complex(), other.to_complex())
        return TrigPoly.from_complex(a, tol=1e-9)

    def shift(self, phi: float) -> "TrigPoly":
        """q(theta) = p(theta + phi)."""
        d = self.degree
        a = self.to_complex() * np.exp(1j * np.arange(-d, d + 1) * phi)
        return TrigPoly.from_complex(a, tol=np.inf)

    def reflect(self) -> "TrigPoly":
        """q(theta) = p(-theta)."""
        return TrigPoly(self.c, -self.s)

    def derivative(self) -> "TrigPoly":
        k = np.arange(1, self.degree + 1)
        return TrigPoly(np.concatenate([[0.0], k * self.s]), -k * self.c[1:])

    def allclose(self, other: "TrigPoly", atol: float = 1e-9) -> bool:
        p, q = self._pair(other)
        return bool(np.allclose(p.flat(), q.flat(), rtol=0.0, atol=atol))

    # evaluation

    def __call__(self, theta):
        return evaluate(self, theta)

    def to_json(self) -> dict:
        return {"two_j": self.degree, "c": self.c.tolist(), "s": self.s.tolist()}

    @classmethod
    def from_json(cls, obj) -> "TrigPoly":
        if isinstance(obj, str):
            obj = json.loads(obj)
        p = cls(obj["c"], obj.get("s", []))
        if "two_j" in obj and int(obj["two_j"]) != p.degree:
            raise ValueError("two_j does not match coefficient lengths")
        return p

    def __repr__(self):
        return f"TrigPoly(c={self.c.tolist()}, s={self.s.tolist()})"


def evaluate(p: TrigPoly, theta):
    theta = np.asarray(theta, dtype=float)
    k = np.arange(1, p.degree + 1)
    kt = np.multiply.outer(theta, k)
    out = p.c[0] + np.cos(kt) @ p.c[1:] + np.sin(kt) @ p.s
    return float(out) if out.ndim == 0 else out


def to_complex(p: TrigPoly) -> np.ndarray:
    return p.to_complex()


def from_complex(a, tol: float = 1e-12) -> TrigPoly:
    return TrigPoly.from_complex(a, tol)


def _critical_angles(p: TrigPoly) -> np.ndarray:
    # z^d p'(z) as an ordinary polynomial in z; its unit-circle roots are the
    # critical points.  Roots slightly off the circle are kept too: any extra
    # candidate angle only costs one evaluation, a missed one costs accuracy.
    d = p.degree
    a = p.to_complex()
    coeffs = 1j * np.arange(-d, d + 1) * a
    coeffs = np.trim_zeros(coeffs[::-1], "f")  # highest power first
    if coeffs.size <= 1:
        return np.zeros(0)
    scale = np.max(np.abs(coeffs))
    roots = np.roots(coeffs / scale)
    near = roots[np.abs(np.abs(roots) - 1.0) < 1e-3]
    ang = np.mod(np.angle(near), TWO_PI)
    dp, ddp = p.derivative(), p.derivative().derivative()
    for _ in range(3):
        h = evaluate(ddp, ang)
        ok = np.abs(h) > 1e-14
        ang = np.where(ok, ang - evaluate(dp, ang) / np.where(ok, h, 1.0), ang)
    return np.mod(ang, TWO_PI)


def extrema(p: TrigPoly):
    """Global (min, argmin, max, argmax) over [0, 2 pi)."""
    if p.degree == 0 or not np.any(p.c[1:]) and not np.any(p.s):
        return float(p.c[0]), 0.0, float(p.c[0]), 0.0
    grid = np.linspace(0.0, TWO_PI, 16 * p.degree + 1)[:-1]
    cand = np.concatenate([_critical_angles(p), grid])
    vals = evaluate(p, cand)
    i, j = int(np.argmin(vals)), int(np.argmax(vals))
    return float(vals[i]), float(cand[i]), float(vals[j]), float(cand[j])


def range_valid(p: TrigPoly, tol: float = 1e-10) -> bool:
    lo, _, hi, _ = extrema(p)
    return lo >= -tol and hi <= 1.0 + tol


def level_angles(p: TrigPoly, level: float, tol: float = 1e-7) -> np.ndarray:
    """Critical angles where p is within tol of ``level`` (touching points)."""
    cand = _critical_angles(p)
    vals = evaluate(p, cand) if cand.size else cand
    hits = np.sort(cand[np.abs(vals - level) < tol])
    if hits.size == 0:
        return hits
    keep = [hits[0]]
    for t in hits[1:]:
        if t - keep[-1] > 1e-5:
            keep.append(t)
    if len(keep) > 1 and keep[0] + TWO_PI - keep[-1] < 1e-5:
        keep.pop()
    return np.array(keep)


def fourier_project(f: Callable, d: int, tol: float = 1e-10,
                    max_nodes: int = 2 ** 22) -> TrigPoly:
    """Truncated Fourier series of a real function on the circle.

    Periodic trapezoid rule, doubling the node count until two successive
    estimates of every a_k agree to ``tol``.
    """
    if d < 0:
        raise ValueError("d must be nonnegative")
    def coeffs(n):
        t = TWO_PI * np.arange(n) / n
        vals = np.asarray(f(t), dtype=float) * np.ones(n)
        return np.fft.rfft(vals)[: d + 1] / n

    n = 8 * (d + 1)
    prev = coeffs(n)
    while True:
        n *= 2
        cur = coeffs(n)
        if np.max(np.abs(cur - prev)) <= tol:
            break
        if n >= max_nodes:
            raise QuadratureError(
                f"Fourier coefficients did not settle below {tol:g} "
                f"(last change {np.max(np.abs(cur - prev)):.2e})")
        prev = cur
    return TrigPoly.from_positive_complex(cur)
