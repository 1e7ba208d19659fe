"""Bundled reference boxes, Gram certificates and witnesses.

Certificates are stored as strings ("377/2400", "-35/2438-95/2314i",
"0.0032-0.0459i") so rationals stay exact until they are turned into floats.
Entry [6, 0] of S at J = 3 is stored as -0.1242i: with [0, 6] = +0.1242i that is
the only choice that keeps S Hermitian.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

import numpy as np

from .rset import Certificate
from .trigpoly import TrigPoly, extrema

INV_SQRT3 = 1 / np.sqrt(3)
EXACT_TOL = 1e-12
PRINTED_TOL = 5e-4


class FixtureError(ValueError):
    pass


def parse_number(text: str) -> Fraction:
    return Fraction(text.strip()) if text.strip() else Fraction(0)


def parse_complex(text: str) -> tuple:
    """'a+bi' with rational or decimal parts -> (Fraction re, Fraction im)."""
    t = text.replace(" ", "")
    if not t.endswith("i"):
        return parse_number(t), Fraction(0)
    body = t[:-1]
    # split at the last sign that is not the leading one
    cut = max(body.rfind("+", 1), body.rfind("-", 1))
    if cut <= 0:
        re_part, im_part = "", body
    else:
        re_part, im_part = body[:cut], body[cut:]
    # "-3/25i" means -(3/25) i
    if im_part in ("", "+", "-"):
        im_part += "1"
    return parse_number(re_part), parse_number(im_part)


def parse_matrix(rows, scale: str = "1") -> np.ndarray:
    s = Fraction(scale)
    out = np.zeros((len(rows), len(rows)), dtype=complex)
    for i, row in enumerate(rows):
        if len(row) != len(rows):
            raise FixtureError(f"row {i} has {len(row)} entries, expected {len(rows)}")
        for j, e in enumerate(row):
            r, im = parse_complex(e)
            out[i, j] = float(r * s) + 1j * float(im * s)
    return out


def value_of(p: TrigPoly) -> float:
    """c_{2J-1} + s_{2J}."""
    d = p.degree
    return p.coefficient("c", d - 1) + p.coefficient("s", d)


@dataclass
class Fixture:
    name: str
    two_j: int
    poly: TrigPoly | None = None
    certificate: Certificate | None = None
    exact: bool = True
    expected: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    report: dict = field(default_factory=dict)

    @property
    def tolerance(self) -> float:
        return EXACT_TOL if self.exact else PRINTED_TOL

    def verify(self, tol: float | None = None) -> dict:
        tol = self.tolerance if tol is None else tol
        rep = {"name": self.name, "two_j": self.two_j, "tol": tol}
        if self.poly is not None:
            lo, _, hi, _ = extrema(self.poly)
            rep.update(min=lo, max=hi, value=value_of(self.poly))
        if self.certificate is not None:
            chk = self.certificate.check(self.poly, tol)
            rep["certificate"] = chk
            rep["reconstructed_value"] = value_of(self.certificate.polynomial().pad(self.two_j))
            rep["above_quantum"] = rep["reconstructed_value"] > INV_SQRT3
        rep["passed"] = self._passed(rep, tol)
        self.report = rep
        return rep

    def _passed(self, rep, tol):
        ok = True
        if "certificate" in rep:
            ok &= rep["certificate"]["passed"] and rep["above_quantum"]
        if self.extra.get("range_valid_required", False):
            ok &= rep["min"] >= -tol and rep["max"] <= 1 + tol
        if "value" in self.expected:
            ok &= abs(rep["value"] - float(Fraction(self.expected["value"]))) <= tol
        return bool(ok)


def _poly_from_strings(c, s) -> TrigPoly:
    return TrigPoly([float(parse_number(x)) for x in c], [float(parse_number(x)) for x in s])


def pstar_family(two_j: int, beta: float = 1.0) -> TrigPoly:
    """a_0 = 1/2, a_{2J} = -i/8 and two alternating (-1/4)^m tails, scaled by beta."""
    if two_j < 3:
        raise ValueError("family starts at J = 3/2")
    d = two_j
    a = np.zeros(d + 1, dtype=complex)
    a[d] = -1j / 8
    J = d / 2
    for m in range(int(np.floor(J - 1)) + 1):
        k = d - 1 - 2 * m
        if k >= 1:
            a[k] = 3 / 16 * (-0.25) ** m
    for l in range(int(np.ceil(J - 2)) + 1):
        k = d - 2 - 2 * l
        if k >= 1:
            a[k] = -3j / 32 * (-0.25) ** l
    a[1:] *= beta
    a[0] = 0.5
    return TrigPoly.from_positive_complex(a)


def safe_beta(two_j: int) -> float:
    return 1.0 / (1.0 + 9.0 * 4.0 ** (-two_j / 2))


def _raw():
    with resources.files("rotbox").joinpath("data", "fixtures.json").open() as fh:
        return json.load(fh)


def _gallery():
    from . import qset
    items = {
        "sin2": qset.sin2(),
        "sin4_half": qset.sin4_half(),
        "sin4_half_tilde": qset.tilde(qset.sin4_half(), 0.0, np.pi),
    }
    for label, t1 in (("three_quarter_pi", 3 * np.pi / 4), ("five_quarter_pi", 5 * np.pi / 4)):
        p = qset.general_extremal(t1)
        items[f"general_{label}"] = p
        items[f"general_{label}_tilde"] = qset.tilde(p, 0.0, t1)
    return items


def load_fixtures(verify: bool = True, raw: dict | None = None) -> list:
    from .qset import gap_witness_matrices
    raw = _raw() if raw is None else raw
    out = []
    for name, obj in raw.items():
        poly = _poly_from_strings(obj["c"], obj["s"])
        if obj["kind"] == "polynomial":
            fx = Fixture(name, obj["two_j"], poly, expected=obj.get("expected", {}),
                         extra={"range_valid_required": True})
        else:
            cert = Certificate(parse_matrix(obj["Q"], obj.get("scale", "1")),
                               parse_matrix(obj["S"], obj.get("scale", "1")))
            fx = Fixture(name, obj["two_j"], poly, cert, exact=obj["exact"],
                         expected=obj.get("expected", {}))
        out.append(fx)
    for two_j in (7, 8, 9, 10):
        out.append(Fixture(f"pstar_family_{two_j}", two_j, pstar_family(two_j),
                           expected={"value": "5/8"}, extra={"range_valid_required": True}))
        b = safe_beta(two_j)
        out.append(Fixture(f"pstar_family_scaled_{two_j}", two_j, pstar_family(two_j, b),
                           exact=True, extra={"range_valid_required": True, "beta": b}))
    E, rho = gap_witness_matrices()
    out.append(Fixture("gap_witness", 3, extra={"E": E, "rho": rho}))
    for name, p in _gallery().items():
        out.append(Fixture(f"r1_{name}", 2, p, extra={"range_valid_required": True}))
    if verify:
        for fx in out:
            fx.verify()
            if fx.name == "gap_witness":
                fx.report.update(_witness_report(fx.extra["E"], fx.extra["rho"]))
    return out


def _witness_report(E, rho) -> dict:
    from .qset import m_operator
    ev = np.linalg.eigvalsh(E)
    val = float(np.trace(m_operator(E) @ rho).real)
    ok = ev[0] >= -1e-12 and ev[-1] <= 1 + 1e-12 and abs(val - INV_SQRT3) <= 1e-12 \
        and abs(np.trace(rho).real - 1) <= 1e-12 and np.linalg.eigvalsh(rho)[0] >= -1e-12
    return {"value": val, "passed": bool(ok)}


def get_fixture(name: str, verify: bool = True) -> Fixture:
    for fx in load_fixtures(verify):
        if fx.name == name:
            return fx
    raise KeyError(name)
