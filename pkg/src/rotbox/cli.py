"""Command-line front end.

Every subcommand prints one JSON document on stdout.  Sweeps can write CSV
instead (``--csv path``, or ``--csv -`` for stdout) and, with matplotlib
installed, a PNG next to the CSV (``--plot``).

Exit codes: 0 ok / feasible / verified, 1 infeasible / violated / failed
check, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import bell, fejer, fixtures, games, gpt, qset, rset, sdp
from .trigpoly import TrigPoly, evaluate, extrema, range_valid

log = logging.getLogger("rotbox")

OK, FAILED, USAGE, NUMERICAL = 0, 1, 2, 3
DEFAULT_SEED = 0

# errors that mean the numbers could not be trusted, as opposed to bad input
NUMERICAL_ERRORS = (rset.SolverFailure, sdp.SDPError, fejer.RootPairingFailure,
                    qset.NonMonotone, gpt.ResidualTooLarge, np.linalg.LinAlgError)


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("ROTBOX_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# JSON helpers


def jsonable(obj):
    if isinstance(obj, TrigPoly):
        return obj.to_json()
    if isinstance(obj, (rset.Certificate, qset.QuantumRealization)):
        return obj.to_json()
    if isinstance(obj, sdp.SDPSolution):
        return {"status": obj.status, "objective": obj.objective}
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k) if not isinstance(k, tuple) else ",".join(map(str, k)): jsonable(v)
                for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return jsonable(np.stack([obj.real, obj.imag], axis=-1))
        return obj.tolist()
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else None
    return obj


def _load_json(text: str):
    """Inline JSON, or a path to a JSON file."""
    path = Path(text)
    if path.suffix == ".json" or (path.exists() and path.is_file()):
        if not path.exists():
            raise UsageError(f"no such file: {text}")
        return json.loads(path.read_text())
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"not JSON and not a file: {text!r} ({exc.msg})") from None


def load_poly(text: str) -> TrigPoly:
    """--poly accepts inline JSON, a JSON file, or a bundled fixture name."""
    raw = fixtures._raw()
    if text in raw and raw[text]["kind"] == "polynomial":
        return fixtures.get_fixture(text, verify=False).poly
    obj = _load_json(text)
    try:
        return TrigPoly.from_json(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad polynomial: {exc}") from None


def parse_direction(text: str, two_j: int) -> np.ndarray:
    """'c2=1,s3=1' or a JSON list of length 4J+1."""
    text = text.strip()
    if text.startswith("["):
        v = np.asarray(json.loads(text), dtype=float)
        if v.size != 2 * two_j + 1:
            raise UsageError(f"direction needs {2 * two_j + 1} entries, got {v.size}")
        return v
    weights = {}
    for part in filter(None, text.split(",")):
        key, _, val = part.partition("=")
        weights[key.strip()] = float(val) if val else 1.0
    try:
        return rset.direction(two_j, **weights)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# ---------------------------------------------------------------------------
# CSV / plotting


def _write_csv(path: str, header, rows):
    if path == "-":
        w = csv.writer(sys.stdout)
        w.writerow(header)
        w.writerows(rows)
        return
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _plot(csv_path: str, header, rows, x: int, ys, title: str) -> str:
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        raise UsageError("--plot needs matplotlib (pip install rotbox[plot])") from None
    data = np.array(rows, dtype=float)
    fig, ax = plt.subplots(figsize=(5, 4))
    for j in ys:
        ax.plot(data[:, x], data[:, j], label=header[j])
    ax.set_xlabel(header[x])
    ax.set_title(title)
    if len(ys) > 1:
        ax.legend()
    out = str(Path(csv_path).with_suffix(".png"))
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def _table(args, header, rows, x, ys, title, payload):
    if args.plot and (not args.csv or args.csv == "-"):
        raise UsageError("--plot needs --csv with a file path")
    if args.csv:
        _write_csv(args.csv, header, rows)
        if args.csv == "-":
            return None
        payload["csv"] = args.csv
        if args.plot:
            payload["plot"] = _plot(args.csv, header, rows, x, ys, title)
    else:
        payload["rows"] = [dict(zip(header, r)) for r in rows]
    return payload


# ---------------------------------------------------------------------------
# subcommands; each returns (exit code, payload or None)


def cmd_membership(args):
    p = load_poly(args.poly)
    two_j = p.degree if args.two_j is None else args.two_j
    if p.degree > two_j:
        raise UsageError(f"polynomial degree {p.degree} exceeds 2J = {two_j}")
    res = rset.membership(p.pad(two_j), two_j, tol=args.tol)
    out = {"two_j": two_j, "feasible": res.feasible, "poly": p, "report": res.report}
    if res.feasible:
        out["certificate"] = res.certificate
    return (OK if res.feasible else FAILED), out


def cmd_optimize(args):
    n = parse_direction(args.direction, args.two_j)
    opt = rset.optimize_direction(n, args.two_j, tol=args.tol)
    chk = opt.certificate.check(opt.poly, 1e-6)
    return OK, {"two_j": args.two_j, "direction": n, "value": opt.value,
                "optimizer": opt.poly, "certificate": opt.certificate, "certificate_check": chk}


def cmd_boundary(args):
    v1 = parse_direction(args.v1, args.two_j)
    v2 = parse_direction(args.v2, args.two_j)
    try:
        pts = rset.boundary_sweep(v1, v2, args.two_j, args.num_angles, workers=_threads())
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    header = rset.sweep_header(args.two_j)
    width = len(header)
    rows = [r + [float("nan")] * (width - len(r)) for r in rset.sweep_rows(pts)]
    failed = sum(pt.status != "optimal" for pt in pts)
    payload = {"two_j": args.two_j, "v1": v1, "v2": v2, "failed_angles": failed}
    out = _table(args, header, rows, 0, [1], "support function", payload)
    return (NUMERICAL if failed else OK), out


def cmd_factor(args):
    p = load_poly(args.poly)
    try:
        fv = fejer.factorize(p)
    except fejer.NotNonnegative as exc:
        return FAILED, {"poly": p, "nonnegative": False, "error": str(exc)}
    th = np.linspace(0, 2 * np.pi, 10_000, endpoint=False)
    err = float(np.max(np.abs(np.abs(fv.q_values(th)) ** 2 - evaluate(p, th))))
    return OK, {"poly": p, "nonnegative": True, "b": fv.to_json(), "sup_error": err,
                "gram": fejer.gram_certificate(p)}


def cmd_seesaw(args):
    n = parse_direction(args.direction, args.two_j)
    res = qset.seesaw(n, args.two_j, restarts=args.restarts, seed=args.seed,
                      workers=_threads(), record=bool(args.trace_csv))
    if args.trace_csv:
        _write_csv(args.trace_csv, ["restart", "round", "after_state", "after_effect"], res.trace)
    return OK, {"two_j": args.two_j, "direction": n, "value": res.value,
                "best_restart": res.best_restart, "restart_values": res.restart_values,
                "polynomial": res.polynomial(), "rho": res.pair.rho, "E": res.pair.E,
                "seed": args.seed}


def _game_box(name, poly_text):
    if poly_text:
        p = load_poly(poly_text)
        return p, p
    if name == "quantum":
        g = qset.analytic_gap_bound(3)
        pair = qset.SchurPair(g.rho, g.E)
        return pair.polynomial(), pair.realization()
    if name == "general":
        opt = rset.optimize_direction(rset.direction(3, c2=1, s3=1), 3)
        return opt.poly, opt.poly
    if name == "half":
        p = TrigPoly.constant(0.5, 3)
        return p, p
    raise UsageError(f"unknown box {name!r}")


def cmd_game(args):
    poly, box = _game_box(args.box, args.poly)
    if poly.degree > 3:
        raise UsageError("game boxes have degree at most 3")
    try:
        analytic = games.game_success(poly)
    except games.MembershipFailure as exc:
        return FAILED, {"error": str(exc), "poly": poly}
    out = {"box": args.box if not args.poly else "poly", "analytic": analytic, "poly": poly}
    if args.trials:
        mc = games.game_monte_carlo(box, args.trials, seed=args.seed, workers=_threads())
        out.update(empirical=mc.empirical, stderr=mc.stderr, trials=mc.trials,
                   positive_fraction=mc.positive_fraction, seed=args.seed,
                   z_score=(mc.empirical - analytic) / mc.stderr if mc.stderr else None)
    return OK, out


def cmd_randomness_curve(args):
    if args.num < 2:
        raise UsageError("--num must be at least 2")
    rows = [list(r) for r in games.randomness_curve(args.two_j, args.alpha, args.num)]
    header = ["E1", "E2_lower", "E2_upper"]
    payload = {"two_j": args.two_j, "alpha": args.alpha,
               "delta": games.delta(args.two_j, args.alpha)}
    return OK, _table(args, header, rows, 0, [1, 2], "two-setting boundary", payload)


def cmd_certify(args):
    if args.fixture:
        try:
            fx = fixtures.get_fixture(args.fixture)
        except KeyError:
            raise UsageError(f"unknown fixture {args.fixture!r}") from None
        rep = fx.report
    else:
        obj = _load_json(args.certificate)
        cert = rset.Certificate.from_json(obj)
        p = TrigPoly.from_json(obj["poly"]) if "poly" in obj else None
        chk = cert.check(p, args.tol)
        rep = {"certificate": chk, "passed": chk["passed"],
               "reconstructed_value": fixtures.value_of(cert.polynomial())}
    return (OK if rep["passed"] else FAILED), rep


def cmd_bell_demo(args):
    rep = bell.pr_wiring_report()
    ok = (rep["no_signalling"] and rep["nonnegative"] and rep["conditional_degree_ok"]
          and rep["pr_table_error"] <= 1e-12 and rep["c0_error"] <= 1e-12
          and rep["normalization_error"] <= 1e-12 and not rep["unbiased"])
    rep["verified"] = bool(ok)
    return (OK if ok else FAILED), rep


def cmd_nagata(args):
    T = np.asarray(_load_json(args.tensor), dtype=float)
    try:
        res = bell.nagata_inequality(T, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return (FAILED if res.violated else OK), res


_APPROX_TARGETS = {
    "half": lambda t: 0.5 + 0 * np.asarray(t, float),
    "cos": lambda t: (1 + np.cos(t)) / 2,
}


def cmd_approx(args):
    if args.poly:
        p = load_poly(args.poly)
        if not range_valid(p):
            raise UsageError("target box must take values in [0, 1]")
        f = lambda t: evaluate(p, t)  # noqa: E731
    else:
        f = _APPROX_TARGETS[args.f]
    if args.J < 1 or args.n < 1:
        raise UsageError("need --J >= 1 and --n >= 1")
    a = qset.approximate_continuous(f, args.J, args.n)
    out = {"J": args.J, "n": args.n, "epsilon": a.epsilon, "bound": a.bound,
           "averaging_error": a.averaging_error, "sup_error": a.sup_error,
           "clipping": a.clipping, "within_bound": a.sup_error <= a.bound + a.averaging_error,
           "polynomial": a.polynomial}
    if args.csv:
        th = np.linspace(0, 2 * np.pi, 400, endpoint=False)
        rows = np.column_stack([th, f(th), evaluate(a.polynomial, th)]).tolist()
        out = _table(args, ["theta", "target", "model"], rows, 0, [1, 2],
                     f"J = {args.J}, n = {args.n}", out)
    return (OK if a.sup_error <= a.bound + a.averaging_error else FAILED), out


def cmd_fixtures(args):
    fxs = fixtures.load_fixtures()
    rows = []
    for fx in fxs:
        rep = fx.report
        rows.append({k: rep.get(k) for k in ("name", "two_j", "tol", "value", "min", "max",
                                              "reconstructed_value", "passed")})
        if args.full:
            rows[-1]["report"] = rep
    bad = [r["name"] for r in rows if not r["passed"]]
    return (FAILED if bad else OK), {"fixtures": rows, "failed": bad}


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="rotbox", description="Spin-J rotation-box correlation sets.")
    top.add_argument("-v", "--verbose", action="store_true", help="log to stderr")
    sub = top.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=fn)
        return p

    def sweep_opts(p):
        p.add_argument("--csv", help="write a CSV table (use - for stdout)")
        p.add_argument("--plot", action="store_true", help="also write a PNG next to the CSV")

    p = add("membership", cmd_membership, "decide p in R_J")
    p.add_argument("--poly", required=True, help="JSON, JSON file, or fixture name")
    p.add_argument("--two-j", type=int)
    p.add_argument("--tol", type=float, default=1e-9)

    p = add("optimize", cmd_optimize, "max of a linear functional over R_J")
    p.add_argument("--direction", required=True, help="e.g. c2=1,s3=1 or a JSON list")
    p.add_argument("--two-j", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-9)

    p = add("boundary", cmd_boundary, "support function over a 2-D slice")
    p.add_argument("--v1", required=True)
    p.add_argument("--v2", required=True)
    p.add_argument("--two-j", type=int, required=True)
    p.add_argument("--num-angles", type=int, default=64)
    sweep_opts(p)

    p = add("factor", cmd_factor, "Fejer-Riesz factorization")
    p.add_argument("--poly", required=True)

    p = add("seesaw", cmd_seesaw, "quantum lower bound by see-saw")
    p.add_argument("--direction", required=True)
    p.add_argument("--two-j", type=int, required=True)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--trace-csv", help="write the per-round objective trace")

    p = add("game", cmd_game, "sign-guessing game at J = 3/2")
    p.add_argument("--box", choices=["quantum", "general", "half"], default="quantum")
    p.add_argument("--poly", help="use this box instead")
    p.add_argument("--trials", type=int, default=0)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)

    p = add("randomness-curve", cmd_randomness_curve, "two-setting boundary over E1")
    p.add_argument("--two-j", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--num", type=int, default=101)
    sweep_opts(p)

    p = add("certify", cmd_certify, "check a Gram certificate")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--fixture")
    g.add_argument("--certificate", help="JSON with Q, S and optionally poly")
    p.add_argument("--tol", type=float, default=1e-9)

    add("bell-demo", cmd_bell_demo, "PR-box wiring report")

    p = add("nagata", cmd_nagata, "evaluate the planar Nagata inequality")
    p.add_argument("--tensor", required=True, help="nested JSON list or file")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)

    p = add("approx", cmd_approx, "finite-spin model of a continuous box")
    p.add_argument("--f", choices=sorted(_APPROX_TARGETS), default="cos")
    p.add_argument("--poly")
    p.add_argument("--J", type=int, required=True)
    p.add_argument("--n", type=float, default=10.0)
    sweep_opts(p)

    p = add("fixtures", cmd_fixtures, "verify every bundled fixture")
    p.add_argument("--full", action="store_true", help="include the full reports")
    return top


def run(argv=None):
    """Returns (exit code, payload).  payload is None when CSV went to stdout."""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return USAGE, {"error": str(exc), "kind": "usage"}
    if getattr(args, "verbose", False):
        logging.basicConfig(level=logging.INFO, stream=sys.stderr)
    try:
        code, payload = args.func(args)
    except UsageError as exc:
        return USAGE, {"error": str(exc), "kind": "usage"}
    except NUMERICAL_ERRORS as exc:
        return NUMERICAL, {"error": f"{type(exc).__name__}: {exc}", "kind": "numerical"}
    except (ValueError, KeyError) as exc:
        return USAGE, {"error": f"{type(exc).__name__}: {exc}", "kind": "usage"}
    return code, (None if payload is None else jsonable(payload))


def main(argv=None) -> int:
    code, payload = run(argv)
    if payload is not None:
        if "error" in payload:
            print(f"rotbox: {payload['error']}", file=sys.stderr)
        json.dump(payload, sys.stdout, indent=2)
        sys.stdout.write("\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
