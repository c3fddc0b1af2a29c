"""``levy-lab`` command line.

Exit codes: 0 success / all checks pass, 1 a check failed, 2 usage error.
Floats are printed with 15 significant digits so repeated runs are
byte-identical.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from . import dispersion as disp
from . import hamiltonians as ham
from . import smalldense as sd
from .clifford import (REPRESENTATIONS, Check, ValidationReport, build_eta_set,
                       build_gamma_rep, build_lorentz_transform, verify_clifford,
                       verify_eta, verify_transform)
from .lagrangian import KINDS, build_lagrangian, decompose_residual, lorentz_violation

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

AXES = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}


class UsageError(Exception):
    pass


def fmt(x) -> str:
    return format(float(x) + 0.0, ".15g")  # + 0.0 folds -0.0 into 0.0


def _num(x):
    """Round to 15 significant digits; the JSON encoder then prints it shortest."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x!r} in output")
    return float(fmt(x))


def _cplx(z):
    z = complex(z)
    return {"re": _num(z.real), "im": _num(z.imag)}


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return _cplx(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return obj


def envelope(command, inputs, results, passed=True):
    return {
        "command": command,
        "input": inputs,
        "results": results,
        "passed": passed,
        "version": __version__,
    }


def dump_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# argument parsing


def _vec3(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y,z but got {text!r}")
    try:
        vals = tuple(float(s) for s in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"non-numeric component in {text!r}") from None
    if not all(math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError(f"non-finite component in {text!r}")
    return vals


def _vec2c(text):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected a,b but got {text!r}")
    try:
        return tuple(complex(s.replace("i", "j")) for s in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad component in {text!r}") from None


def _axis(text):
    if text in AXES:
        return AXES[text]
    vec = _vec3(text)
    norm = math.sqrt(sum(v * v for v in vec))
    if norm == 0:
        raise argparse.ArgumentTypeError("axis must be non-zero")
    return tuple(v / norm for v in vec)


def _finite(text):
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(val):
        raise argparse.ArgumentTypeError(f"not finite: {text!r}")
    return val


def _positive(text):
    val = _finite(text)
    if val <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return val


def _nonneg_int(text):
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if val < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0: {text!r}")
    return val


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levy-lab",
        description="Spectra, eps-flows and Lorentz checks for the Dirac and "
                    "Levy-Leblond Hamiltonians.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt_choices=("json",)):
        p.add_argument("--rep", choices=REPRESENTATIONS, default="dirac")
        p.add_argument("--m", type=_positive, default=1.0)
        p.add_argument("--p", type=_vec3, default=(0.0, 0.0, 0.0),
                       help="momentum as x,y,z")
        p.add_argument("--format", choices=fmt_choices, default="json")
        p.add_argument("--output", default="-", help="output path, '-' for stdout")

    p = sub.add_parser("verify", help="run the invariant suites")
    common(p)
    p.add_argument("--eps", type=_positive, default=1e-6)

    p = sub.add_parser("spectrum", help="eigenvalues of H_D, H_L or H'")
    common(p)
    p.add_argument("--hamiltonian", choices=("dirac", "levy", "residual"), default="levy")
    p.add_argument("--eps", type=_positive, default=1e-6)

    p = sub.add_parser("flow", help="track H_L eigenvalues as eps -> 0")
    common(p, ("json", "csv"))
    p.add_argument("--eps-start", type=_positive, default=1e-2)
    p.add_argument("--eps-end", type=_positive, default=1e-8)
    p.add_argument("--points", type=_nonneg_int, default=13)
    p.add_argument("--summary", default=None,
                   help="with --format csv: where to write the fit summary JSON "
                        "(default stderr)")

    p = sub.add_parser("series", help="non-relativistic expansion table")
    p.add_argument("--m", type=_positive, default=1.0)
    p.add_argument("--p", type=_finite, default=0.5, help="momentum magnitude")
    p.add_argument("--order", type=_nonneg_int, default=8)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output", default="-")

    p = sub.add_parser("pencil", help="finite spectrum and spinor of the Levy-Leblond pencil")
    common(p)
    p.add_argument("--chi", type=_vec2c, default=(1.0, 0.0), help="upper 2-spinor a,b")

    p = sub.add_parser("boost", help="Lorentz-violation norms of a Lagrangian")
    common(p)
    p.add_argument("--lagrangian", choices=KINDS, default="residual")
    p.add_argument("--rapidity", type=_finite, default=0.1)
    p.add_argument("--axis", type=_axis, default=AXES["x"], help="x, y, z or a,b,c")
    return parser


def _inputs(args):
    skip = {"command", "output", "summary"}
    return {k: list(v) if isinstance(v, tuple) else v
            for k, v in vars(args).items() if k not in skip}


# ---------------------------------------------------------------------------
# commands


def _spectral_checks(spec: ham.HamiltonianSpec):
    checks = []
    m, p2 = spec.m, spec.p2
    dvals = sd.eigenvalues(ham.build_dirac_h(spec)).values
    e = math.sqrt(p2 + m * m)
    expect = np.array([-e, -e, e, e])
    checks.append(Check("spectrum[dirac]",
                        float(np.max(np.abs(dvals - expect)) / e), 1e-10))

    hr = ham.build_residual_h(spec)
    rvals = sd.eigenvalues(hr).values
    big = -m - m / spec.eps
    expect = np.array([big, big, m, m])
    floor = 10 * sd.EPS * float(np.linalg.norm(hr)) / m
    checks.append(Check("spectrum[residual]",
                        float(np.max(np.abs(rvals - expect) / np.abs(expect))), 1e-9 + floor))

    if not spec.complex_regime:
        h = ham.build_levy_h(spec)
        lvals = sd.eigenvalues(h).values
        closed = ham.closed_form_levy_eigs(spec).values
        scale = np.maximum(np.abs(closed), 1.0)
        # ||H_L|| ~ m/eps, so small eps lifts the attainable floor above 1e-9
        floor = 10 * sd.EPS * float(np.linalg.norm(h))
        checks.append(Check("spectrum[levy-closed-form]",
                            float(np.max(np.abs(lvals - closed) / scale)), 1e-9 + floor))

    pen = ham.pencil_spectrum(spec.rep, spec.p, m).values
    checks.append(Check("pencil[p2/2m]",
                        float(np.max(np.abs(pen - p2 / (2 * m)))), 1e-10))
    return checks


def cmd_verify(args):
    rep = build_gamma_rep(args.rep)
    spec = ham.HamiltonianSpec(rep, args.p, args.m, args.eps)
    suites = {
        "clifford": verify_clifford(rep),
        "eta": verify_eta(build_eta_set(rep)),
        "decomposition": decompose_residual(rep, args.m),
        "spectral": ValidationReport(_spectral_checks(spec)),
        "covariance": verify_transform(build_lorentz_transform(0.3, AXES["x"], rep)),
    }
    passed = all(s.passed for s in suites.values())
    results = {name: {"passed": s.passed, "checks": s.as_dicts()}
               for name, s in suites.items()}
    return dump_json(envelope("verify", _inputs(args), results, passed)), passed


def _spectrum_payload(spectrum):
    rows = []
    for e in spectrum.entries:
        row = {"value": e.value, "branch": e.branch}
        if e.renormalized is not None:
            row["renormalized"] = e.renormalized
        rows.append(row)
    return rows


def cmd_spectrum(args):
    spec = ham.HamiltonianSpec(build_gamma_rep(args.rep), args.p, args.m, args.eps)
    spectrum = ham.hamiltonian_spectrum(args.hamiltonian, spec)
    results = {
        "hamiltonian": args.hamiltonian,
        "eigenvalues": _spectrum_payload(spectrum),
        "complex_regime": spectrum.complex_regime,
    }
    return dump_json(envelope("spectrum", _inputs(args), results)), True


FLOW_COLUMNS = ("eps", "branch", "re", "im", "renormalized_re", "renormalized_im")


def flow_rows(flow: ham.FlowResult):
    """CSV rows, descending eps then branch index."""
    renorm = [flow.renormalized_trajectory(b) for b in range(len(flow.classification))]
    for k, eps in enumerate(flow.eps_grid):
        for b in range(len(flow.classification)):
            z = flow.trajectories[b, k]
            r = renorm[b]
            yield (fmt(eps), str(b), fmt(z.real), fmt(z.imag),
                   "" if r is None else fmt(r[k].real),
                   "" if r is None else fmt(r[k].imag))


def flow_summary(flow: ham.FlowResult):
    return [{
        "branch": b,
        "classification": flow.classification[b],
        "c_minus1": f.c_minus1,
        "c0": f.c0,
        "c1": f.c1,
        "rms_residual": f.rms_residual,
        "renormalized_at_eps_min": flow.renormalized[b],
    } for b, f in enumerate(flow.fits)]


def cmd_flow(args, err):
    if not args.eps_start > args.eps_end:
        raise UsageError("--eps-start must be greater than --eps-end")
    if args.points < 4:
        raise UsageError("--points must be at least 4")
    grid = np.logspace(math.log10(args.eps_start), math.log10(args.eps_end), args.points)
    flow = ham.flow_analysis(args.rep, args.p, args.m, grid)
    summary = flow_summary(flow)
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(FLOW_COLUMNS)
        writer.writerows(flow_rows(flow))
        text = dump_json(envelope("flow", _inputs(args), {"fits": summary}))
        if args.summary:
            with open(args.summary, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            err.write(text)
        return buf.getvalue(), True
    rows = [dict(zip(FLOW_COLUMNS, r)) for r in flow_rows(flow)]
    results = {"fits": summary, "rows": rows}
    return dump_json(envelope("flow", _inputs(args), results)), True


SERIES_COLUMNS = ("k", "term", "partial_sum", "abs_error", "truncation_bound",
                  "eprime_plus", "eprime_minus", "non_convergent")


def series_rows(p, m, order):
    """One row per retained order k; truncation_bound is |term k+1|."""
    series = disp.nr_series(p, m, order)
    ahead = disp.nr_series(p, m, order + 1).terms
    exact = math.hypot(p, m)
    e_plus = disp.residual_eprime(disp.DispersionInput(p, m, disp.PLUS))
    e_minus = disp.residual_eprime(disp.DispersionInput(p, m, disp.MINUS))
    rows = []
    for k, term in enumerate(series.terms):
        acc = math.fsum(series.terms[:k + 1])
        bound = abs(ahead[k + 1])
        rows.append({
            "k": k,
            "term": term,
            "partial_sum": acc,
            "abs_error": abs(exact - acc),
            "truncation_bound": bound,
            "eprime_plus": e_plus,
            "eprime_minus": e_minus,
            "non_convergent": not series.convergent,
        })
    return rows


def cmd_series(args):
    if args.p < 0:
        raise UsageError("--p is a magnitude and must be >= 0")
    rows = series_rows(args.p, args.m, args.order)
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SERIES_COLUMNS)
        for r in rows:
            writer.writerow([
                str(r["k"]), fmt(r["term"]), fmt(r["partial_sum"]), fmt(r["abs_error"]),
                fmt(r["truncation_bound"]), fmt(r["eprime_plus"]), fmt(r["eprime_minus"]),
                "1" if r["non_convergent"] else "0"])
        return buf.getvalue(), True
    results = {"exact": math.hypot(args.p, args.m), "rows": rows}
    return dump_json(envelope("series", _inputs(args), results)), True


def cmd_pencil(args):
    spectrum = ham.pencil_spectrum(args.rep, args.p, args.m)
    u = ham.levy_spinor(args.rep, args.p, args.m, args.chi)
    residual = ham.levy_residual(args.rep, args.p, args.m, u)
    bound = 1e-12 * (args.m + math.sqrt(sum(c * c for c in args.p)))
    results = {
        "finite_eigenvalues": [e.value for e in spectrum.entries],
        "spinor": [complex(c) for c in u],
        "residual": residual,
        "residual_bound": bound,
    }
    passed = residual <= bound
    return dump_json(envelope("pencil", _inputs(args), results, passed)), passed


def cmd_boost(args):
    rep = build_gamma_rep(args.rep)
    t = build_lorentz_transform(args.rapidity, args.axis, rep)
    report = lorentz_violation(build_lagrangian(args.lagrangian, rep, args.m), t)
    results = {"lagrangian": args.lagrangian, **report.as_dict()}
    return dump_json(envelope("boost", _inputs(args), results)), True


def main(argv=None, stdout=None, stderr=None) -> int:
    out = stdout or sys.stdout
    err = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        if args.command == "flow":
            text, passed = cmd_flow(args, err)
        else:
            handler = {
                "verify": cmd_verify,
                "spectrum": cmd_spectrum,
                "series": cmd_series,
                "pencil": cmd_pencil,
                "boost": cmd_boost,
            }[args.command]
            text, passed = handler(args)
    except (UsageError, ValueError, sd.SingularMatrixError, sd.NotReducibleError) as exc:
        err.write(f"levy-lab {args.command}: error: {exc}\n")
        return EXIT_USAGE
    except (ham.TrackingError, sd.ConvergenceError) as exc:
        err.write(f"levy-lab {args.command}: failed: {exc}\n")
        return EXIT_FAIL
    if args.output == "-":
        out.write(text)
    else:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return EXIT_OK if passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
