"""Command-line front end.

Exit codes: 0 success, 1 an identity check failed, 2 bad input,
3 numerical failure (non-convergence, determinant class, guard band).
"""
import argparse
import json
import math
import sys

from . import analytic_1d as an1
from . import hilbert_complex as hc
from . import morse_smale as msm
from . import relative_anomaly as ra
from . import vn_core as vn

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


class InputError(Exception):
    pass


def _load_json(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        lines = text.splitlines()
        context = lines[exc.lineno - 1] if 0 < exc.lineno <= len(lines) else ""
        raise InputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}\n"
                         f"    {context}") from None


def _num(x):
    """Deterministic short form of a float for text output."""
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return repr(round(float(x), 12))


def _emit(text, path=None):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n"


def _floats(text, name):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"--{name} expects comma separated numbers") from None


# ---------------------------------------------------------------- commands

def cmd_fk_det(args):
    if not args.input:
        raise InputError("fk-det needs --input")
    try:
        op = vn.operator_from_dict(_load_json(args.input))
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"invalid operator: {exc}") from None
    tol = args.tolerance or vn.QUAD_RTOL
    res = vn.log_fk_det(op, rtol=tol)
    sd = vn.spectral_density(op)
    if args.grid:
        sd = vn.spectral_density(op, grid=vn.default_grid(sd.norm, per_decade=args.grid))
    det = res.det if res.determinant_class else float("nan")
    if args.output:
        sd.to_csv(args.output)
    if args.format == "json":
        _emit(_dumps({"det": det, "log_det": res.log_det, "alpha": str(sd.alpha),
                      "alpha_residual": sd.alpha.residual, "determinant_class": res.determinant_class,
                      "kernel_dim": sd.kernel_dim, "error_estimate": res.error_estimate,
                      "converged": res.converged, "tolerance": tol}))
    elif args.format == "csv" and not args.output:
        import io
        buf = io.StringIO()
        sd.to_csv(buf)
        _emit(buf.getvalue())
    else:
        _emit(f"det={_num(det)} alpha={sd.alpha} class={str(res.determinant_class).lower()}")
    if args.strict and (not res.determinant_class or not res.converged):
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_torsion(args):
    if not args.input:
        raise InputError("torsion needs --input")
    data = _load_json(args.input)
    try:
        if "orbits" in data:
            ms = msm.system_from_dict(data)
            errors = msm.check_ms_axioms(ms)
            if errors:
                raise InputError("invalid Morse system: " + "; ".join(errors))
            C = msm.build_ms_complex(ms)
        else:
            ms = None
            C = hc.complex_from_dict(data)
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"invalid complex: {exc}") from None
    errors = hc.validate(C)
    if errors:
        raise InputError("invalid complex: " + "; ".join(errors))
    report = hc.cohomology_report(C)
    out = report.to_dict()
    out["tolerance"] = {"kernel": vn.KERNEL_TOL, "quadrature": vn.QUAD_RTOL}
    if ms is not None:
        out["logT_ms"] = None if report.log_torsion is None else -report.log_torsion
        out["euler_characteristics"] = list(ra.euler_characteristics(ms))
    else:
        out["log_torsion"] = report.log_torsion
    if args.format == "csv":
        _emit(report.to_csv(), args.output)
    else:
        _emit(_dumps(out), args.output)
    if report.log_torsion is None and args.strict:
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_verify(args):
    if args.input:
        config = _load_json(args.input)
    else:
        config = {}
        if args.example:
            config["examples"] = [args.example]
        if args.suite:
            config["suites"] = [args.suite]
        if not config:
            raise InputError("verify needs --example, --suite or --input")
    if args.seed is not None:
        config["seed"] = args.seed
    if args.tolerance is not None:
        config["tolerances"] = {k: args.tolerance for k in ra.TOLERANCES}
    try:
        checks = ra.run_theorem_suite(config)
    except (ValueError, TypeError) as exc:
        raise InputError(f"invalid suite config: {exc}") from None
    if args.format == "json":
        _emit(ra.checks_to_json(checks), args.output)
    else:
        _emit(ra.checks_to_csv(checks), args.output)
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        line = f"{status} {c.check_id} [{c.label}] residual={c.residual:.3e} tol={c.tolerance:.0e}"
        if c.error:
            line += f" error={c.error}"
        print(line, file=sys.stderr)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


def cmd_witten(args):
    if args.input:
        try:
            sysd = an1.OneDSystem.from_dict(_load_json(args.input))
        except (KeyError, ValueError, TypeError) as exc:
            raise InputError(f"invalid system: {exc}") from None
    else:
        sysd = an1.OneDSystem.interval(0.0, 1.0)
    if sysd.base != "interval":
        raise InputError("the Witten deformation runs on an interval")
    ts = _floats(args.t, "t")
    if not ts or any(t < 0 for t in ts):
        raise InputError("--t needs nonnegative values")
    N = args.grid or 4000
    if N < 3:
        raise InputError("--grid must be at least 3")
    band = tuple(_floats(args.guard_band, "guard-band")) if args.guard_band else (0.5, 2.0)
    if len(band) != 2 or not 0 < band[0] <= 1.0 <= band[1]:
        raise InputError("--guard-band needs lo,hi with 0 < lo <= 1 <= hi")
    refine = 128 if args.refine is None else args.refine
    if refine < 0:
        raise InputError("--refine must be nonnegative")
    f = an1.example_morse_function(sysd.a, sysd.b)
    try:
        runs = [an1.witten_discretize(sysd, f, t, N, guard_band=band, refine=refine) for t in ts]
    except an1.WittenSplitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _emit(an1.runs_to_csv(runs), args.output)
    # small t carries Gaussian tail corrections outside the fitted basis
    positive = [(r.t, r.log_sm - r.log_vol) for r in runs if r.t >= args.fit_min]
    summary = {"max_split_residual": max(r.split_residual for r in runs),
               "small_rank": [r.small_rank for r in runs]}
    try:
        fit = an1.free_term_extract(positive)
        predicted = an1.small_torsion_free_term(0.0, [1], sysd.fiber_dim)
        summary.update(free_term=fit.free_term, predicted=predicted,
                       relative_error=abs(fit.free_term - predicted) / abs(predicted),
                       fit_residual=fit.residual, condition=fit.condition)
    except ValueError as exc:
        summary["free_term"] = None
        summary["note"] = str(exc)
    print(_dumps(summary), file=sys.stderr, end="")
    return EXIT_OK


COMMANDS = {"fk-det": cmd_fk_det, "torsion": cmd_torsion, "verify": cmd_verify,
            "witten": cmd_witten}


def build_parser():
    parser = argparse.ArgumentParser(prog="l2torsion",
                                     description="L2-torsion computations and identity checks")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--input")
        p.add_argument("--output")
        p.add_argument("--grid", type=int, help="samples per decade (fk-det) or nodes (witten)")
        p.add_argument("--refine", type=int, help="smallest singular values refined by bisection")
        p.add_argument("--guard-band", help="lo,hi band around the split threshold 1")
        p.add_argument("--tolerance", type=float)
        p.add_argument("--strict", action="store_true")
        p.add_argument("--seed", type=int)
        p.add_argument("--format", choices=("json", "csv"))
        if name == "verify":
            p.add_argument("--example", choices=("interval", "circle", "witten"))
            p.add_argument("--suite", choices=("combinatorial",))
        if name == "witten":
            p.add_argument("--t", default="0,20,50,70,100,140,200,300,500",
                           help="comma separated deformation parameters")
            p.add_argument("--fit-min", type=float, default=50.0,
                           help="smallest t used in the free term fit")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if args.tolerance is not None and not args.tolerance > 0:
        print("error: --tolerance must be positive", file=sys.stderr)
        return EXIT_INPUT
    if args.grid is not None and args.grid < 1:
        print("error: --grid must be positive", file=sys.stderr)
        return EXIT_INPUT
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except vn.QuadratureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except vn.NotDeterminantClass as exc:
        print(f"error: {exc} (degree {exc.degree})", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
