"""Command-line interface: ``gaussline <command> ...``.

Every output starts with a header holding the library version and the
full run configuration.  Exit codes: 0 success, 1 numeric or resource
failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from fractions import Fraction
from typing import Optional

import numpy as np

from . import __version__
from .config import enumeration_budget
from .errors import BracketError, DomainError, GausslineError

FLOAT_FMT = ".17g"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# spec grammars

def parse_model(text: str):
    from . import measure as M
    from .potentials import TLogDeriv, parse_alphabet

    parts = text.strip().split(":", 3)
    kind = parts[0]
    try:
        if kind == "minkowski" and len(parts) == 1:
            return M.minkowski()
        if kind == "lebesgue" and len(parts) == 1:
            return M.lebesgue()
        if kind == "gauss" and len(parts) == 1:
            return M.gauss()
        if kind == "bernoulli" and len(parts) == 2:
            probs = [float(Fraction(tok)) for tok in parts[1].split(",") if tok.strip()]
            if abs(math.fsum(probs) - 1.0) > 1e-9:
                raise UsageError(f"bernoulli weights sum to {math.fsum(probs)}, not 1")
            return M.Bernoulli(tuple(probs))
        if kind == "bernoulli-tail" and len(parts) == 4 and parts[1] == "geometric":
            return M.geometric_bernoulli(float(Fraction(parts[2])), int(parts[3]))
        if kind == "potential" and len(parts) == 4 and parts[1] == "tlog":
            return M.from_potential(TLogDeriv(float(Fraction(parts[2]))), parse_alphabet(parts[3]))
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad model spec {text!r}: {exc}") from exc
    raise UsageError(f"bad model spec {text!r}")


def parse_frequencies(text: str) -> list[float]:
    from .fourier import log_frequencies

    kind, _, rest = text.partition(":")
    try:
        if kind == "int":
            lo, hi = (int(v) for v in rest.split(":"))
            if hi < lo:
                raise UsageError("empty integer range")
            return [float(v) for v in range(lo, hi + 1)]
        if kind == "log":
            lo, hi, per = rest.split(":")
            return [float(v) for v in log_frequencies(float(lo), float(hi), int(per))]
        if kind == "list":
            vals = [float(Fraction(v)) for v in rest.split(",") if v.strip()]
            if not vals:
                raise UsageError("empty frequency list")
            return vals
    except ValueError as exc:
        raise UsageError(f"bad frequency spec {text!r}: {exc}") from exc
    raise UsageError(f"bad frequency spec {text!r}")


def parse_alphabet_arg(text: str):
    from .potentials import parse_alphabet

    try:
        return parse_alphabet(text)
    except ValueError as exc:
        raise UsageError(f"bad alphabet {text!r}: {exc}") from exc


def parse_word_arg(text: str):
    from .contfrac import parse_word

    try:
        word = parse_word(text)
    except ValueError as exc:
        raise UsageError(f"bad word {text!r}: {exc}") from exc
    if not word:
        raise UsageError("empty word")
    return word


def parse_int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad integer list {text!r}") from exc


# ---------------------------------------------------------------------------
# output

def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, complex):
        return {"re": _jsonable(obj.real), "im": _jsonable(obj.imag)}
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def run_config(args) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items())
           if k not in ("func", "default_format") and not k.startswith("_")}
    return _jsonable(cfg)


def header_lines(args) -> list[str]:
    return [f"# gaussline {__version__}",
            "# config: " + json.dumps(run_config(args), sort_keys=True)]


def _flatten(obj, prefix=""):
    """(dotted key, scalar) pairs of a JSON-ready structure."""
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, list) and any(isinstance(v, (dict, list)) for v in obj):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}.{i}" if prefix else str(i))
    elif isinstance(obj, list):
        yield prefix, ",".join(str(v) for v in obj)
    else:
        yield prefix, obj


def emit(args, result=None, rows=None, columns=None, trailer=None):
    """Write JSON or CSV; structured results become field,value rows in CSV."""
    buf = io.StringIO()
    if args.format == "csv" and rows is None:
        rows = [[k, v] for k, v in _flatten(_jsonable(result))]
        columns = ["field", "value"]
    if args.format == "csv":
        for line in header_lines(args):
            buf.write(line + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([format(v, FLOAT_FMT) if isinstance(v, float) else v for v in row])
        for line in trailer or []:
            buf.write("# " + line + "\n")
    else:
        doc = {"gaussline": __version__, "config": run_config(args), "result": _jsonable(result)}
        buf.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    text = buf.getvalue()
    dest = getattr(args, "_dest", None) or args.out
    if dest:
        with open(dest, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands

def cmd_continuants(args):
    from .contfrac import continuants, cylinder

    word = parse_word_arg(args.word)
    c = continuants(word)
    cyl = cylinder(word)
    result = {"word": list(word), "p": c.p, "q": c.q, "p_prev": c.p_prev, "q_prev": c.q_prev,
              "low": str(cyl.low), "high": str(cyl.high), "length": str(cyl.length),
              "orientation": cyl.orientation}
    rows = [[k, str(v) if not isinstance(v, list) else ",".join(map(str, v))] for k, v in result.items()]
    emit(args, result, rows, ["field", "value"])


def cmd_dimension(args):
    from .thermo import pressure_root

    alphabet = parse_alphabet_arg(args.alphabet)
    try:
        value = pressure_root(alphabet, args.s_lo, args.s_hi, args.depth, args.tol,
                              budget=args.budget, partitions=args.partitions)
    except BracketError as exc:
        sys.stderr.write(f"bracket error: {exc} (P(s_lo)={exc.p_lo}, P(s_hi)={exc.p_hi})\n")
        return 2
    result = {"dimension": value, "alphabet": list(alphabet.digits), "depth": args.depth,
              "tol": args.tol, "method": "pressure-root bisection at periodic points"}
    emit(args, result, [[value]], ["dimension"])
    return 0


def _fourier_rows(points):
    return [[p.xi, p.value.real, p.value.imag, abs(p.value), p.error_bound, p.method, p.work]
            for p in points]


FOURIER_COLUMNS = ["xi", "re", "im", "abs", "err", "method", "work"]


def cmd_fourier_scan(args):
    from .fourier import scan

    model = parse_model(args.model)
    freqs = parse_frequencies(args.freqs)
    points = scan(model, freqs, args.tol, budget=args.leaf_budget, workers=args.threads)
    result = [dict(zip(FOURIER_COLUMNS, r)) for r in _fourier_rows(points)]
    emit(args, result, _fourier_rows(points), FOURIER_COLUMNS)
    failed = sum(1 for p in points if not p.ok)
    if failed:
        sys.stderr.write(f"{failed} frequencies exceeded the leaf budget\n")
    return 0


def read_points_csv(path):
    from .fourier import FourierPoint

    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#") and ln.strip()]
    reader = csv.DictReader(lines)
    pts = []
    for row in reader:
        pts.append(FourierPoint(float(row["xi"]), complex(float(row["re"]), float(row["im"])),
                                float(row["err"]), row.get("method", "cylinder"),
                                int(float(row.get("work", 0) or 0))))
    return pts


def cmd_fit(args):
    from .fourier import fit_decay

    try:
        points = read_points_csv(args.input)
    except (OSError, KeyError, ValueError) as exc:
        raise UsageError(f"cannot read points from {args.input}: {exc}") from exc
    window = None
    if args.window:
        try:
            lo, hi = (float(v) for v in args.window.split(":"))
        except ValueError as exc:
            raise UsageError(f"bad window {args.window!r}") from exc
        window = (lo, hi)
        if not any(lo <= abs(p.xi) <= hi and p.xi != 0 for p in points):
            raise UsageError(f"window {args.window} contains no points")
    fit = fit_decay(points, window, bootstrap=args.bootstrap, seed=args.seed)
    emit(args, fit)
    return 0


def cmd_qmark(args):
    from .contfrac import parse_word
    from .measure import question_mark

    text = args.x.strip()
    try:
        arg = parse_word(text[2:]) if text.startswith("w:") else Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad rational {text!r}") from exc
    value = question_mark(arg)
    result = {"x": text, "value": str(value), "numerator": value.numerator,
              "exponent": value.exponent}
    emit(args, result, [[text, str(value)]], ["x", "qmark"])
    return 0


def cmd_box(args):
    from .measure import box_inverse

    try:
        t = Fraction(args.t)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad rational {args.t!r}") from exc
    word = box_inverse(t, args.max_digits)
    text = ",".join(map(str, word))
    emit(args, {"t": args.t, "word": list(word)}, [[args.t, text]], ["t", "word"])
    return 0


def _model_potential(model):
    from .measure import Bernoulli, FinitePotential

    if isinstance(model, Bernoulli):
        return model.potential
    if isinstance(model, FinitePotential):
        return model.potential
    raise UsageError("this command needs a Bernoulli or potential model")


def cmd_ldcheck(args):
    from .deviation import irregular_mass_curve

    if args.epsilon <= 0:
        raise UsageError("epsilon must be positive")
    model = parse_model(args.model)
    alphabet = parse_alphabet_arg(args.alphabet)
    ns = parse_int_list(args.n)
    if not ns:
        raise UsageError("empty n range")
    curve = irregular_mass_curve(model, _model_potential(model), alphabet, args.epsilon, ns,
                                 lam=args.lam, s=args.s, budget=args.budget)
    rows = [[n, float(m)] for n, m in curve.points]
    trailer = [f"slope={curve.slope:{FLOAT_FMT}}", f"delta_hat={curve.delta_hat:{FLOAT_FMT}}",
               f"lambda={curve.lam:{FLOAT_FMT}}", f"s={curve.s:{FLOAT_FMT}}",
               f"audit_failures={curve.audit_failures}"]
    emit(args, curve, rows, ["n", "complement_mass"], trailer)
    return 0


def cmd_equidist(args):
    from .equidist import normality_experiment

    if args.base < 2:
        raise UsageError("base must be >= 2")
    if args.N < 1:
        raise UsageError("N must be >= 1")
    if args.samples < 1:
        raise UsageError("samples must be >= 1")
    model = parse_model(args.model)
    report = normality_experiment(model, args.base, args.samples, args.N, args.seed)
    emit(args, report)
    return 0


def cmd_stationary(args):
    from .fourier import stationary_phase_audit, stationary_phase_check

    try:
        xis = [float(Fraction(v)) for v in args.xi.split(",") if v.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad frequency list {args.xi!r}") from exc
    if not xis:
        raise UsageError("no frequencies given")
    if args.pair:
        a, b = (parse_word_arg(w) for w in args.pair)
        if len(a) != len(b):
            raise UsageError("words in --pair must have the same length")
        reports = [stationary_phase_check(a, b, xi, args.quad_points) for xi in xis]
        emit(args, reports)
        return 0
    alphabet = parse_alphabet_arg(args.alphabet)
    summary = stationary_phase_audit(alphabet.digits, args.n, xis, args.trials, args.seed,
                                     args.quad_points)
    emit(args, summary)
    return 1 if summary["violations"] else 0


def cmd_stats(args):
    from .thermo import is_minkowski, kinney_detail, measure_stats

    model = parse_model(args.model)
    stats = measure_stats(model, args.depth, args.budget)
    result = {"stats": stats}
    if is_minkowski(model):
        result["kinney"] = kinney_detail(model, args.depth)
    emit(args, result)
    return 0


def read_header_config(path) -> dict:
    """Run configuration embedded in a CSV or JSON output file."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    for line in text.splitlines():
        if line.startswith("# config: "):
            return json.loads(line[len("# config: "):])
    try:
        return json.loads(text)["config"]
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"no run configuration found in {path}") from exc


# placeholders for required arguments; the stored config overrides them
_REQUIRED_STUBS = {
    "continuants": ["1"], "dimension": ["--alphabet", "1"],
    "fourier-scan": ["--model", "x", "--freqs", "x"], "fit": ["--in", "x"],
    "qmark": ["0"], "box": ["1"], "equidist": ["--model", "x"], "stats": ["--model", "x"],
    "ldcheck": ["--model", "x", "--alphabet", "1", "--epsilon", "1", "--n", "1"],
    "stationary": [],
}


def cmd_replay(args):
    cfg = read_header_config(args.file)
    command = cfg.get("command")
    if command not in _REQUIRED_STUBS:
        raise UsageError(f"unknown command {command!r} in header")
    defaults = build_parser().parse_args([command] + _REQUIRED_STUBS[command])
    replay = argparse.Namespace(**{**vars(defaults), **cfg})
    replay._dest = args.out
    return replay.func(replay)


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--budget", type=int, default=None,
                        help="enumeration budget (default GAUSSLINE_BUDGET or 2^24)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--partitions", type=int, default=1,
                        help="leading-digit partitions for reductions")
    common.add_argument("--threads", type=int, default=1)

    p = argparse.ArgumentParser(prog="gaussline", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"gaussline {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("continuants", parents=[common], help="continuants and cylinder of a word")
    c.add_argument("word")
    c.set_defaults(func=cmd_continuants, default_format="csv")

    c = sub.add_parser("dimension", parents=[common], help="dim B(A) by pressure root")
    c.add_argument("--alphabet", required=True)
    c.add_argument("--depth", type=int, default=12)
    c.add_argument("--tol", type=float, default=1e-4)
    c.add_argument("--s-lo", type=float, default=0.0)
    c.add_argument("--s-hi", type=float, default=1.0)
    c.set_defaults(func=cmd_dimension, default_format="json")

    c = sub.add_parser("fourier-scan", parents=[common], help="certified Fourier transform scan")
    c.add_argument("--model", required=True)
    c.add_argument("--freqs", required=True)
    c.add_argument("--tol", type=float, default=1e-3)
    c.add_argument("--leaf-budget", type=int, default=None, help="cylinder leaves per frequency")
    c.set_defaults(func=cmd_fourier_scan, default_format="csv")

    c = sub.add_parser("fit", parents=[common], help="fit a power-law decay to scan output")
    c.add_argument("--in", dest="input", required=True)
    c.add_argument("--window", default=None, help="LO:HI")
    c.add_argument("--bootstrap", type=int, default=2000)
    c.set_defaults(func=cmd_fit, default_format="json")

    c = sub.add_parser("qmark", parents=[common], help="exact ?(x) for rational x or w:digits")
    c.add_argument("x")
    c.set_defaults(func=cmd_qmark, default_format="csv")

    c = sub.add_parser("box", parents=[common], help="CF digits of the inverse of ? at t")
    c.add_argument("t")
    c.add_argument("--max-digits", type=int, default=64)
    c.set_defaults(func=cmd_box, default_format="csv")

    c = sub.add_parser("ldcheck", parents=[common], help="irregular mass curve of R_n")
    c.add_argument("--model", required=True)
    c.add_argument("--alphabet", required=True)
    c.add_argument("--epsilon", type=float, required=True)
    c.add_argument("--n", required=True, help="comma-separated depths")
    c.add_argument("--lambda", dest="lam", type=float, default=None)
    c.add_argument("--s", type=float, default=None)
    c.set_defaults(func=cmd_ldcheck, default_format="csv")

    c = sub.add_parser("equidist", parents=[common], help="normality experiment")
    c.add_argument("--model", required=True)
    c.add_argument("--base", type=int, default=2)
    c.add_argument("--N", type=int, default=2 ** 15)
    c.add_argument("--samples", type=int, default=50)
    c.set_defaults(func=cmd_equidist, default_format="json")

    c = sub.add_parser("stationary", parents=[common], help="stationary-phase bound audit")
    c.add_argument("--alphabet", default="1,2,3")
    c.add_argument("--n", type=int, default=8)
    c.add_argument("--xi", default="100,10000")
    c.add_argument("--trials", type=int, default=1000)
    c.add_argument("--quad-points", type=int, default=4096)
    c.add_argument("--pair", nargs=2, metavar="WORD", default=None)
    c.set_defaults(func=cmd_stationary, default_format="json")

    c = sub.add_parser("stats", parents=[common], help="entropy, Lyapunov exponent, dimension")
    c.add_argument("--model", required=True)
    c.add_argument("--depth", type=int, default=12)
    c.set_defaults(func=cmd_stats, default_format="json")

    c = sub.add_parser("replay", help="re-run the configuration stored in an output header")
    c.add_argument("file")
    c.add_argument("--out", default=None, help="output path (default stdout)")
    c.set_defaults(func=cmd_replay, default_format=None, format=None)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = args.default_format
    try:
        if args.command != "replay":
            # record the effective budget so the header alone reproduces the run
            try:
                args.budget = enumeration_budget(args.budget)
            except ValueError as exc:
                raise UsageError(f"bad GAUSSLINE_BUDGET: {exc}") from exc
        code = args.func(args)
    except (UsageError, DomainError) as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 2
    except BracketError as exc:
        sys.stderr.write(f"bracket error: {exc}\n")
        return 2
    except (GausslineError, AssertionError) as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        return 1
    return 0 if code is None else code


if __name__ == "__main__":
    sys.exit(main())
