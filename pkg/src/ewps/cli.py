"""Command-line interface: ``ewps {fit,compare,sample,table,ttt,gof}``.

Machine output (csv or json-lines) goes to stdout with 17 significant
digits; ``--format table`` prints a human table with 4 decimals.
Diagnostics go to stderr.

Exit codes: 0 success, 1 usage or I/O error, 2 non-convergence,
3 numeric-domain failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass

import numpy as np

from .distribution import (EwpsParams, ewps_cdf, ewps_pdf, ewps_quantile, ewps_sample,
                           ewps_survival, ewps_survival_hazard)
from .errors import ConvergenceError, DomainError, EwpsError, FitError, IntegrabilityError
from .ew import EwParams, ew_cdf, ew_hazard, ew_pdf, ew_quantile, ew_sample, ew_survival
from .gof import empirical_survival, empirical_ttt, gof_report
from .inference import (Dataset, FitResult, ParamVector, confidence_intervals, em_fit,
                        log_likelihood, mle_fit)
from .power_series import get_family

log = logging.getLogger("ewps")

EXIT_OK, EXIT_USAGE, EXIT_NONCONVERGED, EXIT_DOMAIN = 0, 1, 2, 3
FAMILIES = ("geometric", "poisson", "logarithmic", "binomial", "polynomial")


class UsageError(EwpsError):
    """Bad flags, unreadable files or malformed input."""


# --------------------------------------------------------------- input

def ingest_csv(path) -> Dataset:
    """Read a one-column CSV of positive lifetimes.

    Blank lines and lines starting with ``#`` are ignored; the first
    remaining line may be a header. Errors name the offending line.
    """
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None
    except UnicodeDecodeError:
        raise UsageError(f"{path} is not UTF-8 text") from None
    values = []
    header_seen = False
    for lineno, row in enumerate(csv.reader(lines), start=1):
        if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
            continue
        cells = [c.strip() for c in row if c.strip()]
        if len(cells) != 1:
            raise UsageError(f"{path}:{lineno}: expected one column, found {len(cells)}")
        try:
            v = float(cells[0])
        except ValueError:
            if not values and not header_seen:
                header_seen = True
                continue
            raise UsageError(f"{path}:{lineno}: cannot parse {cells[0]!r} as a number") from None
        if not (math.isfinite(v) and v > 0):
            raise UsageError(f"{path}:{lineno}: lifetime must be positive and finite, got {cells[0]}")
        values.append(v)
    try:
        data = Dataset(np.array(values))
    except DomainError as exc:
        raise UsageError(f"{path}: {exc}") from None
    s = data.summary()
    log.info("read %s: n=%d min=%g max=%g mean=%g", path, s["n"], s["min"], s["max"], s["mean"])
    return data


# -------------------------------------------------------------- output

def _fmt(v, human: bool) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if not math.isfinite(v):
            return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
        return f"{v:.4f}" if human else format(float(v), ".17g")
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v) if math.isfinite(v) else None
    return v


def emit(records: list[dict], fmt: str, out=None) -> None:
    """Write records as csv, json-lines or an aligned text table."""
    out = out or sys.stdout
    if not records:
        return
    cols = list(dict.fromkeys(k for r in records for k in r))
    if fmt == "json-lines":
        for r in records:
            out.write(json.dumps({k: _json_value(r.get(k)) for k in cols}) + "\n")
    elif fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(cols)
        for r in records:
            w.writerow([_fmt(r.get(k), False) for k in cols])
    else:
        cells = [[_fmt(r.get(k), True) for k in cols] for r in records]
        widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
        out.write("  ".join(c.rjust(w) for c, w in zip(cols, widths)) + "\n")
        for row in cells:
            out.write("  ".join(c.rjust(w) for c, w in zip(row, widths)) + "\n")


# ------------------------------------------------------------- helpers

@dataclass(frozen=True)
class ModelSpec:
    label: str
    model: str
    family: object = None


def _coeffs(text):
    if text is None:
        return None
    pairs = []
    for item in text.split(","):
        try:
            n, a = item.split(":")
            pairs.append((int(n), float(a)))
        except ValueError:
            raise UsageError(f"bad coefficient {item!r}; use degree:value, e.g. 1:1,20:1") from None
    return pairs


def _family(args, name=None):
    name = name or args.family
    if name is None:
        raise UsageError("--family is required for the ewps model")
    try:
        return get_family(name, m=args.m, coeffs=_coeffs(args.coeffs))
    except DomainError as exc:
        raise UsageError(str(exc)) from None


def _spec(args) -> ModelSpec:
    if args.model == "ewps":
        fam = _family(args)
        return ModelSpec("EW-" + str(fam), "ewps", fam)
    return ModelSpec(args.model.upper() if args.model == "ew" else "Weibull", args.model)


def _given_params(args, spec: ModelSpec):
    """Distribution object from --alpha/--beta/--gamma/--theta flags."""
    try:
        if spec.model == "ewps":
            if args.theta is None:
                raise UsageError("--theta is required for the ewps model")
            return EwpsParams(args.alpha, args.beta, args.gamma, args.theta, spec.family)
        alpha = 1.0 if spec.model == "weibull" else args.alpha
        return EwParams(alpha, args.beta, args.gamma)
    except DomainError as exc:
        raise UsageError(f"invalid parameters: {exc}") from None


def _functions(dist):
    if isinstance(dist, EwpsParams):
        return (lambda y: ewps_pdf(dist, y), lambda y: ewps_cdf(dist, y),
                lambda y: ewps_survival(dist, y), lambda y: ewps_survival_hazard(dist, y)[1],
                lambda q: ewps_quantile(dist, q))
    return (lambda y: ew_pdf(dist, y), lambda y: ew_cdf(dist, y), lambda y: ew_survival(dist, y),
            lambda y: ew_hazard(dist, y)[1], lambda q: ew_quantile(dist, q))


def _start(args, spec: ModelSpec):
    """Starting point from the parameter flags, or None to use the default start."""
    if args is None or args.beta is None or args.gamma is None:
        return None
    if spec.model == "ewps" and args.theta is None:
        return None
    d = _given_params(args, spec)
    return ParamVector(d.alpha, d.beta, d.gamma, getattr(d, "theta", None))


def _fit(data, spec: ModelSpec, method: str, args=None) -> FitResult:
    init = _start(args, spec)
    if method == "em":
        if spec.model != "ewps":
            raise UsageError("--method em applies to the ewps model only")
        return em_fit(data, spec.family, init)
    return mle_fit(data, spec.family, init, model=spec.model)


def _fit_record(spec: ModelSpec, fr: FitResult, level: float | None) -> dict:
    rec = {"model": spec.label, "method": fr.method, "k": fr.k_params}
    ci = None
    if level is not None and fr.converged and fr.cov is not None:
        ci = confidence_intervals(fr, level)
    for i, name in enumerate(fr.names):
        rec[name] = fr.values[i]
        rec[f"se_{name}"] = fr.std_errors[i]
        if level is not None:
            rec[f"ci_lo_{name}"] = ci[i, 0] if ci is not None else float("nan")
            rec[f"ci_hi_{name}"] = ci[i, 1] if ci is not None else float("nan")
    rec.update(neg2loglik=fr.neg2loglik, aic=fr.neg2loglik + 2 * fr.k_params,
               converged=fr.converged, iterations=fr.iterations, score_norm=fr.score_norm)
    return rec


# ------------------------------------------------------------ commands

def fit_command(args) -> int:
    data = ingest_csv(args.data)
    spec = _spec(args)
    fr = _fit(data, spec, args.method, args)
    emit([_fit_record(spec, fr, args.level)], args.format)
    if not fr.converged:
        log.warning("fit did not converge: %s", fr.message)
        return EXIT_NONCONVERGED
    return EXIT_OK


def compare_specs(m: int | None = None):
    fams = [get_family(n, m=m) for n in FAMILIES[:4]]
    labels = ["EWG", "EWP", "EWL", "EWB"]
    return ([ModelSpec(lab, "ewps", f) for lab, f in zip(labels, fams)]
            + [ModelSpec("EW", "ew"), ModelSpec("Weibull", "weibull")])


def compare_rows(data: Dataset, specs, method: str = "direct") -> list[dict]:
    """Fit each model and tabulate its statistics, sorted by AIC."""
    rows = []
    for spec in specs:
        rec = {"model": spec.label}
        try:
            fr = _fit(data, spec, method if spec.model == "ewps" else "direct")
            e = fr.estimate
            rec.update(alpha=e.alpha if spec.model != "weibull" else None, beta=e.beta, gamma=e.gamma,
                       theta=e.theta if spec.model == "ewps" else None)
            _, cdf, _, _, _ = _functions(fr.distribution())
            rep = gof_report(data, cdf, fr.neg2loglik, fr.k_params)
            rec.update(ks=rep.ks, ks_pvalue=rep.ks_pvalue, neg2loglik=rep.neg2loglik, aic=rep.aic,
                       ad=rep.ad, cm=rep.cm, converged=fr.converged, error="")
        except (EwpsError, ArithmeticError, ValueError) as exc:
            rec.update(converged=False, error=str(exc))
        rows.append(rec)
    rows.sort(key=lambda r: (r.get("aic") is None, r.get("aic", 0.0)))
    return rows


def compare_command(args) -> int:
    data = ingest_csv(args.data)
    rows = compare_rows(data, compare_specs(args.m), args.method)
    emit(rows, args.format)
    return EXIT_OK if all(r["converged"] for r in rows) else EXIT_NONCONVERGED


def sample_command(args) -> int:
    if args.seed is None:
        raise UsageError("--seed is required for sampling")
    if args.n is None or args.n < 1:
        raise UsageError("--n must be a positive integer")
    dist = _given_params(args, _spec(args))
    rng = np.random.default_rng(args.seed)
    if isinstance(dist, EwpsParams):
        values = ewps_sample(dist, rng, args.n, method=args.sampler)
    else:
        values = ew_sample(dist, rng, args.n)
    sys.stdout.write("".join(format(float(v), ".17g") + "\n" for v in values))
    return EXIT_OK


def table_command(args) -> int:
    dist = _given_params(args, _spec(args))
    pdf, cdf, surv, haz, quant = _functions(dist)
    lo = args.lo if args.lo is not None else float(quant(0.001))
    hi = args.hi if args.hi is not None else float(quant(0.999))
    if not (0 < lo < hi) or args.points < 2:
        raise UsageError("grid needs 0 < lo < hi and at least 2 points")
    y = np.linspace(lo, hi, args.points)
    cols = [y, pdf(y), cdf(y), surv(y), haz(y)]
    names = ("y", "pdf", "cdf", "survival", "hazard")
    emit([dict(zip(names, row)) for row in zip(*cols)], args.format)
    return EXIT_OK


def ttt_command(args) -> int:
    data = ingest_csv(args.data)
    recs = [{"curve": "ttt", "x": u, "value": t} for u, t in empirical_ttt(data)]
    recs += [{"curve": "survival", "x": yv, "value": s} for yv, s in empirical_survival(data)]
    emit(recs, args.format)
    return EXIT_OK


def gof_command(args) -> int:
    data = ingest_csv(args.data)
    spec = _spec(args)
    status = EXIT_OK
    if args.beta is not None and args.gamma is not None:
        dist = _given_params(args, spec)
        k = {"ewps": 4, "ew": 3, "weibull": 2}[spec.model]
        n2ll = -2.0 * log_likelihood(data, dist, model=spec.model if spec.model != "weibull" else "ew")
    else:
        fr = _fit(data, spec, args.method)
        dist, k, n2ll = fr.distribution(), fr.k_params, fr.neg2loglik
        if not fr.converged:
            status = EXIT_NONCONVERGED
    _, cdf, _, _, _ = _functions(dist)
    rep = gof_report(data, cdf, n2ll, k)
    emit([{"model": spec.label, **rep.__dict__}], args.format)
    return status


COMMANDS = {"fit": fit_command, "compare": compare_command, "sample": sample_command,
            "table": table_command, "ttt": ttt_command, "gof": gof_command}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--data", help="one-column CSV of lifetimes")
    common.add_argument("--model", choices=("ewps", "ew", "weibull"), default="ewps")
    common.add_argument("--family", choices=FAMILIES, help="compounding family for --model ewps")
    common.add_argument("--m", type=int, default=None, help="binomial replicas (default 10)")
    common.add_argument("--coeffs", help="polynomial family as degree:value pairs, e.g. 1:1,20:1")
    for name in ("alpha", "beta", "gamma"):
        common.add_argument(f"--{name}", type=float, default=1.0 if name == "alpha" else None)
    common.add_argument("--theta", type=float)
    common.add_argument("--method", choices=("direct", "em"), default="direct")
    common.add_argument("--seed", type=int)
    common.add_argument("--n", type=int)
    common.add_argument("--points", type=int, default=200)
    common.add_argument("--lo", type=float, help="lower grid end (default: 0.001 quantile)")
    common.add_argument("--hi", type=float, help="upper grid end (default: 0.999 quantile)")
    common.add_argument("--sampler", choices=("inverse", "compound"), default="inverse")
    common.add_argument("--format", choices=("csv", "json-lines", "table"), default="csv")
    common.add_argument("--level", type=float, default=0.95, help="confidence level for fit")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="ewps", description="Exponentiated Weibull power-series lifetime models.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {"fit": "fit one model", "compare": "fit all six models and rank by AIC",
             "sample": "draw a seeded sample", "table": "pdf/cdf/survival/hazard grid",
             "ttt": "empirical TTT and survival curves", "gof": "goodness-of-fit statistics"}
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="ewps: %(message)s", stream=sys.stderr)
    needs_data = args.command in ("fit", "compare", "ttt", "gof")
    if needs_data and not args.data:
        print(f"ewps {args.command}: --data is required", file=sys.stderr)
        return EXIT_USAGE
    if args.command in ("sample", "table") and (args.beta is None or args.gamma is None):
        print(f"ewps {args.command}: --beta and --gamma are required", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"ewps: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FitError as exc:
        print(f"ewps: fit failed: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (DomainError, IntegrabilityError, ConvergenceError, ArithmeticError) as exc:
        print(f"ewps: numeric failure: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
