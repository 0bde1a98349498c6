"""Command-line front end.

Subcommands: table, exact, bounds, simulate, diagnose, quantile,
gordon-check. Exit codes: 0 success, 2 domain error, 3 numeric/quadrature
failure, 4 I/O error. Numeric output uses 9 significant digits so repeated
runs are byte-identical.
"""

import argparse
import hashlib
import json
import sys

from . import __version__
from .distributions import (
    laplace,
    make_distribution,
    scaled_student_t,
    spec_from_json,
    standard_normal,
)
from .errors import DomainError, FwerkitError, NumericError, QuadratureError
from .factor_model import EquicorrelatedModel, MarginalLaw, model_from_json
from .fwer_analytics import (
    bound_report,
    check_zero_limit_conditions,
    exact_any_rejection_holm,
    exact_fwer_bonferroni,
    anypwr_single_step,
    limit_ratio_diagnostic,
)
from .procedures import PROCEDURES, CutoffVector, validate_gordon
from .simulation import (
    EllipticalT,
    GaussianGeneral,
    OneFactor,
    SimulationConfig,
    estimate_prob_any_rejection,
    estimate_fwer,
)

TABLE_PRESETS = {
    "table1": (standard_normal(), laplace()),
    "table2": (standard_normal(), scaled_student_t(4.0)),
}
_PRESET_RHOS = tuple(i / 10 for i in range(10))
_PRESET_NS = (100, 1000, 10**4, 10**5, 10**6, 10**7)


def _fmt(x):
    if x is None:
        return "NA"
    return format(float(x), ".9g")


def _load_json_arg(text):
    """Accept inline JSON or an @file / plain path reference."""
    if text.startswith("@"):
        text = text[1:]
        with open(text) as fh:
            return json.load(fh)
    stripped = text.strip()
    if stripped.startswith("{") or stripped.startswith("["):
        return json.loads(stripped)
    with open(text) as fh:
        return json.load(fh)


def _parse_model(text):
    return model_from_json(_load_json_arg(text))


def _grid(text, cast):
    try:
        return [cast(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise DomainError(f"bad grid {text!r}: {exc}")


def _emit(args, payload, csv_lines=None):
    out = sys.stdout
    if args.out:
        out = open(args.out, "w")
    try:
        if args.output == "csv" and csv_lines is not None:
            out.write("\n".join(csv_lines) + "\n")
        else:
            json.dump(payload, out, indent=2, sort_keys=True)
            out.write("\n")
    finally:
        if out is not sys.stdout:
            out.close()


def cmd_table(args):
    if args.table_id in TABLE_PRESETS:
        f_spec, g_spec = TABLE_PRESETS[args.table_id]
        rhos, ns, alpha = list(_PRESET_RHOS), list(_PRESET_NS), 0.05
    else:
        if not (args.f and args.g and args.rho_grid and args.n_grid):
            raise DomainError(
                "custom table needs --f, --g, --rho-grid and --n-grid"
            )
        f_spec = spec_from_json(_load_json_arg(args.f))
        g_spec = spec_from_json(_load_json_arg(args.g))
        rhos = _grid(args.rho_grid, float)
        ns = _grid(args.n_grid, int)
        alpha = args.alpha
    if not rhos or not ns:
        raise DomainError("table grids must be nonempty")

    cells = {}
    failures = []
    for rho in sorted(rhos):
        for n in sorted(ns):
            model = EquicorrelatedModel.global_null(rho, f_spec, g_spec, n)
            try:
                cells[(rho, n)] = exact_fwer_bonferroni(model, alpha)
            except QuadratureError as exc:
                cells[(rho, n)] = None
                failures.append({
                    "rho": rho, "n": n,
                    "error": str(exc),
                    "achieved_error": exc.achieved_error,
                })

    if args.wide:
        ns_sorted = sorted(ns)
        lines = ["rho," + ",".join(f"n={n}" for n in ns_sorted)]
        for rho in sorted(rhos):
            lines.append(
                _fmt(rho) + ","
                + ",".join(_fmt(cells[(rho, n)]) for n in ns_sorted)
            )
    else:
        lines = ["rho,n,fwer"]
        for rho in sorted(rhos):
            for n in sorted(ns):
                lines.append(f"{_fmt(rho)},{n},{_fmt(cells[(rho, n)])}")

    payload = {
        "table": args.table_id,
        "alpha": alpha,
        "cells": [
            {"rho": rho, "n": n, "fwer": v}
            for (rho, n), v in sorted(cells.items())
        ],
    }
    _emit(args, payload, csv_lines=lines)
    if failures:
        for item in failures:
            print(f"E_QUADRATURE: {json.dumps(item, sort_keys=True)}",
                  file=sys.stderr)
        return 3
    return 0


def cmd_exact(args):
    model = _parse_model(args.model)
    fns = {
        "fwer": exact_fwer_bonferroni,
        "any-rejection-holm": exact_any_rejection_holm,
        "anypwr": anypwr_single_step,
    }
    value = fns[args.quantity](model, args.alpha)
    payload = {"quantity": args.quantity, "alpha": args.alpha, "value": value}
    _emit(args, payload,
          csv_lines=["quantity,alpha,value",
                     f"{args.quantity},{_fmt(args.alpha)},{_fmt(value)}"])
    return 0


def cmd_bounds(args):
    model = _parse_model(args.model)
    rep = bound_report(model, args.alpha, d=args.d,
                       optimize=args.optimize_d or args.d is None)
    payload = rep.to_json()
    header = "exact,lower,upper,d_used,upper_alpha_one_minus_rho,n,alpha,rho"
    row = ",".join(_fmt(payload[k]) if payload[k] is not None else "NA"
                   for k in header.split(","))
    _emit(args, payload, csv_lines=[header, row])
    return 0


def _simulation_model(model, args):
    if args.dependence == "one-factor":
        return OneFactor(model.rho, model.f_spec, model.g_spec,
                         model.config.means)
    if args.dependence == "gaussian":
        return GaussianGeneral.equicorrelated(model.rho, model.config.n,
                                              model.config.means)
    if args.dependence == "elliptical-t":
        if args.nu is None:
            raise DomainError("elliptical-t dependence needs --nu")
        return EllipticalT.equicorrelated(model.rho, args.nu, model.config.n,
                                          model.config.means)
    raise DomainError(f"unknown dependence {args.dependence!r}")


def _simulation_null_law(model, args):
    if args.dependence == "one-factor":
        base = EquicorrelatedModel.global_null(
            model.rho, model.f_spec, model.g_spec, model.config.n
        )
    elif args.dependence == "gaussian":
        base = EquicorrelatedModel.global_null(
            0.0, standard_normal(), standard_normal(), model.config.n
        )
    else:
        base = EquicorrelatedModel.global_null(
            0.0, scaled_student_t(args.nu), standard_normal(), model.config.n
        )
    return MarginalLaw(base)


def cmd_simulate(args):
    model = _parse_model(args.model)
    sim_model = _simulation_model(model, args)
    null_law = _simulation_null_law(model, args)
    config = SimulationConfig(
        replications=args.replications, seed=args.seed, alpha=args.alpha,
        batch_size=args.batch_size,
    )
    n = model.config.n
    truth = model.config
    names = ["bonferroni", "holm"] if args.procedure == "both" \
        else [args.procedure]
    results = {}
    for name in names:
        proc = PROCEDURES[name]
        if args.quantity == "fwer":
            est = estimate_fwer(sim_model, proc, n, config, null_law, truth,
                                workers=args.threads)
        else:
            est = estimate_prob_any_rejection(sim_model, proc, n, config,
                                              null_law, workers=args.threads)
        results[name] = est

    payload = {
        "quantity": args.quantity,
        "procedures": {k: v.to_json() for k, v in results.items()},
        "replications": args.replications,
        "seed": args.seed,
        "alpha": args.alpha,
    }
    if args.procedure == "both":
        payload["equal_p_hat"] = (
            results["bonferroni"].p_hat == results["holm"].p_hat
        )
    lines = ["procedure,quantity,n,alpha,replications,seed,p_hat,std_err,"
             "ci_low,ci_high"]
    for name, est in results.items():
        lines.append(
            f"{name},{args.quantity},{n},{_fmt(args.alpha)},"
            f"{args.replications},{args.seed},{_fmt(est.p_hat)},"
            f"{_fmt(est.std_err)},{_fmt(est.ci_low)},{_fmt(est.ci_high)}"
        )
    _emit(args, payload, csv_lines=lines)

    if args.append:
        model_hash = hashlib.md5(
            json.dumps(model.to_json(), sort_keys=True).encode()
        ).hexdigest()[:12]
        import os
        write_header = not os.path.exists(args.append)
        with open(args.append, "a") as fh:
            if write_header:
                fh.write("model_hash,procedure,n,alpha,rho_or_sigma_id,"
                         "replications,seed,p_hat,std_err,ci_low,ci_high\n")
            for name, est in results.items():
                fh.write(
                    f"{model_hash},{name},{n},{_fmt(args.alpha)},"
                    f"{_fmt(model.rho)},{args.replications},{args.seed},"
                    f"{_fmt(est.p_hat)},{_fmt(est.std_err)},"
                    f"{_fmt(est.ci_low)},{_fmt(est.ci_high)}\n"
                )
    return 0


def cmd_diagnose(args):
    model = _parse_model(args.model)
    grid = _grid(args.n_grid, int)
    diag = limit_ratio_diagnostic(model, args.alpha, grid)
    conditions = check_zero_limit_conditions(model.f_spec, model.g_spec)
    payload = {
        "limit_diagnostic": diag.to_json(),
        "conditions": conditions.to_json(),
    }
    lines = ["n,ratio,log_limit_estimate,fn_power"]
    for n, r, ll, fn in zip(diag.n_grid, diag.ratio_values,
                            diag.log_limit_estimates, diag.fn_power_values):
        lines.append(f"{n},{_fmt(r)},{_fmt(ll)},{_fmt(fn)}")
    lines.append(f"verdict,{diag.verdict},,")
    _emit(args, payload, csv_lines=lines)
    return 0


def cmd_quantile(args):
    if (args.dist is None) == (args.model is None):
        raise DomainError("give exactly one of --dist or --model")
    if args.dist is not None:
        dist = make_distribution(spec_from_json(_load_json_arg(args.dist)))
        value = dist.quantile(args.p)
    else:
        law = MarginalLaw(_parse_model(args.model))
        value = law.quantile(args.p)
    payload = {"p": args.p, "quantile": value}
    _emit(args, payload, csv_lines=["p,quantile",
                                    f"{_fmt(args.p)},{_fmt(value)}"])
    return 0


def cmd_gordon_check(args):
    raw = _load_json_arg(args.cutoffs) if args.cutoffs.strip().startswith(
        ("{", "[", "@")) or args.cutoffs.endswith(".json") \
        else _grid(args.cutoffs, float)
    if isinstance(raw, dict):
        raw = raw.get("u", raw)
    cutoffs = CutoffVector(tuple(float(v) for v in raw))
    check = validate_gordon(cutoffs, args.alpha)
    payload = check.to_json()
    fv = "" if check.first_violation is None else check.first_violation
    _emit(args, payload, csv_lines=["ok,first_violation",
                                    f"{str(check.ok).lower()},{fv}"])
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fwerkit",
        description="Familywise error rates under equicorrelated dependence: "
                    "exact values, bounds, diagnostics, and simulation.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--output", choices=("csv", "json"), default="json")
    parser.add_argument("--tolerance", type=float, default=1e-12,
                        help="quadrature tolerance (advisory)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--out", help="write output to this file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("table", help="FWER grid over (rho, n)")
    p.add_argument("table_id", choices=("table1", "table2", "custom"))
    p.add_argument("--f", help="F factor spec (JSON or @file)")
    p.add_argument("--g", help="G factor spec (JSON or @file)")
    p.add_argument("--rho-grid")
    p.add_argument("--n-grid")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--wide", action="store_true",
                   help="rows rho, columns n instead of long form")
    p.set_defaults(fn=cmd_table)

    p = sub.add_parser("exact", help="exact probability for one model")
    p.add_argument("--model", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--quantity", default="fwer",
                   choices=("fwer", "any-rejection-holm", "anypwr"))
    p.set_defaults(fn=cmd_exact)

    p = sub.add_parser("bounds", help="lower/upper envelopes plus exact value")
    p.add_argument("--model", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--d", type=float)
    p.add_argument("--optimize-d", action="store_true")
    p.set_defaults(fn=cmd_bounds)

    p = sub.add_parser("simulate", help="Monte Carlo estimate")
    p.add_argument("--model", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--procedure", default="bonferroni",
                   choices=("bonferroni", "holm", "both"))
    p.add_argument("--quantity", default="fwer",
                   choices=("fwer", "any-rejection"))
    p.add_argument("--replications", type=int, default=100000)
    p.add_argument("--batch-size", type=int, default=16384)
    p.add_argument("--dependence", default="one-factor",
                   choices=("one-factor", "gaussian", "elliptical-t"))
    p.add_argument("--nu", type=float, help="degrees of freedom for "
                   "elliptical-t dependence")
    p.add_argument("--append", help="append results to this CSV file")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("diagnose", help="limit diagnostics and conditions")
    p.add_argument("--model", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--n-grid", default="100,1000,10000,100000,1000000")
    p.set_defaults(fn=cmd_diagnose)

    p = sub.add_parser("quantile", help="factor or marginal quantile")
    p.add_argument("--dist", help="distribution spec (JSON or @file)")
    p.add_argument("--model", help="one-factor model for the marginal")
    p.add_argument("--p", type=float, required=True)
    p.set_defaults(fn=cmd_quantile)

    p = sub.add_parser("gordon-check", help="step-down cutoff admissibility")
    p.add_argument("--cutoffs", required=True,
                   help="comma list, JSON array, or @file")
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(fn=cmd_gordon_check)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (QuadratureError, NumericError) as exc:
        print(f"E_NUMERIC: {exc}", file=sys.stderr)
        return 3
    except DomainError as exc:
        print(f"E_DOMAIN: {exc}", file=sys.stderr)
        return 2
    except (json.JSONDecodeError,) as exc:
        print(f"E_DOMAIN: bad JSON input: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"E_IO: {exc}", file=sys.stderr)
        return 4
    except FwerkitError as exc:
        print(f"E_DOMAIN: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
