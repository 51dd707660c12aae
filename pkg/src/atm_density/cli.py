"""Command-line interface.

Exit codes: 0 on success, 1 for input or configuration errors (including
unknown flags and malformed map documents), 2 for numerical failures.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import document
from .atm import (AtmConfig, ConfigError, cross_validate_m, fit_conditional,
                  fit_fixed_total_degree, fit_linear_then_atm)
from .data import (InputError, fit_standardization, gen_fig1_mixture, gen_gauss, gen_lorenz96,
                   gen_mog3, load_csv, write_csv)
from .density import invert, negative_log_likelihood, sample
from .objective import ObjectiveConfig
from .optimizer import NumericalError, OptimOptions
from .quadrature import QuadratureError
from .transport import ComposedMap, InversionError

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2
FAMILY_FLAGS = {"hermite": "hermite_function", "linear": "linear"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _default_threads() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def _emit_json(obj, path):
    text = json.dumps(obj, indent=1, sort_keys=True) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _emit_csv(x, path, names=None):
    if path in (None, "-"):
        write_csv(sys.stdout, x, names)
    else:
        write_csv(path, x, names)


def _config(args) -> AtmConfig:
    return AtmConfig(
        max_features=args.max_features, folds=args.folds, family=FAMILY_FLAGS[args.family],
        g=args.g, objective=ObjectiveConfig(args.l2),
        optim=OptimOptions(grad_tol=args.grad_tol, max_iters=args.max_iters),
        seed=args.seed, quad_tol=args.quad_tol, n_jobs=args.threads,
        cv_patience=args.cv_patience or None)


def _check_fit_flags(args, data):
    if args.linear_first and args.g == "square":
        raise ConfigError("--g square cannot be combined with --linear-first")
    if args.linear_first and args.conditional_split:
        raise ConfigError("--linear-first fits joint maps only")
    if args.total_degree is not None and args.linear_first:
        raise ConfigError("--total-degree cannot be combined with --linear-first")
    if not 0 <= args.conditional_split < data.dim:
        raise ConfigError(f"--conditional-split must be in [0, {data.dim - 1}]")
    if args.folds > data.n:
        raise ConfigError(f"--folds {args.folds} exceeds the {data.n} samples")
    if args.cv_patience < 0:
        raise ConfigError("--cv-patience must be non-negative")
    if args.threads < 1:
        raise ConfigError("--threads must be positive")


def _provenance(args, cfg):
    # paths to outputs and the worker cap do not affect the fitted map
    skip = ("func", "threads", "output", "trace")
    echo = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    return {"seed": cfg.seed, "config": echo}


def cmd_fit(args):
    data = load_csv(args.input, args.header, args.log_transform)
    _check_fit_flags(args, data)
    cfg = _config(args)
    if args.linear_first:
        tmap = fit_linear_then_atm(data.values, cfg)
        stages = tmap.stages
    elif args.total_degree is not None:
        tmap = fit_fixed_total_degree(data.values, args.total_degree, cfg, args.conditional_split)
        stages = (tmap,)
    else:
        tmap = fit_conditional(data.values, args.conditional_split, cfg)
        stages = (tmap,)
    document.save(args.output, tmap, _provenance(args, cfg))
    if args.trace:
        _emit_json({"stages": [[t.to_dict() for t in s.traces] for s in stages]}, args.trace)
    return EXIT_OK


def cmd_cv(args):
    data = load_csv(args.input, args.header, args.log_transform)
    args.total_degree, args.linear_first = None, False
    _check_fit_flags(args, data)
    cfg = _config(args)
    z = fit_standardization(data.values).apply(data.values)
    out = []
    for k in range(args.conditional_split + 1, data.dim + 1):
        res = cross_validate_m(z[:, :k], replace(cfg, n_jobs=1), data.n)
        out.append({"index": k, "chosen_m": res.chosen_m,
                    "mean_validation": [float(v) for v in res.mean_validation],
                    "selected": [list(a) for a in res.trace.selected]})
    _emit_json({"components": out}, args.output)
    return EXIT_OK


def cmd_eval(args):
    tmap = document.load(args.map)
    data = load_csv(args.input, args.header, args.log_transform)
    if data.dim != tmap.n_inputs:
        raise InputError(f"test data has {data.dim} columns, map expects {tmap.n_inputs}")
    report = negative_log_likelihood(tmap, data.values, adjust=not args.no_std_adjust)
    _emit_json(report.to_dict(per_sample=args.per_sample), args.output)
    return EXIT_OK


def _covariates(args, tmap, count):
    if not tmap.m_y:
        if args.covariates:
            raise ConfigError("--covariates given for a joint map")
        return None
    if not args.covariates:
        raise ConfigError(f"conditional map needs --covariates with {tmap.m_y} columns")
    y = load_csv(args.covariates, args.header).values
    if y.shape[1] != tmap.m_y or y.shape[0] not in (1, count):
        raise InputError(f"covariates must have {tmap.m_y} columns and 1 or {count} rows")
    return np.repeat(y, count, axis=0) if y.shape[0] == 1 else y


def _target_names(tmap):
    return [f"x{j + 1}" for j in range(tmap.m_y, tmap.n_inputs)]


def cmd_sample(args):
    if args.count < 0:
        raise ConfigError("--count must be non-negative")
    tmap = document.load(args.map)
    y = _covariates(args, tmap, args.count) if args.count else None
    _emit_csv(sample(tmap, args.count, args.seed, y=y), args.output, _target_names(tmap))
    return EXIT_OK


def cmd_invert(args):
    tmap = document.load(args.map)
    z = load_csv(args.input, args.header).values
    if z.shape[1] != tmap.d:
        raise InputError(f"reference points have {z.shape[1]} columns, map expects {tmap.d}")
    y = _covariates(args, tmap, z.shape[0])
    x = np.atleast_2d(invert(tmap, z, y=y)).reshape(z.shape)
    _emit_csv(x, args.output, _target_names(tmap))
    return EXIT_OK


def cmd_forward(args):
    tmap = document.load(args.map)
    x = load_csv(args.input, args.header).values
    if x.shape[1] != tmap.n_inputs:
        raise InputError(f"points have {x.shape[1]} columns, map expects {tmap.n_inputs}")
    z = np.atleast_2d(tmap.forward(x)).reshape(x.shape[0], tmap.d)
    _emit_csv(z, args.output, [f"z{j + 1}" for j in range(tmap.d)])
    return EXIT_OK


def cmd_generate(args):
    if args.n < 1:
        raise ConfigError("--n must be positive")
    if args.target == "mog3":
        data = gen_mog3(args.n, args.seed, args.dim or 3, args.weight_seed)
    elif args.target == "fig1":
        if args.dim not in (None, 1):
            raise ConfigError("fig1 is one-dimensional")
        data = gen_fig1_mixture(args.n, args.seed)
    elif args.target == "lorenz96":
        data = gen_lorenz96(args.n, args.dim or 20, args.forcing, args.dt, args.steps, args.seed)
    else:
        d = args.dim or 2
        if not -1.0 / max(d - 1, 1) < args.rho < 1.0:
            raise ConfigError("--rho must keep the covariance positive definite")
        cov = np.full((d, d), args.rho)
        np.fill_diagonal(cov, 1.0)
        data = gen_gauss(args.n, cov, args.seed)
    _emit_csv(data.values, args.output)
    return EXIT_OK


def sparsity_table(tmap):
    """Rows ``(component, maxdeg_1, ..., maxdeg_d)`` over the selected features."""
    stages = tmap.stages if isinstance(tmap, ComposedMap) else (tmap,)
    rows = []
    for s, stage in enumerate(stages):
        for i, comp in enumerate(stage.components):
            degs = [0] * stage.n_inputs
            for j, v in enumerate(comp.f.index_set.max_degrees()):
                degs[j] = int(v)
            rows.append([s + 1, stage.m_y + i + 1, len(comp.f.index_set)] + degs)
    return rows


def cmd_report(args):
    tmap = document.load(args.map)
    rows = sparsity_table(tmap)
    width = len(rows[0]) - 3
    header = ["stage", "component", "features"] + [f"maxdeg_x{j + 1}" for j in range(width)]
    lines = [",".join(header)] + [",".join(str(v) for v in r) for r in rows]
    text = "\n".join(lines) + "\n"
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.output, "w") as fh:
            fh.write(text)
    return EXIT_OK


def _fit_flags(p):
    p.add_argument("--input", required=True, help="training CSV")
    p.add_argument("--header", action="store_true", help="first row holds column names")
    p.add_argument("--log-transform", action="store_true", help="take the natural log of every cell")
    p.add_argument("--max-features", type=int, default=None, help="largest m tried (default ceil(sqrt(n)))")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--cv-patience", type=int, default=10,
                   help="stop growing fold paths after this many non-improving steps (0: never)")
    p.add_argument("--family", choices=sorted(FAMILY_FLAGS), default="hermite")
    p.add_argument("--g", choices=["softplus", "square"], default="softplus")
    p.add_argument("--conditional-split", type=int, default=0, metavar="M",
                   help="number of leading covariate columns")
    p.add_argument("--seed", type=int, default=0, help="fold shuffle seed")
    p.add_argument("--l2", type=float, default=0.0, help="coefficient penalty")
    p.add_argument("--quad-tol", type=float, default=1e-3)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--grad-tol", type=float, default=1e-6)
    p.add_argument("--threads", type=int, default=_default_threads(),
                   help="worker cap; results do not depend on it")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="atm-density", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit a map and write a JSON map document")
    _fit_flags(p)
    p.add_argument("--linear-first", action="store_true", help="linear map first, then Hermite functions")
    p.add_argument("--total-degree", type=int, default=None, metavar="P",
                   help="non-adaptive baseline with all features of total degree <= P")
    p.add_argument("--output", required=True, help="map document path")
    p.add_argument("--trace", default=None, help="write the fit trace as JSON")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("cv", help="report the cross-validation curve per component")
    _fit_flags(p)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("eval", help="negative log-likelihood of a test CSV")
    p.add_argument("--map", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--header", action="store_true")
    p.add_argument("--log-transform", action="store_true")
    p.add_argument("--no-std-adjust", action="store_true",
                   help="score in standardized coordinates")
    p.add_argument("--per-sample", action="store_true")
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sample", help="draw samples from a fitted map")
    p.add_argument("--map", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--covariates", default=None, help="CSV of conditioning values")
    p.add_argument("--header", action="store_true", help="covariate CSV has a header row")
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("invert", help="map reference points back to data space")
    p.add_argument("--map", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--covariates", default=None)
    p.add_argument("--header", action="store_true")
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("forward", help="push data points through a fitted map")
    p.add_argument("--map", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--header", action="store_true")
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("generate", help="write synthetic samples")
    p.add_argument("--target", choices=["mog3", "fig1", "lorenz96", "gauss"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--steps", type=int, default=2000, help="Lorenz-96 integration steps")
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--forcing", type=float, default=8.0)
    p.add_argument("--rho", type=float, default=0.9, help="gauss: common correlation")
    p.add_argument("--weight-seed", type=int, default=None,
                   help="mog3: seed of the mixture weights (default --seed)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("report", help="maximum degree per variable for each component (CSV)")
    p.add_argument("--map", required=True)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_report)
    return parser


def _fail(code, kind, message):
    sys.stderr.write(json.dumps({"error": kind, "message": str(message)}) + "\n")
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as err:
        return _fail(EXIT_INPUT, "usage", err)
    try:
        return args.func(args)
    except (NumericalError, QuadratureError, InversionError, FloatingPointError) as err:
        return _fail(EXIT_NUMERICAL, "numerical", err)
    except (OSError, ValueError) as err:
        # InputError, ConfigError and DocumentError are ValueErrors
        return _fail(EXIT_INPUT, type(err).__name__, err)


if __name__ == "__main__":
    sys.exit(main())
