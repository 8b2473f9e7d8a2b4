"""Command-line front end.

Subcommands: ``evaluate`` (full metric report for a score file),
``calibrate`` (cross-validated affine calibration of posterior scores), and
``curves`` (cost-curve / gamma-sweep / temperature tables). Exit codes:
0 success, 2 validation error, 3 numeric failure such as an undefined
normalization.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Dict, List, Optional, Sequence

from . import __version__
from .core import (
    DEFAULT_EPS_Q,
    DEFAULT_EPS_U,
    ClampCounters,
    ConfidenceOnly,
    CostMatrix,
    ecuas,
)
from .baselines import (
    DEFAULT_ECE_BINS,
    UndefinedMetricError,
    auc,
    aurc,
    brier_binary,
    brier_multiclass,
    ce_binary,
    ce_multiclass,
    ece,
    error_rate,
)
from .calibration import crossval_calibrate
from .dataio import (
    CsvFormatError,
    Dataset,
    EvaluationReport,
    read_generative_csv,
    read_posterior_csv,
    write_json,
    write_posterior_csv,
    write_report,
    write_table,
)
from .experiments import DEFAULT_T_GRID, cost_curve, gamma_sweep, temperature_experiment
from .normalization import (
    NormalizationUndefinedError,
    naive_prior,
    naive_reference_metrics,
    normalize_metric,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3


def _env_float(name: str, fallback: float) -> float:
    raw = os.environ.get(name)
    if raw is None:
        return fallback
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"environment variable {name}={raw!r} is not a number") from None


def _parse_n_list(raw: str) -> List[float]:
    try:
        values = [float(part) for part in raw.split(",") if part.strip() != ""]
    except ValueError:
        raise ValueError(f"--n expects comma-separated numbers, got {raw!r}") from None
    if not values or any(v < 0 for v in values):
        raise ValueError("--n values must be >= 0")
    return values


def _format_n(n: float) -> str:
    return str(int(n)) if float(n).is_integer() else str(n)


def _build_cost(cost: str, kind: str, k: Optional[int], dataset: Dataset) -> CostMatrix:
    if cost == "zero-one-inf":
        return CostMatrix.generalized_zero_one_infinite()
    if kind == "posterior":
        if k is not None and k != dataset.k:
            raise ValueError(f"--K {k} disagrees with file K={dataset.k}")
        return CostMatrix.zero_one(dataset.k)
    if k is None:
        raise ValueError("--cost zero-one with generative records requires --K")
    return CostMatrix.generalized_zero_one(k)


def cmd_evaluate(args: argparse.Namespace) -> int:
    eps_q = args.eps_q if args.eps_q is not None else _env_float("ECUAS_EPS_Q", DEFAULT_EPS_Q)
    eps_u = _env_float("ECUAS_EPS_U", DEFAULT_EPS_U)
    n_values = _parse_n_list(args.n)

    if args.kind == "posterior":
        dataset = read_posterior_csv(args.input)
    else:
        dataset = read_generative_csv(args.input)
        if args.normalize:
            raise ValueError(
                "--normalize is unavailable for generative records: "
                "there is no prior class distribution to build the naive reference from"
            )
    if len(dataset) == 0:
        raise ValueError(f"{args.input}: empty dataset")
    cost = _build_cost(args.cost, args.kind, args.K, dataset)

    samples = dataset.scored_samples()
    counters = ClampCounters()
    metrics: Dict[str, float] = {}
    metrics["er"] = error_rate(samples)
    metrics["ece"] = ece(samples, args.ece_bins)
    try:
        metrics["auc"] = auc(samples)
    except UndefinedMetricError:
        metrics["auc"] = float("nan")
    metrics["ce_qe"] = ce_binary(samples, eps_q)
    metrics["bs_qe"] = brier_binary(samples)
    if args.kind == "posterior":
        metrics["ce_q"] = ce_multiclass(dataset.records, eps_q)
        metrics["bs_q"] = brier_multiclass(dataset.records)
    metrics["aurc"] = aurc(samples)

    if args.kind == "posterior" and args.cost == "zero-one-inf":
        # Score the (correctness, confidence) view in the K -> infinity limit.
        records = [ConfidenceOnly(s.correct, s.confidence) for s in samples]
    else:
        records = dataset.records
    for n in n_values:
        metrics[f"ecuas_{_format_n(n)}"] = ecuas(
            records, n, cost, eps_q=eps_q, eps_u=eps_u, counters=counters
        )

    if args.normalize:
        naive = naive_prior(dataset.labels(), k=dataset.k)
        reference = naive_reference_metrics(
            naive,
            dataset.labels(),
            n_values,
            eps_q=eps_q,
            infinite_k=args.cost == "zero-one-inf",
        )
        for name, ref in reference.items():
            if name in metrics:
                metrics[f"n_{name}"] = normalize_metric(metrics[name], ref)

    report = EvaluationReport(
        metrics=metrics,
        config={
            "command": "evaluate",
            "version": __version__,
            "input": args.input,
            "kind": args.kind,
            "cost": args.cost,
            "k": dataset.k if args.kind == "posterior" else args.K,
            "n": n_values,
            "normalize": bool(args.normalize),
            "ece_bins": args.ece_bins,
            "eps_q": eps_q,
            "eps_u": eps_u,
        },
        warnings=counters.as_dict(),
    )
    write_report(report, args.out, args.format)
    return EXIT_OK


def cmd_calibrate(args: argparse.Namespace) -> int:
    dataset = read_posterior_csv(args.input)
    calibrated, models = crossval_calibrate(
        [rec.q for rec in dataset.records],
        dataset.labels(),
        folds=args.folds,
        seed=args.seed,
    )
    records = [
        type(rec)(rec.label, q) for rec, q in zip(dataset.records, calibrated)
    ]
    write_posterior_csv(args.out, records)
    sidecar = {
        "command": "calibrate",
        "version": __version__,
        "input": args.input,
        "folds": args.folds,
        "seed": args.seed,
        "models": [
            {"fold": i, "alpha": m.alpha, "beta": [float(b) for b in m.beta]}
            for i, m in enumerate(models)
        ],
    }
    write_json(args.out + ".meta.json", sidecar)
    return EXIT_OK


def cmd_curves(args: argparse.Namespace) -> int:
    meta = {"command": f"curves {args.curve}", "version": __version__}
    if args.curve == "cost-curve":
        k = None if args.K in (None, "inf") else int(args.K)
        rows = cost_curve(args.n_single, k, args.grid_size)
        meta.update({"n": args.n_single, "k": k, "grid_size": args.grid_size})
    elif args.curve == "gamma-sweep":
        if args.kind == "posterior":
            dataset = read_posterior_csv(args.input)
        else:
            dataset = read_generative_csv(args.input)
        cost = _build_cost(args.cost, args.kind, args.K_int, dataset)
        from .core import u_max

        top = u_max(cost)
        grid = [top * i / (args.gamma_steps - 1) for i in range(args.gamma_steps)]
        rows = gamma_sweep(dataset.records, cost, grid)
        meta.update(
            {"input": args.input, "kind": args.kind, "cost": args.cost,
             "k": args.K_int, "gamma_steps": args.gamma_steps}
        )
    else:  # temperature
        dataset = read_posterior_csv(args.input)
        t_grid = (
            [float(t) for t in args.t_grid.split(",")] if args.t_grid else list(DEFAULT_T_GRID)
        )
        n_values = _parse_n_list(args.n)
        rows = temperature_experiment(dataset, t_grid, n_values, seed=args.seed)
        meta.update({"input": args.input, "t_grid": t_grid, "n": n_values, "seed": args.seed})
    write_table(args.out, rows, args.format, meta=meta)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecuas",
        description="Decision-theoretic evaluation of uncertainty-augmented systems.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("evaluate", help="compute the full metric report for a score file")
    p_eval.add_argument("--input", required=True)
    p_eval.add_argument("--kind", required=True, choices=["posterior", "generative"])
    p_eval.add_argument("--cost", default="zero-one", choices=["zero-one", "zero-one-inf"])
    p_eval.add_argument("--K", type=int, default=None, help="class count for generative records")
    p_eval.add_argument("--n", default="0,1,128", help="comma-separated weight exponents")
    p_eval.add_argument("--normalize", action="store_true")
    p_eval.add_argument("--ece-bins", type=int, default=DEFAULT_ECE_BINS)
    p_eval.add_argument("--eps-q", type=float, default=None)
    p_eval.add_argument("--out", required=True)
    p_eval.add_argument("--format", default="json", choices=["csv", "json"])
    p_eval.set_defaults(func=cmd_evaluate)

    p_cal = sub.add_parser("calibrate", help="cross-validated affine calibration")
    p_cal.add_argument("--input", required=True)
    p_cal.add_argument("--folds", type=int, default=5)
    p_cal.add_argument("--seed", type=int, default=0)
    p_cal.add_argument("--out", required=True)
    p_cal.set_defaults(func=cmd_calibrate)

    p_curves = sub.add_parser("curves", help="emit analysis tables")
    curves_sub = p_curves.add_subparsers(dest="curve", required=True)

    p_cc = curves_sub.add_parser("cost-curve", help="cost versus confidence")
    p_cc.add_argument("--n", dest="n_single", type=float, required=True)
    p_cc.add_argument("--K", default="inf", help="class count or 'inf'")
    p_cc.add_argument("--grid-size", type=int, default=200)
    p_cc.add_argument("--out", required=True)
    p_cc.add_argument("--format", default="csv", choices=["csv", "json"])
    p_cc.set_defaults(func=cmd_curves)

    p_gs = curves_sub.add_parser("gamma-sweep", help="expected cost per rejection cost")
    p_gs.add_argument("--input", required=True)
    p_gs.add_argument("--kind", default="posterior", choices=["posterior", "generative"])
    p_gs.add_argument("--cost", default="zero-one", choices=["zero-one", "zero-one-inf"])
    p_gs.add_argument("--K", dest="K_int", type=int, default=None)
    p_gs.add_argument("--gamma-steps", type=int, default=101)
    p_gs.add_argument("--out", required=True)
    p_gs.add_argument("--format", default="csv", choices=["csv", "json"])
    p_gs.set_defaults(func=cmd_curves)

    p_t = curves_sub.add_parser("temperature", help="sampled-candidate degradation table")
    p_t.add_argument("--input", required=True)
    p_t.add_argument("--t-grid", default=None, help="comma-separated temperatures")
    p_t.add_argument("--n", default="0,1,128")
    p_t.add_argument("--seed", type=int, default=0)
    p_t.add_argument("--out", required=True)
    p_t.add_argument("--format", default="csv", choices=["csv", "json"])
    p_t.set_defaults(func=cmd_curves)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NormalizationUndefinedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (CsvFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
