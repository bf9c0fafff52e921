"""Command-line interface.

Subcommands:
  gen-data   write a synthetic labelled dataset
  attribute  write per-instance attribution records for one method
  oracle     like attribute, using the exact subset-enumeration oracle
  evaluate   compare methods with the faithfulness report
  report     render a report as a summary table and curve plot data

Every artifact write is deterministic for a fixed config and seed.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import dataio
from .baselines import BaselineStrategy, prepare_dataset
from .config import RunConfig, resolve_config
from .errors import StepshapError
from .pipeline import (
    compute_attributions,
    conform_dataset,
    evaluate_methods,
    make_model,
    observed_value_pool,
    run_generation,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stepshap",
        description="Attribute step-to-step prediction changes and evaluate attribution faithfulness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="flat JSON config file mirroring the CLI flags")
        p.add_argument("--seed", type=int, help="root seed for all randomness")
        p.add_argument("--out", help="output path")

    gen = sub.add_parser("gen-data", help="generate a synthetic dataset")
    common(gen)
    gen.add_argument("--format", choices=("csv", "jsonl"), help="dataset file format")
    gen.add_argument("--features", type=int, help="number of features")
    gen.add_argument("--window", type=int, help="window length")
    gen.add_argument("--instances", type=int, help="number of instances")
    gen.add_argument("--observe-prob", dest="observe_prob", type=float, help="per-cell observation probability")
    gen.add_argument("--scorer", choices=("linear", "interaction"), help="ground-truth scorer")
    gen.add_argument("--label-mode", dest="label_mode", choices=("bernoulli", "threshold"))
    gen.add_argument("--label-noise", dest="label_noise", type=float)

    def attribution_flags(p: argparse.ArgumentParser) -> None:
        common(p)
        p.add_argument("--data", help="input dataset file")
        p.add_argument("--format", choices=("csv", "jsonl"), help="input dataset format")
        p.add_argument("--baseline", choices=("forward_fill", "zero", "population"))
        p.add_argument("--model", choices=("tiny_logistic", "linear", "interaction"))
        p.add_argument("--model-path", dest="model_path", help="load a saved model file instead")

    attribute = sub.add_parser("attribute", help="write attribution records for one method")
    attribution_flags(attribute)
    attribute.add_argument("--method", help="attribution method (default deltashap)")
    attribute.add_argument("--n", type=int, help="number of sampled permutations")

    oracle = sub.add_parser("oracle", help="write exact attribution records")
    attribution_flags(oracle)
    oracle.add_argument("--cap", dest="exact_cap", type=int, help="observed-feature cap")

    evaluate = sub.add_parser("evaluate", help="compare attribution methods")
    attribution_flags(evaluate)
    evaluate.add_argument("--method", help="comma-separated method list (default all)")
    evaluate.add_argument("--n", type=int, help="number of sampled permutations")
    evaluate.add_argument("--p", type=float, help="adaptive removal fraction")
    evaluate.add_argument("--k-max", dest="k_max", type=int, help="removal depth horizon")

    report = sub.add_parser("report", help="render summary table and curve data")
    report.add_argument("--report", required=True, help="evaluation report JSON")
    report.add_argument("--out", help="output directory (default: report's directory)")
    return parser


def _cfg(args: argparse.Namespace, require_method: bool = False) -> RunConfig:
    values = {
        k: v
        for k, v in vars(args).items()
        if k not in ("command", "config", "report") and v is not None
    }
    if require_method and "method" not in values:
        values["method"] = "deltashap"
    return resolve_config(values, args.config)


def _load_prepared(cfg: RunConfig):
    if cfg.data is None:
        raise StepshapError("no input dataset; pass --data or set 'data' in the config")
    if cfg.data.endswith(".jsonl"):
        fmt = "jsonl"
    elif cfg.data.endswith(".csv"):
        fmt = "csv"
    else:
        fmt = cfg.format
    ds = dataio.ingest(cfg.data, fmt)
    lengths = {inst.window.window_length for inst in ds.instances}
    if len(lengths) > 1:
        # sparse event files can yield ragged windows; front-pad to the longest
        ds = conform_dataset(ds, max(lengths))
    strategy = BaselineStrategy(cfg.baseline, ds.schema)
    prepared = prepare_dataset(ds, strategy)
    return prepared, strategy


def _attribution_records(cfg: RunConfig, method: str) -> list[dict]:
    prepared, strategy = _load_prepared(cfg)
    model = make_model(cfg, prepared)
    if prepared.instances and prepared.instances[0].window.window_length != model.window_length:
        prepared = prepare_dataset(conform_dataset(prepared, model.window_length), strategy)
    pool = observed_value_pool(prepared) if method == "afo" else None
    results = compute_attributions(method, model, prepared, strategy, cfg, pool)
    return [
        dataio.attribution_record(
            result,
            prepared.schema,
            inst.instance_id,
            method,
            cfg.baseline,
            seed=None if method == "oracle" else cfg.seed,
            n=cfg.n if method == "deltashap" else None,
        )
        for inst, result in zip(prepared.instances, results)
    ]


def _require_out(cfg: RunConfig) -> str:
    if cfg.out is None:
        raise StepshapError("no output path; pass --out or set 'out' in the config")
    return cfg.out


def cmd_gen_data(args: argparse.Namespace) -> int:
    cfg = _cfg(args)
    out = _require_out(cfg)
    result = run_generation(cfg)
    dataio.write_dataset(result.dataset, out, cfg.format)
    print(
        f"wrote {out}: {len(result.dataset)} instances, "
        f"positive fraction {result.positive_fraction:.3f}"
    )
    return 0


def cmd_attribute(args: argparse.Namespace) -> int:
    cfg = _cfg(args, require_method=True)
    if len(cfg.method) != 1:
        raise StepshapError("attribute takes exactly one --method")
    out = _require_out(cfg)
    records = _attribution_records(cfg, cfg.method[0])
    dataio.write_attribution_records(records, out)
    print(f"wrote {out}: {len(records)} attribution records ({cfg.method[0]})")
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    cfg = _cfg(args, require_method=True)
    out = _require_out(cfg)
    records = _attribution_records(cfg, "oracle")
    dataio.write_attribution_records(records, out)
    print(f"wrote {out}: {len(records)} exact attribution records")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = _cfg(args)
    out = _require_out(cfg)
    started = time.perf_counter()
    prepared, strategy = _load_prepared(cfg)
    model = make_model(cfg, prepared)
    if prepared.instances and prepared.instances[0].window.window_length != model.window_length:
        prepared = prepare_dataset(conform_dataset(prepared, model.window_length), strategy)
    reports = evaluate_methods(model, prepared, strategy, cfg)
    document = dataio.report_to_dict(
        reports,
        config={
            "seed": cfg.seed,
            "n": cfg.n,
            "p": cfg.p,
            "k_max": cfg.k_max,
            "baseline": cfg.baseline,
            "methods": list(cfg.method),
            "model": cfg.model if cfg.model_path is None else cfg.model_path,
            "data": cfg.data,
        },
    )
    dataio.write_report(document, out)
    elapsed = time.perf_counter() - started
    evals = sum(r.attribution_eval_count + r.metric_eval_count for r in reports.values())
    print(f"wall_clock_seconds={elapsed:.3f} model_evals={evals}", file=sys.stderr)
    print(f"wrote {out}: methods {', '.join(cfg.method)}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    document = dataio.read_report(args.report)
    out_dir = Path(args.out) if args.out else Path(args.report).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    table = dataio.summary_table(document)
    (out_dir / "summary.txt").write_text(table, encoding="utf-8")
    dataio.write_curves_csv(document, out_dir / "curves.csv")
    print(table, end="")
    print(f"wrote {out_dir / 'summary.txt'} and {out_dir / 'curves.csv'}")
    return 0


_HANDLERS = {
    "gen-data": cmd_gen_data,
    "attribute": cmd_attribute,
    "oracle": cmd_oracle,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
}


def run_cli(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed its diagnostic
        return int(exc.code) if exc.code else 0
    try:
        return _HANDLERS[args.command](args)
    except (StepshapError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))
