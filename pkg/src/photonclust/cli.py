"""Command-line front end.

Subcommands map onto the library layers: dataset generation, exact
distribution dumps, sampling, the two bicluster extractors, offline analysis,
and named reproduction scenarios.  Every subcommand accepts --config TOML
plus flag overrides (flags win) where configuration applies.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import datasets, harness
from .boson_sampling import (
    build_input,
    dilate,
    enumerate_distribution,
    sample,
    write_distribution_jsonl,
    write_samples_jsonl,
)
from .gbs import build_program, chain_rule_sample, threshold_distribution, write_clicks_jsonl
from .numerics import sigma_max


def _config_from(args, experiment=None) -> harness.ExperimentConfig:
    config = (harness.load_config(args.config)
              if getattr(args, "config", None) else harness.ExperimentConfig())
    overrides = dict(
        experiment=experiment,
        generator=getattr(args, "generator", None),
        dataset_path=getattr(args, "dataset", None),
        alpha=getattr(args, "alpha", None),
        threshold=getattr(args, "threshold", None),
        num_samples=getattr(args, "samples", None),
        tau=getattr(args, "tau", None),
        nbar=getattr(args, "nbar", None),
        nbar_interpretation=getattr(args, "nbar_interpretation", None),
        t0=getattr(args, "t0", None),
        tf=getattr(args, "tf", None),
        steps=getattr(args, "steps", None),
        trials=getattr(args, "trials", None),
        b=getattr(args, "b", None),
        k=getattr(args, "k", None),
        cost_fn=getattr(args, "cost_fn", None),
        accept_threshold=getattr(args, "accept_threshold", None),
        min_dims=getattr(args, "min_dims", None),
        seed=getattr(args, "seed", None),
        workers=getattr(args, "workers", None),
        out=getattr(args, "out", None),
        trace=getattr(args, "trace", None),
        task=getattr(args, "task", None),
    )
    if getattr(args, "exact", False):
        overrides["exact"] = True
    return harness.apply_overrides(config, **overrides)


def _dataset_from(config: harness.ExperimentConfig) -> datasets.Dataset:
    return harness._load_dataset(config.validate())


def _input_cols(args, ds: datasets.Dataset):
    if getattr(args, "cols", None):
        return tuple(int(c) for c in args.cols.split(","))
    if not ds.truth.blocks:
        raise SystemExit("dataset has no planted block; pass --cols explicitly")
    return tuple(ds.truth.blocks[0][1])


def _scaled(ds: datasets.Dataset) -> np.ndarray:
    scale = sigma_max(ds.values)
    if scale == 0.0:
        raise SystemExit("all-zero dataset cannot route photons")
    return ds.values / scale


def cmd_gen_dataset(args) -> int:
    config = _config_from(args)
    if config.generator is None and config.dataset_path is None:
        raise SystemExit("gen-dataset needs --generator")
    ds = _dataset_from(config)
    if not config.out:
        raise SystemExit("gen-dataset needs --out")
    datasets.save_csv(ds, config.out)
    print(f"wrote {ds.generator} seed={ds.seed} shape={ds.values.shape} to {config.out}")
    return 0


def cmd_bs_dist(args) -> int:
    config = _config_from(args)
    ds = _dataset_from(config)
    cols = _input_cols(args, ds)
    d1, d2 = ds.values.shape
    dist = enumerate_distribution(
        dilate(_scaled(ds), pre_scaled=True), build_input(cols, d1 + d2),
        workers=config.workers,
    )
    if not config.out:
        raise SystemExit("bs-dist needs --out")
    write_distribution_jsonl(dist, config.out)
    print(f"wrote {len(dist.probabilities)} outcomes to {config.out}")
    return 0


def cmd_bs_sample(args) -> int:
    config = _config_from(args)
    ds = _dataset_from(config)
    cols = _input_cols(args, ds)
    d1, d2 = ds.values.shape
    dist = enumerate_distribution(
        dilate(_scaled(ds), pre_scaled=True), build_input(cols, d1 + d2),
        workers=config.workers,
    )
    counts, idx = sample(dist, config.num_samples, seed=[config.seed, 0])
    if not config.out:
        raise SystemExit("bs-sample needs --out")
    write_samples_jsonl(counts, idx, config.out, seed=config.seed, workers=config.workers)
    print(f"wrote {config.num_samples} draws to {config.out}")
    return 0


def cmd_bs_bicluster(args) -> int:
    config = _config_from(args, experiment="bs2" if args.dataset is None else "custom")
    if config.experiment == "custom":
        config = harness.apply_overrides(config, task="sa_bicluster")
    report = harness.run_experiment(config)
    _emit_report(report, config)
    return 0


def cmd_gbs_dist(args) -> int:
    config = _config_from(args)
    ds = _dataset_from(config)
    d1, d2 = ds.values.shape
    program = build_program(ds.values, harness._total_nbar(config, d1 + d2))
    dist = threshold_distribution(program)
    if not config.out:
        raise SystemExit("gbs-dist needs --out")
    with open(config.out, "w") as fh:
        for mask, prob in enumerate(dist.probabilities):
            fh.write(json.dumps({
                "mask": mask,
                "clicks": dist.clicks_of(mask).astype(int).tolist(),
                "probability": float(prob),
            }) + "\n")
    print(f"wrote {len(dist.probabilities)} patterns to {config.out}")
    return 0


def cmd_gbs_sample(args) -> int:
    config = _config_from(args)
    ds = _dataset_from(config)
    d1, d2 = ds.values.shape
    program = build_program(ds.values, harness._total_nbar(config, d1 + d2))
    clicks, _ = chain_rule_sample(program, config.num_samples, seed=[config.seed, 0])
    if not config.out:
        raise SystemExit("gbs-sample needs --out")
    write_clicks_jsonl(clicks, config.out, d1, d2, seed=config.seed, workers=config.workers)
    print(f"wrote {config.num_samples} click patterns to {config.out}")
    return 0


def cmd_gbs_bicluster(args) -> int:
    config = _config_from(args, experiment="gbs2" if args.dataset is None else "custom")
    if config.experiment == "custom":
        config = harness.apply_overrides(config, task="gbs_bicluster")
    report = harness.run_experiment(config)
    _emit_report(report, config)
    return 0


def cmd_analyze(args) -> int:
    if args.dataset:
        ds = datasets.load_csv(args.dataset)
        if not ds.truth.blocks:
            raise SystemExit("dataset has no planted block; pass --rows/--cols")
        rows, cols = ds.truth.blocks[0]
        d1 = ds.values.shape[0]
    else:
        if args.rows is None or args.d1 is None:
            raise SystemExit("analyze needs --dataset, or --rows (and --cols) with --d1")
        rows = tuple(int(r) for r in args.rows.split(","))
        cols = tuple(int(c) for c in args.cols.split(",")) if args.cols else ()
        d1 = args.d1
    fragment = harness.analyze(args.samples_file, rows, cols, args.mode, d1)
    text = json.dumps(fragment, sort_keys=True, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def cmd_repro(args) -> int:
    from . import scenarios

    failures = scenarios.run_named(args.name)
    return 1 if failures else 0


def _emit_report(report: dict, config: harness.ExperimentConfig) -> None:
    if config.out:
        harness.write_report(report, config.out)
        print(f"report written to {config.out}")
    else:
        print(json.dumps(harness.strip_timings(report), sort_keys=True, indent=2))


def _add_dataset_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--generator", choices=sorted(datasets.GENERATORS))
    p.add_argument("--dataset", help="dataset CSV path (overrides --generator)")
    p.add_argument("--alpha", type=int)
    p.add_argument("--threshold", type=float)


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML config file; flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--tau", type=int)
    p.add_argument("--nbar", type=float)
    p.add_argument("--nbar-interpretation", dest="nbar_interpretation",
                   choices=["total", "per-mode"])
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.add_argument("--exact", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="photonclust",
        description="Biclustering through simulated photonic sampling",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-dataset", help="generate a synthetic dataset CSV")
    _add_common_flags(p)
    _add_dataset_flags(p)
    p.set_defaults(func=cmd_gen_dataset)

    p = sub.add_parser("bs-dist", help="dump the exact photon-count distribution")
    _add_common_flags(p)
    _add_dataset_flags(p)
    p.add_argument("--cols", help="comma-separated input columns (default: planted block)")
    p.set_defaults(func=cmd_bs_dist)

    p = sub.add_parser("bs-sample", help="draw photon-count samples")
    _add_common_flags(p)
    _add_dataset_flags(p)
    p.add_argument("--cols")
    p.set_defaults(func=cmd_bs_sample)

    p = sub.add_parser("bs-bicluster", help="annealing bicluster search")
    _add_common_flags(p)
    _add_dataset_flags(p)
    p.add_argument("--b", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--t0", type=float)
    p.add_argument("--tf", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--cost-fn", dest="cost_fn",
                   choices=["permanent", "frobenius_norm", "mean_value"])
    p.add_argument("--trace")
    p.set_defaults(func=cmd_bs_bicluster)

    p = sub.add_parser("gbs-dist", help="dump the exact click-pattern distribution")
    _add_common_flags(p)
    _add_dataset_flags(p)
    p.set_defaults(func=cmd_gbs_dist)

    p = sub.add_parser("gbs-sample", help="draw threshold click patterns")
    _add_common_flags(p)
    _add_dataset_flags(p)
    p.set_defaults(func=cmd_gbs_sample)

    p = sub.add_parser("gbs-bicluster", help="click-driven bicluster extraction")
    _add_common_flags(p)
    _add_dataset_flags(p)
    p.add_argument("--k", type=int)
    p.add_argument("--accept-threshold", dest="accept_threshold", type=float)
    p.add_argument("--min-dims", dest="min_dims", type=int)
    p.add_argument("--cost-fn", dest="cost_fn",
                   choices=["permanent", "frobenius_norm", "mean_value"])
    p.add_argument("--trace")
    p.set_defaults(func=cmd_gbs_bicluster)

    p = sub.add_parser("analyze", help="success probability from a samples file")
    p.add_argument("samples_file")
    p.add_argument("--mode", required=True,
                   choices=["exact_rows_tau1", "subset_rows_tau3", "exact_clicks"])
    p.add_argument("--dataset", help="dataset CSV carrying the planted truth")
    p.add_argument("--rows", help="comma-separated truth rows (with --d1)")
    p.add_argument("--cols", help="comma-separated truth columns")
    p.add_argument("--d1", type=int, help="number of row modes")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("repro", help="run a named reproduction scenario")
    p.add_argument("name", help="scenario name, or 'list' to enumerate")
    p.set_defaults(func=cmd_repro)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
