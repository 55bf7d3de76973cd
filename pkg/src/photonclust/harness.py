"""Experiment orchestration: configs, end-to-end runs, offline analysis.

A run is described by an ``ExperimentConfig`` (TOML file and/or flag
overrides, flags win), executed by ``run_experiment`` into a JSON-serializable
report.  Reports are deterministic given (config, seed, workers) except for
the ``timings`` section, which ``strip_timings`` removes for byte-level
comparison.  ``analyze`` recomputes success probabilities from sample files
without rerunning anything.
"""

from __future__ import annotations

import json
import sys
import time
from dataclasses import asdict, dataclass, replace
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import biclustering, datasets
from .boson_sampling import (
    build_input,
    dilate,
    enumerate_distribution,
    postselect_mask,
    sample,
)
from .errors import CapacityError
from .gbs import build_program, chain_rule_sample, threshold_distribution
from .numerics import sigma_max

__all__ = [
    "ExperimentConfig",
    "load_config",
    "run_experiment",
    "analyze",
    "write_report",
    "strip_timings",
    "EXPERIMENTS",
]

EXPERIMENTS = ("bs1", "bs2", "gbs1", "gbs2", "custom")
CUSTOM_TASKS = ("bs_success", "sa_bicluster", "gbs_success", "gbs_bicluster")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "bs1"
    # dataset: either a named generator or a CSV file
    generator: Optional[str] = None
    dataset_path: Optional[str] = None
    alpha: Optional[int] = None
    threshold: Optional[float] = None
    # sampling
    num_samples: int = 100_000
    tau: Optional[int] = None
    exact: bool = False
    # photon source (gbs): nbar is total over all modes unless the
    # interpretation says per-mode
    nbar: float = 2.0
    nbar_interpretation: str = "total"
    # annealing
    t0: float = 100.0
    tf: float = 0.01
    steps: int = 200
    trials: int = 1
    # bicluster search
    b: int = 6
    k: int = 1
    cost_fn: str = "permanent"
    accept_threshold: float = 0.6
    min_dims: int = 2
    # bookkeeping
    seed: int = 0
    workers: int = 1
    out: Optional[str] = None
    trace: Optional[str] = None
    task: Optional[str] = None

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}, have {EXPERIMENTS}")
        if self.num_samples < 1 and not self.exact:
            raise ValueError("num_samples must be at least 1 in sampled mode")
        if self.nbar_interpretation not in ("total", "per-mode"):
            raise ValueError("nbar_interpretation must be 'total' or 'per-mode'")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        resolved = self
        if self.experiment == "custom":
            if self.task not in CUSTOM_TASKS:
                raise ValueError(f"custom runs need task in {CUSTOM_TASKS}")
            if self.dataset_path is None:
                raise ValueError("custom runs need dataset_path")
        elif self.generator is None and self.dataset_path is None:
            # every named experiment has a canonical generator
            resolved = replace(self, generator=_DEFAULT_GENERATOR[self.experiment])
        return resolved


_DEFAULT_GENERATOR = {
    "bs1": "bs_problem1",
    "bs2": "bs_problem2",
    "gbs1": "bs_problem2",
    "gbs2": "gbs_problem2",
}


def load_config(path) -> ExperimentConfig:
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    known = ExperimentConfig.__dataclass_fields__
    unknown = sorted(set(raw) - set(known))
    if unknown:
        raise ValueError(f"unknown config keys: {unknown}")
    return ExperimentConfig(**raw)


def apply_overrides(config: ExperimentConfig, **overrides) -> ExperimentConfig:
    """Non-None override values replace config fields (flags beat the file)."""
    live = {k: v for k, v in overrides.items() if v is not None}
    return replace(config, **live) if live else config


def _load_dataset(config: ExperimentConfig) -> datasets.Dataset:
    if config.dataset_path is not None:
        ds = datasets.load_csv(config.dataset_path)
        if config.threshold is not None:
            ds = datasets.binarize(ds, config.threshold)
        return ds
    return datasets.generate(config.generator, seed=config.seed, alpha=config.alpha,
                             threshold=config.threshold)


def _first_block(ds: datasets.Dataset):
    if not ds.truth.blocks:
        raise ValueError("dataset carries no planted block to compare against")
    rows, cols = ds.truth.blocks[0]
    return tuple(rows), tuple(cols)


def _total_nbar(config: ExperimentConfig, modes: int) -> float:
    if config.nbar_interpretation == "per-mode":
        return config.nbar * modes
    return config.nbar


def _condition(num, den):
    prob = None if den == 0 else num / den
    return {
        "numerator": num,
        "denominator": den,
        "probability": "undefined" if prob is None else prob,
    }


def _bs_success(config: ExperimentConfig, ds: datasets.Dataset) -> dict:
    """Success probabilities of recovering the planted rows, per condition."""
    values = ds.values
    d1, d2 = values.shape
    rows, cols = _first_block(ds)
    scale = sigma_max(values)
    if scale == 0.0:
        raise ValueError("all-zero dataset cannot route photons")
    D_s = values / scale
    unitary = dilate(D_s, pre_scaled=True)
    dist = enumerate_distribution(unitary, build_input(cols, d1 + d2),
                                  workers=config.workers)
    ideal = np.zeros(d1 + d2, dtype=np.int8)
    ideal[list(rows)] = 1

    if config.exact:
        probs = dist.probabilities
        p_ideal = dist.probability_of(ideal)
        mask1 = postselect_mask(dist.outcomes, 1, d1)
        mask3 = postselect_mask(dist.outcomes, 3, d1)
        row_set = set(rows)
        subset3 = np.array([
            set(np.nonzero(o[:d1])[0].tolist()) <= row_set for o in dist.outcomes
        ])
        den1 = float(probs[mask1].sum())
        den3 = float(probs[mask3].sum())
        num3 = float(probs[mask3 & subset3].sum())
        conditions = {
            "no_postselect": _condition(p_ideal, 1.0),
            "tau1": _condition(p_ideal, den1),
            "tau3": _condition(num3, den3),
        }
    else:
        draws, _ = sample(dist, config.num_samples, seed=[config.seed, 0])
        exact_hits = int((draws == ideal).all(axis=1).sum())
        n1, d1_ = biclustering.success_counts(draws, (rows, cols), "exact_rows_tau1", d1)
        n3, d3_ = biclustering.success_counts(draws, (rows, cols), "subset_rows_tau3", d1)
        conditions = {
            "no_postselect": _condition(exact_hits, config.num_samples),
            "tau1": _condition(n1, d1_),
            "tau3": _condition(n3, d3_),
        }
    return {
        "conditions": conditions,
        "target": {"rows": list(rows), "cols": list(cols)},
        "mode": "exact" if config.exact else "sampled",
    }


def _sa_trials(config: ExperimentConfig, ds: datasets.Dataset) -> dict:
    """Repeated annealing searches scored against the planted block."""
    rows, cols = _first_block(ds)
    schedule = biclustering.AnnealSchedule(config.t0, config.tf, config.steps)
    successes = 0
    per_trial = []
    for trial in range(config.trials):
        found, _ = biclustering.bs_bicluster_main(
            ds.values, b=config.b, k=config.k, num_samples=config.num_samples,
            cost_fn=config.cost_fn, schedule=schedule, seed=[config.seed, trial],
            tau_max=config.tau, exact=config.exact,
        )
        hit = bool(found) and set(found[0].rows) == set(rows) and set(found[0].cols) == set(cols)
        successes += hit
        per_trial.append({
            "trial": trial,
            "rows": list(found[0].rows) if found else [],
            "cols": list(found[0].cols) if found else [],
            "cost": found[0].cost if found else biclustering.EMPTY_COST,
            "success": hit,
        })
    return {
        "success": _condition(successes, config.trials),
        "steps": config.steps,
        "target": {"rows": list(rows), "cols": list(cols)},
        "trials": per_trial,
    }


def _gbs_success(config: ExperimentConfig, ds: datasets.Dataset) -> dict:
    """Probability that a click pattern decodes exactly to the planted block."""
    values = ds.values
    d1, d2 = values.shape
    rows, cols = _first_block(ds)
    program = build_program(values, _total_nbar(config, d1 + d2))
    truth_clicks = np.zeros(d1 + d2, dtype=bool)
    truth_clicks[list(rows)] = True
    truth_clicks[[d1 + c for c in cols]] = True

    if config.exact:
        dist = threshold_distribution(program)
        p_truth = dist.probability_of(truth_clicks)
        modal = dist.modal_pattern()
        return {
            "mode": "exact",
            "truth_probability": p_truth,
            "modal_matches_truth": bool(np.array_equal(modal, truth_clicks)),
            "modal_probability": dist.probability_of(modal),
            "target": {"rows": list(rows), "cols": list(cols)},
            "nbar_total": _total_nbar(config, d1 + d2),
        }
    clicks, _ = chain_rule_sample(program, config.num_samples, seed=[config.seed, 0])
    num, den = biclustering.success_counts(clicks, (rows, cols), "exact_clicks", d1)
    return {
        "mode": "sampled",
        "success": _condition(num, den),
        "target": {"rows": list(rows), "cols": list(cols)},
        "nbar_total": _total_nbar(config, d1 + d2),
    }


def _gbs_extraction(config: ExperimentConfig, ds: datasets.Dataset) -> dict:
    """Iterative click-driven bicluster extraction scored against all blocks."""
    d1, d2 = ds.values.shape
    found, ledger = biclustering.gbs_bicluster_main(
        ds.values, k=config.k, nbar_target=_total_nbar(config, d1 + d2),
        num_samples=config.num_samples, cost_fn=config.cost_fn,
        accept_threshold=config.accept_threshold, min_dims=config.min_dims,
        seed=config.seed, trace=config.trace,
    )
    truth = [(set(r), set(c)) for r, c in ds.truth.blocks]
    matched = sum(
        (set(bic.rows), set(bic.cols)) in truth for bic in found
    )
    return {
        "biclusters": [
            {"rows": list(b.rows), "cols": list(b.cols), "cost": b.cost,
             "cost_fn": b.cost_fn}
            for b in found
        ],
        "ledger_size": len(ledger),
        "matched_truth_blocks": matched,
        "truth_blocks": [[list(r), list(c)] for r, c in ds.truth.blocks],
    }


def run_experiment(config: ExperimentConfig) -> dict:
    """Execute one configured experiment and return its report."""
    config = config.validate()
    t_start = time.perf_counter()
    ds = _load_dataset(config)
    t_data = time.perf_counter()

    kind = config.experiment
    task = config.task if kind == "custom" else {
        "bs1": "bs_success", "bs2": "sa_bicluster",
        "gbs1": "gbs_success", "gbs2": "gbs_bicluster",
    }[kind]
    runner = {
        "bs_success": _bs_success,
        "sa_bicluster": _sa_trials,
        "gbs_success": _gbs_success,
        "gbs_bicluster": _gbs_extraction,
    }[task]
    try:
        results = runner(config, ds)
    except CapacityError as exc:
        raise CapacityError(
            f"{exc} (hint: shrink the dataset, lower the photon count, or use sampled mode)"
        ) from exc
    t_end = time.perf_counter()

    return {
        "experiment": kind,
        "task": task,
        "config": asdict(config),
        "dataset": {
            "generator": ds.generator,
            "seed": ds.seed,
            "alpha": ds.alpha,
            "threshold": ds.threshold,
            "shape": list(ds.values.shape),
        },
        "seeds": {
            "master": config.seed,
            "dataset": ds.seed,
            "sampler_stream": [config.seed, 0],
        },
        "results": results,
        "timings": {
            "dataset_s": t_data - t_start,
            "run_s": t_end - t_data,
            "total_s": t_end - t_start,
        },
    }


def strip_timings(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "timings"}


def write_report(report: dict, path) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps(report, sort_keys=True, indent=2) + "\n")


def _parse_sample_file(path):
    """Read a samples JSONL file into (kind, array).

    Lines either carry ``mode_counts`` (photon-number draws) or ``clicks``
    (threshold patterns).  Malformed lines report their line number.
    """
    counts = []
    kind = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: not valid JSON: {exc}") from exc
            if "mode_counts" in rec:
                this = "counts"
                counts.append(rec["mode_counts"])
            elif "clicks" in rec:
                this = "clicks"
                counts.append(rec["clicks"])
            else:
                raise ValueError(
                    f"{path}:{lineno}: record has neither 'mode_counts' nor 'clicks'"
                )
            if kind is None:
                kind = this
            elif kind != this:
                raise ValueError(f"{path}:{lineno}: mixed record kinds in one file")
    if kind is None:
        raise ValueError(f"{path}: no sample records found")
    arr = np.asarray(counts)
    return kind, arr.astype(bool) if kind == "clicks" else arr


def analyze(samples_path, truth_rows, truth_cols, mode: str, d1: int) -> dict:
    """Offline success probability from a samples file.

    ``truth_rows``/``truth_cols`` are the planted block; ``mode`` is one of
    the success modes; ``d1`` splits row modes from the rest.
    """
    kind, samples = _parse_sample_file(samples_path)
    if mode == "exact_clicks" and kind != "clicks":
        raise ValueError("exact_clicks needs a clicks file")
    if mode != "exact_clicks" and kind != "counts":
        raise ValueError(f"{mode} needs a photon-count samples file")
    num, den = biclustering.success_counts(
        samples, (tuple(truth_rows), tuple(truth_cols)), mode, d1
    )
    return {
        "samples_file": str(samples_path),
        "mode": mode,
        "num_samples": int(samples.shape[0]),
        **_condition(num, den),
    }
