#!/usr/bin/env python3
"""Annealing success rate versus schedule length.

Default profile: the 8x8 shuffled planted-block instance with b=4, scored
over 30 trials per schedule length using the exact conditional row readout.
Runs in under a minute.

--full switches to the 12x12 shuffled noise-level-2 instance with b=6 and
100 trials per schedule length, drawing 100000 samples per annealing step
from the exact distribution.  Expect hours of runtime.
"""

import argparse
import json

import numpy as np

from photonclust import biclustering, datasets
from photonclust.scenarios import _sa_profile_dataset


def run_profile(values, rows, cols, b, steps, trials, num_samples, exact, seed):
    schedule = biclustering.AnnealSchedule(100.0, 0.01, steps)
    hits = 0
    for trial in range(trials):
        found, _ = biclustering.bs_bicluster_main(
            values, b=b, k=1, num_samples=num_samples, schedule=schedule,
            seed=[seed, steps, trial], exact=exact,
        )
        hits += bool(found) and set(found[0].rows) == set(rows) \
            and set(found[0].cols) == set(cols)
        if (trial + 1) % 10 == 0:
            print(f"  steps={steps}: {trial + 1}/{trials} trials, {hits} hits")
    return hits


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--full", action="store_true",
                        help="12x12 instance, 100 trials, sampled readout (hours)")
    parser.add_argument("--trials", type=int, default=None)
    parser.add_argument("--steps", default="20,200",
                        help="comma-separated schedule lengths")
    parser.add_argument("--seed", type=int, default=5)
    parser.add_argument("--out", help="write the JSON summary here")
    args = parser.parse_args()

    if args.full:
        print("full profile: 12x12, b=6, sampled readout; expect hours")
        ds = datasets.gen_bs_problem2(0)
        rows, cols = ds.truth.blocks[0]
        values = ds.values
        b, trials = 6, args.trials or 100
        num_samples, exact = 100_000, False
    else:
        values, rows, cols = _sa_profile_dataset(0)
        b, trials = 4, args.trials or 30
        num_samples, exact = 0, True

    summary = {"experiment": "anneal_profile", "b": b, "trials": trials,
               "profile": "full" if args.full else "reduced", "success": {}}
    for steps in [int(s) for s in args.steps.split(",")]:
        hits = run_profile(values, rows, cols, b, steps, trials,
                           num_samples, exact, args.seed)
        summary["success"][str(steps)] = hits / trials
        print(f"steps={steps}: success {hits}/{trials} = {hits / trials:.3f}")

    if args.out:
        with open(args.out, "w") as fh:
            fh.write(json.dumps(summary, sort_keys=True, indent=2) + "\n")
        print(f"summary written to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
