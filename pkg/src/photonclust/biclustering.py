"""Bicluster search heuristics built on the photonic samplers.

Three entry points:

* ``bs_bicluster_main`` runs simulated annealing over column subsets, using
  single-photon sampling (``find_bicluster_sa`` / ``get_rows``) to pick rows
  for each candidate column set, then zeroes what it found and repeats.
* ``pad_rectangular`` preprocesses a matrix so the square-bicluster search
  can return rectangular shapes, via all-ones anchor columns that are always
  part of the candidate set and stripped from results.
* ``gbs_bicluster_main`` draws threshold click patterns from a Gaussian
  program; a pattern decodes directly into rows and columns, and acceptable
  candidates are recorded, zeroed out, and the program rebuilt.

Everything is deterministic given the seed: per-step sampler seeds, the
acceptance uniforms, and neighbor moves all derive from one generator.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .boson_sampling import (
    build_input,
    dilate,
    enumerate_distribution,
    extract_rows,
    postselect_mask,
    sample,
)
from .errors import NumericalError
from .gbs import build_program, chain_rule_sample, decode_clicks
from .matrix_functions import permanent
from .numerics import sigma_max

__all__ = [
    "EMPTY_COST",
    "COST_FUNCTIONS",
    "Bicluster",
    "AnnealSchedule",
    "PaddedProblem",
    "evaluate_candidate",
    "get_rows",
    "shrink_columns",
    "find_bicluster_sa",
    "bs_bicluster_main",
    "pad_rectangular",
    "gbs_bicluster_main",
    "success_counts",
    "success_estimate",
    "SUCCESS_MODES",
]

logger = logging.getLogger(__name__)

# cost assigned when no postselected sample survives any tau
EMPTY_COST = -1000.0


@dataclass(frozen=True)
class Bicluster:
    """A found submatrix: row/column index sets plus the values and score.

    ``values`` is the dataset submatrix at extraction time (later zeroing
    does not mutate it).  An empty result has no rows, no cols, and cost
    ``EMPTY_COST``.
    """

    rows: tuple
    cols: tuple
    values: np.ndarray
    cost: float
    cost_fn: str

    @property
    def empty(self) -> bool:
        return len(self.rows) == 0


def _empty_bicluster(cost_fn: str) -> Bicluster:
    return Bicluster((), (), np.zeros((0, 0)), EMPTY_COST, cost_fn)


@dataclass(frozen=True)
class AnnealSchedule:
    """Exponential decay t_i = t0 * (tf/t0)**(i/steps) for i = 0..steps-1."""

    t0: float = 100.0
    tf: float = 0.01
    steps: int = 200

    def __post_init__(self):
        if not self.t0 > self.tf > 0:
            raise ValueError(f"need t0 > tf > 0, got t0={self.t0}, tf={self.tf}")
        if self.steps < 1:
            raise ValueError("steps must be at least 1")

    def temperatures(self) -> np.ndarray:
        i = np.arange(self.steps)
        return self.t0 * (self.tf / self.t0) ** (i / self.steps)


COST_FUNCTIONS = ("permanent", "frobenius_norm", "mean_value")


def evaluate_candidate(beta, cost_fn: str) -> float:
    """Score a candidate submatrix: its permanent, Frobenius norm, or mean."""
    beta = np.asarray(beta, dtype=float)
    if beta.size == 0:
        raise ValueError("candidate is empty")
    if cost_fn == "permanent":
        if beta.shape[0] != beta.shape[1]:
            raise ValueError(f"permanent needs a square candidate, got {beta.shape}")
        return float(np.real(permanent(beta)))
    if cost_fn == "frobenius_norm":
        return float(np.sqrt((beta * beta).sum()))
    if cost_fn == "mean_value":
        return float(beta.mean())
    raise ValueError(f"unknown cost function {cost_fn!r}, have {COST_FUNCTIONS}")


def get_rows(D_s, cols, num_samples: int, tau_max: Optional[int] = None, seed: int = 0,
             exact: bool = False, cache: Optional[dict] = None):
    """Pick the row set that single-photon sampling associates with ``cols``.

    Photons enter the modes of the chosen columns of the dilated matrix
    (spectral norm at most 1; scaling is the caller's job).  Postselection
    keeps draws whose auxiliary modes are dark and whose row modes hold at
    most tau photons, with tau escalating from 1 up to ``tau_max`` (default
    max(1, b-1)) whenever nothing survives.  The winning outcome is the most
    frequent surviving draw, or with ``exact`` the highest-probability
    surviving outcome of the full distribution; ties break toward the
    lexicographically smallest photon-count vector.

    Returns ``(rows, diag)``.  ``rows`` is an ascending tuple, empty when
    every tau fails (the caller then scores the candidate at EMPTY_COST).
    ``diag`` reports tau, kept/total counts, and the winning pattern.
    ``cache`` maps frozen column sets to enumerated distributions; pass one
    dict through a whole annealing run to enumerate each column set once.
    """
    D_s = np.asarray(D_s, dtype=float)
    d1, d2 = D_s.shape
    cols = tuple(sorted(int(c) for c in cols))
    b = len(cols)
    if tau_max is None:
        tau_max = max(1, b - 1)
    if tau_max < 1:
        raise ValueError("tau_max must be at least 1")
    key = frozenset(cols)
    dist = cache.get(key) if cache is not None else None
    if dist is None:
        unitary = dilate(D_s, pre_scaled=True)
        dist = enumerate_distribution(unitary, build_input(cols, d1 + d2))
        if cache is not None:
            cache[key] = dist

    if exact:
        probs = dist.probabilities
        for tau in range(1, tau_max + 1):
            mask = postselect_mask(dist.outcomes, tau, d1)
            kept = probs[mask]
            if kept.size and kept.sum() > 0.0:
                surviving = dist.outcomes[mask]
                best = np.max(kept)
                tied = surviving[kept >= best - 1e-15 * max(best, 1.0)]
                pattern = min(map(tuple, tied.tolist()))
                rows = extract_rows(np.array(pattern), d1)
                return tuple(int(r) for r in rows), {
                    "tau": tau, "kept": float(kept.sum()), "total": 1.0,
                    "empty": False, "pattern": pattern,
                }
        return (), {"tau": None, "kept": 0.0, "total": 1.0, "empty": True, "pattern": None}

    if num_samples < 1:
        raise ValueError("num_samples must be positive when sampling")
    draws, _ = sample(dist, num_samples, seed)
    for tau in range(1, tau_max + 1):
        mask = postselect_mask(draws, tau, d1)
        n_kept = int(mask.sum())
        if n_kept:
            patterns, counts = np.unique(draws[mask], axis=0, return_counts=True)
            # np.unique sorts patterns ascending, so argmax lands on the
            # lexicographically smallest among ties
            pattern = tuple(int(v) for v in patterns[np.argmax(counts)])
            rows = extract_rows(np.array(pattern), d1)
            return tuple(int(r) for r in rows), {
                "tau": tau, "kept": n_kept, "total": num_samples,
                "empty": False, "pattern": pattern,
            }
    return (), {"tau": None, "kept": 0, "total": num_samples, "empty": True, "pattern": None}


def shrink_columns(cols, rows, D_s, protected=()):
    """Drop columns of lowest L2 norm until the candidate is square.

    Norms are taken over full columns of the matrix; ties drop the lowest
    index first.  ``protected`` columns (anchors) are never dropped; raises
    ValueError if the target size cannot be reached without touching them,
    or if ``rows`` is empty or larger than ``cols``.
    """
    D_s = np.asarray(D_s, dtype=float)
    cols = tuple(sorted(int(c) for c in cols))
    rows = tuple(sorted(int(r) for r in rows))
    if not rows:
        raise ValueError("empty row set has no square candidate")
    n_drop = len(cols) - len(rows)
    if n_drop < 0:
        raise ValueError(f"more rows ({len(rows)}) than columns ({len(cols)})")
    if n_drop:
        protected = frozenset(int(c) for c in protected)
        droppable = [c for c in cols if c not in protected]
        if len(droppable) < n_drop:
            raise ValueError(
                f"need to drop {n_drop} columns but only {len(droppable)} are unprotected"
            )
        order = sorted(droppable, key=lambda c: (np.linalg.norm(D_s[:, c]), c))
        dropped = set(order[:n_drop])
        cols = tuple(c for c in cols if c not in dropped)
    return cols, D_s[np.ix_(rows, cols)]


def _trace_open(trace):
    if trace is None:
        return None, False
    if hasattr(trace, "write"):
        return trace, False
    return open(trace, "w"), True


def _seed_words(seed) -> list:
    if isinstance(seed, (list, tuple)):
        return [int(s) for s in seed]
    return [int(seed)]


def find_bicluster_sa(D_s, b: int, num_samples: int, cost_fn: str = "permanent",
                      schedule: Optional[AnnealSchedule] = None, seed: int = 0,
                      tau_max: Optional[int] = None, anchored_cols=(),
                      exact: bool = False, trace=None) -> Bicluster:
    """Simulated annealing over column subsets of a pre-scaled matrix.

    One Monte Carlo sweep per temperature: sample rows for the current
    candidate columns, square it up, score it, and accept iff the cost rose
    or U(0,1) < exp(delta/t).  The neighbor move swaps one uniformly random
    in-set column for one out-of-set column.  Anchored columns sit in every
    candidate, never move, and are stripped from the returned bicluster
    (their all-ones content only shifts costs by a constant factor).

    Returns the best-scoring accepted candidate over the whole run; if no
    step was accepted, an empty bicluster at EMPTY_COST.
    """
    D_s = np.asarray(D_s, dtype=float)
    d1, d2 = D_s.shape
    if not 1 <= b <= min(d1, d2):
        raise ValueError(f"b={b} outside 1..min{(d1, d2)}")
    if cost_fn not in COST_FUNCTIONS:
        raise ValueError(f"unknown cost function {cost_fn!r}, have {COST_FUNCTIONS}")
    anchors = frozenset(int(c) for c in anchored_cols)
    if any(not 0 <= c < d2 for c in anchors):
        raise ValueError("anchored column outside matrix")
    if len(anchors) >= b:
        raise ValueError(f"{len(anchors)} anchors leave no free choice for b={b}")
    if schedule is None:
        schedule = AnnealSchedule()

    rng = np.random.default_rng([*_seed_words(seed), 4])
    pool = [c for c in range(d2) if c not in anchors]
    current = tuple(sorted(
        anchors | set(rng.choice(pool, size=b - len(anchors), replace=False).tolist())
    ))
    candidate = current
    current_cost = 0.0
    best: Optional[Bicluster] = None
    best_cost = -math.inf
    dist_cache: dict = {}
    fh, owned = _trace_open(trace)
    try:
        for step, t in enumerate(schedule.temperatures()):
            step_seed = int(rng.integers(1 << 62))
            rows, diag = get_rows(D_s, candidate, num_samples, tau_max=tau_max,
                                  seed=step_seed, exact=exact, cache=dist_cache)
            if rows:
                try:
                    kept_cols, beta = shrink_columns(candidate, rows, D_s, protected=anchors)
                    cost = evaluate_candidate(beta, cost_fn)
                except ValueError:
                    rows, kept_cols, cost = (), candidate, EMPTY_COST
            else:
                kept_cols, cost = candidate, EMPTY_COST
            delta = cost - current_cost
            accepted = delta > 0 or rng.uniform() < math.exp(min(delta / t, 0.0))
            if accepted:
                current = candidate
                current_cost = cost
                if cost > best_cost:
                    best_cost = cost
                    if rows:
                        out_cols = tuple(c for c in kept_cols if c not in anchors)
                        best = Bicluster(rows, out_cols, D_s[np.ix_(rows, out_cols)].copy(),
                                         cost, cost_fn)
                    else:
                        best = _empty_bicluster(cost_fn)
            if fh is not None:
                fh.write(json.dumps({
                    "step": step, "temperature": t, "cols": list(candidate),
                    "rows": list(rows), "cost": cost, "accepted": bool(accepted),
                    "tau": diag["tau"],
                }) + "\n")
            # neighbor of the accepted state: one in-set column (never an
            # anchor) swapped for one out-of-set column
            outside = [c for c in pool if c not in current]
            if outside:
                swappable = [c for c in current if c not in anchors]
                drop = swappable[int(rng.integers(len(swappable)))]
                add = outside[int(rng.integers(len(outside)))]
                candidate = tuple(sorted((set(current) - {drop}) | {add}))
            else:
                candidate = current
    finally:
        if owned:
            fh.close()
    return best if best is not None else _empty_bicluster(cost_fn)


def bs_bicluster_main(D, b: int, k: int, num_samples: int, cost_fn: str = "permanent",
                      schedule: Optional[AnnealSchedule] = None, termination=None,
                      seed: int = 0, tau_max: Optional[int] = None, exact: bool = False,
                      trace=None):
    """Find up to k non-overlapping square biclusters by repeated annealing.

    Scales the matrix once by its largest singular value, then alternates
    annealing searches with zeroing of the found positions; the scale is
    never refreshed, so zeroed cells stay zero and found values keep their
    meaning.  ``termination``, if given, is a predicate over the bicluster
    list that can stop the loop early.

    Returns ``(biclusters, ledger)`` where the ledger lists every zeroed
    (row, col) position exactly once, in discovery order.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    D = np.asarray(D, dtype=float)
    scale = sigma_max(D)
    if scale == 0.0:
        logger.warning("all-zero matrix: nothing to search")
        return [], []
    D_s = D / scale
    found: list[Bicluster] = []
    ledger: list[tuple] = []
    seen = set()
    fh, owned = _trace_open(trace)
    try:
        for i in range(k):
            if termination is not None and termination(found):
                break
            if not D_s.any():
                logger.warning("residual matrix is all zero after %d biclusters", len(found))
                break
            bic = find_bicluster_sa(D_s, b, num_samples, cost_fn=cost_fn,
                                    schedule=schedule, seed=[*_seed_words(seed), i],
                                    tau_max=tau_max, exact=exact, trace=fh)
            if bic.empty:
                logger.warning("annealing run %d accepted nothing usable", i)
                continue
            found.append(bic)
            for r in bic.rows:
                for c in bic.cols:
                    if (r, c) not in seen:
                        seen.add((r, c))
                        ledger.append((r, c))
            D_s[np.ix_(bic.rows, bic.cols)] = 0.0
            if fh is not None:
                fh.write(json.dumps({
                    "event": "zeroed", "bicluster_index": len(found) - 1,
                    "rows": list(bic.rows), "cols": list(bic.cols), "cost": bic.cost,
                }) + "\n")
    finally:
        if owned:
            fh.close()
    return found, ledger


class PaddedProblem(NamedTuple):
    values: np.ndarray
    d1: int
    d2: int
    transpose_flag: bool
    anchored_cols: tuple


def pad_rectangular(D_prime, b1: int, b2: int) -> PaddedProblem:
    """Prepare a matrix for a b1 x b2 rectangular bicluster search.

    The square search selects as many rows as columns, so the wide side must
    be the rows: if b2 > b1 the matrix is transposed (flag set, shapes swap).
    Then b1 - b2 all-ones columns are appended; they are the anchors, always
    selected with one photon each, making extra rows available while the
    search tracks only b2 real columns.  Search with b = b1 and the returned
    anchors; results come back with anchors already stripped, transposed back
    by the caller when the flag is set.
    """
    D_prime = np.asarray(D_prime, dtype=float)
    if b1 < 1 or b2 < 1:
        raise ValueError("bicluster sides must be at least 1")
    transpose_flag = False
    if b2 > b1:
        D_prime = D_prime.T
        b1, b2 = b2, b1
        transpose_flag = True
    delta = b1 - b2
    d1, d2 = D_prime.shape
    values = np.hstack([D_prime, np.ones((d1, delta))]) if delta else D_prime.copy()
    anchors = tuple(range(d2, d2 + delta))
    return PaddedProblem(values, d1, d2 + delta, transpose_flag, anchors)


def _square_up(beta):
    """Ones-pad a rectangle on its narrow side, transposing wide-first.

    Same convention as the anchor columns in pad_rectangular, so the
    permanent of a rectangular candidate is well defined; the permanent is
    transpose invariant, so the orientation flip does not change the score.
    """
    r, c = beta.shape
    if c > r:
        beta = beta.T
        r, c = c, r
    if r > c:
        beta = np.hstack([beta, np.ones((r, r - c))])
    return beta


def gbs_bicluster_main(D, k: int, nbar_target: float, num_samples: int,
                       cost_fn: str = "mean_value", accept_threshold: float = 0.6,
                       min_dims: int = 2, seed: int = 0, trace=None):
    """Extract up to k non-overlapping biclusters from threshold samples.

    Each round builds a Gaussian program for the current matrix (entries must
    lie in [0, 1]; ``nbar_target`` is the total mean photon number over all
    modes), draws a batch of click patterns, and scans them in order for the
    first candidate whose submatrix mean reaches ``accept_threshold`` with at
    least ``min_dims`` rows and columns.  That candidate is recorded and its
    positions zeroed, and the program is rebuilt, one rebuild per acceptance.
    The loop ends after k acceptances, or when a whole batch yields nothing,
    or when the residual matrix cannot drive the photon source any more.

    Returns ``(biclusters, ledger)`` like the annealing loop.  Candidates may
    be rectangular and of any size at or above ``min_dims``; under the
    permanent cost a rectangular candidate is scored as the permanent of its
    ones-padded square (the pad_rectangular anchor convention).
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if min_dims < 1:
        raise ValueError("min_dims must be at least 1")
    if cost_fn not in COST_FUNCTIONS:
        raise ValueError(f"unknown cost function {cost_fn!r}, have {COST_FUNCTIONS}")
    work = np.asarray(D, dtype=float).copy()
    if work.min() < 0.0 or work.max() > 1.0:
        raise ValueError("matrix entries must lie in [0, 1]")
    d1, d2 = work.shape
    found: list[Bicluster] = []
    ledger: list[tuple] = []
    seen = set()
    fh, owned = _trace_open(trace)
    try:
        for i in range(k):
            if not work.any():
                logger.warning("residual matrix is all zero after %d biclusters", len(found))
                break
            try:
                program = build_program(work, nbar_target)
            except NumericalError as exc:
                logger.warning("photon source unreachable on residual matrix: %s", exc)
                break
            clicks, _ = chain_rule_sample(program, num_samples, seed=[*_seed_words(seed), i])
            hit = None
            for j in range(num_samples):
                rows, cols = decode_clicks(clicks[j], d1, d2)
                if len(rows) < min_dims or len(cols) < min_dims:
                    continue
                beta = work[np.ix_(rows, cols)]
                if beta.mean() >= accept_threshold:
                    hit = (j, tuple(int(r) for r in rows), tuple(int(c) for c in cols), beta)
                    break
            if hit is None:
                logger.info("batch of %d samples produced no acceptable candidate", num_samples)
                break
            j, rows, cols, beta = hit
            scored = _square_up(beta) if cost_fn == "permanent" else beta
            cost = evaluate_candidate(scored, cost_fn)
            found.append(Bicluster(rows, cols, beta.copy(), cost, cost_fn))
            for r in rows:
                for c in cols:
                    if (r, c) not in seen:
                        seen.add((r, c))
                        ledger.append((r, c))
            work[np.ix_(rows, cols)] = 0.0
            if fh is not None:
                fh.write(json.dumps({
                    "sample_index": j, "rows": list(rows), "cols": list(cols),
                    "cost": cost, "round": i,
                }) + "\n")
    finally:
        if owned:
            fh.close()
    return found, ledger


SUCCESS_MODES = ("exact_rows_tau1", "subset_rows_tau3", "exact_clicks")


def _truth_sets(truth):
    if isinstance(truth, Bicluster):
        return set(truth.rows), set(truth.cols)
    rows, cols = truth
    return set(int(r) for r in rows), set(int(c) for c in cols)


def success_counts(samples, truth, mode: str, d1: int):
    """Numerator and denominator behind a success probability.

    ``exact_rows_tau1``: of the draws surviving tau=1 postselection, those
    whose occupied row modes are exactly the true rows.  ``subset_rows_tau3``:
    of the draws surviving tau=3, those whose occupied rows form a subset of
    the true rows.  ``exact_clicks``: of all click patterns, those decoding to
    exactly the true (rows, cols).
    """
    samples = np.asarray(samples)
    true_rows, true_cols = _truth_sets(truth)
    if mode == "exact_clicks":
        den = samples.shape[0]
        num = 0
        for pattern in samples:
            rows, cols = decode_clicks(pattern, d1, samples.shape[1] - d1)
            if set(rows.tolist()) == true_rows and set(cols.tolist()) == true_cols:
                num += 1
        return num, den
    if mode not in ("exact_rows_tau1", "subset_rows_tau3"):
        raise ValueError(f"unknown mode {mode!r}, have {SUCCESS_MODES}")
    tau = 1 if mode == "exact_rows_tau1" else 3
    kept = samples[postselect_mask(samples, tau, d1)]
    den = kept.shape[0]
    num = 0
    for draw in kept:
        occupied = set(extract_rows(draw, d1).tolist())
        if (occupied == true_rows) if tau == 1 else (occupied <= true_rows):
            num += 1
    return num, den


def success_estimate(samples, truth, mode: str, d1: int) -> Optional[float]:
    """Fraction of kept samples matching the truth; None when nothing is kept."""
    num, den = success_counts(samples, truth, mode, d1)
    return None if den == 0 else num / den
