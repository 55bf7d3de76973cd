"""Exact boson-sampling simulation on a dilated interferometer.

A rectangular data matrix D (d1 x d2) is scaled by its largest singular
value and embedded in a (d1+d2)-mode unitary

    U = [[D_s,              sqrt(I - D_s D_s^T)],
         [sqrt(I - D_s^T D_s),          -D_s^T]]

so that the first d2 input modes address the columns of D and the first d1
output modes its rows.  Outcome probabilities follow the permanent rule
|Per(U_sub)|^2 / (prod n_i! prod n_j'!), with U_sub built from the input
columns and output rows repeated by photon count.

Distributions are enumerated exhaustively (all weak compositions of n
photons over the modes) and sampled categorically from the exact
probabilities; postselection then filters on the photon pattern.  Mode
indices are 0-based everywhere.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from .errors import CapacityError, NumericalError
from .matrix_functions import batch_permanent, permanent, select_submatrix
from .numerics import psd_sqrt, sigma_max, validate_unitary

__all__ = [
    "DilatedUnitary",
    "dilate",
    "build_input",
    "outcome_probability",
    "OutcomeDistribution",
    "enumerate_distribution",
    "sample",
    "postselect_mask",
    "postselect",
    "extract_rows",
    "write_distribution_jsonl",
    "write_samples_jsonl",
    "ENUMERATION_CAP",
]

ENUMERATION_CAP = 10**7

_FACT = np.array([math.factorial(k) for k in range(21)], dtype=float)


@dataclass(frozen=True)
class DilatedUnitary:
    """Unitary embedding of a scaled data matrix.

    ``matrix`` is (d1+d2) x (d1+d2) with ``matrix[:d1, :d2]`` equal to the
    scaled data block exactly; ``scale`` records the singular-value divisor
    (1.0 when the caller already scaled).
    """

    matrix: np.ndarray
    d1: int
    d2: int
    scale: float

    @property
    def modes(self) -> int:
        return self.d1 + self.d2


def dilate(D, pre_scaled: bool = False, tol: float = 1e-8) -> DilatedUnitary:
    """Embed a real rectangular matrix in a unitary via the square-root dilation.

    Without ``pre_scaled`` the matrix is always divided by its largest
    singular value, even when that is below 1, so the data block of the
    resulting unitary has spectral norm exactly 1.  An all-zero matrix has
    no scale and is rejected; pass ``pre_scaled=True`` to embed a known
    contraction as is.
    """
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.size == 0:
        raise ValueError(f"dilate expects a nonempty 2-d matrix, got shape {D.shape}")
    d1, d2 = D.shape
    if pre_scaled:
        scale = 1.0
        Ds = D.copy()
    else:
        scale = sigma_max(D)
        if scale == 0.0:
            raise ValueError("cannot scale an all-zero matrix; pass pre_scaled=True to embed it")
        Ds = D / scale
    upper = psd_sqrt(np.eye(d1) - Ds @ Ds.T)
    lower = psd_sqrt(np.eye(d2) - Ds.T @ Ds)
    U = np.block([[Ds, upper], [lower, -Ds.T]])
    validate_unitary(U, tol=tol)
    return DilatedUnitary(matrix=U, d1=d1, d2=d2, scale=scale)


def _unitary_of(U) -> np.ndarray:
    if isinstance(U, DilatedUnitary):
        return U.matrix
    U = np.asarray(U)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValueError(f"expected a square matrix or DilatedUnitary, got shape {U.shape}")
    return U


def build_input(cols, m: int) -> np.ndarray:
    """Single-photon input state: one photon in each listed mode, length m."""
    counts = np.zeros(m, dtype=np.int8)
    seen = set()
    for c in cols:
        c = int(c)
        if not 0 <= c < m:
            raise ValueError(f"input mode {c} outside 0..{m - 1}")
        if c in seen:
            raise ValueError(f"input mode {c} listed twice")
        seen.add(c)
        counts[c] = 1
    return counts


def _check_counts(counts, m: int, name: str) -> np.ndarray:
    counts = np.asarray(counts, dtype=int)
    if counts.shape != (m,):
        raise ValueError(f"{name} must have length {m}, got shape {counts.shape}")
    if np.any(counts < 0):
        raise ValueError(f"{name} must be nonnegative")
    return counts


def outcome_probability(U, input_counts, output_counts) -> float:
    """Probability of one Fock outcome under the permanent rule."""
    mat = _unitary_of(U)
    m = mat.shape[0]
    input_counts = _check_counts(input_counts, m, "input_counts")
    output_counts = _check_counts(output_counts, m, "output_counts")
    if input_counts.sum() != output_counts.sum():
        raise ValueError(
            f"photon conservation violated: {input_counts.sum()} in, {output_counts.sum()} out"
        )
    sub = select_submatrix(mat, output_counts, input_counts)
    per = permanent(sub)
    norm = float(np.prod(_FACT[input_counts]) * np.prod(_FACT[output_counts]))
    return float(abs(per) ** 2 / norm)


@dataclass(frozen=True)
class OutcomeDistribution:
    """Exact outcome table for a fixed input: all weak compositions of the
    photon number over the modes, in lexicographic mode-index order."""

    outcomes: np.ndarray       # (B, m) int8 photon counts
    probabilities: np.ndarray  # (B,) float64, sums to 1 within 1e-9
    input_counts: np.ndarray
    total: float               # raw probability sum before any normalization

    def probability_of(self, counts) -> float:
        counts = np.asarray(counts, dtype=self.outcomes.dtype)
        hit = np.nonzero((self.outcomes == counts).all(axis=1))[0]
        return float(self.probabilities[hit[0]]) if hit.size else 0.0


def enumerate_distribution(U, input_counts, workers: int = 1) -> OutcomeDistribution:
    """All outcome probabilities for ``n`` photons over ``m`` modes.

    Builds every size-n multiset of output modes, gathers the corresponding
    repeated-row submatrices in one stack, and evaluates their permanents in
    bulk.  Raises :class:`CapacityError` when C(n+m-1, n) exceeds
    ``ENUMERATION_CAP`` and :class:`NumericalError` when the probabilities do
    not sum to 1 within 1e-9.
    """
    mat = _unitary_of(U)
    m = mat.shape[0]
    input_counts = _check_counts(input_counts, m, "input_counts")
    n = int(input_counts.sum())
    count = math.comb(n + m - 1, n)
    if count > ENUMERATION_CAP:
        raise CapacityError(
            f"enumeration of {count} outcomes exceeds cap {ENUMERATION_CAP} (n={n}, m={m})"
        )
    base = mat[:, np.repeat(np.arange(m), input_counts)]
    if n == 0:
        outcomes = np.zeros((1, m), dtype=np.int8)
        return OutcomeDistribution(outcomes, np.ones(1), input_counts, 1.0)
    combos = np.fromiter(
        (i for tup in combinations_with_replacement(range(m), n) for i in tup),
        dtype=np.int8,
        count=count * n,
    ).reshape(count, n)
    per = batch_permanent(base[combos.astype(np.intp)], workers=workers)
    flat = combos.astype(np.int64) + np.arange(count, dtype=np.int64)[:, None] * m
    outcomes = np.bincount(flat.ravel(), minlength=count * m).reshape(count, m).astype(np.int8)
    in_norm = float(np.prod(_FACT[input_counts]))
    probs = np.abs(per) ** 2 / (np.prod(_FACT[outcomes], axis=1) * in_norm)
    total = float(probs.sum())
    if abs(total - 1.0) > 1e-9:
        raise NumericalError(f"enumerated probabilities sum to {total!r}, expected 1 within 1e-9")
    return OutcomeDistribution(outcomes, probs, input_counts, total)


def sample(dist: OutcomeDistribution, num_samples: int, seed: int):
    """Categorical draws from an exact distribution.

    Returns ``(counts, draw_indices)`` where ``counts`` is (N, m) and
    ``draw_indices`` the positions drawn from the outcome table.  Identical
    (distribution, seed) pairs give identical sequences.
    """
    if num_samples < 0:
        raise ValueError("num_samples must be nonnegative")
    rng = np.random.default_rng(seed)
    p = dist.probabilities / dist.total
    idx = rng.choice(len(p), size=num_samples, p=p)
    return dist.outcomes[idx], idx


def postselect_mask(samples, tau: int, d1: int) -> np.ndarray:
    """Boolean mask of draws that survive postselection.

    Survivors have every auxiliary mode (index >= d1) dark and at most
    ``tau`` photons in each of the first ``d1`` modes.
    """
    samples = np.asarray(samples)
    if samples.ndim != 2:
        raise ValueError(f"samples must be 2-d (N, m), got shape {samples.shape}")
    if not 0 <= d1 <= samples.shape[1]:
        raise ValueError(f"d1={d1} outside 0..{samples.shape[1]}")
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    return (samples[:, d1:] == 0).all(axis=1) & (samples[:, :d1] <= tau).all(axis=1)


def postselect(samples, tau: int, d1: int):
    """Filter draws; returns (kept samples, kept count, total count)."""
    samples = np.asarray(samples)
    mask = postselect_mask(samples, tau, d1)
    kept = samples[mask]
    return kept, int(mask.sum()), int(samples.shape[0])


def extract_rows(sample_counts, d1: int) -> np.ndarray:
    """Ascending row indices (modes < d1) that received at least one photon."""
    sample_counts = np.asarray(sample_counts)
    if sample_counts.ndim != 1:
        raise ValueError(f"expected one sample, got shape {sample_counts.shape}")
    return np.nonzero(sample_counts[:d1] > 0)[0]


def write_distribution_jsonl(dist: OutcomeDistribution, path) -> None:
    with open(path, "w") as fh:
        for counts, prob in zip(dist.outcomes, dist.probabilities):
            fh.write(json.dumps({"mode_counts": counts.tolist(), "probability": float(prob)}))
            fh.write("\n")


def write_samples_jsonl(counts, draw_indices, path, seed, stream: int = 0, workers: int = 1) -> None:
    counts = np.asarray(counts)
    with open(path, "w") as fh:
        for row, idx in zip(counts, np.asarray(draw_indices)):
            fh.write(
                json.dumps(
                    {
                        "mode_counts": row.tolist(),
                        "draw_index": int(idx),
                        "seed": int(seed),
                        "stream": int(stream),
                        "workers": int(workers),
                    }
                )
            )
            fh.write("\n")
