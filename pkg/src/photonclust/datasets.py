"""Synthetic planted-bicluster datasets and their on-disk format.

All randomness comes from numpy's PCG64 through ``default_rng``; streams are
derived from the dataset seed plus a small role tag so that, for one seed,
the planted block values stay identical while the background noise level
varies (role tags: 0 block values, 1 background, 3 shuffling).  Ground truth
is carried in the current coordinate frame and updated through shuffles, with
the applied permutations recorded alongside.

Datasets serialize to CSV with a single ``#``-prefixed JSON header line
holding provenance (generator id, RNG id, seed, noise level, threshold,
planted blocks, permutations) followed by one row per line at 17 significant
digits, which round-trips float64 bit-exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

__all__ = [
    "GroundTruth",
    "Dataset",
    "gen_bs_problem1",
    "gen_bs_problem1_binary",
    "gen_bs_problem2",
    "gen_gbs_problem2",
    "shuffle",
    "binarize",
    "generate",
    "save_csv",
    "load_csv",
    "GENERATORS",
]

RNG_ID = "numpy-pcg64"

# 12 x 12 with one 6 x 6 block for the boson-sampling problems, three 4 x 4
# diagonal blocks for the Gaussian problem
_BS_SHAPE = (12, 12)
_BS_BLOCK = (tuple(range(3, 9)), tuple(range(3, 9)))
_GBS_BLOCKS = tuple(
    (tuple(range(4 * k, 4 * k + 4)), tuple(range(4 * k, 4 * k + 4))) for k in range(3)
)


@dataclass(frozen=True)
class GroundTruth:
    """Planted blocks in the current frame plus the permutations applied so far.

    ``blocks`` is a tuple of (row indices, column indices) pairs, 0-based and
    ascending.  ``row_perm``/``col_perm`` map current positions to original
    ones (``current[i, j] == original[row_perm[i], col_perm[j]]``); ``None``
    means never shuffled.
    """

    blocks: tuple
    row_perm: Optional[tuple] = None
    col_perm: Optional[tuple] = None


@dataclass(frozen=True)
class Dataset:
    values: np.ndarray
    generator: str
    seed: int
    truth: GroundTruth
    alpha: Optional[int] = None
    threshold: Optional[float] = None

    @property
    def shape(self):
        return self.values.shape


def _planted(values: np.ndarray, generator: str, seed: int, blocks, alpha=None) -> Dataset:
    truth = GroundTruth(blocks=tuple((tuple(r), tuple(c)) for r, c in blocks))
    return Dataset(values=values, generator=generator, seed=int(seed), truth=truth, alpha=alpha)


def gen_bs_problem1(alpha: int, seed: int, shared_block: bool = True) -> Dataset:
    """12 x 12 matrix with one 6 x 6 block, background noise growing with alpha.

    Block cells draw i.i.d. from {0.7, 0.8, 0.9}; every cell outside the block
    draws i.i.d. from {0, 0.1, ..., 0.1 * alpha}.  With ``shared_block`` the
    block stream ignores alpha, so one seed plants the same block at every
    noise level.
    """
    if not 1 <= int(alpha) <= 5:
        raise ValueError(f"alpha must be in 1..5, got {alpha}")
    alpha = int(alpha)
    block_rng = np.random.default_rng([seed, 0] if shared_block else [seed, alpha, 0])
    bg_rng = np.random.default_rng([seed, alpha, 1])
    rows, cols = _BS_BLOCK
    values = 0.1 * bg_rng.integers(0, alpha + 1, size=_BS_SHAPE).astype(float)
    values[np.ix_(rows, cols)] = block_rng.choice([0.7, 0.8, 0.9], size=(len(rows), len(cols)))
    return _planted(values, "bs_problem1", seed, [_BS_BLOCK], alpha=alpha)


def gen_bs_problem1_binary(seed: int) -> Dataset:
    """Noise-free variant: ones on the planted 6 x 6 block, zeros elsewhere."""
    values = np.zeros(_BS_SHAPE)
    rows, cols = _BS_BLOCK
    values[np.ix_(rows, cols)] = 1.0
    return _planted(values, "bs_problem1_binary", seed, [_BS_BLOCK])


def gen_bs_problem2(seed: int) -> Dataset:
    """Shuffled alpha=2 instance, the input of the annealing search."""
    base = gen_bs_problem1(alpha=2, seed=seed)
    out = shuffle(base, seed)
    return replace(out, generator="bs_problem2")


def gen_gbs_problem2(seed: int) -> Dataset:
    """12 x 12 matrix with three planted 4 x 4 blocks, shuffled.

    Block cells draw uniformly from [0.7, 0.9), background from [0, 0.2).
    """
    block_rng = np.random.default_rng([seed, 0])
    bg_rng = np.random.default_rng([seed, 1])
    values = bg_rng.uniform(0.0, 0.2, size=_BS_SHAPE)
    for rows, cols in _GBS_BLOCKS:
        values[np.ix_(rows, cols)] = block_rng.uniform(0.7, 0.9, size=(len(rows), len(cols)))
    base = _planted(values, "gbs_problem2", seed, _GBS_BLOCKS)
    return shuffle(base, seed)


def shuffle(dataset: Dataset, seed: int) -> Dataset:
    """Apply one seeded row permutation and one column permutation.

    Ground-truth blocks are rewritten into the new frame and the composed
    permutations recorded, so planted positions stay locatable.
    """
    rng = np.random.default_rng([seed, 3])
    d1, d2 = dataset.values.shape
    row_perm = rng.permutation(d1)
    col_perm = rng.permutation(d2)
    values = dataset.values[np.ix_(row_perm, col_perm)]
    inv_row = np.argsort(row_perm)
    inv_col = np.argsort(col_perm)
    blocks = tuple(
        (
            tuple(sorted(int(inv_row[r]) for r in rows)),
            tuple(sorted(int(inv_col[c]) for c in cols)),
        )
        for rows, cols in dataset.truth.blocks
    )
    prev_row = dataset.truth.row_perm
    prev_col = dataset.truth.col_perm
    total_row = row_perm if prev_row is None else np.asarray(prev_row)[row_perm]
    total_col = col_perm if prev_col is None else np.asarray(prev_col)[col_perm]
    truth = GroundTruth(
        blocks=blocks,
        row_perm=tuple(int(i) for i in total_row),
        col_perm=tuple(int(i) for i in total_col),
    )
    return replace(dataset, values=values, truth=truth)


def binarize(dataset: Dataset, threshold: float) -> Dataset:
    """Cells at or above the threshold become 1.0, the rest 0.0."""
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    values = np.where(dataset.values >= threshold, 1.0, 0.0)
    return replace(dataset, values=values, threshold=float(threshold))


GENERATORS = {
    "bs_problem1": lambda seed, alpha=1, **_: gen_bs_problem1(alpha, seed),
    "bs_problem1_binary": lambda seed, **_: gen_bs_problem1_binary(seed),
    "bs_problem2": lambda seed, **_: gen_bs_problem2(seed),
    "gbs_problem2": lambda seed, **_: gen_gbs_problem2(seed),
}


def generate(generator: str, seed: int, alpha: Optional[int] = None,
             threshold: Optional[float] = None) -> Dataset:
    """Dispatch on generator name; optional binarization threshold applies last."""
    if generator not in GENERATORS:
        raise ValueError(f"unknown generator {generator!r}, have {sorted(GENERATORS)}")
    kwargs = {} if alpha is None else {"alpha": alpha}
    out = GENERATORS[generator](seed, **kwargs)
    if threshold is not None:
        out = binarize(out, threshold)
    return out


def save_csv(dataset: Dataset, path) -> None:
    header = {
        "format": "photonclust-dataset",
        "version": 1,
        "generator": dataset.generator,
        "rng": RNG_ID,
        "seed": dataset.seed,
        "alpha": dataset.alpha,
        "threshold": dataset.threshold,
        "blocks": [[list(r), list(c)] for r, c in dataset.truth.blocks],
        "row_perm": None if dataset.truth.row_perm is None else list(dataset.truth.row_perm),
        "col_perm": None if dataset.truth.col_perm is None else list(dataset.truth.col_perm),
    }
    with open(path, "w") as fh:
        fh.write("# " + json.dumps(header) + "\n")
        for row in dataset.values:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def load_csv(path) -> Dataset:
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ValueError(f"{path}: missing JSON header line")
        header = json.loads(first[2:])
        if header.get("format") != "photonclust-dataset":
            raise ValueError(f"{path}: not a dataset file")
        rows = [[float(v) for v in line.strip().split(",")] for line in fh if line.strip()]
    values = np.array(rows)
    truth = GroundTruth(
        blocks=tuple((tuple(r), tuple(c)) for r, c in header["blocks"]),
        row_perm=None if header["row_perm"] is None else tuple(header["row_perm"]),
        col_perm=None if header["col_perm"] is None else tuple(header["col_perm"]),
    )
    return Dataset(
        values=values,
        generator=header["generator"],
        seed=header["seed"],
        truth=truth,
        alpha=header["alpha"],
        threshold=header["threshold"],
    )
