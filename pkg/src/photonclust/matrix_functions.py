"""Matrix functions behind photon-counting probabilities.

Permanents give Fock-basis amplitudes of an interferometer, hafnians give
number-resolved Gaussian amplitudes, and torontonians give threshold-detector
probabilities.  All three have exponential cost, so each routine carries an
explicit size cap and raises :class:`CapacityError` beyond it instead of
hanging.

Term enumeration is deterministic: permanents are summed chunk by chunk in
gray-sequence order with a pairwise reduction over chunks, torontonian terms
in subset-mask order.  Results are therefore bit-stable for any worker count.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import CapacityError, NumericalError

__all__ = [
    "permanent",
    "batch_permanent",
    "hafnian",
    "torontonian",
    "torontonian_all_patterns",
    "select_submatrix",
]

PERMANENT_GRAY_CAP = 24
PERMANENT_NAIVE_CAP = 9
HAFNIAN_CAP = 16
TORONTONIAN_MODE_CAP = 14

# Rows of Glynn sign vectors evaluated per BLAS call.
_CHUNK = 1 << 16


def _as_square(M, name):
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} expects a square matrix, got shape {M.shape}")
    return M


def _glynn_signs(n, start, stop):
    """Glynn sign rows for gray codes ``start..stop`` with the first entry pinned to +1.

    Returns (S, signs): S is the (stop-start, n) matrix of +/-1 entries and
    ``signs`` the product of each row's entries.
    """
    codes = np.arange(start, stop, dtype=np.uint64)
    gray = codes ^ (codes >> np.uint64(1))
    bits = ((gray[:, None] >> np.arange(n - 1, dtype=np.uint64)) & np.uint64(1)).astype(np.int64)
    S = np.empty((stop - start, n))
    S[:, 0] = 1.0
    S[:, 1:] = 1.0 - 2.0 * bits
    signs = 1.0 - 2.0 * (np.sum(bits, axis=1) & 1)
    return S, signs


def _glynn_chunk_sum(M, start, stop):
    S, signs = _glynn_signs(M.shape[0], start, stop)
    # Matrix form of the incremental gray update: nominally an extra factor
    # of N per term, but it runs through BLAS, which wins by far at these
    # sizes.  Chunk sums are combined pairwise by chunk index.
    W = S @ M
    return signs @ np.prod(W, axis=1)


def _pairwise_sum(values):
    vals = list(values)
    if not vals:
        return 0.0
    while len(vals) > 1:
        vals = [vals[i] + vals[i + 1] if i + 1 < len(vals) else vals[i] for i in range(0, len(vals), 2)]
    return vals[0]


def permanent(M, method: str = "gray_code", workers: int = 1):
    """Permanent of a square real or complex matrix.

    ``gray_code`` evaluates Glynn's 2^(N-1)-term formula (cap N <= 24);
    ``naive`` sums all N! permutation products (cap N <= 9) and exists as an
    independent oracle for the gray-code path.  The empty matrix has
    permanent 1.
    """
    M = _as_square(M, "permanent")
    n = M.shape[0]
    if n == 0:
        return 1.0
    if method not in ("gray_code", "naive"):
        raise ValueError(f"unknown permanent method {method!r}")
    cap = PERMANENT_NAIVE_CAP if method == "naive" else PERMANENT_GRAY_CAP
    if n > cap:
        raise CapacityError(f"{method} permanent capped at N={cap}, got N={n}")
    if not (M.any(axis=0).all() and M.any(axis=1).all()):
        # a zero row or column kills every permutation product
        return complex(0.0) if np.iscomplexobj(M) else 0.0
    if method == "naive":
        total = 0.0
        for perm in itertools.permutations(range(n)):
            term = 1.0
            for i, j in enumerate(perm):
                term = term * M[i, j]
            total = total + term
        return complex(total) if np.iscomplexobj(M) else float(total)
    half = 1 << (n - 1)
    starts = range(0, half, _CHUNK)
    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda a: _glynn_chunk_sum(M, a, min(a + _CHUNK, half)), starts))
    else:
        chunks = [_glynn_chunk_sum(M, a, min(a + _CHUNK, half)) for a in starts]
    total = _pairwise_sum(chunks) / half
    return complex(total) if np.iscomplexobj(M) else float(total)


def batch_permanent(mats, workers: int = 1):
    """Permanents of a stack of equal-size square matrices, shape (B, N, N).

    Same Glynn terms as :func:`permanent`, vectorized across the batch; used
    by the exhaustive distribution enumerators.  Cap N <= 17 so the full sign
    matrix stays in memory.
    """
    mats = np.asarray(mats)
    if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
        raise ValueError(f"batch_permanent expects shape (B, N, N), got {mats.shape}")
    B, n = mats.shape[0], mats.shape[1]
    out_dtype = complex if np.iscomplexobj(mats) else float
    if n == 0:
        return np.ones(B, dtype=out_dtype)
    if n > 17:
        raise CapacityError(f"batch permanent capped at N=17, got N={n}")
    half = 1 << (n - 1)
    S, signs = _glynn_signs(n, 0, half)
    out = np.empty(B, dtype=out_dtype)
    degenerate = ~(mats.any(axis=1).all(axis=1) & mats.any(axis=2).all(axis=1))
    # keep the (half, chunk, n) intermediate under ~32M scalars
    step = max(1, (1 << 25) // (half * n))

    def run(lo):
        hi = min(lo + step, B)
        W = np.tensordot(S, mats[lo:hi], axes=(1, 1))
        out[lo:hi] = signs @ np.prod(W, axis=2) / half

    starts = range(0, B, step)
    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, starts))
    else:
        for lo in starts:
            run(lo)
    out[degenerate] = 0.0
    return out


def hafnian(A, method: str = "matching_enum"):
    """Hafnian of a symmetric matrix by recursive perfect-matching enumeration.

    The lowest unmatched index is paired with every partner and the remainder
    recursed; distinct index sets are memoized, which reproduces the exact
    floating-point value of the plain recursion at far lower cost.  Odd
    dimension gives 0, the empty matrix 1, and the diagonal is never read.
    Cap N <= 16.
    """
    if method != "matching_enum":
        raise ValueError(f"unknown hafnian method {method!r}")
    A = _as_square(A, "hafnian")
    n = A.shape[0]
    if n > HAFNIAN_CAP:
        raise CapacityError(f"hafnian capped at N={HAFNIAN_CAP}, got N={n}")
    if n == 0:
        return 1.0
    off = A - A.T
    np.fill_diagonal(off, 0.0)
    dev = float(np.max(np.abs(off)))
    if dev > 1e-10:
        raise ValueError(f"hafnian input is not symmetric: max |A - A.T| = {dev:.3e}")
    if n % 2:
        return 0.0
    memo = {}

    def rec(idx):
        if not idx:
            return 1.0
        val = memo.get(idx)
        if val is not None:
            return val
        i = idx[0]
        total = 0.0
        for t in range(1, len(idx)):
            total = total + A[i, idx[t]] * rec(idx[1:t] + idx[t + 1:])
        memo[idx] = total
        return total

    total = rec(tuple(range(n)))
    return complex(total) if np.iscomplexobj(A) else float(total)


def _mode_subset_indices(mask, k):
    modes = [i for i in range(k) if mask >> i & 1]
    return modes + [i + k for i in modes]


def _inv_sqrt_dets(O, k):
    """g[mask] = 1/sqrt(det(I - O_ZZ)) over every mode subset Z of {0..k-1}.

    Mode i of the doubled matrix O occupies rows/columns (i, i+k).  Raises
    :class:`NumericalError` when a determinant leaves the positive real axis,
    which signals an invalid (non-contractive) input.
    """
    g = np.empty(1 << k)
    g[0] = 1.0
    for mask in range(1, 1 << k):
        idx = _mode_subset_indices(mask, k)
        d = np.linalg.det(np.eye(len(idx)) - O[np.ix_(idx, idx)])
        d = complex(d)
        if not (d.real > 1e-300 and abs(d.imag) <= 1e-9 * max(1.0, abs(d.real))):
            raise NumericalError(
                f"det(I - O_ZZ) = {d:.6e} for subset mask {mask:#x} is not positive real"
            )
        g[mask] = 1.0 / np.sqrt(d.real)
    return g


def torontonian_all_patterns(O):
    """Torontonian of every mode-subset submatrix of ``O`` at once.

    Returns an array ``tor`` of length 2^k where ``tor[mask]`` equals
    ``torontonian`` of the submatrix of ``O`` on the modes set in ``mask``.
    Computed from the subset determinant table by a signed subset (Moebius)
    transform, so the cost is 2^k determinants plus k * 2^k additions.
    """
    O = _as_square(O, "torontonian")
    if O.shape[0] % 2:
        raise ValueError(f"doubled matrix must have even dimension, got {O.shape[0]}")
    k = O.shape[0] // 2
    if k > TORONTONIAN_MODE_CAP:
        raise CapacityError(f"torontonian capped at {TORONTONIAN_MODE_CAP} modes, got {k}")
    tor = _inv_sqrt_dets(O, k)
    masks = np.arange(1 << k)
    for i in range(k):
        bit = 1 << i
        has = (masks & bit) != 0
        tor[has] -= tor[masks[has] ^ bit]
    return tor


def torontonian(O):
    """Torontonian of a 2k x 2k doubled matrix.

    Defined as ``sum over Z subsets of the k modes of
    (-1)^(k-|Z|) / sqrt(det(I - O_ZZ))`` with the empty matrix giving 1.
    """
    O = _as_square(O, "torontonian")
    if O.shape[0] == 0:
        return 1.0
    tor = torontonian_all_patterns(O)
    return float(tor[-1])


def select_submatrix(M, row_mult, col_mult):
    """Submatrix with row i repeated ``row_mult[i]`` times and columns likewise.

    Repeated indices appear in ascending order, matching the mode ordering of
    Fock outcomes.
    """
    M = np.asarray(M)
    if M.ndim != 2:
        raise ValueError(f"select_submatrix expects a 2-d array, got shape {M.shape}")
    row_mult = np.asarray(row_mult, dtype=int)
    col_mult = np.asarray(col_mult, dtype=int)
    if row_mult.shape != (M.shape[0],) or col_mult.shape != (M.shape[1],):
        raise ValueError(
            f"multiplicity lengths {row_mult.shape[0]}/{col_mult.shape[0]} "
            f"do not match matrix shape {M.shape}"
        )
    if np.any(row_mult < 0) or np.any(col_mult < 0):
        raise ValueError("multiplicities must be nonnegative")
    rows = np.repeat(np.arange(M.shape[0]), row_mult)
    cols = np.repeat(np.arange(M.shape[1]), col_mult)
    return M[np.ix_(rows, cols)]
