"""Gaussian boson sampling driven by a dataset adjacency matrix.

A rectangular data matrix D (d1 x d2) becomes the bipartite adjacency

    D_adj = [[0, D], [D.T, 0]]

whose Takagi spectrum fixes, through one scalar c, the squeezing
r_i = atanh(c * lambda_i) that a Gaussian device would need so the mean
total photon number hits a target.  The effective kernel is B = c * D_adj
exactly.  Number-resolved probabilities use hafnians of repeated-index
submatrices of B; threshold-detector probabilities use torontonians of the
doubled form O = [[0, conj(B)], [B, 0]].  Click patterns decode back to
(row, column) index sets of D.  Mode indices are 0-based: rows of D occupy
modes 0..d1-1, columns modes d1..d1+d2-1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, NumericalError
from .matrix_functions import (
    TORONTONIAN_MODE_CAP,
    hafnian,
    select_submatrix,
    torontonian,
    torontonian_all_patterns,
)
from .numerics import takagi_real_symmetric

__all__ = [
    "GBSProgram",
    "build_adjacency",
    "solve_scaling",
    "squeezing_params",
    "build_program",
    "pnr_probability",
    "HusimiForm",
    "husimi_form",
    "ThresholdDistribution",
    "threshold_distribution",
    "chain_rule_sample",
    "decode_clicks",
    "write_clicks_jsonl",
]


def build_adjacency(D) -> np.ndarray:
    """Bipartite adjacency [[0, D], [D.T, 0]] of a real rectangular matrix."""
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.size == 0:
        raise ValueError(f"expected a nonempty 2-d matrix, got shape {D.shape}")
    d1, d2 = D.shape
    return np.block([[np.zeros((d1, d1)), D], [D.T, np.zeros((d2, d2))]])


def _nbar(c: float, lambdas: np.ndarray) -> float:
    x = (c * lambdas) ** 2
    return float(np.sum(x / (1.0 - x)))


def solve_scaling(lambdas, nbar_target: float, residual_tol: float = 1e-10) -> float:
    """Scaling c with sum over i of (c li)^2 / (1 - (c li)^2) equal to ``nbar_target``.

    Bisection on (0, (1 - 1e-12) / lambda_max); the mean photon number is
    strictly increasing in c, and the safety margin keeps every squeezing
    parameter finite.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.ndim != 1 or np.any(lambdas < 0.0):
        raise ValueError("lambdas must be a 1-d nonnegative array")
    if nbar_target <= 0.0:
        raise ValueError(f"mean photon target must be positive, got {nbar_target}")
    lam_max = float(lambdas.max(initial=0.0))
    if lam_max == 0.0:
        raise ValueError("all-zero spectrum cannot produce photons")
    hi = (1.0 - 1e-12) / lam_max
    if _nbar(hi, lambdas) < nbar_target:
        raise NumericalError(
            f"mean photon target {nbar_target} unreachable within the c*lambda_max safety margin"
        )
    lo = 0.0
    c = hi / 2.0
    for _ in range(200):
        val = _nbar(c, lambdas)
        if abs(val - nbar_target) <= residual_tol:
            return c
        if val < nbar_target:
            lo = c
        else:
            hi = c
        c = (lo + hi) / 2.0
    raise NumericalError(
        f"scaling bisection stalled at residual {abs(_nbar(c, lambdas) - nbar_target):.3e}"
    )


def squeezing_params(lambdas, c: float) -> np.ndarray:
    """Per-mode squeezing r_i = atanh(c * lambda_i)."""
    lambdas = np.asarray(lambdas, dtype=float)
    x = c * lambdas
    if np.any(x >= 1.0) or np.any(x < 0.0):
        raise ValueError("c * lambda must lie in [0, 1)")
    return np.arctanh(x)


@dataclass(frozen=True)
class GBSProgram:
    """Everything needed to evaluate or sample one Gaussian experiment.

    Invariant: ``kernel == unitary @ diag(c * lambdas) @ unitary.T`` within
    1e-8 (checked by the Takagi construction)."""

    adjacency: np.ndarray
    d1: int
    d2: int
    lambdas: np.ndarray
    unitary: np.ndarray
    c: float
    squeezing: np.ndarray
    kernel: np.ndarray
    nbar_target: float

    @property
    def modes(self) -> int:
        return self.d1 + self.d2


def build_program(D, nbar_target: float) -> GBSProgram:
    """Adjacency, Takagi spectrum, scaling and squeezing for one dataset."""
    D = np.asarray(D, dtype=float)
    adjacency = build_adjacency(D)
    takagi = takagi_real_symmetric(adjacency)
    c = solve_scaling(takagi.lambdas, nbar_target)
    return GBSProgram(
        adjacency=adjacency,
        d1=D.shape[0],
        d2=D.shape[1],
        lambdas=takagi.lambdas,
        unitary=takagi.unitary,
        c=c,
        squeezing=squeezing_params(takagi.lambdas, c),
        kernel=c * adjacency,
        nbar_target=float(nbar_target),
    )


def pnr_probability(program: GBSProgram, counts) -> float:
    """Number-resolved outcome probability prod(sech r) |Haf(B_n)|^2 / prod(n_i!).

    ``B_n`` repeats row/column i of the kernel ``counts[i]`` times.  Odd
    photon totals give 0 through the hafnian; totals above 16 photons exceed
    the hafnian cap and raise :class:`CapacityError`.
    """
    counts = np.asarray(counts, dtype=int)
    m = program.modes
    if counts.shape != (m,):
        raise ValueError(f"counts must have length {m}, got shape {counts.shape}")
    if np.any(counts < 0):
        raise ValueError("counts must be nonnegative")
    prefactor = float(np.prod(1.0 / np.cosh(program.squeezing)))
    sub = select_submatrix(program.kernel, counts, counts)
    haf = hafnian(sub)
    norm = float(np.prod([math.factorial(int(k)) for k in counts]))
    return prefactor * abs(haf) ** 2 / norm


@dataclass(frozen=True)
class HusimiForm:
    """Doubled matrix O = [[0, conj(B)], [B, 0]] and the vacuum amplitude
    ``sqrt_det_sigmaQ_inv = sqrt(det(I - O))``, equal to prod(sech r_i)."""

    O: np.ndarray
    sqrt_det_sigmaQ_inv: float


def husimi_form(program: GBSProgram) -> HusimiForm:
    """Doubled form of the kernel, validated against the vacuum invariant."""
    B = program.kernel
    m = program.modes
    Z = np.zeros((m, m))
    O = np.block([[Z, B], [B, Z]])  # real kernel: conj(B) == B
    det = float(np.linalg.det(np.eye(2 * m) - O))
    if det <= 0.0:
        raise NumericalError(f"det(I - O) = {det:.6e} is not positive")
    vac = math.sqrt(det)
    expected = float(np.prod(1.0 / np.cosh(program.squeezing)))
    if abs(vac - expected) > 1e-9 * max(1.0, expected):
        raise NumericalError(
            f"vacuum invariant violated: sqrt(det(I - O)) = {vac!r} "
            f"vs prod(sech r) = {expected!r}"
        )
    return HusimiForm(O=O, sqrt_det_sigmaQ_inv=vac)


@dataclass(frozen=True)
class ThresholdDistribution:
    """Exact click-pattern table indexed by bitmask (bit i = mode i clicked)."""

    probabilities: np.ndarray  # (2^m,)
    d1: int
    d2: int

    @property
    def modes(self) -> int:
        return self.d1 + self.d2

    def mask_of(self, clicks) -> int:
        clicks = np.asarray(clicks).astype(bool)
        return int(np.sum(1 << np.nonzero(clicks)[0]))

    def clicks_of(self, mask: int) -> np.ndarray:
        return (mask >> np.arange(self.modes)) & 1 == 1

    def probability_of(self, clicks) -> float:
        return float(self.probabilities[self.mask_of(clicks)])

    def modal_pattern(self) -> np.ndarray:
        return self.clicks_of(int(np.argmax(self.probabilities)))


def threshold_distribution(program: GBSProgram) -> ThresholdDistribution:
    """Exact threshold-detector distribution P(S) = Tor(O_S) / sqrt(det sigma_Q).

    Enumerates all 2^m click patterns (cap m <= 14).  The sum is validated
    to 1 within 1e-8.
    """
    m = program.modes
    if m > TORONTONIAN_MODE_CAP:
        raise CapacityError(f"threshold enumeration capped at {TORONTONIAN_MODE_CAP} modes, got {m}")
    hf = husimi_form(program)
    probs = torontonian_all_patterns(hf.O) * hf.sqrt_det_sigmaQ_inv
    total = float(probs.sum())
    if abs(total - 1.0) > 1e-8:
        raise NumericalError(f"threshold probabilities sum to {total!r}, expected 1 within 1e-8")
    if float(probs.min()) < -1e-10:
        raise NumericalError(f"negative pattern probability {probs.min()!r}")
    np.clip(probs, 0.0, None, out=probs)
    return ThresholdDistribution(probabilities=probs, d1=program.d1, d2=program.d2)


def chain_rule_sample(program: GBSProgram, num_samples: int, seed: int):
    """Exact threshold-detector sampling mode by mode.

    For each mode k the conditional dark probability given the clicks seen so
    far is the ratio of two prefix-pattern probabilities, each computed on the
    reduced Gaussian state of modes 0..k (a submatrix of sigma_Q) through the
    torontonian formula.  Prefix probabilities are memoized across samples, so
    repeated paths cost dictionary lookups only.

    Returns ``(clicks, path_probs)``: a (N, m) boolean array and the product
    of conditionals per sample, which equals the torontonian probability of
    the final pattern.  Each sample consumes one dedicated row of uniforms
    drawn up front from ``seed``, so results do not depend on evaluation
    order.  Cost grows as 2^(clicks so far); patterns with more than
    ``TORONTONIAN_MODE_CAP`` clicks exceed the torontonian cap.
    """
    if num_samples < 0:
        raise ValueError("num_samples must be nonnegative")
    m = program.modes
    hf = husimi_form(program)
    sigma = np.linalg.inv(np.eye(2 * m) - hf.O)
    reduced_O = []
    denom = []
    for k in range(1, m + 1):
        idx = np.r_[0:k, m:m + k]
        sig_k = sigma[np.ix_(idx, idx)]
        det_k = float(np.linalg.det(sig_k))
        if det_k <= 0.0:
            raise NumericalError(f"reduced det(sigma_Q) = {det_k:.6e} at prefix {k} is not positive")
        reduced_O.append(np.eye(2 * k) - np.linalg.inv(sig_k))
        denom.append(math.sqrt(det_k))

    memo = {}

    def prefix_prob(k, clicked):
        """P(modes 0..k-1 show exactly the clicks in ``clicked``)."""
        if k == 0:
            return 1.0
        key = (k, clicked)
        val = memo.get(key)
        if val is None:
            Ok = reduced_O[k - 1]
            idx = [*clicked, *(i + k for i in clicked)]
            val = torontonian(Ok[np.ix_(idx, idx)]) / denom[k - 1]
            memo[key] = val
        return val

    uniforms = np.random.default_rng(seed).random((num_samples, m))
    clicks = np.zeros((num_samples, m), dtype=bool)
    path_probs = np.empty(num_samples)
    for i in range(num_samples):
        clicked = ()
        p_prev = 1.0
        prob = 1.0
        for k in range(1, m + 1):
            p_dark = prefix_prob(k, clicked)
            cond = p_dark / p_prev
            if not -1e-9 <= cond <= 1.0 + 1e-9:
                raise NumericalError(f"conditional {cond!r} outside [0, 1] at mode {k - 1}")
            cond = min(max(cond, 0.0), 1.0)
            if uniforms[i, k - 1] < cond:
                p_prev = p_dark
                prob *= cond
            else:
                clicked = clicked + (k - 1,)
                p_click = prefix_prob(k, clicked)
                # exact conditional ratio; 1 - cond would lose precision on
                # rare click branches
                prob *= p_click / p_prev
                p_prev = p_click
                clicks[i, k - 1] = True
        path_probs[i] = prob
    return clicks, path_probs


def decode_clicks(clicks, d1: int, d2: int):
    """Map one click pattern to (row indices, column indices) of the dataset."""
    clicks = np.asarray(clicks).astype(bool)
    if clicks.shape != (d1 + d2,):
        raise ValueError(f"clicks must have length {d1 + d2}, got shape {clicks.shape}")
    where = np.nonzero(clicks)[0]
    return where[where < d1], where[where >= d1] - d1


def write_clicks_jsonl(clicks, path, d1: int, d2: int, seed, stream: int = 0, workers: int = 1) -> None:
    clicks = np.asarray(clicks).astype(bool)
    with open(path, "w") as fh:
        for i, row in enumerate(clicks):
            rows, cols = decode_clicks(row, d1, d2)
            fh.write(
                json.dumps(
                    {
                        "clicks": row.astype(int).tolist(),
                        "rows": rows.tolist(),
                        "cols": cols.tolist(),
                        "sample_index": i,
                        "seed": int(seed),
                        "stream": int(stream),
                        "workers": int(workers),
                    }
                )
            )
            fh.write("\n")
