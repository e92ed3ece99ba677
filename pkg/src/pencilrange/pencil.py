"""Block-Hankel matrix pencils built from multi-look signals.

For a K-look signal observed at t = 0 .. s+n-1 the data matrix stacks the
vector samples in block-Hankel form: block row i and column j hold y_{i+j},
giving an (s*K) x (n+1) matrix.  Deleting its first column yields A,
deleting the last yields B; a noiseless M-mode signal makes both rank M
whenever M <= n <= s - M, and the matrix pencil A - lam*B drops rank
exactly at the mode frequencies.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from ._svd import _as_matrix
from .errors import NumericError
from .signal import Signal

__all__ = [
    "BlockHankel",
    "PencilPair",
    "CadzowResult",
    "build_block_hankel",
    "split_pencil",
    "cadzow_denoise",
    "estimate_order",
    "hankel_singular_values",
    "default_pencil_split",
]

log = logging.getLogger(__name__)


@dataclass
class BlockHankel:
    """(s*K) x (n+1) block-Hankel data matrix with its layout parameters."""

    data: np.ndarray
    s: int
    n: int
    K: int

    def block(self, i: int, j: int) -> np.ndarray:
        """The K-vector sample sitting at block row i, column j."""
        return self.data[i * self.K : (i + 1) * self.K, j]


@dataclass
class PencilPair:
    """The two shifted halves (A, B) of a block-Hankel matrix.

    ``scale`` records any multiplier applied to both halves after the split;
    generalized eigenvalues are invariant to it.
    """

    a: np.ndarray
    b: np.ndarray
    s: int
    n: int
    K: int
    scale: complex = 1.0 + 0.0j


def build_block_hankel(signal: Signal, s: int, n: int) -> BlockHankel:
    """Arrange samples y_0 .. y_{s+n-1} into the (s*K) x (n+1) block-Hankel matrix."""
    if s < 1 or n < 1:
        raise ValueError(f"s and n must be >= 1, got s={s}, n={n}")
    if s <= n:
        raise ValueError(f"s must exceed n, got s={s}, n={n}")
    if signal.T < s + n:
        raise ValueError(f"need s+n={s + n} samples, signal has T={signal.T}")
    K = signal.K
    y = signal.samples
    data = np.empty((s * K, n + 1), dtype=np.complex128)
    for i in range(s):
        data[i * K : (i + 1) * K, :] = y[i : i + n + 1, :].T
    return BlockHankel(data, s=s, n=n, K=K)


def split_pencil(h: BlockHankel) -> PencilPair:
    """A keeps columns 1..n, B keeps columns 0..n-1."""
    return PencilPair(h.data[:, 1:].copy(), h.data[:, :-1].copy(), s=h.s, n=h.n, K=h.K)


def _block_antidiag_average(x: np.ndarray, s: int, n: int, K: int) -> np.ndarray:
    """Project onto block-Hankel structure by averaging block anti-diagonals.

    The mean is computed around the first block of each anti-diagonal so
    that re-averaging an already structured matrix reproduces it bit for
    bit, which makes the projection exactly idempotent.
    """
    samples = np.empty((s + n, K), dtype=np.complex128)
    for d in range(s + n):
        i_lo = max(0, d - n)
        i_hi = min(s - 1, d)
        base = x[i_lo * K : (i_lo + 1) * K, d - i_lo]
        if i_hi > i_lo:
            acc = np.zeros(K, dtype=np.complex128)
            for i in range(i_lo + 1, i_hi + 1):
                acc += x[i * K : (i + 1) * K, d - i] - base
            samples[d] = base + acc / (i_hi - i_lo + 1)
        else:
            samples[d] = base
    out = np.empty_like(x)
    for i in range(s):
        out[i * K : (i + 1) * K, :] = samples[i : i + n + 1, :].T
    return out


def _rank_truncate(x: np.ndarray, M: int) -> np.ndarray:
    if M >= min(x.shape):
        return x.copy()
    u, sv, vh = np.linalg.svd(x, full_matrices=False)
    return (u[:, :M] * sv[:M]) @ vh[:M, :]


@dataclass
class CadzowResult:
    """Outcome of the alternating rank/structure projection."""

    hankel: BlockHankel
    converged: bool
    iterations: int
    residuals: np.ndarray

    @property
    def tail_monotone(self) -> bool:
        """Whether the stopping sequence was non-increasing over its last 3 entries."""
        tail = self.residuals[-3:]
        return bool(np.all(np.diff(tail) <= 0.0))


def cadzow_denoise(
    h: BlockHankel, M: int, eps: float | None = None, max_iter: int = 50
) -> CadzowResult:
    """Alternate rank-M truncation and block-Hankel averaging.

    Stops once the Frobenius distance between the structured iterate and the
    low-rank matrix it was built from falls below ``eps`` (default
    1e-8 * ||H||_F).  Hitting ``max_iter`` first is reported through the
    ``converged`` flag and a log warning, never silently.
    """
    if M < 1 or M > min(h.data.shape):
        raise ValueError(f"M must be in [1, {min(h.data.shape)}], got {M}")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if eps is None:
        eps = 1e-8 * float(np.linalg.norm(h.data))
    x = h.data
    residuals = []
    converged = False
    for _ in range(max_iter):
        low = _rank_truncate(x, M)
        x = _block_antidiag_average(low, h.s, h.n, h.K)
        residuals.append(float(np.linalg.norm(x - low)))
        if residuals[-1] < eps:
            converged = True
            break
    result = CadzowResult(
        hankel=BlockHankel(x, s=h.s, n=h.n, K=h.K),
        converged=converged,
        iterations=len(residuals),
        residuals=np.asarray(residuals),
    )
    if not converged:
        log.warning(
            "rank/structure projection stopped at max_iter=%d with residual %.3e (eps %.3e)",
            max_iter,
            residuals[-1],
            eps,
        )
    if len(residuals) >= 3 and not result.tail_monotone:
        log.warning("projection residuals increased over the final iterations: %s", residuals[-3:])
    return result


def estimate_order(h: BlockHankel, omega: float | None = None) -> int:
    """Estimate the number of modes from the singular value profile.

    Counts singular values above ``omega * median(sigma)``.  The default
    omega follows the optimal-hard-threshold coefficient for the matrix
    aspect ratio beta = min(dim)/max(dim):

        omega(beta) = 0.56 beta^3 - 0.95 beta^2 + 1.82 beta + 1.43

    On noiseless data the median is rounding dust, so the threshold is
    floored at the usual numerical-rank tolerance max(dim) * eps * sigma_1.
    At least one mode is always reported.
    """
    sv = hankel_singular_values(h)
    if sv[0] == 0.0:
        raise NumericError("order is undefined for a zero matrix")
    if omega is None:
        beta = min(h.data.shape) / max(h.data.shape)
        omega = 0.56 * beta**3 - 0.95 * beta**2 + 1.82 * beta + 1.43
    elif omega <= 0:
        raise ValueError(f"omega must be positive, got {omega}")
    floor = max(h.data.shape) * np.finfo(np.float64).eps * float(sv[0])
    threshold = max(omega * float(np.median(sv)), floor)
    return max(int(np.sum(sv > threshold)), 1)


def hankel_singular_values(h: BlockHankel) -> np.ndarray:
    """All singular values of the data matrix, descending."""
    return np.linalg.svd(_as_matrix(h.data), compute_uv=False)


def default_pencil_split(T: int) -> tuple[int, int]:
    """Default (s, n) for T available samples: n ~ T/3 and s = T - n.

    Warns when n leaves the variance-friendly band [s/2, 2s].
    """
    if T < 2:
        raise ValueError(f"need at least 2 samples, got T={T}")
    n = max(1, T // 3)
    s = T - n
    if not (s / 2.0 <= n <= 2.0 * s):
        warnings.warn(
            f"pencil parameter n={n} is outside the low-variance band [s/2, 2s] for s={s}",
            stacklevel=2,
        )
    return s, n
