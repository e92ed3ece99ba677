"""Generalized likelihood ratio test between two candidate frequency sets.

Under white Gaussian noise with the amplitudes unknown, the test reduces to
comparing the energy left after projecting the observations out of each
candidate signal subspace: decide the first class when

    || (I - P_1) Y ||_F  <=  || (I - P_2) Y ||_F,

where P_i projects onto the column span of the Vandermonde matrix built
from class i and Y stacks the vector samples y_0 .. y_l as rows.  Ties go
to the first class.  Mode onset delays are not modelled here.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NumericError
from .signal import CandidateClass, Signal

__all__ = ["GlrtDecision", "vandermonde", "glrt_classify"]


@dataclass
class GlrtDecision:
    """Index (1 or 2) of the selected class plus both projection residuals."""

    chosen: int
    residuals: tuple[float, float]
    class_names: tuple[str, str]


def vandermonde(freqs, rows: int) -> np.ndarray:
    """F[t, i] = freqs[i] ** t for t = 0 .. rows-1."""
    freqs = np.asarray(freqs, dtype=np.complex128).ravel()
    if rows < 1:
        raise ValueError(f"rows must be >= 1, got {rows}")
    return np.power(freqs[None, :], np.arange(rows)[:, None])


def _residual(f: np.ndarray, y: np.ndarray) -> float:
    if np.any(np.abs(f).sum(axis=0) == 0):
        raise NumericError("degenerate Vandermonde matrix with an all-zero column")
    coeff, *_ = np.linalg.lstsq(f, y, rcond=None)
    return float(np.linalg.norm(y - f @ coeff))


def glrt_classify(
    signal: Signal,
    class1: CandidateClass,
    class2: CandidateClass,
    l: int | None = None,
) -> GlrtDecision:
    """Pick the class whose span leaves the smaller projection residual.

    Uses samples y_0 .. y_l (default: all of them).  Looks are stacked as
    extra residual columns.  Classes of unequal size are allowed but the
    comparison is then not calibrated, so a warning is emitted.
    """
    if l is None:
        l = signal.T - 1
    if l < 0 or l >= signal.T:
        raise ValueError(f"l must be in [0, {signal.T - 1}], got {l}")
    if len(class1) != len(class2):
        warnings.warn(
            f"classes {class1.name!r} and {class2.name!r} differ in size "
            f"({len(class1)} vs {len(class2)}); the residual comparison is not calibrated",
            stacklevel=2,
        )
    y = signal.samples[: l + 1]
    r1 = _residual(vandermonde(class1.freqs, l + 1), y)
    r2 = _residual(vandermonde(class2.freqs, l + 1), y)
    return GlrtDecision(
        chosen=1 if r1 <= r2 else 2,
        residuals=(r1, r2),
        class_names=(class1.name, class2.name),
    )
