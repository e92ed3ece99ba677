"""Singular value helpers used throughout the package.

Dense LAPACK is used for anything with at most ``_DENSE_COL_LIMIT`` columns;
wider matrices fall back to iterative schemes so extreme singular values
never require a full decomposition.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError

_DENSE_COL_LIMIT = 256


def _as_matrix(mat) -> np.ndarray:
    out = np.asarray(mat)
    if out.ndim != 2 or min(out.shape) == 0:
        raise ValueError(f"expected a nonempty 2-d array, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise NumericError("matrix contains non-finite entries")
    return out.astype(np.complex128, copy=False)


def spectral_norm(mat) -> float:
    """Largest singular value of ``mat``."""
    m = _as_matrix(mat)
    if min(m.shape) <= _DENSE_COL_LIMIT:
        return float(np.linalg.svd(m, compute_uv=False)[0])
    return _power_largest(m)


def smallest_singular_value(mat) -> float:
    """Smallest singular value of ``mat`` (of the min(m, n) values)."""
    m = _as_matrix(mat)
    if min(m.shape) <= _DENSE_COL_LIMIT:
        return float(np.linalg.svd(m, compute_uv=False)[-1])
    return _inverse_power_smallest(m)


def _power_largest(m: np.ndarray, iters: int = 200, rtol: float = 1e-13) -> float:
    # power iteration on m^H m with a deterministic start vector
    n = m.shape[1]
    v = np.full(n, 1.0 + 0.5j, dtype=np.complex128)
    v /= np.linalg.norm(v)
    prev = 0.0
    for _ in range(iters):
        w = m.conj().T @ (m @ v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        if abs(norm - prev) <= rtol * norm:
            break
        prev = norm
    return float(np.sqrt(norm))


def _inverse_power_smallest(m: np.ndarray, iters: int = 200, rtol: float = 1e-13) -> float:
    import scipy.linalg as sla

    if m.shape[0] < m.shape[1]:
        m = m.conj().T
    r = np.triu(sla.qr(m, mode="r")[0])[: m.shape[1], :]
    diag = np.abs(np.diagonal(r))
    if diag.min() == 0.0:
        return 0.0
    # power iteration on (r^H r)^{-1}; its largest eigenvalue is sigma_min^{-2}
    n = r.shape[1]
    v = np.full(n, 1.0 - 0.25j, dtype=np.complex128)
    v /= np.linalg.norm(v)
    prev = 0.0
    for _ in range(iters):
        w = sla.solve_triangular(r.conj().T, v, lower=True)
        w = sla.solve_triangular(r, w, lower=False)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        if abs(norm - prev) <= rtol * norm:
            break
        prev = norm
    return float(1.0 / np.sqrt(norm))


def pencil_sigma_batch(
    a: np.ndarray,
    b: np.ndarray,
    lams: np.ndarray,
    which: str = "max",
    chunk: int = 8192,
) -> np.ndarray:
    """sigma(A - lam*B) for every lam in ``lams``.

    ``which`` selects the largest or the smallest singular value.  Work is
    chunked so the stacked (len(lams), m, n) array never gets large.
    """
    a = _as_matrix(a)
    b = _as_matrix(b)
    if a.shape != b.shape:
        raise ValueError(f"pencil halves differ in shape: {a.shape} vs {b.shape}")
    lams = np.asarray(lams, dtype=np.complex128).ravel()
    idx = 0 if which == "max" else -1
    if which not in ("max", "min"):
        raise ValueError("which must be 'max' or 'min'")

    if min(a.shape) > _DENSE_COL_LIMIT:
        fn = spectral_norm if which == "max" else smallest_singular_value
        return np.array([fn(a - lam * b) for lam in lams])

    out = np.empty(lams.shape[0], dtype=np.float64)
    for start in range(0, lams.shape[0], chunk):
        part = lams[start : start + chunk]
        stack = a[None, :, :] - part[:, None, None] * b[None, :, :]
        out[start : start + chunk] = np.linalg.svd(stack, compute_uv=False)[:, idx]
    return out


def compress_rows(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Replace (A, B) by (Q^H A, Q^H B) with Q spanning the columns of [A B].

    Every matrix A - lam*B keeps its singular values because its columns stay
    inside span(Q), so this is a free row-count reduction whenever m > 2n.
    """
    a = _as_matrix(a)
    b = _as_matrix(b)
    m, n = a.shape
    if m <= 2 * n:
        return a, b
    q, _ = np.linalg.qr(np.hstack([a, b]))
    return q.conj().T @ a, q.conj().T @ b
