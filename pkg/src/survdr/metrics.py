"""Subspace-recovery measures: projection distance, trace correlation,
and canonical correlation between projected samples."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SubspaceScore",
    "projection",
    "frobenius_distance",
    "trace_correlation",
    "canonical_correlations",
    "canonical_correlation",
    "subspace_score",
]


@dataclass(frozen=True)
class SubspaceScore:
    """The three agreement measures between a true and an estimated basis."""

    frob: float
    trace_corr: float
    canon_corr: float


def _as_basis(b) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    if b.ndim == 1:
        b = b[:, None]
    return b


def projection(b) -> np.ndarray:
    """Orthogonal projector onto the column space, B (B'B)^-1 B'."""
    b = _as_basis(b)
    u, s, _ = np.linalg.svd(b, full_matrices=False)
    if s[-1] <= 1e-12 * max(1.0, s[0]):
        raise np.linalg.LinAlgError(
            f"basis is rank deficient (singular values {np.array2string(s, precision=3)})"
        )
    return u @ u.T


def frobenius_distance(b_true, b_hat) -> float:
    """Frobenius norm of the difference of the two projectors."""
    return float(np.linalg.norm(projection(b_true) - projection(b_hat)))


def trace_correlation(b_true, b_hat) -> float:
    """tr(P P_hat) / d, in [0, 1]; 1 means identical subspaces."""
    b_true, b_hat = _as_basis(b_true), _as_basis(b_hat)
    if b_true.shape[1] != b_hat.shape[1]:
        raise ValueError(
            f"dimension mismatch: d={b_true.shape[1]} versus d={b_hat.shape[1]}"
        )
    d = b_true.shape[1]
    return float(np.trace(projection(b_true) @ projection(b_hat)) / d)


def _projected_q(x: np.ndarray, b: np.ndarray) -> np.ndarray:
    v = x @ _as_basis(b)
    v = v - v.mean(axis=0)
    q, r = np.linalg.qr(v)
    diag = np.abs(np.diag(r))
    if diag.min() <= 1e-10 * max(1.0, diag.max()):
        raise np.linalg.LinAlgError("projected sample covariance is singular")
    return q


def canonical_correlations(data, b_true, b_hat) -> np.ndarray:
    """Sample canonical correlations between X b_true and X b_hat.

    ``data`` may be a dataset or a raw (n, p) matrix.  Based on the QR
    factorizations of the centered projected samples, so the result is
    invariant to invertible re-basing of either argument.
    """
    x = np.asarray(getattr(data, "x", data), dtype=float)
    if x.shape[0] <= x.shape[1]:
        raise ValueError(f"need n > p, got n={x.shape[0]}, p={x.shape[1]}")
    qu = _projected_q(x, b_true)
    qv = _projected_q(x, b_hat)
    svals = np.linalg.svd(qu.T @ qv, compute_uv=False)
    return np.clip(svals, 0.0, 1.0)


def canonical_correlation(data, b_true, b_hat) -> float:
    """Mean of the d sample canonical correlations (max is available
    via :func:`canonical_correlations`)."""
    return float(canonical_correlations(data, b_true, b_hat).mean())


def subspace_score(data, b_true, b_hat) -> SubspaceScore:
    """All three measures at once."""
    return SubspaceScore(
        frob=frobenius_distance(b_true, b_hat),
        trace_corr=trace_correlation(b_true, b_hat),
        canon_corr=canonical_correlation(data, b_true, b_hat),
    )
