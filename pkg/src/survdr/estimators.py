"""User-facing estimators of the dimension-reduction subspace.

``fit_cpsir`` is the closed-form route: a singular value decomposition
of the covariance-form matrix.  ``fit`` runs the constrained optimizer
on the chosen moment construction, warm-started from the closed form.
``normalize_block_identity`` re-bases a fitted matrix so a selected
block of rows is the identity, turning the remaining entries into
identified free parameters.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass

import numpy as np

from .data import SurvivalDataset
from .moments import EstimatorKind, GmmProblem, cpsir_matrix
from .stiefel import FitReport, OptimConfig, optimize, orthonormalize

__all__ = [
    "NormalizedDirection",
    "fit_cpsir",
    "fit",
    "normalize_block_identity",
    "fix_sign",
]


def fix_sign(b: np.ndarray) -> np.ndarray:
    """For a single direction, make the largest-magnitude entry positive.

    Replaces any ad hoc sign choice with a deterministic rule; a basis
    and its negation span the same subspace.  Matrices with d > 1 are
    returned unchanged (there is no canonical sign).
    """
    b = np.asarray(b, dtype=float)
    if b.ndim == 2 and b.shape[1] != 1:
        return b
    flat = b.ravel()
    lead = flat[int(np.abs(flat).argmax())]
    return -b if lead < 0 else b.copy()


def leading_left_singular(m: np.ndarray, d: int):
    """Top-d left singular vectors of a square moment matrix.

    Warns when the d-th and (d+1)-th singular values coincide, since
    the extracted subspace is then not uniquely determined.
    """
    u, s, _ = np.linalg.svd(np.asarray(m, dtype=float))
    if d < s.size and abs(s[d - 1] - s[d]) <= 1e-12:
        warnings.warn(
            f"singular values {d} and {d + 1} coincide ({s[d - 1]:.3e}); "
            "the estimated subspace is not unique",
            RuntimeWarning,
            stacklevel=2,
        )
    return u[:, :d], s


def _whiten(ds: SurvivalDataset):
    """Center and rotate covariates to identity sample covariance."""
    xc = ds.x - ds.x.mean(axis=0)
    cov = xc.T @ xc / (ds.n - 1)
    w, v = np.linalg.eigh(cov)
    if w[0] <= 1e-10 * max(1.0, w[-1]):
        raise np.linalg.LinAlgError(
            "sample covariance is singular; whitening needs n > p and "
            "nondegenerate covariates"
        )
    inv_root = (v * w ** -0.5) @ v.T
    return SurvivalDataset(xc @ inv_root, ds.y, ds.delta, ds.names), inv_root


def fit_cpsir(ds: SurvivalDataset, d: int, slice_w: float | None = None):
    """Closed-form subspace estimate from the covariance-form matrix.

    The inverse-regression covariance form spans the target subspace
    premultiplied by the covariate covariance, so the moment matrix is
    computed on whitened covariates and the extracted basis is mapped
    back through the inverse square root, as in classical sliced
    inverse regression.  Returns the orthonormalized basis and the
    singular value spectrum of the whitened moment matrix.
    """
    if not 1 <= d < ds.p:
        raise ValueError(f"need 1 <= d < p, got d={d}, p={ds.p}")
    if ds.n_events < d:
        raise ValueError(f"need at least d={d} observed events, got {ds.n_events}")
    white, inv_root = _whiten(ds)
    u, s = leading_left_singular(cpsir_matrix(white, slice_w), d)
    b = orthonormalize(inv_root @ u)
    if d == 1:
        b = fix_sign(b)
    return b, s


def fit(
    ds: SurvivalDataset,
    d: int,
    kind: EstimatorKind | str,
    cfg: OptimConfig | None = None,
    *,
    slice_w: float | None = None,
    time_bandwidth: float | None = None,
    allow_forward_multi: bool = False,
) -> FitReport:
    """Estimate the subspace by minimizing the chosen moment norm.

    The optimizer starts from the closed-form estimate, so the final
    objective never exceeds the value there.  The forward construction
    supports d=1 only; ``allow_forward_multi`` overrides the check for
    diagnostic runs, which recover at most one direction.
    """
    kind = EstimatorKind.parse(kind)
    if kind is EstimatorKind.CPSIR:
        raise ValueError("the covariance-form estimator is closed form; call fit_cpsir")
    if kind is EstimatorKind.FORWARD and d != 1 and not allow_forward_multi:
        raise ValueError(
            "the forward construction supports d=1 only; "
            "use the inverse constructions for d > 1"
        )
    t0 = time.perf_counter()
    b0, singular_values = fit_cpsir(ds, d, slice_w)
    problem = GmmProblem(
        ds,
        kind,
        slice_w=slice_w,
        time_bandwidth=time_bandwidth,
        allow_forward_multi=allow_forward_multi,
    )
    report = optimize(problem.objective, b0, cfg)
    if d == 1:
        report.b_hat = fix_sign(report.b_hat)
    report.wall_time = time.perf_counter() - t0
    report.kind = kind.value
    report.init_b = b0
    report.init_objective = float(report.objective_trace[0])
    report.init_singular_values = singular_values
    return report


@dataclass(frozen=True)
class NormalizedDirection:
    """Basis re-expressed with an identity block at ``anchor_rows``.

    The non-anchor rows are the free parameters of the subspace; the
    column space is identical to that of the source matrix.
    """

    b_norm: np.ndarray
    anchor_rows: tuple[int, ...]

    def free_parameters(self) -> np.ndarray:
        """Non-anchor rows stacked column-major."""
        keep = [r for r in range(self.b_norm.shape[0]) if r not in self.anchor_rows]
        return self.b_norm[keep].ravel(order="F")


def _greedy_anchor_rows(b: np.ndarray) -> list[int]:
    p, d = b.shape
    row_norms = np.linalg.norm(b, axis=1)
    candidates = sorted(range(p), key=lambda r: (-row_norms[r], r))
    chosen: list[int] = []
    for _ in range(d):
        best, best_sv = None, -1.0
        for r in candidates:
            if r in chosen:
                continue
            sub = b[chosen + [r]]
            sv = np.linalg.svd(sub, compute_uv=False)[-1]
            if sv > best_sv + 1e-15:
                best, best_sv = r, sv
        chosen.append(best)
    return sorted(chosen)


def normalize_block_identity(
    b: np.ndarray, anchor_rows: list[int] | tuple[int, ...] | None = None
) -> NormalizedDirection:
    """Re-base so the rows ``anchor_rows`` form exactly the identity.

    When the anchors are not given they are chosen greedily: rows are
    considered in order of decreasing norm and each pick maximizes the
    smallest singular value of the growing anchor block, which keeps
    the block as well conditioned as possible.
    """
    b = np.asarray(b, dtype=float)
    if b.ndim == 1:
        b = b[:, None]
    p, d = b.shape
    if anchor_rows is None:
        anchor_rows = _greedy_anchor_rows(b)
    anchor_rows = tuple(int(r) for r in anchor_rows)
    if len(anchor_rows) != d or len(set(anchor_rows)) != d:
        raise ValueError(f"need {d} distinct anchor rows, got {anchor_rows}")
    if any(r < 0 or r >= p for r in anchor_rows):
        raise ValueError(f"anchor rows {anchor_rows} out of range for p={p}")
    block = b[list(anchor_rows)]
    svals = np.linalg.svd(block, compute_uv=False)
    if svals[-1] <= 1e-10 * max(1.0, svals[0]):
        raise np.linalg.LinAlgError(
            f"anchor block at rows {anchor_rows} is singular "
            f"(singular values {np.array2string(svals, precision=3)})"
        )
    b_norm = np.linalg.solve(block.T, b.T).T
    b_norm[list(anchor_rows)] = np.eye(d)  # clean residual roundoff
    return NormalizedDirection(b_norm=b_norm, anchor_rows=anchor_rows)
