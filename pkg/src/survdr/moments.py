"""Estimating-function values and the scalar GMM objective.

Four moment constructions are provided.  The forward one stacks p
equations and is meant for a single direction; the two inverse ones
stack p*p equations built from the sliced mean-difference curve; the
covariance form feeds the SVD-only estimator.  Each has a closure
variant (:class:`GmmProblem`) that caches everything independent of the
candidate direction, which is what the optimizer evaluates repeatedly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .data import SurvivalDataset
from .kernels import (
    KernelPlan,
    SliceCurve,
    _kernel_rows_fast,
    _SortedSample,
    build_plan,
    slice_curve,
)

__all__ = [
    "EstimatorKind",
    "MomentVector",
    "GmmProblem",
    "psi_forward",
    "psi_ircp",
    "psi_irsemi",
    "gmm_objective",
    "cpsir_matrix",
]


class EstimatorKind(enum.Enum):
    """Which moment construction an estimator uses."""

    FORWARD = "forward"
    CPSIR = "cpsir"
    IRCP = "ircp"
    IRSEMI = "irsemi"

    @classmethod
    def parse(cls, value) -> "EstimatorKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(
                f"unknown estimator kind {value!r}; expected one of "
                f"{[k.value for k in cls]}"
            ) from None


@dataclass(frozen=True)
class MomentVector:
    """Stacked estimating-function value at one candidate direction.

    Length p for the forward construction, p*p (column-major vec of a
    p-by-p matrix) for the inverse ones.
    """

    values: np.ndarray
    kind: EstimatorKind

    def norm_sq(self) -> float:
        return float(self.values @ self.values)


def _forward_core(plan: KernelPlan) -> np.ndarray:
    s = plan.sample
    num, den = plan.own_risk_moments(rows=s.event_pos)
    resid = s.x[s.event_pos] - num / den[:, None]
    return resid.sum(axis=0) / s.y.size


def _inverse_core(plan: KernelPlan, phi: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Martingale-weighted engine for the inverse constructions.

    ``lam`` is the (n, E) table of hazard increments in sorted subject
    order.  Subjects outside the risk set of an event carry weight zero
    (their compensator term vanishes with the at-risk indicator), so
    their conditional-mean entries are masked rather than evaluated.
    """
    s = plan.sample
    n = s.y.size
    ev = s.event_pos
    num = plan.risk_numerator(s.event_risk_start)  # (n, E, p)
    den = plan.risk_denominator(s.event_risk_start)  # (n, E)
    # off-risk-set denominators may underflow to 0; those entries are
    # zero-weighted below, they only need to stay finite
    safe = np.where(den > 0.0, den, 1.0)
    resid = s.x[:, None, :] - num / safe[:, :, None]  # (n, E, p)

    w = -np.asarray(lam, dtype=float)
    w[ev, np.arange(ev.size)] += s.delta[ev]
    w *= s.at_risk_mask()
    m = np.einsum("ie,iec->ec", w, resid) / n  # (E, p)
    return (m.T @ phi).ravel(order="F")


class _FastEvaluator:
    """Vectorized moment evaluation for the optimizer's inner loop.

    Precomputes everything that depends on the dataset alone (sorted
    arrays, risk-set masks, tie structure, the slice curve) so that one
    evaluation at a new direction costs one kernel build plus a few
    matrix products.  Produces the same values as the plan-based
    operations up to floating-point reassociation; the equivalence is
    pinned by tests.
    """

    def __init__(self, sample: _SortedSample, phi: np.ndarray):
        self.s = sample
        self.phi = phi
        n = sample.y.size
        ev = sample.event_pos
        self.n = n
        self.x_ev = sample.x[ev]
        # events are at risk from their own slice onward
        self.ev_risk_mask = (
            np.arange(n)[None, :] >= sample.event_risk_start[:, None]
        ).astype(float)
        self.at_risk = (
            np.arange(n)[:, None] >= sample.event_risk_start[None, :]
        ).astype(float)
        self.x_aug = np.hstack([sample.x, np.ones((n, 1))])
        self.has_ties = sample.tie_group_start.size < ev.size
        self.delta_ev = sample.delta[ev].astype(float)

    def _bandwidths(self, z: np.ndarray) -> np.ndarray:
        sd = z.std(axis=0, ddof=1)
        if (sd <= 0).any():
            raise ValueError("projected data has a zero-variance column")
        d = z.shape[1]
        return (4.0 / (d + 2)) ** (1.0 / (d + 4)) * self.n ** (-1.0 / (d + 4)) * sd

    def _event_row_moments(self, b: np.ndarray):
        """Risk-set kernel mean pieces at each event's own time/projection."""
        s = self.s
        z = s.x @ b
        h = self._bandwidths(z)
        k = _kernel_rows_fast(z[s.event_pos], z, h)
        k *= self.ev_risk_mask
        num = k @ s.x
        den = k.sum(axis=1)
        return self.x_ev - num / den[:, None]

    def forward(self, b: np.ndarray) -> np.ndarray:
        return self._event_row_moments(b).sum(axis=0) / self.n

    def ircp(self, b: np.ndarray) -> np.ndarray:
        m = self._event_row_moments(b).T @ self.phi / self.n
        return m.ravel(order="F")

    def irsemi(self, b: np.ndarray, hazard_override=None) -> np.ndarray:
        s = self.s
        n = self.n
        z = s.x @ b
        h = self._bandwidths(z)
        k = _kernel_rows_fast(z, z, h)

        # den[i, j] = kernel mass of the risk set at event j, seen from
        # subject i; the at-risk mask doubles as the summation matrix
        den = k @ self.at_risk
        bad = (den <= 0.0) & (self.at_risk > 0.0)
        if bad.any():
            i, j = map(int, np.argwhere(bad)[0])
            raise FloatingPointError(
                f"risk-set kernel mass underflowed at event {j} for subject {i}"
            )
        safe = np.where(den > 0.0, den, 1.0)

        if hazard_override is None:
            ev_k = k[:, s.event_pos]
            if self.has_ties:
                grouped = np.add.reduceat(ev_k, s.tie_group_start, axis=1)
                ev_k = grouped[:, s.tie_group]
            lam = ev_k / safe
        else:
            lam = np.asarray(hazard_override, dtype=float)

        w = self.at_risk * (-lam)
        w[s.event_pos, np.arange(s.event_pos.size)] += self.delta_ev
        # sum_i w_ij E(X | risk set j, subject i) with the i and l sums
        # swapped, so both reductions are matrix products
        a1 = w.T @ s.x
        g = (w / safe).T @ k
        g *= self.at_risk.T
        a2 = g @ s.x
        m = (a1 - a2).T @ self.phi / n
        return m.ravel(order="F")


class GmmProblem:
    """One dataset plus one moment construction, ready to evaluate.

    Everything that does not depend on the candidate direction (time
    ordering, the sliced mean-difference curve, slice and time
    bandwidths) is precomputed here; each objective evaluation then
    builds only the direction-dependent kernel caches.  Evaluations are
    pure, so concurrent calls at different directions are safe.
    """

    def __init__(
        self,
        ds: SurvivalDataset,
        kind: EstimatorKind | str,
        *,
        slice_w: float | None = None,
        time_bandwidth: float | None = None,
        hazard_override=None,
        allow_forward_multi: bool = False,
    ):
        self.ds = ds
        self.kind = EstimatorKind.parse(kind)
        if self.kind is EstimatorKind.CPSIR:
            raise ValueError("the covariance-form estimator has no GMM objective; use cpsir_matrix")
        self.sample = _SortedSample(ds)
        self.curve = slice_curve(ds, slice_w)
        self.slice_w = self.curve.width
        self.time_bandwidth = time_bandwidth
        self.hazard_override = hazard_override
        self.allow_forward_multi = allow_forward_multi
        self.n_evaluations = 0
        self._fast = _FastEvaluator(self.sample, self.curve.phi)

    def build_plan(self, b: np.ndarray) -> KernelPlan:
        return build_plan(
            self.ds,
            b,
            slice_w=self.slice_w,
            time_bandwidth=self.time_bandwidth,
            sample=self.sample,
        )

    def psi(self, b: np.ndarray) -> MomentVector:
        self.n_evaluations += 1
        b = np.asarray(b, dtype=float)
        if b.ndim == 1:
            b = b[:, None]
        if self.kind is EstimatorKind.FORWARD and b.shape[1] != 1 and not self.allow_forward_multi:
            raise ValueError(
                "the forward construction stacks only p equations and supports d=1; "
                "pass allow_forward_multi=True to evaluate it anyway"
            )
        if self.kind is EstimatorKind.FORWARD:
            values = self._fast.forward(b)
        elif self.kind is EstimatorKind.IRCP:
            values = self._fast.ircp(b)
        elif self.hazard_override is not None:
            s = self.sample
            lam = np.broadcast_to(
                np.asarray(self.hazard_override(s.event_times, s.x @ b), dtype=float),
                (s.y.size, s.n_events),
            )
            values = self._fast.irsemi(b, hazard_override=lam)
        else:
            values = self._fast.irsemi(b)
        return MomentVector(values=values, kind=self.kind)

    def objective(self, b: np.ndarray) -> float:
        return self.psi(b).norm_sq()


def _plan_for(ds, b, plan):
    if plan is None:
        plan = build_plan(ds, b)
    return plan


def psi_forward(ds: SurvivalDataset, b: np.ndarray, plan: KernelPlan | None = None,
                *, allow_multi: bool = False) -> MomentVector:
    """Forward-regression moments: mean over events of X minus its
    kernel risk-set mean at the subject's own time and projection."""
    plan = _plan_for(ds, b, plan)
    if plan.b.shape[1] != 1 and not allow_multi:
        raise ValueError("forward moments are defined for d=1; pass allow_multi=True to override")
    return MomentVector(values=_forward_core(plan), kind=EstimatorKind.FORWARD)


def psi_ircp(ds: SurvivalDataset, b: np.ndarray, plan: KernelPlan | None = None,
             phi: np.ndarray | None = None) -> MomentVector:
    """Counting-process inverse-regression moments.

    vec of (1/n) sum over events of {X_i - E(X | at risk, projection)}
    times the sliced mean-difference row at the event time.
    """
    plan = _plan_for(ds, b, plan)
    if phi is None:
        phi = slice_curve(ds, plan.slice_w).phi
    lam = np.zeros((plan.n, plan.sample.n_events))
    return MomentVector(values=_inverse_core(plan, phi, lam), kind=EstimatorKind.IRCP)


def psi_irsemi(ds: SurvivalDataset, b: np.ndarray, plan: KernelPlan | None = None,
               phi: np.ndarray | None = None, hazard: np.ndarray | None = None) -> MomentVector:
    """Martingale (semiparametric) inverse-regression moments.

    Extends the counting-process construction with the compensator: at
    each event time, every subject still at risk contributes with
    weight (event indicator minus the estimated hazard increment).

    ``hazard`` optionally replaces the estimated table; it must be
    (E, n) over original subject indices, as returned by
    :func:`survdr.kernels.hazard_exact`.
    """
    plan = _plan_for(ds, b, plan)
    if phi is None:
        phi = slice_curve(ds, plan.slice_w).phi
    if hazard is None:
        lam = plan.hazard_table()
    else:
        hazard = np.asarray(hazard, dtype=float)
        lam = hazard.T[plan.sample.order]
    return MomentVector(values=_inverse_core(plan, phi, lam), kind=EstimatorKind.IRSEMI)


def gmm_objective(ds: SurvivalDataset, b: np.ndarray, kind: EstimatorKind | str,
                  *, slice_w: float | None = None,
                  time_bandwidth: float | None = None) -> float:
    """Squared Euclidean norm of the chosen moment vector at ``b``."""
    return GmmProblem(ds, kind, slice_w=slice_w, time_bandwidth=time_bandwidth).objective(b)


def cpsir_matrix(ds: SurvivalDataset, slice_w: float | None = None) -> np.ndarray:
    """Covariance form for the SVD-only estimator.

    (1/n) sum over events of {X_i - plain risk-set mean at Y_i} times
    the sliced mean-difference row.  No kernel smoothing anywhere; the
    left singular space of this matrix estimates the target subspace.
    """
    sample = _SortedSample(ds)
    curve = slice_curve(ds, slice_w)
    x_ev = sample.x[sample.event_pos]
    suffix_x = np.vstack([np.cumsum(sample.x[::-1], axis=0)[::-1], np.zeros(ds.p)])
    start = sample.event_risk_start
    risk_mean = suffix_x[start] / (ds.n - start)[:, None]
    resid = x_ev - risk_mean
    return resid.T @ curve.phi / ds.n
