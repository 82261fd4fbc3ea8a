"""Benchmark data-generating processes with known target subspaces.

Four settings are provided. All rates written exp(.) are hazard rates
(density lambda * exp(-lambda t)); Weibull scale s with shape k means
T = s * (-log U)^(1/k).

Setting 1: proportional hazards with one direction.  T and C are
  exponential with hazards exp(beta'X) and exp(X4 + X5 - 1),
  beta = (1, 0.5, 0, ...), X ~ N(0, Sigma), Sigma_ij = 0.5^|i-j|.
Setting 2: two directions switching over time.  T1, T2 exponential
  with hazards exp(b1'X), exp(b2'X), b1 = e1 + e3, b2 = e2 + e4;
  T = T1 if T1 < 0.4 else T2 + 0.4; C exponential with hazard
  exp(X5 - X6 - 2); X as in Setting 1.
Setting 3: two interacting directions.  T Weibull with shape 5 and
  scale exp(4 b2'X (b1'X - 1)); C uniform on (0, 3 exp(X5 - X6 + 0.5));
  X_j iid U(0, 1).
Setting 4: log T = -2.5 + b1'X + 0.5 b1'X b2'X + 0.25 log(-log(1 - u)),
  log C = -0.5 + b3'X + log(-log(1 - u')), u, u' independent uniforms,
  b1 = e1 + e2, b2 = e3 - e4, b3 = e2 + e4 + e5 + e6,
  Sigma_ij = 0.25^|i-j|.

Randomness comes from the counter-based Philox generator; independent
streams for parallel replications are derived with SeedSequence spawn
keys, so any (seed, stream) pair is reproducible in isolation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import SurvivalDataset
from .stiefel import orthonormalize

__all__ = [
    "SimSetting",
    "SimTruth",
    "rng_stream",
    "subseed",
    "true_directions",
    "default_anchor_rows",
    "generate",
    "censoring_rate",
]

_TINY = 1e-300  # floor before logs; keeps measure-zero draws finite


def rng_stream(seed: int, *key: int) -> np.random.Generator:
    """Philox generator on an independent stream indexed by ``key``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def subseed(seed: int, *key: int) -> int:
    """A 64-bit seed derived deterministically from (seed, key)."""
    return int(np.random.SeedSequence(seed, spawn_key=key).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class SimSetting:
    """One cell of the simulation grid."""

    id: int
    p: int = 6
    n: int = 400
    seed: int = 0

    def __post_init__(self):
        if self.id not in (1, 2, 3, 4):
            raise ValueError(f"setting id must be 1..4, got {self.id}")
        if self.p < 6:
            raise ValueError(f"the coefficient patterns need p >= 6, got p={self.p}")
        if self.n < 2:
            raise ValueError(f"need n >= 2, got n={self.n}")


@dataclass(frozen=True)
class SimTruth:
    """Orthonormalized span of the generating coefficient vectors."""

    b_true: np.ndarray
    d_true: int


def _unit(p: int, *ones: int, minus: int | None = None) -> np.ndarray:
    v = np.zeros(p)
    v[list(ones)] = 1.0
    if minus is not None:
        v[minus] = -1.0
    return v


def true_directions(setting_id: int, p: int) -> np.ndarray:
    """Raw coefficient vectors spanning the target subspace, as columns."""
    if setting_id == 1:
        beta = np.zeros(p)
        beta[0], beta[1] = 1.0, 0.5
        return beta[:, None]
    if setting_id in (2, 3):
        return np.column_stack([_unit(p, 0, 2), _unit(p, 1, 3)])
    return np.column_stack([_unit(p, 0, 1), _unit(p, 2, minus=3)])


def default_anchor_rows(setting_id: int) -> tuple[int, ...]:
    """Anchor rows at which the raw coefficients already form I_d."""
    return {1: (0,), 2: (0, 1), 3: (0, 1), 4: (0, 2)}[setting_id]


def _ar1_chol(p: int, rho: float) -> np.ndarray:
    idx = np.arange(p)
    return np.linalg.cholesky(rho ** np.abs(idx[:, None] - idx[None, :]))


def _draw_x(setting_id: int, p: int, n: int, rng: np.random.Generator) -> np.ndarray:
    if setting_id == 3:
        return rng.random((n, p))
    rho = 0.25 if setting_id == 4 else 0.5
    return rng.standard_normal((n, p)) @ _ar1_chol(p, rho).T


def _exponential(rng, hazard: np.ndarray) -> np.ndarray:
    return rng.exponential(1.0, hazard.shape) / hazard


def _gumbel_term(rng, n: int) -> np.ndarray:
    # log(-log(1 - U)) via a standard exponential draw
    return np.log(np.maximum(rng.standard_exponential(n), _TINY))


def _draw_t(setting_id: int, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    p, n = x.shape[1], x.shape[0]
    if setting_id == 1:
        return _exponential(rng, np.exp(x @ true_directions(1, p)[:, 0]))
    if setting_id == 2:
        b1, b2 = true_directions(2, p).T
        t1 = _exponential(rng, np.exp(x @ b1))
        t2 = _exponential(rng, np.exp(x @ b2))
        return np.where(t1 < 0.4, t1, t2 + 0.4)
    if setting_id == 3:
        b1, b2 = true_directions(3, p).T
        scale = np.exp(4.0 * (x @ b2) * (x @ b1 - 1.0))
        return scale * rng.weibull(5.0, n)
    b1, b2 = true_directions(4, p).T
    s1 = x @ b1
    return np.exp(-2.5 + s1 + 0.5 * s1 * (x @ b2) + 0.25 * _gumbel_term(rng, n))


def _draw_c(setting_id: int, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    p, n = x.shape[1], x.shape[0]
    if setting_id == 1:
        return _exponential(rng, np.exp(x[:, 3] + x[:, 4] - 1.0))
    if setting_id == 2:
        return _exponential(rng, np.exp(x[:, 4] - x[:, 5] - 2.0))
    if setting_id == 3:
        # uniform on (0, high]; excludes 0 so observed times stay positive
        return 3.0 * np.exp(x[:, 4] - x[:, 5] + 0.5) * (1.0 - rng.random(n))
    b3 = _unit(p, 1, 3, 4, 5)
    return np.exp(-0.5 + x @ b3 + _gumbel_term(rng, n))


def generate(setting: SimSetting, stream: int | None = None):
    """Draw one dataset and its target subspace.

    Deterministic given (setting.seed, stream); the optional ``stream``
    selects an independent substream for parallel replications.

    Returns
    -------
    (SurvivalDataset, SimTruth)
    """
    rng = rng_stream(setting.seed) if stream is None else rng_stream(setting.seed, stream)
    x = _draw_x(setting.id, setting.p, setting.n, rng)
    t = _draw_t(setting.id, x, rng)
    c = _draw_c(setting.id, x, rng)
    y = np.minimum(t, c)
    delta = (t <= c).astype(np.int64)
    ds = SurvivalDataset(x, y, delta)
    truth = SimTruth(
        b_true=orthonormalize(true_directions(setting.id, setting.p)),
        d_true=1 if setting.id == 1 else 2,
    )
    return ds, truth


def censoring_rate(setting: SimSetting, n_mc: int = 1_000_000) -> float:
    """Monte Carlo estimate of P(censored) for one setting."""
    if n_mc < 10_000:
        raise ValueError("use at least 10000 Monte Carlo draws")
    rng = rng_stream(setting.seed, 0xC)
    x = _draw_x(setting.id, setting.p, n_mc, rng)
    t = _draw_t(setting.id, x, rng)
    c = _draw_c(setting.id, x, rng)
    return float(np.mean(t > c))
