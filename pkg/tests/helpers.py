import numpy as np

from survdr.data import SurvivalDataset


def random_dataset(rng, n=25, p=4, censor_frac=0.35):
    """Small dataset with continuous times and a guaranteed event."""
    x = rng.standard_normal((n, p))
    t = rng.exponential(np.exp(-0.7 * x[:, 0]))
    c = rng.exponential(np.exp(0.3 - 0.5 * x[:, min(1, p - 1)])) / censor_frac
    y = np.minimum(t, c)
    delta = (t <= c).astype(np.int64)
    if delta.sum() == 0:
        delta[int(np.argmin(y))] = 1
    return SurvivalDataset(x, y, delta)
