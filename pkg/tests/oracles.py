"""Naive reference implementations used as independent oracles.

Everything here is written as direct loops over the defining formulas,
with no sorting, suffix sums, masks, or shared helpers from the package
internals, so agreement with the vectorized code is meaningful.
"""

import math

import numpy as np


def kernel_weight(z_i, z_ref, h):
    w = 1.0
    for k in range(len(h)):
        u = (z_i[k] - z_ref[k]) / h[k]
        w *= math.exp(-0.5 * u * u) / (h[k] * math.sqrt(2.0 * math.pi))
    return w


def naive_cond_mean_risk(x, y, delta, b, h):
    """E(X | Y >= Y_i, projection = subject i's projection), every i."""
    n, p = x.shape
    z = x @ b
    out = np.zeros((n, p))
    for i in range(n):
        num = np.zeros(p)
        den = 0.0
        for j in range(n):
            if y[j] >= y[i]:
                w = kernel_weight(z[j], z[i], h)
                num += w * x[j]
                den += w
        out[i] = num / den
    return out


def naive_hazard_exact(x, y, delta, b, h):
    """Hazard increments at event times, (E, n) over original subjects."""
    n, p = x.shape
    z = x @ b
    ev = [j for j in range(n) if delta[j] == 1]
    ev.sort(key=lambda j: (y[j], j))
    out = np.zeros((len(ev), n))
    for (r, j) in enumerate(ev):
        for i in range(n):
            num = 0.0
            den = 0.0
            for l in range(n):
                w = kernel_weight(z[l], z[i], h)
                if y[l] == y[j] and delta[l] == 1:
                    num += w
                if y[l] >= y[j]:
                    den += w
            out[r, i] = num / den
    return out, np.array([y[j] for j in ev])


def naive_slice_curve(x, y, delta, width):
    """Sliced mean difference at each event time, time-ordered."""
    n, p = x.shape
    ev = [j for j in range(n) if delta[j] == 1]
    ev.sort(key=lambda j: (y[j], j))
    out = np.zeros((len(ev), p))
    for (r, j) in enumerate(ev):
        u = y[j]
        in_slice = [i for i in range(n) if delta[i] == 1 and u <= y[i] < u + width]
        at_risk = [i for i in range(n) if y[i] >= u]
        first = sum(x[i] for i in in_slice) / len(in_slice)
        second = sum(x[i] for i in at_risk) / len(at_risk)
        out[r] = first - second
    return out, np.array([y[j] for j in ev])


def naive_psi_forward(x, y, delta, b, h):
    n, p = x.shape
    cond = naive_cond_mean_risk(x, y, delta, b, h)
    psi = np.zeros(p)
    for i in range(n):
        if delta[i] == 1:
            psi += x[i] - cond[i]
    return psi / n


def naive_psi_ircp(x, y, delta, b, h, width):
    n, p = x.shape
    z = x @ b
    phi, times = naive_slice_curve(x, y, delta, width)
    ev = [j for j in range(n) if delta[j] == 1]
    ev.sort(key=lambda j: (y[j], j))
    m = np.zeros((p, p))
    for (r, i) in enumerate(ev):
        num = np.zeros(p)
        den = 0.0
        for l in range(n):
            if y[l] >= y[i]:
                w = kernel_weight(z[l], z[i], h)
                num += w * x[l]
                den += w
        m += np.outer(x[i] - num / den, phi[r])
    return (m / n).ravel(order="F")


def naive_psi_irsemi(x, y, delta, b, h, width, hazard=None):
    """Double loop over subjects and events.

    Subjects outside the risk set of an event contribute nothing: their
    counting-process jump is elsewhere and the compensator carries the
    at-risk indicator.  ``hazard`` optionally replaces the estimated
    (E, n) increment table.
    """
    n, p = x.shape
    z = x @ b
    phi, _ = naive_slice_curve(x, y, delta, width)
    if hazard is None:
        hazard, _ = naive_hazard_exact(x, y, delta, b, h)
    ev = [j for j in range(n) if delta[j] == 1]
    ev.sort(key=lambda j: (y[j], j))
    m = np.zeros((p, p))
    for (r, j) in enumerate(ev):
        for i in range(n):
            if y[i] < y[j]:
                continue
            num = np.zeros(p)
            den = 0.0
            for l in range(n):
                if y[l] >= y[j]:
                    w = kernel_weight(z[l], z[i], h)
                    num += w * x[l]
                    den += w
            weight = (1.0 if i == j else 0.0) * delta[i] - hazard[r, i]
            m += weight * np.outer(x[i] - num / den, phi[r])
    return (m / n).ravel(order="F")


def naive_cpsir_matrix(x, y, delta, width):
    n, p = x.shape
    phi, _ = naive_slice_curve(x, y, delta, width)
    ev = [j for j in range(n) if delta[j] == 1]
    ev.sort(key=lambda j: (y[j], j))
    m = np.zeros((p, p))
    for (r, i) in enumerate(ev):
        at_risk = [l for l in range(n) if y[l] >= y[i]]
        risk_mean = sum(x[l] for l in at_risk) / len(at_risk)
        m += np.outer(x[i] - risk_mean, phi[r])
    return m / n
