"""Brute-force reference computations used to check the fast code paths.

Nothing here imports the package's projection or M-step code.
"""

import itertools
import math

import numpy as np

LOG_2PI = math.log(2 * math.pi)


def cone_distance_on_grid(v, c, step=1e-3):
    """Squared distance from v to {x : max x <= c min x} by scanning the cone's
    scalar parameter t on a grid: every cone point lies in some box [t, c t]^m."""
    v = np.asarray(v, dtype=float)
    ts = np.arange(0.0, v.max() + step, step)
    x = np.clip(v[None, :], ts[:, None], c * ts[:, None])
    d = ((x - v) ** 2).sum(axis=1)
    i = int(np.argmin(d))
    return float(d[i]), x[i]


def exact_cone_projection(v, c):
    """Exact projection onto the ratio cone by minimising the piecewise quadratic
    f(t) = sum dist(v_i, [t, c t])^2 over t >= 0 interval by interval."""
    v = np.asarray(v, dtype=float)
    if c == 1.0:
        t = max(v.mean(), 0.0)
        return np.full_like(v, t)
    knots = np.unique(np.concatenate([[0.0], v[v > 0], v[v > 0] / c]))
    knots = np.append(knots, knots[-1] * 2 + 1)
    best_t, best_f = 0.0, float(((v - 0.0) ** 2).sum())
    for lo, hi in zip(knots[:-1], knots[1:]):
        mid = 0.5 * (lo + hi)
        below = v < mid
        above = v > c * mid
        # f(t) = sum_below (t - v)^2 + sum_above (v - c t)^2 on this interval
        a = below.sum() + c * c * above.sum()
        b = v[below].sum() + c * v[above].sum()
        t = b / a if a > 0 else mid
        t = min(max(t, lo), hi)
        x = np.clip(v, t, c * t)
        f = float(((x - v) ** 2).sum())
        if f < best_f:
            best_t, best_f = t, f
    return np.clip(v, best_t, c * best_t)


def _ratio_ok(lo, hi, c):
    return hi - c * lo <= 1e-8 * c * max(abs(lo), abs(hi))


def _mstep_1d(x, lab, c):
    """Weights, means, variances for two non-empty groups (p = 1)."""
    m = len(x)
    n = np.array([np.sum(lab == 0), np.sum(lab == 1)])
    mu = np.array([x[lab == 0].mean(), x[lab == 1].mean()])
    var = np.array([((x[lab == j] - mu[j]) ** 2).mean() for j in (0, 1)])
    var = np.maximum(var, 0.0)
    floor = 1e-10 * (1 + var.max())
    var = np.maximum(var, floor)
    if not math.isinf(c) and not _ratio_ok(var.min(), var.max(), c):
        q = 1.0 / var
        hi, lo = int(np.argmax(q)), int(np.argmin(q))
        g = (q[hi] - c * q[lo]) / (1 + c * c)
        q[hi] -= g
        q[lo] += c * g
        var = 1.0 / q
    return n / m, mu, var


def _loglik_top(x_all, weights, mu, var, m):
    logd = np.log(weights)[None, :] - 0.5 * (LOG_2PI + np.log(var)[None, :] + (x_all[:, None] - mu) ** 2 / var)
    d = logd.max(axis=1)
    return math.fsum(np.sort(d)[::-1][:m].tolist())


def best_trimmed_two_cluster_objective(x, c, n_trim=1):
    """Max over every (trimmed set, 2-labelling of the rest) of the trimmed
    likelihood of the M-step parameters, with the optimal assignment."""
    x = np.asarray(x, dtype=float).reshape(-1)
    n = len(x)
    m = n - n_trim
    best = -np.inf
    for trimmed in itertools.combinations(range(n), n_trim):
        keep = np.array([i for i in range(n) if i not in trimmed])
        xs = x[keep]
        for bits in range(2 ** m):
            lab = np.array([(bits >> i) & 1 for i in range(m)])
            if lab.min() == lab.max():
                mu = xs.mean()
                var = max(((xs - mu) ** 2).mean(), 1e-10)
                val = _loglik_top(x, np.array([1.0]), np.array([mu]), np.array([var]), m)
            else:
                w, mu, var = _mstep_1d(xs, lab, c)
                val = _loglik_top(x, w, mu, var, m)
            best = max(best, val)
    return best
