"""Gaussian discriminants, the trimming threshold and the trimmed likelihood.

Everything is on the log scale: ``log D_j(x) = log pi_j + log f(x; mu_j, Sigma_j)``.
Zero-weight clusters get ``-inf`` and can never claim a point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .model import Assignment, ContractViolation, Dataset, ModelParams, retained_count

LOG_2PI = math.log(2 * math.pi)


def _cholesky(sigma: np.ndarray) -> np.ndarray:
    # raises numpy.linalg.LinAlgError for matrices that are not positive definite
    return np.linalg.cholesky(sigma)


def log_normal_pdf(x, mu, sigma) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    return float(_log_pdf_rows(x[None, :], mu, sigma)[0])


def _log_pdf_rows(X: np.ndarray, mu: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    p = X.shape[1]
    chol = _cholesky(sigma)
    z = solve_triangular(chol, (X - mu).T, lower=True, check_finite=False)
    maha = np.einsum("ij,ij->j", z, z)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return -0.5 * (p * LOG_2PI + logdet + maha)


def log_discriminant_matrix(params: ModelParams, X: np.ndarray) -> np.ndarray:
    """n x k matrix of log D_j(x_i; theta)."""
    X = np.atleast_2d(X)
    out = np.full((X.shape[0], params.k), -np.inf)
    for j in range(params.k):
        w = params.weights[j]
        if w > 0:
            out[:, j] = math.log(w) + _log_pdf_rows(X, params.means[j], params.covariances[j])
    return out


@dataclass(frozen=True)
class DiscriminantRow:
    """Per-cluster log discriminants of one point.

    ``best_index`` is a cluster label (1-based, like Assignment.labels); ties
    go to the smallest label.
    """

    per_cluster: np.ndarray
    best_index: int
    best_value: float


def discriminants(x, params: ModelParams) -> DiscriminantRow:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    row = log_discriminant_matrix(params, x[None, :])[0]
    j = int(np.argmax(row))
    return DiscriminantRow(per_cluster=row, best_index=j + 1, best_value=float(row[j]))


def _retained_order(d: np.ndarray, m: int) -> np.ndarray:
    """Indices of the m largest entries of d; equal values keep lower indices first."""
    order = np.argsort(-d, kind="stable")
    return order[:m]


def _labels_from_matrix(logd: np.ndarray, alpha: float) -> np.ndarray:
    n = logd.shape[0]
    best = np.argmax(logd, axis=1)
    d = logd[np.arange(n), best]
    keep = _retained_order(d, retained_count(n, alpha))
    labels = np.zeros(n, dtype=np.int64)
    labels[keep] = best[keep] + 1
    return labels


def _data(data) -> np.ndarray:
    return data.points if isinstance(data, Dataset) else np.atleast_2d(np.asarray(data, dtype=float))


def threshold(params: ModelParams, data, alpha: float) -> float:
    """R(theta, P_n): the smallest best-discriminant among retained points."""
    X = _data(data)
    d = log_discriminant_matrix(params, X).max(axis=1)
    keep = _retained_order(d, retained_count(X.shape[0], alpha))
    return float(d[keep[-1]])


def assign(params: ModelParams, data, alpha: float) -> Assignment:
    X = _data(data)
    labels = _labels_from_matrix(log_discriminant_matrix(params, X), alpha)
    return Assignment.from_labels(labels, params.k)


def _objective_from_matrix(logd: np.ndarray, labels: np.ndarray) -> float:
    idx = np.flatnonzero(labels)
    vals = logd[idx, labels[idx] - 1]
    if np.any(np.isneginf(vals)):
        raise ContractViolation("a retained point is assigned to a zero-weight cluster")
    return math.fsum(vals.tolist())


def objective(params: ModelParams, data, assignment: Assignment) -> float:
    """Trimmed classification log-likelihood, summed over retained points.

    This is n times the empirical expectation; the constant factor does not
    change the maximiser.
    """
    X = _data(data)
    if assignment.labels.shape[0] != X.shape[0]:
        raise ContractViolation("assignment and data disagree on n")
    return _objective_from_matrix(log_discriminant_matrix(params, X), assignment.labels)


def _bayes_from_matrix(logd: np.ndarray, labels: np.ndarray) -> np.ndarray:
    n, k = logd.shape
    d = logd.max(axis=1)
    bf = np.empty(n)
    kept = labels > 0
    if k >= 2:
        top2 = np.sort(logd, axis=1)[:, -2:]
        with np.errstate(invalid="ignore"):
            bf[kept] = top2[kept, 0] - top2[kept, 1]
    else:
        bf[kept] = -np.inf
    if np.any(~kept):
        r = d[kept].min()
        bf[~kept] = d[~kept] - r
    return bf


def bayes_factors(params: ModelParams, data, assignment: Assignment) -> np.ndarray:
    """Log Bayes factors: second-best minus best discriminant for retained points,
    best discriminant minus the threshold for trimmed ones. With k = 1 retained
    points get -inf."""
    X = _data(data)
    return _bayes_from_matrix(log_discriminant_matrix(params, X), assignment.labels)
