"""Three-cluster Gaussian benchmark data with uniform background outliers.

Normal draws come from numpy's PCG64 generator (ziggurat sampler) and are
mapped through the symmetric square root of each covariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc

from .model import Dataset, InvalidInput

# (a, b, c, d, e, f) for each scheme
SCHEMES = {
    "M1": (1, 1, 1, 1, 0, 1),
    "M2": (5, 1, 5, 1, 0, 5),
    "M3": (5, 5, 1, 3, -2, 3),
    "M4": (1, 20, 5, 15, -10, 15),
    "M5": (1, 45, 30, 15, -10, 15),
}
WEIGHT_RATIOS = {"equal": (1, 1, 1), "unequal": (1, 2, 2)}

MAX_PROPOSALS = 10**8
BATCH = 4096


@dataclass(frozen=True)
class SimScheme:
    model: str = "M1"
    p: int = 2
    weights: str = "equal"
    n_regular: int = 1800
    n_outliers: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.model not in SCHEMES:
            raise InvalidInput(f"unknown model {self.model!r}; expected one of {sorted(SCHEMES)}")
        if self.weights not in WEIGHT_RATIOS:
            raise InvalidInput(f"weights must be 'equal' or 'unequal', got {self.weights!r}")
        if self.p < 2:
            raise InvalidInput("p must be at least 2")
        if self.n_regular < 3 or self.n_outliers < 0:
            raise InvalidInput("need n_regular >= 3 and n_outliers >= 0")


def scheme_params(scheme: SimScheme) -> tuple[np.ndarray, np.ndarray]:
    a, b, c, d, e, f = SCHEMES[scheme.model]
    p = scheme.p
    means = np.zeros((3, p))
    means[0, :2] = (0, 8)
    means[1, :2] = (8, 0)
    means[2, :2] = (-8, -8)
    covs = np.repeat(np.eye(p)[None], 3, axis=0)
    covs[0, 1, 1] = a
    covs[1, 0, 0], covs[1, 1, 1] = b, c
    covs[2, :2, :2] = [[d, e], [e, f]]
    return means, covs


def group_sizes(n_regular: int, weights: str) -> list[int]:
    ratio = WEIGHT_RATIOS[weights]
    total = sum(ratio)
    sizes = [n_regular * r // total for r in ratio[:-1]]
    return sizes + [n_regular - sum(sizes)]


def chi2_quantile(prob: float, df: int, tol: float = 1e-10) -> float:
    """Inverse chi-square CDF by bisection on the regularized lower gamma function."""
    if not 0 < prob < 1:
        raise InvalidInput("prob must lie in (0, 1)")
    lo, hi = 0.0, max(1.0, float(df))
    while gammainc(df / 2, hi / 2) < prob:
        hi *= 2
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if gammainc(df / 2, mid / 2) < prob:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _sqrtm(cov: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(cov)
    return (vecs * np.sqrt(vals)) @ vecs.T


def min_mahalanobis(X: np.ndarray, means: np.ndarray, covs: np.ndarray) -> np.ndarray:
    d2 = [np.einsum("ij,jk,ik->i", X - mu, np.linalg.inv(s), X - mu) for mu, s in zip(means, covs)]
    return np.min(d2, axis=0)


def generate(scheme: SimScheme) -> tuple[Dataset, np.ndarray]:
    """Sample the regular clusters, then add outliers by acceptance-rejection.

    Returns the dataset and true labels (1..3 for the clusters, 0 for outliers).
    """
    rng = np.random.default_rng(scheme.seed)
    means, covs = scheme_params(scheme)
    p = scheme.p
    blocks, labels = [], []
    for j, size in enumerate(group_sizes(scheme.n_regular, scheme.weights)):
        z = rng.standard_normal((size, p))
        blocks.append(means[j] + z @ _sqrtm(covs[j]))
        labels.append(np.full(size, j + 1))
    regular = np.vstack(blocks)
    lo, hi = regular.min(axis=0), regular.max(axis=0)

    cutoff = chi2_quantile(0.975, p)
    accepted, n_acc, proposed = [], 0, 0
    while n_acc < scheme.n_outliers:
        cand = rng.uniform(lo, hi, size=(BATCH, p))
        proposed += BATCH
        ok = cand[min_mahalanobis(cand, means, covs) > cutoff]
        ok = ok[: scheme.n_outliers - n_acc]
        accepted.append(ok)
        n_acc += len(ok)
        if proposed >= MAX_PROPOSALS and n_acc < 1e-6 * proposed:
            raise RuntimeError("outlier acceptance rate too low; cannot generate the sample")
    outliers = np.vstack(accepted) if accepted else np.empty((0, p))
    points = np.vstack([regular, outliers])
    truth = np.concatenate(labels + [np.zeros(len(outliers), dtype=int)]).astype(np.int64)
    return Dataset(points), truth
