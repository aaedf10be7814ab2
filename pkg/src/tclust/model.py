"""Core value types shared by the rest of the package."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

RATIO_SLACK = 1e-8


class InvalidInput(ValueError):
    """Raised for malformed data, parameters or configurations."""


class ContractViolation(RuntimeError):
    """Raised when an internal precondition between components is broken."""


class Mode(enum.Enum):
    EIGEN = "eigen"
    DETERMINANT = "deter"
    SPHERICAL = "spherical"
    COMMON = "common"
    NONE = "none"


def retained_count(n: int, alpha: float) -> int:
    """Number of observations kept, ceil(n * (1 - alpha)).

    A 1e-9 guard keeps e.g. alpha = 1/n from rounding up to n.
    """
    return int(math.ceil(n * (1.0 - alpha) - 1e-9))


def _as_matrix(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    return arr


@dataclass(frozen=True)
class Dataset:
    points: np.ndarray

    def __post_init__(self):
        arr = _as_matrix(self.points)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidInput(f"points must be a non-empty n x p matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidInput("points contain non-finite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "points", arr)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def p(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class ModelParams:
    """Weights, means (k x p) and covariances (k x p x p) of a k-cluster model."""

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        mu = np.asarray(self.means, dtype=float)
        if mu.ndim == 1:
            mu = mu[:, None]
        cov = np.asarray(self.covariances, dtype=float)
        if cov.ndim == 1:
            cov = cov[:, None, None]
        k = w.shape[0]
        if k < 1 or mu.shape[0] != k or cov.shape[0] != k:
            raise InvalidInput("weights, means and covariances disagree on k")
        p = mu.shape[1]
        if cov.shape[1:] != (p, p):
            raise InvalidInput(f"covariances must be {k} x {p} x {p}, got {cov.shape}")
        for arr in (w, mu, cov):
            if not np.all(np.isfinite(arr)):
                raise InvalidInput("parameters contain non-finite entries")
            arr.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "covariances", cov)

    @property
    def k(self) -> int:
        return self.weights.shape[0]

    @property
    def p(self) -> int:
        return self.means.shape[1]

    def check(self) -> None:
        """Raise InvalidInput unless weights and covariances meet the model invariants."""
        if np.any(self.weights < 0) or np.any(self.weights > 1):
            raise InvalidInput("weights must lie in [0, 1]")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise InvalidInput(f"weights sum to {self.weights.sum()!r}, not 1")
        for j, s in enumerate(self.covariances):
            if np.max(np.abs(s - s.T)) > 1e-10 * max(1.0, np.max(np.abs(s))):
                raise InvalidInput(f"covariance {j} is not symmetric")
            if np.linalg.eigvalsh(s)[0] <= 0:
                raise InvalidInput(f"covariance {j} is not positive definite")


@dataclass(frozen=True)
class ConstraintSpec:
    mode: Mode = Mode.EIGEN
    c: float = 1.0

    def __post_init__(self):
        mode = Mode(self.mode)
        object.__setattr__(self, "mode", mode)
        if not (self.c >= 1):
            raise InvalidInput(f"c must be >= 1, got {self.c}")


@dataclass(frozen=True)
class Assignment:
    """Hard assignment; labels are 1..k for clusters and 0 for trimmed points."""

    labels: np.ndarray
    counts: np.ndarray

    @classmethod
    def from_labels(cls, labels, k: int) -> "Assignment":
        labels = np.asarray(labels, dtype=np.int64)
        if labels.size and (labels.min() < 0 or labels.max() > k):
            raise InvalidInput(f"labels must lie in 0..{k}")
        counts = np.bincount(labels, minlength=k + 1)[1:]
        labels.setflags(write=False)
        counts.setflags(write=False)
        return cls(labels=labels, counts=counts)

    @property
    def k(self) -> int:
        return self.counts.shape[0]

    @property
    def n_trimmed(self) -> int:
        return int(np.sum(self.labels == 0))


@dataclass(frozen=True)
class FitConfig:
    alpha: float = 0.1
    n_starts: int = 50
    f_iters: int = 10
    max_iters: int = 200
    tol: float = 1e-12
    seed: int = 0
    # 0 means one worker per CPU; None defers to TCLUST_THREADS
    threads: Optional[int] = None

    def __post_init__(self):
        if not (0 <= self.alpha < 1):
            raise InvalidInput(f"alpha must be in [0, 1), got {self.alpha}")
        for name in ("n_starts", "f_iters", "max_iters"):
            if getattr(self, name) < 1:
                raise InvalidInput(f"{name} must be a positive integer")
        if self.tol < 0:
            raise InvalidInput("tol must be non-negative")

    def check_sizes(self, n: int, k: int, p: int) -> None:
        if n < k:
            raise InvalidInput(f"cannot fit k={k} clusters to n={n} points")
        m = retained_count(n, self.alpha)
        if m < k * (p + 1):
            warnings.warn(
                f"only {m} retained points for k={k} clusters in dimension {p}; "
                "covariance estimates may be degenerate",
                stacklevel=3,
            )


@dataclass(frozen=True)
class IterationRecord:
    objective: float
    trimmed_hash: int
    param_change: float


@dataclass(frozen=True)
class FitResult:
    params: ModelParams
    assignment: Assignment
    objective: float
    threshold: float
    discriminants: np.ndarray
    bayes_factors: np.ndarray
    iterations_used: int
    converged: bool
    start_index: int = 0
    trace: tuple = field(default=(), repr=False)


def _rel_equal(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), np.finfo(float).tiny)
    return bool(np.max(np.abs(a - b)) <= tol * scale)


def validate_params(params: ModelParams, spec: ConstraintSpec) -> bool:
    """True iff the covariances of ``params`` satisfy the restriction in ``spec``."""
    cov = params.covariances
    if not np.all(np.isfinite(cov)):
        raise InvalidInput("covariances contain non-finite entries")
    eig = np.linalg.eigvalsh(cov)
    if np.any(eig <= 0):
        return False
    bound = spec.c * (1 + RATIO_SLACK)
    mode = spec.mode
    if mode is Mode.EIGEN:
        return bool(eig.max() / eig.min() <= bound)
    if mode is Mode.DETERMINANT:
        scales = np.exp(np.log(eig).mean(axis=1))
        return bool(scales.max() / scales.min() <= bound)
    if mode is Mode.COMMON:
        return all(_rel_equal(cov[0], s, RATIO_SLACK) for s in cov[1:])
    if mode is Mode.SPHERICAL:
        sigma2 = np.trace(cov[0]) / params.p
        target = sigma2 * np.eye(params.p)
        return all(_rel_equal(target, s, RATIO_SLACK) for s in cov)
    return True
