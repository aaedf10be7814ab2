"""Trimmed classification-EM with restricted covariances, plus multistart.

Each start draws k sample points as centres (identity covariances, equal
weights), runs ``f_iters`` concentration steps, and the best tenth of the
starts is iterated further. The best iterate seen is what a start reports.
"""

from __future__ import annotations

import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

import numpy as np

from .constraints import restrict_covariances
from .density import (
    _bayes_from_matrix,
    _labels_from_matrix,
    _objective_from_matrix,
    log_discriminant_matrix,
)
from .model import (
    Assignment,
    ConstraintSpec,
    Dataset,
    FitConfig,
    FitResult,
    InvalidInput,
    IterationRecord,
    Mode,
    ModelParams,
)

COMPARATORS = ("tkm", "gr", "g")


def worker_count(requested: Optional[int] = None) -> int:
    """Resolve a worker count; None reads TCLUST_THREADS, 0 means all CPUs."""
    if requested is None:
        try:
            requested = int(os.environ.get("TCLUST_THREADS", "1") or 1)
        except ValueError:
            requested = 1
    if requested <= 0:
        requested = os.cpu_count() or 1
    return requested


def start_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for start ``index``; independent of how starts are scheduled."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def _points(data) -> np.ndarray:
    return data.points if isinstance(data, Dataset) else Dataset(data).points


def init_random(data, k: int, seed=0) -> ModelParams:
    """k distinct sample points as centres, identity covariances, weights 1/k.

    ``seed`` may be an int or a numpy Generator.
    """
    X = _points(data)
    n, p = X.shape
    if n < k:
        raise InvalidInput(f"need at least k={k} points, got {n}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    idx = rng.choice(n, size=k, replace=False)
    return ModelParams(
        weights=np.full(k, 1.0 / k),
        means=X[idx].copy(),
        covariances=np.repeat(np.eye(p)[None], k, axis=0),
    )


def _mstep(
    X: np.ndarray,
    labels: np.ndarray,
    prev: ModelParams,
    spec: ConstraintSpec,
    fixed_weights: bool,
) -> ModelParams:
    k, p = prev.k, prev.p
    counts = np.bincount(labels, minlength=k + 1)[1:]
    m = counts.sum()
    if m == 0:
        raise RuntimeError("every cluster is empty")
    means = prev.means.copy()
    scatter = prev.covariances.copy()
    for j in range(k):
        if counts[j]:
            pts = X[labels == j + 1]
            means[j] = pts.mean(axis=0)
            centred = pts - means[j]
            scatter[j] = centred.T @ centred / counts[j]
    covs = restrict_covariances(scatter, spec, counts).covariances
    if fixed_weights:
        weights = np.full(k, 1.0 / k)
    else:
        weights = counts / m
    return ModelParams(weights=weights, means=means, covariances=covs)


def concentration_step(
    params: ModelParams,
    data,
    cfg: FitConfig,
    spec: ConstraintSpec,
    fixed_weights: bool = False,
) -> tuple[ModelParams, Assignment]:
    """Assign with the current parameters, then refit them on that assignment.

    Returns the new parameters together with the assignment that produced them.
    """
    X = _points(data)
    labels = _labels_from_matrix(log_discriminant_matrix(params, X), cfg.alpha)
    new = _mstep(X, labels, params, spec, fixed_weights)
    return new, Assignment.from_labels(labels, params.k)


def _param_change(a: ModelParams, b: ModelParams) -> float:
    return float(
        max(
            np.max(np.abs(a.weights - b.weights)),
            np.max(np.abs(a.means - b.means)),
            np.max(np.abs(a.covariances - b.covariances)),
        )
    )


class _Start:
    """Mutable state of one start: current parameters, their assignment, best iterate."""

    def __init__(self, X, params, spec, alpha, fixed_weights, index):
        self.X = X
        self.spec = spec
        self.alpha = alpha
        self.fixed_weights = fixed_weights
        self.index = index
        self.params = params
        self.labels = _labels_from_matrix(log_discriminant_matrix(params, X), alpha)
        self.objective = -np.inf
        self.best: Optional[ModelParams] = None
        self.best_objective = -np.inf
        self.trace: list[IterationRecord] = []
        self.iterations = 0
        self.converged = False

    def step(self, tol: float) -> None:
        new = _mstep(self.X, self.labels, self.params, self.spec, self.fixed_weights)
        logd = log_discriminant_matrix(new, self.X)
        labels = _labels_from_matrix(logd, self.alpha)
        obj = _objective_from_matrix(logd, labels)
        self.trace.append(
            IterationRecord(obj, zlib.crc32((labels == 0).tobytes()), _param_change(new, self.params))
        )
        unchanged = np.array_equal(labels, self.labels)
        small = self.iterations > 0 and abs(obj - self.objective) < tol
        self.params, self.labels, self.objective = new, labels, obj
        self.iterations += 1
        if obj > self.best_objective:
            self.best, self.best_objective = new, obj
        self.converged = unchanged or small

    def run(self, n_steps: int, tol: float) -> None:
        for _ in range(n_steps):
            if self.converged:
                break
            self.step(tol)


def run_start(
    data,
    init: ModelParams,
    spec: ConstraintSpec,
    cfg: FitConfig,
    n_steps: Optional[int] = None,
    fixed_weights: bool = False,
) -> tuple[ModelParams, float, list[IterationRecord]]:
    """Iterate one start from ``init``; returns (best params, best objective, trace)."""
    st = _Start(_points(data), init, spec, cfg.alpha, fixed_weights, 0)
    st.run(n_steps or cfg.max_iters, cfg.tol)
    return st.best, st.best_objective, st.trace


def _map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _finish(X, st: _Start, alpha: float) -> FitResult:
    params = st.best
    logd = log_discriminant_matrix(params, X)
    labels = _labels_from_matrix(logd, alpha)
    d = logd.max(axis=1)
    return FitResult(
        params=params,
        assignment=Assignment.from_labels(labels, params.k),
        objective=_objective_from_matrix(logd, labels),
        threshold=float(d[labels > 0].min()),
        discriminants=d,
        bayes_factors=_bayes_from_matrix(logd, labels),
        iterations_used=st.iterations,
        converged=st.converged,
        start_index=st.index,
        trace=tuple(st.trace),
    )


def _fit(
    data,
    k: int,
    spec: ConstraintSpec,
    cfg: FitConfig,
    fixed_weights: bool,
    inits: Optional[Sequence[ModelParams]],
) -> FitResult:
    X = _points(data)
    n, p = X.shape
    cfg.check_sizes(n, k, p)
    if len(np.unique(X, axis=0)) < k:
        raise InvalidInput(f"fewer than k={k} distinct points")
    if inits is None:
        inits = [init_random(X, k, start_rng(cfg.seed, s)) for s in range(cfg.n_starts)]
    workers = worker_count(cfg.threads)

    def screen(item):
        s, init = item
        st = _Start(X, init, spec, cfg.alpha, fixed_weights, s)
        st.run(cfg.f_iters, cfg.tol)
        return st

    starts = _map(screen, list(enumerate(inits)), workers)
    keep = max(1, len(starts) // 10)
    # stable sort: equal objectives keep the lower start index
    ranked = sorted(starts, key=lambda st: -st.objective)[:keep]

    def refine(st: _Start):
        st.run(cfg.max_iters, cfg.tol)
        return st

    finished = _map(refine, ranked, workers)
    winner = max(finished, key=lambda st: (st.best_objective, -st.index))
    return _finish(X, winner, cfg.alpha)


def fit(
    data,
    k: int,
    spec: ConstraintSpec,
    cfg: FitConfig,
    inits: Optional[Sequence[ModelParams]] = None,
) -> FitResult:
    """Fit k clusters trimming a fraction ``cfg.alpha`` of the data.

    ``inits`` replaces the random starting values (one start per entry).
    """
    return _fit(data, k, spec, cfg, False, inits)


def comparator_spec(method: str) -> ConstraintSpec:
    method = method.lower()
    if method == "tkm":
        return ConstraintSpec(Mode.SPHERICAL, 1.0)
    if method == "gr":
        return ConstraintSpec(Mode.COMMON, 1.0)
    if method == "g":
        return ConstraintSpec(Mode.DETERMINANT, 1.0)
    raise InvalidInput(f"unknown comparator {method!r}; expected one of {COMPARATORS}")


def fit_comparator(
    data,
    k: int,
    method: str,
    cfg: FitConfig,
    inits: Optional[Sequence[ModelParams]] = None,
) -> FitResult:
    """Trimmed k-means ('tkm'), common-covariance ('gr') or unit
    determinant-ratio ('g') clustering, all with weights pinned to 1/k."""
    return _fit(data, k, comparator_spec(method), cfg, True, inits)
