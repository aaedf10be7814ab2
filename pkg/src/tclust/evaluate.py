"""Scoring fitted partitions against simulation ground truth."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

import numpy as np

from .model import Assignment, ConstraintSpec, FitConfig, FitResult, InvalidInput, Mode
from .simgen import SimScheme, generate
from .solver import fit, fit_comparator, worker_count

MAX_MATCH_K = 8
METHODS = ("tkm", "gr", "g", "tclust")
TCLUST_C = 50.0
BENCH_K = 3
BENCH_ALPHA = 0.1


def _labels(predicted) -> np.ndarray:
    if isinstance(predicted, Assignment):
        return predicted.labels
    return np.asarray(predicted, dtype=np.int64)


def match_labels(predicted, truth) -> tuple[tuple[int, ...], np.ndarray]:
    """Best relabelling of predicted clusters 1..k onto the truth; 0 stays 0.

    Returns ``(perm, relabelled)`` where ``perm[j - 1]`` is the new label of
    predicted cluster j.
    """
    pred = _labels(predicted)
    truth = np.asarray(truth, dtype=np.int64)
    if pred.shape != truth.shape:
        raise InvalidInput("predicted and truth must have the same length")
    k = int(max(pred.max(initial=0), truth.max(initial=0)))
    if isinstance(predicted, Assignment):
        k = max(k, predicted.k)
    if k > MAX_MATCH_K:
        raise InvalidInput(f"label matching supports k <= {MAX_MATCH_K}, got {k}")
    # agreement[a, b] = points predicted a with true label b
    agreement = np.zeros((k + 1, k + 1), dtype=np.int64)
    np.add.at(agreement, (pred, truth), 1)
    best, best_hits = None, -1
    for perm in itertools.permutations(range(1, k + 1)):
        hits = agreement[0, 0] + sum(agreement[j + 1, perm[j]] for j in range(k))
        if hits > best_hits:
            best, best_hits = perm, hits
    lookup = np.array((0,) + best)
    return tuple(int(x) for x in best), lookup[pred]


def misclassification(predicted, truth) -> tuple[float, float]:
    """(rate, outlier_confusion), both as fractions of n.

    ``rate`` counts every disagreement after optimal relabelling, trimmed
    versus regular included. ``outlier_confusion`` counts true outliers kept
    plus true regular points trimmed.
    """
    truth = np.asarray(truth, dtype=np.int64)
    _, relabelled = match_labels(predicted, truth)
    n = truth.shape[0]
    rate = np.count_nonzero(relabelled != truth) / n
    confusion = np.count_nonzero((relabelled == 0) != (truth == 0)) / n
    return float(rate), float(confusion)


def _fit_method(method: str, data, cfg: FitConfig) -> FitResult:
    if method == "tclust":
        return fit(data, BENCH_K, ConstraintSpec(Mode.EIGEN, TCLUST_C), cfg)
    return fit_comparator(data, BENCH_K, method, cfg)


MODEL_IDS = {"M1": 1, "M2": 2, "M3": 3, "M4": 4, "M5": 5}
WEIGHT_IDS = {"equal": 0, "unequal": 1}


def replicate_seeds(seed: int, weights: str, p: int, model: str, b: int) -> tuple[int, int]:
    """(data seed, fit seed) for replicate b of a cell; shared by all methods."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(WEIGHT_IDS[weights], p, MODEL_IDS[model], b))
    data_seed, fit_seed = ss.generate_state(2, dtype=np.uint64)
    return int(data_seed), int(fit_seed)


@dataclass(frozen=True)
class BenchSettings:
    B: int = 25
    n_regular: int = 1800
    n_outliers: int = 200
    n_starts: int = 50
    f_iters: int = 10
    max_iters: int = 200
    seed: int = 0


@dataclass
class BenchCell:
    weights: str
    p: int
    model: str
    rates: dict = field(default_factory=dict)  # method -> list of rates per replicate
    confusions: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)  # method -> list of FitResult, when kept

    def mean(self, method: str) -> tuple[float, float]:
        r, c = self.rates[method], self.confusions[method]
        return math.fsum(r) / len(r), math.fsum(c) / len(c)


def _replicate(job):
    weights, p, model, b, methods, st, keep_fits = job
    data_seed, fit_seed = replicate_seeds(st.seed, weights, p, model, b)
    scheme = SimScheme(model, p, weights, st.n_regular, st.n_outliers, data_seed)
    data, truth = generate(scheme)
    cfg = FitConfig(
        alpha=BENCH_ALPHA,
        n_starts=st.n_starts,
        f_iters=st.f_iters,
        max_iters=st.max_iters,
        seed=fit_seed,
        threads=1,
    )
    out = {}
    for method in methods:
        res = _fit_method(method, data, cfg)
        out[method] = (misclassification(res.assignment, truth), res if keep_fits else None)
    return out


def bench_table(
    models: Iterable[str],
    p_list: Iterable[int],
    weight_modes: Iterable[str],
    methods: Iterable[str],
    B: int = 25,
    seed: int = 0,
    settings: Optional[BenchSettings] = None,
    workers: Optional[int] = None,
    keep_fits: bool = False,
) -> list[BenchCell]:
    """Run B paired replicates per (weights, p, model) cell for each method.

    All methods see the same simulated datasets. Cells are ordered by
    weights, then p, then model.
    """
    if B < 1:
        raise InvalidInput("B must be >= 1")
    methods = tuple(m.lower() for m in methods)
    for m in methods:
        if m not in METHODS:
            raise InvalidInput(f"unknown method {m!r}; expected one of {METHODS}")
    settings = replace(settings or BenchSettings(), B=B, seed=seed)
    cells = [
        BenchCell(w, int(p), m)
        for w in weight_modes
        for p in p_list
        for m in models
    ]
    jobs = [
        (cell.weights, cell.p, cell.model, b, methods, settings, keep_fits)
        for cell in cells
        for b in range(B)
    ]
    n_workers = worker_count(workers)
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as ex:
            results = list(ex.map(_replicate, jobs))
    else:
        results = [_replicate(job) for job in jobs]
    for i, cell in enumerate(cells):
        for method in methods:
            reps = [results[i * B + b][method] for b in range(B)]
            cell.rates[method] = [r[0][0] for r in reps]
            cell.confusions[method] = [r[0][1] for r in reps]
            if keep_fits:
                cell.fits[method] = [r[1] for r in reps]
    return cells

