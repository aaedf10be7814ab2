"""Covariance restrictions applied in the M-step.

The eigenvalue-ratio restriction is enforced by projecting the vector of
inverse eigenvalues onto the cone ``{x : max(x) <= c * min(x)}`` with
Dykstra's cyclic projections over the pairwise half-spaces
``x_u - c * x_r <= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from numba import njit

from .model import RATIO_SLACK, ConstraintSpec, InvalidInput, Mode

DYKSTRA_TOL = 1e-10
DYKSTRA_MAX_CYCLES = 20000


def sym_eigen(S) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order and the matching orthonormal eigenvectors
    (as columns). Tiny negative eigenvalues are clamped to zero."""
    S = np.asarray(S, dtype=float)
    scale = max(1.0, float(np.max(np.abs(S)))) if S.size else 1.0
    if S.ndim != 2 or S.shape[0] != S.shape[1] or np.max(np.abs(S - S.T), initial=0.0) > 1e-8 * scale:
        raise InvalidInput("sym_eigen needs a symmetric square matrix")
    vals, vecs = np.linalg.eigh(0.5 * (S + S.T))
    vals, vecs = vals[::-1], vecs[:, ::-1]
    return np.maximum(vals, 0.0), vecs


def halfspace_project(v, u_idx: int, r_idx: int, c: float) -> np.ndarray:
    """Euclidean projection of v onto {x : x[u_idx] <= c * x[r_idx]}."""
    if u_idx == r_idx:
        raise InvalidInput("half-space indices must differ")
    x = np.array(v, dtype=float)
    viol = x[u_idx] - c * x[r_idx]
    if viol > 0:
        g = viol / (1.0 + c * c)
        x[u_idx] -= g
        x[r_idx] += c * g
    return x


@dataclass(frozen=True)
class ConeConstraint:
    dimension: int
    c: float
    floor: float = 0.0

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,) or np.any(x < self.floor):
            return False
        return _feasible(x, self.c)


def _feasible(x: np.ndarray, c: float) -> bool:
    lo, hi = float(x.min()), float(x.max())
    return hi - c * lo <= RATIO_SLACK * c * max(abs(lo), abs(hi))


@njit(cache=True)
def _dykstra_kernel(v, c, max_cycles, tol, slack):
    m = v.shape[0]
    x = v.copy()
    incr = np.zeros(m * (m - 1))
    prev = np.empty(m)
    best = v.copy()
    best_dist = np.inf
    have_best = False
    for cycle in range(max_cycles):
        prev[:] = x
        h = 0
        for u in range(m):
            for r in range(m):
                if u == r:
                    continue
                yu = x[u] + incr[h]
                yr = x[r] - c * incr[h]
                viol = yu - c * yr
                g = viol / (1.0 + c * c) if viol > 0.0 else 0.0
                x[u] = yu - g
                x[r] = yr + c * g
                incr[h] = g
                h += 1
        move = 0.0
        lo = x[0]
        hi = x[0]
        for i in range(m):
            move = max(move, abs(x[i] - prev[i]))
            lo = min(lo, x[i])
            hi = max(hi, x[i])
        feasible = hi - c * lo <= slack * c * max(abs(lo), abs(hi))
        if feasible:
            dist = 0.0
            for i in range(m):
                dist += (x[i] - v[i]) ** 2
            if dist < best_dist:
                best_dist = dist
                best[:] = x
                have_best = True
            if move < tol:
                return x, True, cycle + 1
    return best, False, max_cycles if have_best else -max_cycles


def dykstra_project(
    v,
    cone: ConeConstraint,
    max_cycles: int = DYKSTRA_MAX_CYCLES,
    tol: float = DYKSTRA_TOL,
) -> tuple[np.ndarray, bool]:
    """Project ``v`` onto the eigenvalue-ratio cone.

    Returns ``(x, converged)``. Convergence means a full sweep over the
    half-spaces moved the iterate by less than ``tol`` (relative to the size
    of ``v``) and the iterate is feasible. Otherwise the closest feasible
    sweep end-point is returned, or a clipped repair if none was feasible.
    Entries are finally clamped from below at ``cone.floor``.
    """
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape[0] != cone.dimension:
        raise InvalidInput(f"expected a vector of length {cone.dimension}")
    if not np.all(np.isfinite(v)):
        raise InvalidInput("cannot project a non-finite vector")
    if v.shape[0] < 2 or np.isinf(cone.c) or _feasible(v, cone.c):
        return np.maximum(v, cone.floor), True
    scale = float(np.max(np.abs(v)))
    x, converged, cycles = _dykstra_kernel(v, float(cone.c), int(max_cycles), tol * scale, RATIO_SLACK)
    if cycles < 0:
        hi = x.max()
        x = np.clip(x, hi / cone.c, hi)
    return np.maximum(x, cone.floor), bool(converged)


class Restriction(NamedTuple):
    covariances: np.ndarray
    projected: bool
    converged: bool
    degenerate: bool


def _eigen_floor(max_eig: float) -> float:
    return 1e-10 * (1.0 + max_eig)


def _project_inverse(values: np.ndarray, c: float) -> tuple[np.ndarray, bool]:
    """Project 1/values onto the ratio cone and map back."""
    inv = 1.0 / values
    cone = ConeConstraint(inv.shape[0], c, floor=inv.max() * 1e-15)
    proj, ok = dykstra_project(inv, cone)
    return 1.0 / proj, ok


def restrict_covariances(S_list: Sequence, spec: ConstraintSpec, counts: Sequence[int]) -> Restriction:
    """Return k covariance matrices satisfying ``spec``, built from the
    scatter matrices ``S_list`` (one per cluster, denominator n_j)."""
    S = np.asarray(S_list, dtype=float)
    if S.ndim == 1:
        S = S[:, None, None]
    k, p, _ = S.shape
    counts = np.asarray(counts, dtype=float)
    if counts.shape != (k,):
        raise InvalidInput("need one count per cluster")

    eig = np.empty((k, p))
    vecs = np.empty((k, p, p))
    for j in range(k):
        eig[j], vecs[j] = sym_eigen(S[j])
    floor = _eigen_floor(float(eig.max()))
    eye = np.eye(p)

    if eig.max() <= 0:
        return Restriction(np.repeat((floor * eye)[None], k, axis=0), False, True, True)

    mode = spec.mode
    if mode in (Mode.COMMON, Mode.SPHERICAL):
        w = counts if counts.sum() > 0 else np.ones(k)
        pooled = np.einsum("j,jab->ab", w, S) / w.sum()
        pooled = 0.5 * (pooled + pooled.T)
        if mode is Mode.SPHERICAL:
            pooled = max(np.trace(pooled) / p, floor) * eye
        else:
            pv, pU = sym_eigen(pooled)
            pooled = (pU * np.maximum(pv, floor)) @ pU.T
        return Restriction(np.repeat(pooled[None], k, axis=0), False, True, False)

    eig = np.maximum(eig, floor)
    projected, converged = False, True
    if mode is Mode.EIGEN:
        flat = eig.reshape(-1)
        if not _feasible(flat, spec.c):
            flat, converged = _project_inverse(flat, spec.c)
            eig = flat.reshape(k, p)
            projected = True
        out = np.einsum("jab,jb,jcb->jac", vecs, eig, vecs)
    elif mode is Mode.DETERMINANT:
        scales = np.exp(np.log(eig).mean(axis=1))
        shapes = np.einsum("jab,jb,jcb->jac", vecs, eig / scales[:, None], vecs)
        if not _feasible(scales, spec.c):
            scales, converged = _project_inverse(scales, spec.c)
            projected = True
        out = shapes * scales[:, None, None]
    else:
        out = np.einsum("jab,jb,jcb->jac", vecs, eig, vecs)
    out = 0.5 * (out + np.swapaxes(out, 1, 2))
    return Restriction(out, projected, converged, False)
