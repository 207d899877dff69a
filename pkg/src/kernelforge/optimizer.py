"""Minimization of staircasing objectives over free kernel coefficients.

The objective is a quartic polynomial known exactly, so its gradient and
Hessian are exact polynomials as well.  Critical points are located by a
batch of damped Newton iterations started from a grid plus quasi-random
points, deduplicated, and classified by positive-definiteness of the
Hessian.
"""

from __future__ import annotations

import itertools
import logging
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.stats import qmc

from .kernelspace import (GeneralSolution, KernelSpec, PiecewiseKernel,
                          general_solution, instantiate)
from .polyalg import CompiledPoly, MultiPoly
from .staircase import Objective, eg_squared, eg_squared_avg

log = logging.getLogger(__name__)

DEFAULT_BOX = (-4.0, 4.0)
DEFAULT_RANDOM_STARTS = 200
DEFAULT_SEED = 20211
CONVERGED_RESIDUAL = 1e-10
DEDUP_TOL = 1e-8
PIVOT_TOL = 1e-12


@dataclass
class CriticalPoint:
    coords: dict[str, float]
    objective_value: float
    hessian_pd: bool
    converged: bool
    residual: float
    hessian_eigenvalues: list[float] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "coords": dict(self.coords),
            "objective_value": self.objective_value,
            "hessian_pd": self.hessian_pd,
            "converged": self.converged,
            "residual": self.residual,
            "hessian_eigenvalue_signs": [int(np.sign(v)) for v in self.hessian_eigenvalues],
            "hessian_eigenvalues": list(self.hessian_eigenvalues),
        }


def gradient_system(obj: Objective | MultiPoly) -> list[MultiPoly]:
    """Exact partial derivatives of the objective, one per free coefficient."""
    poly = obj.poly if isinstance(obj, Objective) else obj
    names = poly.free_symbols()
    if not names:
        raise ValueError("objective is constant; nothing to optimize")
    return [poly.diff(n) for n in names]


def hessian_system(grad: Sequence[MultiPoly], names: Sequence[str]) -> list[list[MultiPoly]]:
    out = []
    for g in grad:
        row = []
        for n in names:
            row.append(g.diff(n) if n in g.variables else MultiPoly.const(0))
        out.append(row)
    return out


def is_positive_definite(h: np.ndarray, tol: float = PIVOT_TOL) -> bool:
    """Cholesky test with a relative pivot floor."""
    h = 0.5 * (h + h.T)
    scale = max(1.0, float(np.max(np.abs(h)))) if h.size else 1.0
    try:
        L = np.linalg.cholesky(h)
    except np.linalg.LinAlgError:
        return False
    return bool(np.all(np.diag(L) ** 2 > tol * scale))


def _starts(d: int, box: Sequence[tuple[float, float]], n_random: int, seed: int) -> np.ndarray:
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    levels = [1 / 6, 1 / 2, 5 / 6]
    grid = np.array(list(itertools.product(levels, repeat=d)), dtype=float)
    pts = [lo + grid * (hi - lo)]
    if n_random:
        sampler = qmc.Halton(d, scramble=True, seed=seed)
        pts.append(qmc.scale(sampler.random(n_random), lo, hi))
    return np.vstack(pts)


def _newton_batch(gfun, hfun, x: np.ndarray, max_iter: int = 200,
                  max_step: float = 1.0) -> np.ndarray:
    x = x.copy()
    active = np.ones(len(x), dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        xa = x[active]
        g = gfun(xa)
        h = hfun(xa)
        done = np.max(np.abs(g), axis=1) < CONVERGED_RESIDUAL * 1e-2
        try:
            step = np.linalg.solve(h, g[..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = np.stack([np.linalg.lstsq(hh, gg, rcond=None)[0] for hh, gg in zip(h, g)])
        norm = np.max(np.abs(step), axis=1)
        factor = np.where(norm > max_step, max_step / np.maximum(norm, 1e-300), 1.0)
        xa = xa - step * factor[:, None]
        xa[~np.all(np.isfinite(xa), axis=1)] = np.nan
        x[active] = xa
        idx = np.flatnonzero(active)
        active[idx[done]] = False
        active &= np.all(np.isfinite(x), axis=1)
        active &= np.max(np.abs(x), axis=1) < 1e6
    return x


def find_critical_points(grad: Sequence[MultiPoly], names: Sequence[str] | None = None,
                         box: Sequence[tuple[float, float]] | None = None,
                         starts: int = DEFAULT_RANDOM_STARTS, seed: int = DEFAULT_SEED,
                         objective: MultiPoly | None = None) -> list[CriticalPoint]:
    """Real critical points of the gradient system reachable from the box.

    ``starts`` counts the quasi-random starts added to the 3**d grid.
    """
    if names is None:
        found = set()
        for g in grad:
            found.update(g.free_symbols())
        names = sorted(found)
    names = tuple(names)
    d = len(names)
    if box is None:
        box = [DEFAULT_BOX] * d
    hess = hessian_system(grad, names)
    gcomp = [CompiledPoly(g, names) for g in grad]
    hcomp = [[CompiledPoly(h, names) for h in row] for row in hess]

    def gfun(x):
        return np.stack([g(x) for g in gcomp], axis=-1)

    def hfun(x):
        return np.stack([np.stack([h(x) for h in row], axis=-1) for row in hcomp], axis=-2)

    x0 = _starts(d, box, starts, seed)
    x = _newton_batch(gfun, hfun, x0)
    ok = np.all(np.isfinite(x), axis=1)
    x = x[ok]
    if not len(x):
        log.warning("no Newton start converged")
        return []
    res = np.max(np.abs(gfun(x)), axis=1)
    x = x[res < CONVERGED_RESIDUAL]
    if not len(x):
        log.warning("no Newton start reached residual %g", CONVERGED_RESIDUAL)
        return []
    # dedup: keep the representative with the smallest residual
    x = x[np.argsort(np.max(np.abs(gfun(x)), axis=1))]
    reps: list[np.ndarray] = []
    for p in x:
        if all(np.max(np.abs(p - q)) > DEDUP_TOL for q in reps):
            reps.append(p)
    fcomp = CompiledPoly(objective, names) if objective is not None else None
    out = []
    for p in reps:
        h = hfun(p[None])[0]
        r = float(np.max(np.abs(gfun(p[None])[0])))
        out.append(CriticalPoint(
            coords={n: float(v) for n, v in zip(names, p)},
            objective_value=float(fcomp(p[None])[0]) if fcomp else float("nan"),
            hessian_pd=is_positive_definite(h),
            converged=r < CONVERGED_RESIDUAL,
            residual=r,
            hessian_eigenvalues=[float(v) for v in np.linalg.eigvalsh(0.5 * (h + h.T))],
        ))
    out.sort(key=lambda c: (not c.hessian_pd, c.objective_value))
    return out


def cubic_roots(coeffs: Sequence) -> np.ndarray:
    """Real roots of ``sum(coeffs[k] x**k)`` via the companion matrix."""
    c = np.array([float(v) for v in coeffs], dtype=float)
    while len(c) > 1 and c[-1] == 0:
        c = c[:-1]
    if len(c) < 2:
        return np.array([])
    comp = np.diag(np.ones(len(c) - 2), -1)
    comp[:, -1] = -c[:-1] / c[-1]
    ev = np.linalg.eigvals(comp)
    return np.sort(ev[np.abs(ev.imag) < 1e-9].real)


def objective_for(kernel: PiecewiseKernel, metric: str) -> Objective:
    if metric in ("eg_half", "eg-half"):
        return eg_squared(kernel)
    if metric in ("eg_avg", "eg-avg"):
        return eg_squared_avg(kernel)
    raise ValueError(f"unknown metric {metric!r}")


@dataclass
class OptimizationResult:
    spec: KernelSpec
    metric: str
    solution: GeneralSolution
    objective: Objective
    kernel: PiecewiseKernel
    best: CriticalPoint | None
    critical_points: list[CriticalPoint]
    settings: dict

    @property
    def n_minima(self) -> int:
        return sum(c.hessian_pd for c in self.critical_points)

    def report(self) -> dict:
        return {
            "kernel": self.spec.label,
            "metric": self.metric,
            "free_names": list(self.solution.free_names),
            "objective": str(self.objective.poly),
            "objective_value": self.objective.value(self.best.coords if self.best else None),
            "n_pd_minima": self.n_minima,
            "critical_points": [c.as_dict() for c in self.critical_points],
            "settings": dict(self.settings),
        }


def optimize_kernel(spec: KernelSpec, metric: str = "eg_half",
                    starts: int = DEFAULT_RANDOM_STARTS, seed: int = DEFAULT_SEED,
                    box: tuple[float, float] = DEFAULT_BOX) -> OptimizationResult:
    """Constraints, general solution, objective, minimization."""
    metric = metric.replace("-", "_")
    gs = general_solution(spec)
    symbolic = gs.symbolic_kernel()
    obj = objective_for(symbolic, metric)
    settings = {"starts": starts, "seed": seed, "box": list(box),
                "grid": f"3^{gs.n_free}", "residual_tol": CONVERGED_RESIDUAL,
                "dedup_tol": DEDUP_TOL, "pivot_tol": PIVOT_TOL}
    if gs.is_unique:
        kernel = instantiate(gs, {})
        return OptimizationResult(spec, metric, gs, obj, kernel, None, [], settings)
    names = gs.free_names
    grad = [obj.poly.diff(n) for n in names]
    points = find_critical_points(grad, names, [box] * len(names), starts, seed, obj.poly)
    minima = [c for c in points if c.hessian_pd]
    if len(minima) != 1:
        warnings.warn(f"{spec}: found {len(minima)} positive-definite minima", RuntimeWarning)
    if not minima:
        raise RuntimeError(f"{spec}: no local minimum found")
    best = min(minima, key=lambda c: c.objective_value)
    kernel = instantiate(gs, best.coords)
    return OptimizationResult(spec, metric, gs, obj, kernel, best, points, settings)


@lru_cache(maxsize=None)
def optimized(spec: KernelSpec, metric: str = "eg_half") -> OptimizationResult:
    """Memoized :func:`optimize_kernel` with default settings."""
    return optimize_kernel(spec, metric)
