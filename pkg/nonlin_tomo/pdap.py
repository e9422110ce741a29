"""
Primal-dual active point recovery of a point-source measure from flux data on Σ.

F maps μ = Σ λ_k δ_{S_k} to the Neumann trace on Σ of the impedance problem.
Each iteration takes the argmax of |ξ|, ξ = F*(Fμ - g), on a polar candidate
grid, refines it locally, adds it to the support, refits complex weights by
least squares and prunes small weights.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from scipy import linalg, optimize

from .config import DomainConfig, PdapConfig, log
from .errors import StagnationWarning
from .forward import BoundaryTrace, DiscreteMeasure, point_source_traces, resample_trace


@dataclass
class PdapState:
    measure: DiscreteMeasure
    residual_history: List[float] = field(default_factory=list)  # after each weight fit
    insert_history: List[float] = field(default_factory=list)  # before each support insertion
    dual: Optional[np.ndarray] = None
    iterations: int = 0
    converged: bool = False
    stagnated: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "support": len(self.measure),
            "iterations": self.iterations,
            "converged": self.converged,
            "stagnated": self.stagnated,
            "residual_history": self.residual_history,
            "insert_history": self.insert_history,
            "measure": self.measure.to_dict(),
        }


def candidate_grid(radius: float, cfg: PdapConfig) -> np.ndarray:
    """Origin followed by a polar grid of radii × angles inside radius_fraction·R."""
    rmax = cfg.radius_fraction * radius
    rho = rmax * np.arange(1, cfg.radii + 1) / cfg.radii
    th = 2.0 * np.pi * np.arange(cfg.angles) / cfg.angles
    rr, tt = np.meshgrid(rho, th, indexing="ij")
    pts = np.stack([(rr * np.cos(tt)).ravel(), (rr * np.sin(tt)).ravel()], axis=-1)
    return np.vstack([np.zeros((1, 2)), pts])


def grid_spacing(radius: float, cfg: PdapConfig) -> float:
    rmax = cfg.radius_fraction * radius
    return max(rmax / cfg.radii, 2.0 * np.pi * rmax / cfg.angles)


class FluxOperator:
    """F: M(Ω) → L²(Σ) restricted to the observed boundary nodes of a trace."""

    def __init__(self, domain: DomainConfig, kappa: float, indices: np.ndarray):
        self.domain = domain
        self.kappa = float(kappa)
        self.indices = np.asarray(indices)
        self.weight = 2.0 * np.pi * domain.radius / domain.boundary_nodes

    @staticmethod
    def for_trace(domain: DomainConfig, kappa: float, g: BoundaryTrace) -> "FluxOperator":
        g = resample_trace(g, domain.boundary_nodes)
        return FluxOperator(domain, kappa, g.indices)

    def columns(self, points: np.ndarray) -> np.ndarray:
        if np.atleast_2d(points).shape[0] == 0:
            return np.zeros((self.indices.size, 0), dtype=complex)
        return point_source_traces(points, self.kappa, self.domain, "neumann")[self.indices]

    def apply(self, mu: DiscreteMeasure) -> np.ndarray:
        if len(mu) == 0:
            return np.zeros(self.indices.size, dtype=complex)
        return self.columns(mu.points) @ mu.weights

    def adjoint(self, residual: np.ndarray, kernel: np.ndarray) -> np.ndarray:
        """ξ_j = ∫_Σ conj(K(s, x_j)) res(s) ds for kernel columns K(·, x_j)."""
        return self.weight * (kernel.conj().T @ residual)

    def inner(self, a: np.ndarray, b: np.ndarray) -> complex:
        return complex(self.weight * np.sum(a * np.conj(b)))

    def norm(self, a: np.ndarray) -> float:
        return float(np.sqrt(self.weight * np.sum(np.abs(a) ** 2)))


def apply_f(mu: DiscreteMeasure, domain: DomainConfig, kappa: float, template: BoundaryTrace) -> BoundaryTrace:
    """Neumann trace on Σ (the arc of `template`) of the field of μ."""
    op = FluxOperator.for_trace(domain, kappa, template)
    t = resample_trace(template, domain.boundary_nodes)
    return t.with_samples(op.apply(mu))


def apply_fstar(residual: BoundaryTrace, grid: np.ndarray, domain: DomainConfig, kappa: float) -> np.ndarray:
    op = FluxOperator.for_trace(domain, kappa, residual)
    res = resample_trace(residual, domain.boundary_nodes).samples
    return op.adjoint(res, op.columns(grid))


def _fit_weights(op: FluxOperator, cols: np.ndarray, g: np.ndarray) -> np.ndarray:
    s = math.sqrt(op.weight)
    lam, *_ = linalg.lstsq(s * cols, s * g, lapack_driver="gelsy")
    return lam


def _refine(op: FluxOperator, x0: np.ndarray, residual: np.ndarray, h: float, steps: int, rmax: float) -> np.ndarray:
    """Coordinate-wise bounded maximisation of |ξ| around a grid node."""
    x = np.array(x0, dtype=float)

    def neg_dual(p: np.ndarray) -> float:
        if np.hypot(p[0], p[1]) >= rmax:
            return 0.0
        col = op.columns(p[None, :])[:, 0]
        return -abs(op.weight * np.vdot(col, residual))

    best = neg_dual(x)
    for _ in range(steps):
        for k in range(2):
            def along(v: float, k=k) -> float:
                p = x.copy()
                p[k] = v
                return neg_dual(p)
            r = optimize.minimize_scalar(along, bounds=(x[k] - h, x[k] + h), method="bounded",
                                         options={"xatol": 1e-10 * max(1.0, h)})
            if r.fun < best:
                best, x[k] = float(r.fun), float(r.x)
    return x


def _prune(points: np.ndarray, lam: np.ndarray, threshold: float):
    if lam.size == 0:
        return points, lam
    keep = np.abs(lam) >= threshold * np.max(np.abs(lam))
    return points[keep], lam[keep]


def polish_support(op: FluxOperator, mu: DiscreteMeasure, g: np.ndarray, h: float,
                   merge_spacing: float) -> DiscreteMeasure:
    """Merge clustered points, then jointly adjust locations with weights eliminated by least squares."""
    if len(mu) == 0:
        return mu
    pts, lam = mu.points.copy(), mu.weights.copy()
    pts, lam = _merge_clusters(pts, lam, merge_spacing * h)
    lam = _fit_weights(op, op.columns(pts), g)
    s = math.sqrt(op.weight)
    rmax = 0.98 * op.domain.radius

    def residual(v: np.ndarray) -> np.ndarray:
        p = v.reshape(-1, 2)
        cols = op.columns(p)
        res = s * (cols @ _fit_weights(op, cols, g) - g)
        return np.concatenate([res.real, res.imag])

    lo = np.maximum(pts.ravel() - h, -rmax)
    hi = np.minimum(pts.ravel() + h, rmax)
    before = float(np.linalg.norm(residual(pts.ravel())))
    try:
        sol = optimize.least_squares(residual, pts.ravel(), bounds=(lo, hi), xtol=1e-14, ftol=1e-14,
                                     gtol=1e-14, max_nfev=200 * pts.size)
    except ValueError as e:
        log("pdap", f"polish skipped: {e}")
        return DiscreteMeasure(pts, lam)
    p_new = sol.x.reshape(-1, 2)
    if float(np.linalg.norm(sol.fun)) >= before or np.any(np.hypot(p_new[:, 0], p_new[:, 1]) >= rmax):
        return DiscreteMeasure(pts, lam)
    p_new, _ = _merge_clusters(p_new, _fit_weights(op, op.columns(p_new), g), 1e-8)
    return DiscreteMeasure(p_new, _fit_weights(op, op.columns(p_new), g))


def _merge_clusters(points: np.ndarray, lam: np.ndarray, dist: float):
    """Greedy merge of points closer than `dist` into their |λ|-weighted mean."""
    order = np.argsort(-np.abs(lam))
    used = np.zeros(len(lam), dtype=bool)
    out_p, out_l = [], []
    for i in order:
        if used[i]:
            continue
        near = (~used) & (np.hypot(*(points - points[i]).T) < dist)
        used |= near
        w = np.abs(lam[near]) + 1e-300
        out_p.append((w[:, None] * points[near]).sum(axis=0) / w.sum())
        out_l.append(lam[near].sum())
    return np.array(out_p), np.array(out_l, dtype=complex)


def pdap_run(g: BoundaryTrace, cfg: PdapConfig, domain: DomainConfig, kappa: float) -> PdapState:
    """Greedy point insertion with least-squares weight refits; returns the best iterate."""
    g = resample_trace(g, domain.boundary_nodes)
    op = FluxOperator(domain, kappa, g.indices)
    data = g.samples
    gnorm = op.norm(data)
    state = PdapState(DiscreteMeasure.empty())
    if gnorm == 0.0:
        state.converged = True
        state.residual_history.append(0.0)
        return state

    grid = candidate_grid(domain.radius, cfg)
    kernel = op.columns(grid)
    h = grid_spacing(domain.radius, cfg)
    rmax = 0.95 * domain.radius
    stop = cfg.stop_fraction * gnorm

    pts = np.zeros((0, 2))
    lam = np.zeros(0, dtype=complex)
    res = -data
    best = (op.norm(res), pts, lam)
    log("pdap", f"start kappa={kappa:.4g} samples={data.size} candidates={grid.shape[0]} |g|={gnorm:.3e}")

    for it in range(cfg.max_iterations):
        state.iterations = it + 1
        before = op.norm(res)
        state.insert_history.append(before)
        xi = op.adjoint(res, kernel)
        state.dual = xi
        j = int(np.argmax(np.abs(xi)))  # first maximal index on ties
        x_new = _refine(op, grid[j], res, h, cfg.refine_steps, rmax) if cfg.refine_steps > 0 else grid[j]
        if pts.shape[0] and np.min(np.hypot(*(pts - x_new).T)) < 1e-10:
            state.stagnated = True
            warnings.warn(StagnationWarning(f"pdap re-selected an active point at iteration {it + 1}"))
            break

        cand_pts = np.vstack([pts, x_new[None, :]])
        cols = op.columns(cand_pts)
        cand_lam = _fit_weights(op, cols, data)
        cand_pts, cand_lam = _prune(cand_pts, cand_lam, cfg.prune)
        cand_lam = _fit_weights(op, op.columns(cand_pts), data)
        cand_res = op.columns(cand_pts) @ cand_lam - data
        after = op.norm(cand_res)
        state.residual_history.append(after)
        log("pdap", f"iter={it + 1} support={cand_pts.shape[0]} residual={after / gnorm:.3e}")

        if after >= before * (1.0 - 1e-12):
            state.stagnated = True
            warnings.warn(StagnationWarning(f"pdap residual did not decrease at iteration {it + 1}"))
            break
        pts, lam, res = cand_pts, cand_lam, cand_res
        if after < best[0]:
            best = (after, pts, lam)
        if after <= stop:
            state.converged = True
            break

    mu = DiscreteMeasure(best[1], best[2])
    if cfg.polish and len(mu):
        polished = polish_support(op, mu, data, h, cfg.merge_spacing)
        after = op.norm(op.apply(polished) - data)
        if after <= best[0] * (1.0 + 1e-9):
            mu = polished
            state.residual_history.append(after)
            state.converged = state.converged or after <= stop
            log("pdap", f"polished support={len(mu)} residual={after / gnorm:.3e}")
        kept_p, _ = _prune(mu.points, mu.weights, cfg.prune)
        if 0 < kept_p.shape[0] < len(mu):
            pruned = DiscreteMeasure(kept_p, _fit_weights(op, op.columns(kept_p), data))
            after = op.norm(op.apply(pruned) - data)
            if after <= max(stop, best[0]):
                log("pdap", f"pruned polished support {len(mu)} -> {len(pruned)}")
                mu = pruned
                state.residual_history.append(after)
    state.measure = mu
    return state
