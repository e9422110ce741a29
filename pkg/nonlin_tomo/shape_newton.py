"""
Shape reconstruction by regularised Gauss-Newton on star-shaped object boundaries.

Unknowns are the radial coefficients [a_0, a_1..a_K, b_1..b_K] of every object
(centers stay fixed). The data residual stacks Re/Im of the trace mismatch on
Σ per harmonic, scaled by √w and by 1/‖g_m‖ so that harmonics of very
different magnitude weigh equally.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize, special

from .config import DomainConfig, NewtonConfig, log
from .errors import DivergenceError, JacobianError, LineSearchError, TomoError
from .forward import (BoundaryTrace, DiscreteMeasure, fundamental_field, harmonic_cascade,
                      point_source_traces, resample_trace)
from .geometry import (InclusionSet, StarCurve, area_centroid, interior_quadrature,
                       symmetric_difference_area)

ShapeUnknowns = InclusionSet

SCHEDULE_STAGES = {
    "m2": ((2,),),
    "sequential": ((2,), (3,)),
    "simultaneous": ((2, 3),),
}


class ShapeProblem:
    """Trace-matching residual and its Jacobian for a fixed data set."""

    def __init__(self, domain: DomainConfig, data: Dict[int, BoundaryTrace], harmonics: Sequence[int],
                 cfg: Optional[NewtonConfig] = None, max_concurrency: int = 1):
        self.domain = domain
        self.cfg = cfg or NewtonConfig()
        self.harmonics = tuple(sorted(harmonics))
        missing = [m for m in self.harmonics if m not in data]
        if missing:
            raise ValueError(f"no data for harmonics {missing}")
        self.data = {m: resample_trace(data[m], domain.boundary_nodes) for m in self.harmonics}
        self.weight = 2.0 * math.pi * domain.radius / domain.boundary_nodes
        self.scale = {}
        for m, tr in self.data.items():
            n = tr.norm()
            self.scale[m] = 1.0 / n if n > 0 else 1.0
        self.max_concurrency = max(1, int(max_concurrency))

    # ------------------------------------------------------------ residual

    def admissible(self, incl: InclusionSet) -> bool:
        t = np.linspace(0.0, 2.0 * np.pi, 512, endpoint=False)
        for c in incl.objects:
            r = c.radius(t)
            if np.min(r) <= self.cfg.r_min:
                return False
            p = c.points(t)
            if np.max(np.hypot(p[:, 0], p[:, 1])) >= 0.98 * self.domain.radius:
                return False
        return True

    def residual(self, incl: InclusionSet) -> np.ndarray:
        if not self.harmonics:
            return np.zeros(0)
        fields = harmonic_cascade(self.domain, incl, max(2, max(self.harmonics)))
        parts = []
        for m in self.harmonics:
            tr = self.data[m]
            model = fields[m - 1].trace(tr.kind)[tr.indices]
            d = math.sqrt(self.weight) * self.scale[m] * (model - tr.samples)
            parts.extend([d.real, d.imag])
        return np.concatenate(parts)

    # ------------------------------------------------------------ Jacobian

    def _fd_column(self, incl: InclusionSet, j: int, h: float) -> np.ndarray:
        p = incl.params
        up, dn = p.copy(), p.copy()
        up[j] += h
        dn[j] -= h
        try:
            r_up = self.residual(incl.with_params(up))
        except TomoError:
            r_up = None
        try:
            r_dn = self.residual(incl.with_params(dn))
        except TomoError:
            r_dn = None
        if r_up is not None and r_dn is not None:
            return (r_up - r_dn) / (2.0 * h)
        base = self.residual(incl)
        if r_up is not None:
            return (r_up - base) / h
        if r_dn is not None:
            return (base - r_dn) / h
        raise JacobianError("both perturbed curves are invalid", j)

    def fd_jacobian(self, incl: InclusionSet) -> np.ndarray:
        steps = []
        for c in incl.objects:
            h = self.cfg.fd_step * max(1.0, abs(c.a[0]))
            steps.extend([h] * (1 + 2 * c.order))
        n = len(steps)
        if self.max_concurrency > 1 and n > 1:
            with ThreadPoolExecutor(max_workers=self.max_concurrency) as ex:
                cols = list(ex.map(lambda j: self._fd_column(incl, j, steps[j]), range(n)))
        else:
            cols = [self._fd_column(incl, j, steps[j]) for j in range(n)]
        return self._checked(np.stack(cols, axis=1) if cols else np.zeros((0, 0)))

    def analytic_jacobian(self, incl: InclusionSet) -> np.ndarray:
        """Second harmonic only: δ(∫_D κ² f Φ dy) = ∫ κ² f(q) Φ(x, q) r δr dt, then the impedance correction."""
        if self.harmonics != (2,):
            raise ValueError("analytic Jacobian is available for the second harmonic alone")
        dom = self.domain
        k2 = dom.kappa(2)
        p1 = fundamental_field(dom)
        tr = self.data[2]
        n_t = 2 * dom.angular_order
        t = 2.0 * np.pi * np.arange(n_t) / n_t
        cols = []
        for c in incl.objects:
            q = c.points(t)
            f = 0.25 * dom.eta0 * p1.evaluate(q) ** 2
            kernel = point_source_traces(q, k2, dom, tr.kind)[tr.indices]
            dens = k2 ** 2 * f * c.radius(t) * (2.0 * np.pi / n_t)
            dtrace = kernel @ (dens[:, None] * c.basis(t))
            d = math.sqrt(self.weight) * self.scale[2] * dtrace
            cols.append(np.vstack([d.real, d.imag]))
        return self._checked(np.hstack(cols))

    def jacobian(self, incl: InclusionSet) -> np.ndarray:
        if self.cfg.jacobian == "analytic" and self.harmonics == (2,):
            return self.analytic_jacobian(incl)
        return self.fd_jacobian(incl)

    @staticmethod
    def _checked(J: np.ndarray) -> np.ndarray:
        bad = ~np.all(np.isfinite(J), axis=0)
        if np.any(bad):
            raise JacobianError("non-finite Jacobian entries", int(np.argmax(bad)))
        return J


def data_residual(curves: ShapeUnknowns, data: Dict[int, BoundaryTrace], harmonics: Sequence[int],
                  domain: DomainConfig) -> np.ndarray:
    return ShapeProblem(domain, data, harmonics).residual(curves)


def jacobian(curves: ShapeUnknowns, data: Dict[int, BoundaryTrace], harmonics: Sequence[int],
             domain: DomainConfig, cfg: Optional[NewtonConfig] = None, max_concurrency: int = 1) -> np.ndarray:
    return ShapeProblem(domain, data, harmonics, cfg, max_concurrency).jacobian(curves)


def condition_number(J: np.ndarray) -> float:
    if J.size == 0:
        return float("nan")
    s = np.linalg.svd(J, compute_uv=False)
    return float(s[0] / s[-1]) if s[-1] > 0 else float("inf")


# ------------------------------------------------------------------ step

@dataclass(frozen=True)
class StepResult:
    curves: InclusionSet
    residual: np.ndarray
    accepted: bool
    step_norm: float
    alpha: float
    direction_norm: float = 0.0


def levenberg_direction(J: np.ndarray, residual: np.ndarray, damping: float) -> np.ndarray:
    """Solve (JᵀJ + λ diag(JᵀJ)) δ = -Jᵀ r."""
    A = J.T @ J
    g = J.T @ residual
    if not np.any(g):
        return np.zeros(J.shape[1])
    d = np.diag(A).copy()
    d = np.maximum(d, 1e-12 * max(float(np.max(d)), 1e-300))
    return np.linalg.solve(A + damping * np.diag(d), -g)


def gauss_newton_step(curves: ShapeUnknowns, residual: np.ndarray, J: np.ndarray, damping: float,
                      residual_fn: Callable[[InclusionSet], np.ndarray],
                      admissible: Callable[[InclusionSet], bool], max_halvings: int = 20,
                      growth_tol: float = 0.0) -> StepResult:
    """Damped step with backtracking on the residual norm and the r(t) > r_min guard.

    A trial is accepted once its residual is below (1 + growth_tol) times the current one.
    """
    delta = levenberg_direction(J, residual, damping)
    if not np.any(delta):
        return StepResult(curves, residual, True, 0.0, 1.0)
    r0 = float(np.linalg.norm(residual))
    bound = r0 * (1.0 + growth_tol)
    dn = float(np.linalg.norm(delta))
    p = curves.params
    alpha = 1.0
    for _ in range(max_halvings + 1):
        try:
            trial = curves.with_params(p + alpha * delta)
        except TomoError:
            trial = None
        if trial is not None and admissible(trial):
            try:
                r = residual_fn(trial)
            except TomoError:
                r = None
            if r is not None and float(np.linalg.norm(r)) < bound:
                return StepResult(trial, r, True, alpha * dn, alpha, dn)
        alpha *= 0.5
    return StepResult(curves, residual, False, 0.0, 0.0, dn)


# ------------------------------------------------------------------ report

@dataclass
class NewtonReport:
    schedule: str
    residual_history: List[float] = field(default_factory=list)
    step_norms: List[float] = field(default_factory=list)
    damping_history: List[float] = field(default_factory=list)
    conditions: List[float] = field(default_factory=list)
    stage_of_iteration: List[str] = field(default_factory=list)
    stage_start: Dict[str, float] = field(default_factory=dict)
    curve_history: List[List[Dict[str, Any]]] = field(default_factory=list)
    overlaps: List[Tuple[int, int, int]] = field(default_factory=list)
    final_curves: Optional[InclusionSet] = None
    final_condition: float = float("nan")
    status: str = "running"
    shape_errors: List[Dict[str, Any]] = field(default_factory=list)
    failures: List[Dict[str, str]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema": "newton_report.v1",
            "schedule": self.schedule,
            "status": self.status,
            "residual_history": self.residual_history,
            "step_norms": self.step_norms,
            "damping_history": self.damping_history,
            "conditions": self.conditions,
            "stage_of_iteration": self.stage_of_iteration,
            "stage_start": self.stage_start,
            "final_condition": self.final_condition,
            "final_curves": self.final_curves.to_list() if self.final_curves is not None else [],
            "curve_history": self.curve_history,
            "overlaps": [list(o) for o in self.overlaps],
            "shape_errors": self.shape_errors,
            "failures": self.failures,
        }


def _run_stage(problem: ShapeProblem, curves: InclusionSet, cfg: NewtonConfig, report: NewtonReport,
               label: str) -> Tuple[InclusionSet, bool]:
    """Iterate one schedule stage; returns the curves and whether the step tolerance was met."""
    r = problem.residual(curves)
    report.stage_start[label] = float(np.linalg.norm(r))
    if not report.residual_history:
        report.residual_history.append(float(np.linalg.norm(r)))
        report.curve_history.append(curves.to_list())
    damping = cfg.damping
    growth = 0
    converged = False
    J = None
    for it in range(cfg.max_iterations):
        if J is None:
            J = problem.jacobian(curves)
            cond = condition_number(J)
        res = gauss_newton_step(curves, r, J, damping, problem.residual, problem.admissible, cfg.max_halvings,
                                cfg.growth_tol)
        if not res.accepted and res.direction_norm < cfg.step_tol:
            converged = True  # residual at its noise floor
            break
        if not res.accepted:
            damping *= cfg.damping_up
            log("newton", f"stage={label} iter={it + 1} rejected; damping={damping:.1e}")
            if damping > 1e12:
                report.failures.append({"stage": label, "error": LineSearchError.__name__,
                                        "message": "line search failed at maximal damping"})
                report.status = "stalled"
                break
            continue
        prev = float(np.linalg.norm(r))
        curves, r, J = res.curves, res.residual, None
        now = float(np.linalg.norm(r))
        growth = growth + 1 if now > prev else 0
        damping = max(damping / cfg.damping_down, 1e-12)
        report.residual_history.append(now)
        report.step_norms.append(res.step_norm)
        report.damping_history.append(damping)
        report.conditions.append(cond)
        report.stage_of_iteration.append(label)
        report.curve_history.append(curves.to_list())
        for i, j in curves.overlapping_pairs():
            report.overlaps.append((len(report.residual_history) - 1, i, j))
            log("newton", f"objects {i} and {j} overlap")
        log("newton", f"stage={label} iter={it + 1} residual={now:.3e} step={res.step_norm:.3e} cond={cond:.3e}")
        if growth >= 3:
            raise DivergenceError(f"residual grew on 3 consecutive steps in stage {label}")
        if res.step_norm < cfg.step_tol:
            converged = True
            break
    return curves, converged


def run_newton(start: ShapeUnknowns, data: Dict[int, BoundaryTrace], domain: DomainConfig,
               cfg: Optional[NewtonConfig] = None, phantom: Optional[Sequence[StarCurve]] = None,
               max_concurrency: int = 1) -> NewtonReport:
    cfg = cfg or NewtonConfig()
    report = NewtonReport(cfg.schedule)
    curves = start.with_objects([c.with_order(cfg.order) for c in start.objects])
    curves = curves.with_orders(domain.radial_order, domain.angular_order)
    problem = None
    converged = False
    try:
        for stage in SCHEDULE_STAGES[cfg.schedule]:
            label = "+".join(f"m{m}" for m in stage)
            problem = ShapeProblem(domain, data, stage, cfg, max_concurrency)
            curves, converged = _run_stage(problem, curves, cfg, report, label)
        if report.status == "running":
            report.status = "converged" if converged else "max_iterations"
    except DivergenceError as e:
        report.status = "diverged"
        report.failures.append({"stage": "newton", "error": type(e).__name__, "message": str(e)})
    report.final_curves = curves
    if problem is not None and len(curves):
        try:
            report.final_condition = condition_number(problem.jacobian(curves))
        except TomoError as e:
            report.failures.append({"stage": "condition", "error": type(e).__name__, "message": str(e)})
    if phantom:
        report.shape_errors = shape_errors(list(curves.objects), list(phantom))
    return report


# ------------------------------------------------------------------ errors

def relative_l2_error(recon: StarCurve, phantom: StarCurve, samples: int = 512) -> float:
    """RMS distance from phantom boundary points to the reconstructed boundary, relative to the
    phantom's RMS radius; free of parametrisation and rotation offsets."""
    t = 2.0 * np.pi * np.arange(samples) / samples
    qp = phantom.points(t)
    qr = recon.points(2.0 * np.pi * np.arange(4 * samples) / (4 * samples))
    d = np.min(np.hypot(qp[:, None, 0] - qr[None, :, 0], qp[:, None, 1] - qr[None, :, 1]), axis=1)
    return float(np.sqrt(np.mean(d ** 2)) / np.sqrt(np.mean(phantom.radius(t) ** 2)))


def shape_errors(recon: Sequence[StarCurve], phantom: Sequence[StarCurve]) -> List[Dict[str, Any]]:
    """Match objects by minimal symmetric-difference area, then report both metrics per phantom."""
    if not phantom:
        return []
    out: List[Dict[str, Any]] = []
    matched = {}
    if recon:
        cost = np.array([[symmetric_difference_area(r, p, 200) for p in phantom] for r in recon])
        rows, cols = optimize.linear_sum_assignment(cost)
        matched = {int(c): int(r) for r, c in zip(rows, cols)}
    for j, p in enumerate(phantom):
        area, _ = area_centroid(p)
        if j not in matched:
            out.append({"phantom": j, "recon": None, "missed": True})
            continue
        r = recon[matched[j]]
        out.append({
            "phantom": j,
            "recon": matched[j],
            "missed": False,
            "relative_l2": relative_l2_error(r, p),
            "symmetric_difference": symmetric_difference_area(r, p) / area,
        })
    return out


# ------------------------------------------------------------------ moment matching

def circular_waves(kappa: float, n_w: int, x: np.ndarray) -> np.ndarray:
    """w_n(ρ, θ) = J_|n|(κρ) e^{inθ}, n = -n_w..n_w, one column per n."""
    x = np.atleast_2d(x)
    rho, th = np.hypot(x[:, 0], x[:, 1]), np.arctan2(x[:, 1], x[:, 0])
    ns = np.arange(-n_w, n_w + 1)
    return special.jv(np.abs(ns)[None, :], kappa * rho[:, None]) * np.exp(1j * np.outer(th, ns))


def circular_waves_normal(kappa: float, n_w: int, radius: float, angles: np.ndarray) -> np.ndarray:
    ns = np.arange(-n_w, n_w + 1)
    return kappa * special.jvp(np.abs(ns)[None, :], kappa * radius) * np.exp(1j * np.outer(angles, ns))


def data_moments(g: BoundaryTrace, kappa: float, n_w: int, domain: DomainConfig) -> np.ndarray:
    """∫_Σ g (∂_ν w_n + iκ w_n) ds for the circular-wave family."""
    ang = g.angles
    x = domain.radius * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    w = circular_waves(kappa, n_w, x)
    dnw = circular_waves_normal(kappa, n_w, domain.radius, ang)
    return g.weight * (g.samples @ (dnw + 1j * kappa * w))


def moment_match_residual(curves: Sequence[StarCurve], data: BoundaryTrace, f: complex, kappa: float,
                          n_w: int, domain: DomainConfig) -> np.ndarray:
    """Re/Im of ∫_Σ g(∂_ν w_n + iκw_n) ds - iκ κ² f ∫_D w_n dx, n = -n_w..n_w."""
    lhs = data_moments(data, kappa, n_w, domain)
    quad = interior_quadrature(InclusionSet.of(curves, domain.radial_order, domain.angular_order))
    rhs = 1j * kappa ** 3 * f * (quad.weights @ circular_waves(kappa, n_w, quad.nodes))
    d = lhs - rhs
    return np.concatenate([d.real, d.imag])


def split_data(mu: DiscreteMeasure, objects: Sequence[Tuple[int, Sequence[int]]], domain: DomainConfig,
               kappa: float, template: BoundaryTrace) -> List[BoundaryTrace]:
    """g_ℓ: flux data of the point sources assigned to object ℓ."""
    t = resample_trace(template, domain.boundary_nodes)
    out = []
    for _, members in objects:
        idx = list(members)
        cols = point_source_traces(mu.points[idx], kappa, domain, "neumann")[t.indices]
        out.append(t.with_samples(cols @ mu.weights[idx]))
    return out


@dataclass
class MomentReport:
    curve: StarCurve
    residual_history: List[float]
    converged: bool


def run_moment_newton(start: StarCurve, data: BoundaryTrace, f: complex, kappa: float, n_w: int,
                      domain: DomainConfig, cfg: Optional[NewtonConfig] = None) -> MomentReport:
    """Levenberg-Marquardt on the moment residual of one object."""
    cfg = cfg or NewtonConfig()
    curve = start.with_order(cfg.order)
    fn = lambda c: moment_match_residual([c], data, f, kappa, n_w, domain)
    scale = max(float(np.linalg.norm(data_moments(data, kappa, n_w, domain))), 1e-300)
    res = lambda incl: fn(incl.objects[0]) / scale
    ok = lambda incl: incl.objects[0].min_radius() > cfg.r_min
    incl = InclusionSet.of([curve])
    r = res(incl)
    hist = [float(np.linalg.norm(r))]
    damping = cfg.damping
    converged = False
    for _ in range(cfg.max_iterations):
        p = incl.params
        h = cfg.fd_step * max(1.0, abs(p[0]))
        J = np.stack([(res(incl.with_params(p + h * e)) - res(incl.with_params(p - h * e))) / (2 * h)
                      for e in np.eye(p.size)], axis=1)
        step = gauss_newton_step(incl, r, J, damping, res, ok, cfg.max_halvings)
        if not step.accepted:
            damping *= cfg.damping_up
            if damping > 1e12:
                break
            continue
        incl, r = step.curves, step.residual
        damping = max(damping / cfg.damping_down, 1e-12)
        hist.append(float(np.linalg.norm(r)))
        if step.step_norm < cfg.step_tol:
            converged = True
            break
    log("newton", f"moment matching residual {hist[0]:.3e} -> {hist[-1]:.3e}")
    return MomentReport(incl.objects[0], hist, converged)
