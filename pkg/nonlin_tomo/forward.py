"""
Helmholtz source problems on the disc Ω = B_R(0) with an impedance boundary condition.

    Δu + κ²u = s  in Ω,      ∂_ν u + β u = 0  on ∂Ω,   β = iκ + γ

with s = κ² f χ_D (inclusions) or s = Σ λ_k δ_{S_k} (measures). The solution
is split u = u_free + u_d: u_free = Φ * s uses Φ(x, y) = -(i/4) H_0^(1)(κ|x-y|),
so (Δ + κ²)Φ(·, y) = δ_y, and u_d is a single-layer potential whose density
solves (½I + K' + βS)φ = -(∂_ν u_free + β u_free) by Kress' Nyström rule on
2n equispaced nodes.

The harmonic cascade builds p̂_2 (and p̂_3) from the fundamental field p̂_1:
    f_2 = (η₀/4) p̂_1²,   f_3 = (η₀/4) 2 p̂_1 p̂_2,   κ_m = m ω / c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg, special

from .config import DomainConfig, log
from .errors import ResonanceError, SingularityError
from .geometry import InclusionSet, InteriorQuadrature, StarCurve, interior_quadrature
from .specfun import EULER_GAMMA, hankel1

COND_LIMIT = 1e12
_CHUNK_ENTRIES = 2_000_000
_R_EPS = 1e-14


def fundamental(kappa: float, r: np.ndarray) -> np.ndarray:
    """Φ = -(i/4) H_0(κr); r must be positive."""
    return -0.25j * hankel1(0, kappa * r)


def fundamental_derivative(kappa: float, r: np.ndarray) -> np.ndarray:
    """dΦ/dr = (iκ/4) H_1(κr)."""
    return 0.25j * kappa * hankel1(1, kappa * r)


def _masked(fn, kappa: float, r: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    pos = r > _R_EPS
    out = np.zeros(r.shape, dtype=complex)
    if np.any(pos):
        out[pos] = fn(kappa, r[pos])
    return out, pos


def _chunks(n_rows: int, n_cols: int):
    step = max(1, _CHUNK_ENTRIES // max(1, n_cols))
    for s in range(0, n_rows, step):
        yield s, min(n_rows, s + step)


# ------------------------------------------------------------------ value types

@dataclass(frozen=True)
class DiscreteMeasure:
    points: np.ndarray  # (K, 2)
    weights: np.ndarray  # (K,) complex

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float).reshape(-1, 2)
        w = np.asarray(self.weights, dtype=complex).ravel()
        if p.shape[0] != w.size:
            raise ValueError(f"measure has {p.shape[0]} points but {w.size} weights")
        if p.shape[0] > 1:
            d = np.hypot(*(p[:, None, :] - p[None, :, :]).transpose(2, 0, 1))
            np.fill_diagonal(d, np.inf)
            if np.min(d) < 1e-12:
                raise ValueError("measure points must be pairwise distinct")
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "weights", w)

    @staticmethod
    def empty() -> "DiscreteMeasure":
        return DiscreteMeasure(np.zeros((0, 2)), np.zeros(0, dtype=complex))

    @staticmethod
    def from_any(x: Any) -> "DiscreteMeasure":
        x = x or {}
        pts = [list(p) for p in (x.get("points") or [])]
        wts = [complex(w[0], w[1]) if isinstance(w, (list, tuple)) else complex(w)
               for w in (x.get("weights") or [])]
        if not pts:
            return DiscreteMeasure.empty()
        return DiscreteMeasure(np.array(pts, dtype=float), np.array(wts, dtype=complex))

    def __len__(self) -> int:
        return int(self.weights.size)

    def __add__(self, other: "DiscreteMeasure") -> "DiscreteMeasure":
        return DiscreteMeasure(np.vstack([self.points, other.points]),
                               np.concatenate([self.weights, other.weights]))

    def to_dict(self) -> Dict[str, Any]:
        return {"points": self.points.tolist(),
                "weights": [[float(w.real), float(w.imag)] for w in self.weights]}

    def check_interior(self, radius: float) -> None:
        if len(self) and np.max(np.hypot(self.points[:, 0], self.points[:, 1])) >= radius:
            raise SingularityError("measure points must lie strictly inside Ω")


@dataclass(frozen=True)
class InclusionSource:
    """κ² f χ_D with f sampled on interior_quadrature(inclusions) nodes."""
    inclusions: InclusionSet
    f: np.ndarray
    quadrature: Optional[InteriorQuadrature] = None

    def rule(self) -> InteriorQuadrature:
        return self.quadrature if self.quadrature is not None else interior_quadrature(self.inclusions)


Source = Union[DiscreteMeasure, InclusionSource]


@dataclass(frozen=True)
class HarmonicField:
    m: int
    kappa: float
    beta: complex
    radius: float
    nodes: np.ndarray  # interior evaluation points (P, 2)
    values: np.ndarray  # (P,)
    angles: np.ndarray  # boundary node angles (N,)
    dirichlet: np.ndarray  # (N,)
    neumann: np.ndarray  # (N,)
    evaluator: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.dirichlet.shape != self.angles.shape or self.neumann.shape != self.angles.shape:
            raise ValueError("trace arrays must match the boundary node count")
        if not (np.all(np.isfinite(self.values)) and np.all(np.isfinite(self.dirichlet))
                and np.all(np.isfinite(self.neumann))):
            raise ValueError(f"non-finite values in harmonic field m={self.m}")

    @property
    def n_boundary(self) -> int:
        return int(self.angles.size)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        if self.evaluator is None:
            raise ValueError(f"field m={self.m} carries no evaluator")
        return self.evaluator(np.atleast_2d(np.asarray(x, dtype=float)))

    def trace(self, kind: str) -> np.ndarray:
        return self.neumann if kind == "neumann" else self.dirichlet


@dataclass(frozen=True)
class BoundaryTrace:
    m: int
    kind: str  # "neumann" (g_m) | "dirichlet" (y_m)
    fraction: float
    center_angle: float
    n_total: int
    radius: float
    indices: np.ndarray
    samples: np.ndarray

    def __post_init__(self):
        if not (0.0 < self.fraction <= 1.0):
            raise ValueError(f"arc fraction must be in (0, 1], got {self.fraction}")
        if self.kind not in ("neumann", "dirichlet"):
            raise ValueError(f"trace kind must be neumann|dirichlet, got {self.kind!r}")
        if self.samples.shape != self.indices.shape:
            raise ValueError("trace samples and indices differ in length")

    @property
    def angles(self) -> np.ndarray:
        return 2.0 * np.pi * self.indices / self.n_total

    @property
    def weight(self) -> float:
        """L²(Σ) quadrature weight per sample."""
        return 2.0 * np.pi * self.radius / self.n_total

    def norm(self) -> float:
        return float(np.sqrt(self.weight * np.sum(np.abs(self.samples) ** 2)))

    def with_samples(self, samples: np.ndarray) -> "BoundaryTrace":
        return BoundaryTrace(self.m, self.kind, self.fraction, self.center_angle, self.n_total,
                             self.radius, self.indices, np.asarray(samples, dtype=complex))

    def to_rows(self) -> List[Tuple[float, float, float, float, float]]:
        a = self.angles
        return [(float(t), self.radius * math.cos(t), self.radius * math.sin(t), float(s.real), float(s.imag))
                for t, s in zip(a, self.samples)]


# ------------------------------------------------------------------ free space

def boundary_nodes(radius: float, n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    t = 2.0 * np.pi * np.arange(n) / n
    nu = np.stack([np.cos(t), np.sin(t)], axis=-1)
    return t, radius * nu, nu


def _measure_field(mu: DiscreteMeasure, kappa: float, x: np.ndarray, gradient: bool):
    val = np.zeros(x.shape[0], dtype=complex)
    grad = np.zeros((x.shape[0], 2), dtype=complex) if gradient else None
    if len(mu) == 0:
        return val, grad
    for s, e in _chunks(x.shape[0], len(mu)):
        d = x[s:e, None, :] - mu.points[None, :, :]
        r = np.hypot(d[..., 0], d[..., 1])
        if np.min(r) < 1e-12:
            raise SingularityError("field evaluated at a point-source location")
        val[s:e] = fundamental(kappa, r) @ mu.weights
        if gradient:
            g = fundamental_derivative(kappa, r) / r * mu.weights[None, :]
            grad[s:e, 0] = np.sum(g * d[..., 0], axis=1)
            grad[s:e, 1] = np.sum(g * d[..., 1], axis=1)
    return val, grad


def _curve_rule(c: StarCurve, n: int):
    t = 2.0 * np.pi * np.arange(n) / n
    return c.points(t), c.scaled_normal(t), 2.0 * np.pi / n


def domain_integral(c: StarCurve, kappa: float, x: np.ndarray, n: int = 256) -> np.ndarray:
    """∫_D Φ(x, y) dy for any x, through Φ = -(1/κ²) Δ_y(Φ - Φ_0), Φ_0 = log|x-y|/(2π)."""
    yb, nq, h = _curve_rule(c, n)
    d = yb[None, :, :] - x[:, None, :]
    r = np.hypot(d[..., 0], d[..., 1])
    dphi, pos = _masked(fundamental_derivative, kappa, r)
    rs = np.where(pos, r, 1.0)
    kern = np.where(pos, (dphi - 1.0 / (2.0 * np.pi * rs)) * (d[..., 0] * nq[:, 0] + d[..., 1] * nq[:, 1]) / rs, 0.0)
    return -(h / kappa ** 2) * np.sum(kern, axis=1)


def domain_integral_gradient(c: StarCurve, kappa: float, x: np.ndarray, n: int = 256) -> np.ndarray:
    """∇_x ∫_D Φ(x, y) dy = -∫_∂D Φ(x, y) ν_y ds_y."""
    yb, nq, h = _curve_rule(c, n)
    d = yb[None, :, :] - x[:, None, :]
    r = np.hypot(d[..., 0], d[..., 1])
    phi, _ = _masked(fundamental, kappa, r)
    return -h * np.stack([phi @ nq[:, 0], phi @ nq[:, 1]], axis=-1)


def _inclusion_field(src: InclusionSource, kappa: float, x: np.ndarray, gradient: bool):
    """Volume potential ∫_D κ² f Φ dy with the constant part of f subtracted near each x.

    Per object and per x, g_ref is g at the closest quadrature node; the
    remainder (g - g_ref)Φ is integrated by the polar rule and g_ref ∫_D Φ by
    the boundary identity. This covers x at the object's own nodes.
    """
    quad = src.rule()
    g = kappa ** 2 * np.asarray(src.f, dtype=complex)
    val = np.zeros(x.shape[0], dtype=complex)
    grad = np.zeros((x.shape[0], 2), dtype=complex) if gradient else None
    nb = max(64, 4 * quad.angular)
    for idx, c in enumerate(src.inclusions.objects):
        sl = quad.object_slice(idx)
        y, w, gq = quad.nodes[sl], quad.weights[sl], g[sl]
        for s, e in _chunks(x.shape[0], y.shape[0]):
            xc = x[s:e]
            d = xc[:, None, :] - y[None, :, :]
            r = np.hypot(d[..., 0], d[..., 1])
            gref = gq[np.argmin(r, axis=1)]
            diff = (gq[None, :] - gref[:, None]) * w[None, :]
            phi, pos = _masked(fundamental, kappa, r)
            val[s:e] += np.sum(phi * diff, axis=1) + gref * domain_integral(c, kappa, xc, nb)
            if gradient:
                dphi, _ = _masked(fundamental_derivative, kappa, r)
                gk = np.where(pos, dphi / np.where(pos, r, 1.0), 0.0) * diff
                grad[s:e, 0] += np.sum(gk * d[..., 0], axis=1)
                grad[s:e, 1] += np.sum(gk * d[..., 1], axis=1)
                grad[s:e] += gref[:, None] * domain_integral_gradient(c, kappa, xc, nb)
    return val, grad


def free_space_field(source: Source, kappa: float, x: np.ndarray, gradient: bool = False):
    """u_free = Φ * source at points x; with gradient=True returns (u, ∇u)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if isinstance(source, DiscreteMeasure):
        val, grad = _measure_field(source, kappa, x, gradient)
    else:
        val, grad = _inclusion_field(source, kappa, x, gradient)
    return (val, grad) if gradient else val


def free_space_traces(source: Source, kappa: float, radius: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Dirichlet and Neumann traces of u_free on the boundary nodes."""
    _, pts, nu = boundary_nodes(radius, n)
    val, grad = free_space_field(source, kappa, pts, gradient=True)
    return val, grad[:, 0] * nu[:, 0] + grad[:, 1] * nu[:, 1]


def volume_potential_inside(src: InclusionSource, kappa: float) -> np.ndarray:
    """Volume potential at the source's own quadrature nodes."""
    return free_space_field(src, kappa, src.rule().nodes)


# ------------------------------------------------------------------ impedance correction

def _log_weights(n: int) -> np.ndarray:
    """First column of the circulant Kress weights for ∫ log(4 sin²((t-τ)/2)) φ(τ) dτ."""
    t = np.pi * np.arange(2 * n) / n
    m = np.arange(1, n)
    col = -(2.0 * np.pi / n) * np.sum(np.cos(np.outer(t, m)) / m, axis=1) - (np.pi / n ** 2) * np.cos(n * t)
    return col


@dataclass(frozen=True, eq=False)
class ImpedanceSolver:
    """Single-layer Nyström solver for Δu + κ²u = 0 in B_R, ∂_ν u + βu = g."""
    radius: float
    n_nodes: int
    kappa: float
    beta: complex
    single: np.ndarray = field(repr=False)  # S on the boundary nodes
    adjoint_double: np.ndarray = field(repr=False)  # K'
    lu: Tuple[np.ndarray, np.ndarray] = field(repr=False)
    condition: float = 0.0

    @staticmethod
    def build(radius: float, n_nodes: int, kappa: float, beta: complex) -> "ImpedanceSolver":
        R, N = float(radius), int(n_nodes)
        n = N // 2
        t = np.pi * np.arange(N) / n
        tdiff = t[:, None] - t[None, :]
        chord = 2.0 * R * np.abs(np.sin(tdiff / 2.0))
        off = ~np.eye(N, dtype=bool)
        logsin = np.zeros((N, N))
        logsin[off] = np.log(4.0 * np.sin(tdiff[off] / 2.0) ** 2)
        rw = linalg.circulant(_log_weights(n))

        kr = kappa * chord[off]
        h0, h1 = hankel1(0, kr), hankel1(1, kr)
        j0, j1 = special.j0(kr), special.j1(kr)
        # ν(t)·(x(t) - x(τ)) / r on the circle
        proj = R * (1.0 - np.cos(tdiff[off])) / chord[off]

        L1 = np.full((N, N), -R / (4.0 * np.pi), dtype=complex)
        L1[off] = -R / (4.0 * np.pi) * j0
        L2 = np.full((N, N), (0.25j - EULER_GAMMA / (2.0 * np.pi) - math.log(kappa * R / 2.0) / (2.0 * np.pi)) * R,
                     dtype=complex)
        L2[off] = 0.25j * h0 * R - L1[off] * logsin[off]

        K1 = np.zeros((N, N), dtype=complex)
        K1[off] = kappa / (4.0 * np.pi) * j1 * proj * R
        K2 = np.full((N, N), -1.0 / (4.0 * np.pi), dtype=complex)
        K2[off] = -0.25j * kappa * h1 * proj * R - K1[off] * logsin[off]

        S = rw * L1 + (np.pi / n) * L2
        Kp = rw * K1 + (np.pi / n) * K2
        A = 0.5 * np.eye(N) + Kp + beta * S
        cond = float(np.linalg.cond(A))
        log("forward", f"impedance system kappa={kappa:.4g} nodes={N} cond={cond:.3e}")
        if not np.isfinite(cond) or cond > COND_LIMIT:
            raise ResonanceError(f"boundary system near resonance at kappa={kappa}", cond)
        return ImpedanceSolver(R, N, float(kappa), complex(beta), S, Kp, linalg.lu_factor(A), cond)

    @property
    def angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_nodes) / self.n_nodes

    def density(self, g: np.ndarray) -> np.ndarray:
        return linalg.lu_solve(self.lu, np.asarray(g, dtype=complex))

    def traces(self, phi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(Dirichlet, Neumann) traces of the single layer with density φ (columns allowed)."""
        return self.single @ phi, 0.5 * phi + self.adjoint_double @ phi

    def evaluate(self, phi: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Sφ at interior points by the trapezoid rule."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        _, pts, _ = boundary_nodes(self.radius, self.n_nodes)
        h = 2.0 * np.pi * self.radius / self.n_nodes
        out = np.zeros(x.shape[0] if phi.ndim == 1 else (x.shape[0], phi.shape[1]), dtype=complex)
        for s, e in _chunks(x.shape[0], self.n_nodes):
            d = x[s:e, None, :] - pts[None, :, :]
            r = np.hypot(d[..., 0], d[..., 1])
            out[s:e] = (0.25j * h * hankel1(0, self.kappa * r)) @ phi
        return out


@lru_cache(maxsize=32)
def impedance_solver(radius: float, n_nodes: int, kappa: float, beta: complex) -> ImpedanceSolver:
    return ImpedanceSolver.build(radius, n_nodes, kappa, beta)


def impedance_of(domain: DomainConfig, kappa: float) -> complex:
    return 1j * kappa + domain.gamma


def solver_for(domain: DomainConfig, kappa: float) -> ImpedanceSolver:
    return impedance_solver(domain.radius, domain.boundary_nodes, float(kappa), impedance_of(domain, kappa))


def impedance_correction(dirichlet_free: np.ndarray, neumann_free: np.ndarray, kappa: float,
                         domain: DomainConfig, eval_points: Optional[np.ndarray] = None,
                         m: int = 0) -> HarmonicField:
    """u_d with Δu_d + κ²u_d = 0 and ∂_ν u_d + βu_d = -(∂_ν u_free + βu_free)."""
    sol = solver_for(domain, kappa)
    g = -(np.asarray(neumann_free) + sol.beta * np.asarray(dirichlet_free))
    phi = sol.density(g)
    dtr, ntr = sol.traces(phi)
    x = np.zeros((0, 2)) if eval_points is None else np.atleast_2d(eval_points)
    vals = sol.evaluate(phi, x) if x.shape[0] else np.zeros(0, dtype=complex)
    return HarmonicField(m, kappa, sol.beta, domain.radius, x, vals, sol.angles, dtr, ntr,
                         evaluator=lambda p: sol.evaluate(phi, p))


def solve_source_problem(source: Source, kappa: float, domain: DomainConfig,
                         eval_points: Optional[np.ndarray] = None, m: int = 0) -> HarmonicField:
    """u = u_free + u_d; Neumann traces come from layer-potential derivatives."""
    if isinstance(source, DiscreteMeasure):
        source.check_interior(domain.radius)
        if eval_points is None:
            eval_points = np.zeros((0, 2))
    elif eval_points is None:
        eval_points = source.rule().nodes
    x = np.atleast_2d(np.asarray(eval_points, dtype=float)).reshape(-1, 2)
    sol = solver_for(domain, kappa)
    dfree, nfree = free_space_traces(source, kappa, domain.radius, domain.boundary_nodes)
    phi = sol.density(-(nfree + sol.beta * dfree))
    dcor, ncor = sol.traces(phi)

    def evaluator(p: np.ndarray) -> np.ndarray:
        return free_space_field(source, kappa, p) + sol.evaluate(phi, p)

    vals = evaluator(x) if x.shape[0] else np.zeros(0, dtype=complex)
    return HarmonicField(m, kappa, sol.beta, domain.radius, x, vals, sol.angles,
                         dfree + dcor, nfree + ncor, evaluator=evaluator)


def point_source_traces(points: np.ndarray, kappa: float, domain: DomainConfig,
                        kind: str = "neumann") -> np.ndarray:
    """Boundary traces of unit point sources, one column per point (N_∂ × P)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    sol = solver_for(domain, kappa)
    _, pts, nu = boundary_nodes(domain.radius, domain.boundary_nodes)
    d = pts[:, None, :] - points[None, :, :]
    r = np.hypot(d[..., 0], d[..., 1])
    if np.min(r) < 1e-12:
        raise SingularityError("point source on the boundary")
    dfree = fundamental(kappa, r)
    nfree = fundamental_derivative(kappa, r) / r * (d[..., 0] * nu[:, 0:1] + d[..., 1] * nu[:, 1:2])
    phi = sol.density(-(nfree + sol.beta * dfree))
    dcor, ncor = sol.traces(phi)
    return nfree + ncor if kind == "neumann" else dfree + dcor


def green_impedance(x: Sequence[float], y: Sequence[float], kappa: float, domain: DomainConfig) -> complex:
    """G_Ω(x, y): impedance Green's function of Ω with source at y."""
    mu = DiscreteMeasure(np.array([y], dtype=float), np.array([1.0 + 0j]))
    fld = solve_source_problem(mu, kappa, domain)
    return complex(fld.evaluate(np.array([x], dtype=float))[0])


# ------------------------------------------------------------------ cascade

def plane_wave(kappa: float, direction: Sequence[float], x: np.ndarray, amplitude: complex = 1.0) -> np.ndarray:
    x = np.atleast_2d(x)
    return amplitude * np.exp(1j * kappa * (x[:, 0] * direction[0] + x[:, 1] * direction[1]))


def plane_wave_normal(kappa: float, direction: Sequence[float], x: np.ndarray, normals: np.ndarray,
                      amplitude: complex = 1.0) -> np.ndarray:
    dn = normals[:, 0] * direction[0] + normals[:, 1] * direction[1]
    return 1j * kappa * dn * plane_wave(kappa, direction, x, amplitude)


def fundamental_field(domain: DomainConfig) -> HarmonicField:
    """p̂_1: a plane wave used as background, or the field of a transducer measure at κ_1."""
    exc = domain.excitation
    k1 = domain.kappa1
    if exc.kind == "transducers":
        mu = DiscreteMeasure(np.array(exc.points, dtype=float), np.array(exc.weights, dtype=complex))
        return solve_source_problem(mu, k1, domain, m=1)
    if exc.kind != "plane_wave":
        raise ValueError(f"unknown excitation kind {exc.kind!r}")
    d = np.asarray(exc.direction, dtype=float)
    d = d / np.linalg.norm(d)
    t, pts, nu = boundary_nodes(domain.radius, domain.boundary_nodes)
    return HarmonicField(1, k1, impedance_of(domain, k1), domain.radius, np.zeros((0, 2)), np.zeros(0, dtype=complex),
                         t, plane_wave(k1, d, pts, exc.amplitude), plane_wave_normal(k1, d, pts, nu, exc.amplitude),
                         evaluator=lambda p: plane_wave(k1, d, p, exc.amplitude))


def harmonic_cascade(domain: DomainConfig, incl: InclusionSet, harmonics: int = 2,
                     variant: str = "b") -> List[HarmonicField]:
    """[p̂_1, p̂_2(, p̂_3)] with inclusion sources restricted to D."""
    if harmonics not in (2, 3):
        raise ValueError(f"cascade supports M = 2 or 3, got {harmonics}")
    if variant != "b":
        raise ValueError("the PDE cascade implements truncation variant (b) only")
    incl = incl.with_orders(domain.radial_order, domain.angular_order)
    quad = interior_quadrature(incl)
    p1 = fundamental_field(domain)
    out = [p1]
    zero = lambda m: HarmonicField(m, domain.kappa(m), impedance_of(domain, domain.kappa(m)), domain.radius,
                                   quad.nodes, np.zeros(len(quad), dtype=complex), p1.angles,
                                   np.zeros_like(p1.dirichlet), np.zeros_like(p1.neumann),
                                   evaluator=lambda p: np.zeros(np.atleast_2d(p).shape[0], dtype=complex))
    if len(incl) == 0 or domain.eta0 == 0:
        return out + [zero(m) for m in range(2, harmonics + 1)]

    p1_nodes = p1.evaluate(quad.nodes)
    f2 = 0.25 * domain.eta0 * p1_nodes ** 2
    p2 = solve_source_problem(InclusionSource(incl, f2, quad), domain.kappa(2), domain, quad.nodes, m=2)
    out.append(p2)
    if harmonics == 3:
        f3 = 0.25 * domain.eta0 * 2.0 * p1_nodes * p2.values
        out.append(solve_source_problem(InclusionSource(incl, f3, quad), domain.kappa(3), domain, quad.nodes, m=3))
    log("forward", f"cascade M={harmonics} objects={len(incl)} nodes={len(quad)} "
                   + " ".join(f"|g{f.m}|={np.max(np.abs(f.neumann)):.3e}" for f in out[1:]))
    return out


def source_density(domain: DomainConfig, fields: Sequence[HarmonicField], m: int, x: np.ndarray) -> np.ndarray:
    """f_m at arbitrary points (variant (b)): (η₀/4) Σ_{ℓ=1}^{m-1} p̂_ℓ p̂_{m-ℓ}."""
    vals = {f.m: f.evaluate(x) for f in fields if f.m < m}
    return 0.25 * domain.eta0 * sum(vals[l] * vals[m - l] for l in range(1, m))


# ------------------------------------------------------------------ data

def arc_indices(n_total: int, fraction: float, center_angle: float = 0.0) -> np.ndarray:
    """Contiguous node block of round(fraction·N) nodes centred on center_angle."""
    if not (0.0 < fraction <= 1.0):
        raise ValueError(f"arc fraction must be in (0, 1], got {fraction}")
    count = max(1, int(round(fraction * n_total)))
    if count >= n_total:
        return np.arange(n_total)
    c = int(round(center_angle / (2.0 * np.pi / n_total)))
    return np.sort((c - count // 2 + np.arange(count)) % n_total)


def extract_trace(fld: HarmonicField, fraction: float = 1.0, kind: str = "neumann",
                  center_angle: float = 0.0) -> BoundaryTrace:
    idx = arc_indices(fld.n_boundary, fraction, center_angle)
    return BoundaryTrace(fld.m, kind, float(fraction), float(center_angle), fld.n_boundary, fld.radius,
                         idx, np.asarray(fld.trace(kind)[idx], dtype=complex))


def resample_trace(tr: BoundaryTrace, n_total: int) -> BoundaryTrace:
    """Keep the samples that fall on a coarser equispaced grid of n_total nodes."""
    if tr.n_total == n_total:
        return tr
    if tr.n_total % n_total:
        raise ValueError(f"cannot resample {tr.n_total} boundary nodes onto {n_total}")
    step = tr.n_total // n_total
    keep = tr.indices % step == 0
    return BoundaryTrace(tr.m, tr.kind, tr.fraction, tr.center_angle, n_total, tr.radius,
                         tr.indices[keep] // step, tr.samples[keep])


def neumann_from_dirichlet(y: np.ndarray, m: int, kappa1: float, gamma: float = 0.0) -> np.ndarray:
    """g_m = -(i m κ_1 + γ) y_m under the impedance condition."""
    return -(1j * m * kappa1 + gamma) * np.asarray(y)


def flux_moment(fld: HarmonicField, w: np.ndarray, dnw: np.ndarray) -> complex:
    """∫_∂Ω ∂_ν u (∂_ν w + iκ w) ds by the trapezoid rule."""
    h = 2.0 * np.pi * fld.radius / fld.n_boundary
    return complex(h * np.sum(fld.neumann * (dnw + 1j * fld.kappa * w)))


def source_moment(source: Source, kappa: float, w_fn: Callable[[np.ndarray], np.ndarray]) -> complex:
    """iκ ∫ s w dx for s = κ² f χ_D or Σ λ_k δ_{S_k}."""
    if isinstance(source, DiscreteMeasure):
        return complex(1j * kappa * np.sum(source.weights * w_fn(source.points)))
    quad = source.rule()
    return complex(1j * kappa * kappa ** 2 * np.sum(quad.weights * source.f * w_fn(quad.nodes)))
