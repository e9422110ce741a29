"""
Multiharmonic model at desk scale: Ω = (0, 1) with the cosine eigenbasis
φ_0 = 1, φ_j = √2 cos(jπx), λ_j = (jπ)², μ_j = 1, ρ_j = bλ_j.

For harmonics m = 1..M and coefficient vectors of length J

    G_m(η⃗, p̂) = D_m p̂_m + B_m(p̂) η_m,   D_m = -m²ω²M + c²A + imωD,
    B_m(p̂) η  = m²ω² B̃_m(p̂(x)) η(x)   (multiplication, Galerkin projected)

with B̃_m(c⃗) = ¼ Σ_{ℓ=1}^{m-1} c_ℓ c_{m-ℓ} (variant b), plus
½ Σ_{n≥1} conj(c_n) c_{n+m} (variant a). Observations C_m p̂_m are point
values. The module checks range invariance F(x) - F(x₀) = F'(x₀) r(x), runs
the regularised frozen Newton iteration and evaluates the smallest singular
values behind the uniqueness results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import log
from .errors import HypothesisError, IsomorphismError, NormalEquationError

VARIANTS = ("a", "b")
ISOMORPHISM_TOL = 1e-10


# ------------------------------------------------------------------ system

@dataclass(frozen=True, eq=False)
class SpectralSystem:
    lam: np.ndarray  # eigenvalues of A
    mu: np.ndarray  # of M
    rho: np.ndarray  # of D
    omega: float = 5.0
    c: float = 1.0
    b: float = 0.1
    obs_points: Tuple[float, ...] = (1.0,)
    validate: bool = True

    def __post_init__(self):
        for name in ("lam", "mu", "rho"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=complex))
        if not (self.lam.size == self.mu.size == self.rho.size) or self.lam.size == 0:
            raise ValueError("eigenvalue lists must be nonempty and of equal length")
        if self.validate:
            bad = self.triple_collisions()
            if bad:
                raise ValueError(f"eigen-triples violate the distinctness condition at {bad}")

    @staticmethod
    def cosine(J: int, omega: float = 5.0, c: float = 1.0, b: float = 0.1,
               obs_points: Sequence[float] = (1.0,)) -> "SpectralSystem":
        lam = (np.pi * np.arange(J)) ** 2
        return SpectralSystem(lam, np.ones(J), b * lam, omega, c, b, tuple(float(x) for x in obs_points))

    @staticmethod
    def from_any(x: Any) -> "SpectralSystem":
        x = x or {}
        obs = x.get("obs_points")
        if obs is None and x.get("obs_interval"):
            lo, hi = (float(v) for v in x["obs_interval"])
            n = int(x.get("obs_count", 2 * int(x.get("modes", 8))))
            obs = list(np.linspace(lo, hi, n))
        return SpectralSystem.cosine(int(x.get("modes", 8)), float(x.get("omega", 5.0)), float(x.get("c", 1.0)),
                                     float(x.get("b", 0.1)), obs or (1.0,))

    def with_triple(self, j: int, lam: complex, mu: complex, rho: complex) -> "SpectralSystem":
        """Copy with triple j replaced; the distinctness check is skipped."""
        L, Mu, R = self.lam.copy(), self.mu.copy(), self.rho.copy()
        L[j], Mu[j], R[j] = lam, mu, rho
        return replace(self, lam=L, mu=Mu, rho=R, validate=False)

    @property
    def J(self) -> int:
        return int(self.lam.size)

    @property
    def n_colloc(self) -> int:
        return 4 * self.J

    def triple_collisions(self) -> List[Tuple[int, int]]:
        """Pairs with ρ_j/λ_j = ρ_l/λ_l and μ_j/λ_j² = μ_l/λ_l² (cross-multiplied)."""
        out = []
        for j in range(self.J):
            for l in range(j + 1, self.J):
                same_r = abs(self.rho[j] * self.lam[l] - self.rho[l] * self.lam[j])
                same_m = abs(self.mu[j] * self.lam[l] ** 2 - self.mu[l] * self.lam[j] ** 2)
                scale = 1e-12 * max(1.0, abs(self.lam[j]) * abs(self.lam[l])) ** 2
                if same_r <= scale and same_m <= scale:
                    out.append((j, l))
        return out

    def symbol(self, m: int) -> np.ndarray:
        return -m ** 2 * self.omega ** 2 * self.mu + self.c ** 2 * self.lam + 1j * m * self.omega * self.rho

    def basis_at(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        j = np.arange(self.J)
        B = math.sqrt(2.0) * np.cos(np.pi * np.outer(x, j))
        B[:, 0] = 1.0
        return B

    @property
    def colloc_nodes(self) -> np.ndarray:
        n = self.n_colloc
        return (np.arange(n) + 0.5) / n

    @property
    def colloc_basis(self) -> np.ndarray:
        return self.basis_at(self.colloc_nodes)

    def project(self, values: np.ndarray) -> np.ndarray:
        """Coefficients of nodal values (midpoint rule; exact for the products used here)."""
        return self.colloc_basis.T @ values / self.n_colloc

    @property
    def observation(self) -> np.ndarray:
        return self.basis_at(np.array(self.obs_points))

    def to_dict(self) -> Dict[str, Any]:
        return {"J": self.J, "omega": self.omega, "c": self.c, "b": self.b,
                "obs_points": list(self.obs_points), "lam": self.lam.real.tolist(),
                "mu": self.mu.real.tolist(), "rho": self.rho.real.tolist()}


@dataclass(frozen=True)
class AbstractState:
    eta: np.ndarray  # (M, J), real for physical states
    p: np.ndarray  # (M, J) complex

    @property
    def M(self) -> int:
        return int(self.p.shape[0])

    def __sub__(self, other: "AbstractState") -> "AbstractState":
        return AbstractState(self.eta - other.eta, self.p - other.p)

    def __add__(self, other: "AbstractState") -> "AbstractState":
        return AbstractState(self.eta + other.eta, self.p + other.p)

    def scaled(self, s: float) -> "AbstractState":
        return AbstractState(s * self.eta, s * self.p)

    def norm(self) -> float:
        """η-part in ℓ²_w with w_n = n^{-2}, p̂-part unweighted."""
        w = harmonic_weights(self.M)
        return float(math.sqrt(np.sum(w[:, None] * np.abs(self.eta) ** 2) + np.sum(np.abs(self.p) ** 2)))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.eta.real.ravel(), self.p.real.ravel(), self.p.imag.ravel()])

    @staticmethod
    def from_vector(v: np.ndarray, M: int, J: int) -> "AbstractState":
        n = M * J
        return AbstractState(v[:n].reshape(M, J).copy(), (v[n:2 * n] + 1j * v[2 * n:3 * n]).reshape(M, J))

    @staticmethod
    def zeros(M: int, J: int) -> "AbstractState":
        return AbstractState(np.zeros((M, J)), np.zeros((M, J), dtype=complex))


def harmonic_weights(M: int) -> np.ndarray:
    return 1.0 / np.arange(1, M + 1) ** 2


# ------------------------------------------------------------------ operators

def apply_dm(sys: SpectralSystem, m: int, p_m: np.ndarray) -> np.ndarray:
    if m < 1:
        raise ValueError(f"harmonic index must be >= 1, got {m}")
    return sys.symbol(m) * p_m


def b_tilde(variant: str, m: int, c: np.ndarray) -> np.ndarray:
    """B̃_m(c⃗) for c⃗ = (c_1..c_M) along axis 0 (entries may be arrays)."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be 'a' or 'b', got {variant!r}")
    c = np.asarray(c)
    M = c.shape[0]
    out = np.zeros(c.shape[1:], dtype=complex)
    for l in range(1, m):
        if l <= M and m - l <= M:
            out = out + 0.25 * c[l - 1] * c[m - l - 1]
    if variant == "a":
        for n in range(1, M - m + 1):
            out = out + 0.5 * np.conj(c[n - 1]) * c[n + m - 1]
    return out


def structurally_zero(variant: str, m: int) -> bool:
    """Variant (b) has an empty sum for m = 1."""
    return variant == "b" and m == 1


def _nodal(sys: SpectralSystem, coeffs: np.ndarray) -> np.ndarray:
    return coeffs @ sys.colloc_basis.T


def bm_matrix(sys: SpectralSystem, variant: str, m: int, p: np.ndarray) -> np.ndarray:
    """J×J Galerkin matrix of η ↦ m²ω² B̃_m(p̂(x)) η(x)."""
    s = b_tilde(variant, m, _nodal(sys, p))
    Phi = sys.colloc_basis
    return m ** 2 * sys.omega ** 2 * (Phi.T * s[None, :]) @ Phi / sys.n_colloc


def apply_bm(sys: SpectralSystem, variant: str, m: int, p: np.ndarray, eta_m: np.ndarray) -> np.ndarray:
    s = b_tilde(variant, m, _nodal(sys, p))
    return m ** 2 * sys.omega ** 2 * sys.project(s * _nodal(sys, eta_m))


def d_btilde(variant: str, m: int, c: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Derivative of B̃_m at c in direction d (real-linear for variant a)."""
    return b_tilde(variant, m, c + d) - b_tilde(variant, m, c) - b_tilde(variant, m, d)


def forward_op(sys: SpectralSystem, variant: str, x: AbstractState) -> Tuple[np.ndarray, np.ndarray]:
    """(G_m(η⃗, p̂))_m and (C_m p̂_m)_m."""
    G = np.stack([apply_dm(sys, m, x.p[m - 1]) + apply_bm(sys, variant, m, x.p, x.eta[m - 1])
                  for m in range(1, x.M + 1)])
    return G, x.p @ sys.observation.T


def derivative(sys: SpectralSystem, variant: str, x0: AbstractState, dx: AbstractState) -> Tuple[np.ndarray, np.ndarray]:
    """F'(x₀)[dη, dp̂]; dη may be complex."""
    P0, dP = _nodal(sys, x0.p), _nodal(sys, dx.p)
    rows = []
    for m in range(1, x0.M + 1):
        s0 = b_tilde(variant, m, P0)
        ds = d_btilde(variant, m, P0, dP)
        g = (apply_dm(sys, m, dx.p[m - 1])
             + m ** 2 * sys.omega ** 2 * sys.project(s0 * _nodal(sys, dx.eta[m - 1]) + ds * _nodal(sys, x0.eta[m - 1])))
        rows.append(g)
    return np.stack(rows), dx.p @ sys.observation.T


def _stack(G: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return np.concatenate([G.real.ravel(), G.imag.ravel(), Y.real.ravel(), Y.imag.ravel()])


def range_invar_remainder(sys: SpectralSystem, variant: str, x0: AbstractState, x: AbstractState) -> AbstractState:
    """r with F(x) - F(x₀) = F'(x₀) r:
        r^p̂_m = p̂_m - p̂_{0,m}
        r^η_m = η_m - η_{0,m} + B_m(p̂₀)^{-1}[(B_m(p̂) - B_m(p̂₀)) η_m - B_m'(p̂₀)(p̂ - p̂₀) η_{0,m}]
    """
    dp = x.p - x0.p
    P0, P, dP = _nodal(sys, x0.p), _nodal(sys, x.p), _nodal(sys, dp)
    r_eta = np.array(x.eta - x0.eta, dtype=complex)
    for m in range(1, x.M + 1):
        if structurally_zero(variant, m):
            continue
        B0 = bm_matrix(sys, variant, m, x0.p)
        smin = float(np.linalg.svd(B0, compute_uv=False)[-1])
        if smin <= ISOMORPHISM_TOL:
            raise IsomorphismError(f"B_{m}(p0) is not boundedly invertible", m, smin)
        scale = m ** 2 * sys.omega ** 2
        bracket = scale * sys.project((b_tilde(variant, m, P) - b_tilde(variant, m, P0)) * _nodal(sys, x.eta[m - 1])
                                      - d_btilde(variant, m, P0, dP) * _nodal(sys, x0.eta[m - 1]))
        r_eta[m - 1] += np.linalg.solve(B0, bracket)
    return AbstractState(r_eta, dp)


def range_invariance_defect(sys: SpectralSystem, variant: str, x0: AbstractState, x: AbstractState) -> float:
    """Relative size of F(x) - F(x₀) - F'(x₀) r(x)."""
    lhs = _stack(*forward_op(sys, variant, x)) - _stack(*forward_op(sys, variant, x0))
    rhs = _stack(*derivative(sys, variant, x0, range_invar_remainder(sys, variant, x0, x)))
    return float(np.linalg.norm(lhs - rhs) / max(np.linalg.norm(lhs), 1e-300))


def random_state(M: int, J: int, rng: np.random.Generator, decay: float = 1.0) -> AbstractState:
    """Random smooth state; coefficients decay like (1+j)^-decay."""
    s = 1.0 / (1.0 + np.arange(J)) ** decay
    eta = rng.standard_normal((M, J)) * s
    p = (rng.standard_normal((M, J)) + 1j * rng.standard_normal((M, J))) * s
    return AbstractState(eta, p)


def remainder_closeness_constant(sys: SpectralSystem, variant: str, x0: AbstractState, radius: float,
                                 samples: int = 20, seed: int = 0, freeze_p: bool = False) -> float:
    """max ‖r(x) - (x - x₀)‖ / ‖x - x₀‖ over random x with ‖x - x₀‖ = radius."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        d = random_state(x0.M, sys.J, rng)
        if freeze_p:
            d = AbstractState(d.eta, np.zeros_like(d.p))
        d = d.scaled(radius / d.norm())
        r = range_invar_remainder(sys, variant, x0, x0 + d)
        worst = max(worst, (r - d).norm() / d.norm())
    return worst


def penalty_p(eta: np.ndarray) -> np.ndarray:
    """(Pη⃗)_m = η_m - Σ_n n^{-2} η_n / Σ_n n^{-2}."""
    eta = np.asarray(eta)
    w = harmonic_weights(eta.shape[0])
    mean = np.tensordot(w, eta, axes=(0, 0)) / w.sum()
    return eta - mean[None, ...]


def penalty_matrix(M: int, J: int) -> np.ndarray:
    w = harmonic_weights(M)
    return np.kron(np.eye(M) - np.outer(np.ones(M), w) / w.sum(), np.eye(J))


# ------------------------------------------------------------------ forward solve

def solve_state(sys: SpectralSystem, variant: str, eta: np.ndarray, h: np.ndarray,
                tol: float = 1e-13, max_iterations: int = 200) -> np.ndarray:
    """p̂ with G_m(η⃗, p̂) = h_m: a cascade for variant (b), fixed-point iteration for (a)."""
    M = h.shape[0]
    p = np.zeros((M, sys.J), dtype=complex)
    if variant == "b":
        for m in range(1, M + 1):
            p[m - 1] = (h[m - 1] - apply_bm(sys, variant, m, p, eta[m - 1])) / sys.symbol(m)
        return p
    for it in range(max_iterations):
        new = np.stack([(h[m - 1] - apply_bm(sys, variant, m, p, eta[m - 1])) / sys.symbol(m)
                        for m in range(1, M + 1)])
        step = float(np.linalg.norm(new - p))
        p = new
        if step <= tol * max(1.0, float(np.linalg.norm(p))):
            return p
    log("abstract", f"fixed point stopped after {max_iterations} iterations, last step {step:.3e}")
    return p


# ------------------------------------------------------------------ frozen Newton

@dataclass
class FrozenNewtonHistory:
    errors: List[float] = field(default_factory=list)
    residuals: List[float] = field(default_factory=list)
    alphas: List[float] = field(default_factory=list)
    n_star: Optional[int] = None
    noise: float = 0.0
    final: Optional[AbstractState] = None

    def to_dict(self) -> Dict[str, Any]:
        return {"errors": self.errors, "residuals": self.residuals, "alphas": self.alphas,
                "n_star": self.n_star, "noise": self.noise}


def jacobian_matrix(sys: SpectralSystem, variant: str, x0: AbstractState) -> np.ndarray:
    """Real matrix of F'(x₀) on [η (real), Re p̂, Im p̂]."""
    M, J = x0.M, sys.J
    n = 3 * M * J
    cols = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        cols.append(_stack(*derivative(sys, variant, x0, AbstractState.from_vector(e, M, J))))
    return np.stack(cols, axis=1)


def stopping_index(alpha0: float, q: float, noise: float) -> Optional[int]:
    """n* = min{n : α₀ qⁿ < δ^{2/3}}; None without noise."""
    if noise <= 0:
        return None
    return max(0, int(math.floor(math.log(noise ** (2.0 / 3.0) / alpha0) / math.log(q))) + 1)


def frozen_newton_run(sys: SpectralSystem, variant: str, x0: AbstractState, data: Tuple[np.ndarray, np.ndarray],
                      alpha0: float = 1.0, q: float = 0.5, max_iterations: int = 60, noise: float = 0.0,
                      truth: Optional[AbstractState] = None) -> FrozenNewtonHistory:
    """x_{n+1} = argmin ‖F'(x₀)(x - x_n) + F(x_n) - h^δ‖² + α_n‖η⃗ - η⃗₀‖²_w + ‖Pη⃗‖²_w."""
    M, J = x0.M, sys.J
    Jr = jacobian_matrix(sys, variant, x0)
    h = _stack(*data)
    nE = M * J
    w = np.repeat(np.sqrt(harmonic_weights(M)), J)
    E = np.zeros((nE, Jr.shape[1]))
    E[:, :nE] = np.diag(w)
    Pw = np.diag(w) @ penalty_matrix(M, J) @ np.hstack([np.eye(nE), np.zeros((nE, 2 * nE))])
    eta0 = w * x0.eta.real.ravel()

    n_star = stopping_index(alpha0, q, noise)
    n_max = max_iterations if n_star is None else min(max_iterations, n_star)
    hist = FrozenNewtonHistory(n_star=n_star, noise=noise)
    v = x0.to_vector()
    if truth is not None:
        hist.errors.append((AbstractState.from_vector(v, M, J) - truth).norm())
    for n in range(n_max):
        alpha = alpha0 * q ** n
        xn = AbstractState.from_vector(v, M, J)
        Fn = _stack(*forward_op(sys, variant, xn))
        A = np.vstack([Jr, math.sqrt(alpha) * E, Pw])
        rhs = np.concatenate([Jr @ v - Fn + h, math.sqrt(alpha) * eta0, np.zeros(nE)])
        try:
            v, _, rank, sv = np.linalg.lstsq(A, rhs, rcond=None)
        except np.linalg.LinAlgError as e:
            raise NormalEquationError(f"frozen Newton step {n} failed: {e}", float("inf"))
        cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
        if rank < A.shape[1] or cond > 1e14:
            raise NormalEquationError(f"frozen Newton system rank {rank}/{A.shape[1]} at step {n}", cond)
        hist.alphas.append(alpha)
        xn = AbstractState.from_vector(v, M, J)
        hist.residuals.append(float(np.linalg.norm(_stack(*forward_op(sys, variant, xn)) - h)))
        if truth is not None:
            hist.errors.append((xn - truth).norm())
    hist.final = AbstractState.from_vector(v, M, J)
    if hist.errors:
        log("abstract", f"frozen newton n={len(hist.alphas)} error {hist.errors[0]:.3e} -> {hist.errors[-1]:.3e}")
    return hist


@dataclass(frozen=True)
class ManufacturedProblem:
    truth: AbstractState
    data: Tuple[np.ndarray, np.ndarray]


def manufactured_problem(sys: SpectralSystem, variant: str, M: int, seed: int = 0) -> ManufacturedProblem:
    """Harmonic-independent η† (Pη⃗† = 0), random smooth p̂†, h := G(x†)."""
    rng = np.random.default_rng(seed)
    base = random_state(M, sys.J, rng, decay=2.0)
    eta = np.repeat(base.eta[:1], M, axis=0)
    eta[:, 0] += 1.0  # keep B_m(p̂) away from zero
    truth = AbstractState(eta, base.p + np.eye(M, sys.J, dtype=complex))
    return ManufacturedProblem(truth, forward_op(sys, variant, truth))


def add_observation_noise(data: Tuple[np.ndarray, np.ndarray], level: float, seed: int = 0) -> Tuple[Tuple[np.ndarray, np.ndarray], float]:
    """Relative complex Gaussian noise on the observations; returns (data, absolute noise norm)."""
    G, Y = data
    if level <= 0:
        return (G, Y), 0.0
    rng = np.random.default_rng(seed)
    n = rng.standard_normal(Y.shape) + 1j * rng.standard_normal(Y.shape)
    n *= level * np.linalg.norm(Y) / np.linalg.norm(n)
    return (G, Y + n), float(np.linalg.norm(n))


# ------------------------------------------------------------------ uniqueness checks

def hankel_matrix(sys: SpectralSystem, m_max: int, j_max: int) -> np.ndarray:
    """Entries m² / (-m²ω²μ_j + c²λ_j + imωρ_j), m = 1..m_max, j < j_max."""
    if j_max > sys.J:
        raise ValueError(f"j_max={j_max} exceeds the {sys.J} available modes")
    return np.stack([m ** 2 / sys.symbol(m)[:j_max] for m in range(1, m_max + 1)])


def hankel_sigma_min(sys: SpectralSystem, m_max: int, j_max: int, equilibrate: bool = False) -> float:
    H = hankel_matrix(sys, m_max, j_max)
    if equilibrate:
        H = H / np.linalg.norm(H, axis=0)[None, :]
    return float(np.linalg.svd(H, compute_uv=False)[-1])


def printed_roots(sys: SpectralSystem) -> np.ndarray:
    """t_{k±} = -(iω/2c²)(ρ_k ∓ √(ρ_k² - μ_k))/λ_k, modes with λ_k ≠ 0; shape (k, 2)."""
    k = np.abs(sys.lam) > 0
    lam, mu, rho = sys.lam[k], sys.mu[k], sys.rho[k]
    sq = np.sqrt(rho ** 2 - mu)
    pre = -1j * sys.omega / (2.0 * sys.c ** 2)
    return np.stack([pre * (rho - sq) / lam, pre * (rho + sq) / lam], axis=-1)


def true_roots(sys: SpectralSystem) -> np.ndarray:
    """Roots of w_k(t) = -μ_kω² + c²λ_k t² + iωρ_k t, modes with λ_k ≠ 0; shape (k, 2)."""
    k = np.abs(sys.lam) > 0
    lam, mu, rho = sys.lam[k], sys.mu[k], sys.rho[k]
    sq = np.sqrt(rho ** 2 - 4.0 * sys.c ** 2 * lam * mu)
    pre = -1j * sys.omega / (2.0 * sys.c ** 2)
    return np.stack([pre * (rho - sq) / lam, pre * (rho + sq) / lam], axis=-1)


def pairwise_distinct(values: np.ndarray, rtol: float = 1e-12) -> bool:
    v = np.asarray(values).ravel()
    d = np.abs(v[:, None] - v[None, :])
    np.fill_diagonal(d, np.inf)
    return bool(np.all(d > rtol * np.maximum(np.abs(v)[:, None], np.abs(v)[None, :]).clip(min=1.0)))


def hankel_report(sys: SpectralSystem, m_max: int, j_max: int) -> Dict[str, Any]:
    pr, tr = printed_roots(sys), true_roots(sys)
    return {
        "m_max": m_max,
        "j_max": j_max,
        "sigma_min": hankel_sigma_min(sys, m_max, j_max),
        "sigma_min_equilibrated": hankel_sigma_min(sys, m_max, j_max, equilibrate=True),
        "printed_roots_distinct": pairwise_distinct(pr),
        "true_roots_distinct": pairwise_distinct(tr),
        "true_roots_residual": float(np.max(np.abs(
            -sys.mu[np.abs(sys.lam) > 0, None] * sys.omega ** 2
            + sys.c ** 2 * sys.lam[np.abs(sys.lam) > 0, None] * tr ** 2
            + 1j * sys.omega * sys.rho[np.abs(sys.lam) > 0, None] * tr))) if tr.size else 0.0,
    }


def linearized_injectivity_sigma_min(sys: SpectralSystem, variant: str, phi: Callable[[np.ndarray], np.ndarray],
                                     psi: Sequence[complex]) -> float:
    """σ_min of dη ↦ (C_m dp̂_m)_m at η₀ = 0, p̂_{0,m} = φψ_m, on {Pη⃗ = 0} (a common η).

    With η₀ = 0 the model rows give dp̂_m = -D_m^{-1} B_m(p̂₀) dη.
    """
    psi = np.asarray(psi, dtype=complex)
    M = psi.size
    f = np.array([b_tilde(variant, m, psi) for m in range(1, M + 1)])
    for m in range(1, M + 1):
        if not structurally_zero(variant, m) and abs(f[m - 1]) < 1e-14:
            raise HypothesisError(f"f_{m} = B̃_{m}(ψ) vanishes")
    x = sys.colloc_nodes
    phix = np.asarray(phi(x), dtype=complex)
    P0 = psi[:, None] * phix[None, :]
    Phi = sys.colloc_basis
    C = sys.observation
    rows = []
    for m in range(1, M + 1):
        s = b_tilde(variant, m, P0)
        Bm = m ** 2 * sys.omega ** 2 * (Phi.T * s[None, :]) @ Phi / sys.n_colloc
        rows.append(-C @ (Bm / sys.symbol(m)[:, None]))
    A = np.vstack(rows)
    A = np.vstack([A.real, A.imag])
    if A.shape[0] < A.shape[1]:
        return 0.0  # fewer observations than unknowns
    return float(np.linalg.svd(A, compute_uv=False)[-1])
