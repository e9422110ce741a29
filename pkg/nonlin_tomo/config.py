"""
YAML configuration and tagged logging.

config.yaml (root) holds the defaults; scenario files under scenarios/ override
any section and add a `scenario` block. Each section is parsed into a frozen
dataclass through `from_any`, which tolerates missing keys:

  physics:    omega, c, eta0, gamma, excitation {kind, amplitude, direction, points, weights}
  domain:     radius
  resolution: data {boundary_nodes, radial, angular}, inversion {...}
  pdap:       radii, angles, radius_fraction, max_iterations, tolerance, prune, refine_steps, polish
  newton:     schedule, max_iterations, step_tol, damping, growth_tol, trace_kind, jacobian, r_min
  abstract:   modes, omega, c, b, obs_interval, obs_count, harmonics, variants, alpha0, q, noise_levels
  runtime:    max_concurrency, output_dir
"""

from __future__ import annotations

import copy
import os
import sys
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import yaml

ROOT_CONFIG = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "config.yaml")


def log(tag: str, msg: str) -> None:
    if os.getenv("NLT_QUIET"):
        return
    print(f"[{tag}] {msg}", file=sys.stderr)


def load_yaml(path: str) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        return yaml.safe_load(f) or {}


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    out = copy.deepcopy(base)
    for k, v in (override or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Root config, then the optional file at `path`, then in-memory overrides."""
    cfg = load_yaml(ROOT_CONFIG) if os.path.exists(ROOT_CONFIG) else {}
    if path:
        cfg = deep_merge(cfg, load_yaml(path))
    if overrides:
        cfg = deep_merge(cfg, overrides)
    return cfg


def _pair(x: Any, default: Tuple[float, float]) -> Tuple[float, float]:
    if not x:
        return default
    return (float(x[0]), float(x[1]))


# ------------------------------------------------------------------ sections

@dataclass(frozen=True)
class Excitation:
    kind: str = "plane_wave"  # "plane_wave" | "transducers"
    amplitude: float = 1.0
    direction: Tuple[float, float] = (1.0, 0.0)
    points: Tuple[Tuple[float, float], ...] = ()
    weights: Tuple[complex, ...] = ()

    @staticmethod
    def from_any(x: Any) -> "Excitation":
        x = x or {}
        pts = tuple(_pair(p, (0.0, 0.0)) for p in (x.get("points") or []))
        wts = tuple(complex(w) if not isinstance(w, (list, tuple)) else complex(w[0], w[1])
                    for w in (x.get("weights") or []))
        return Excitation(
            kind=str(x.get("kind", "plane_wave")),
            amplitude=float(x.get("amplitude", 1.0)),
            direction=_pair(x.get("direction"), (1.0, 0.0)),
            points=pts,
            weights=wts,
        )


@dataclass(frozen=True)
class Resolution:
    boundary_nodes: int = 256
    radial: int = 16
    angular: int = 32

    @staticmethod
    def from_any(x: Any, default: "Resolution") -> "Resolution":
        x = x or {}
        return Resolution(
            boundary_nodes=int(x.get("boundary_nodes", default.boundary_nodes)),
            radial=int(x.get("radial", default.radial)),
            angular=int(x.get("angular", default.angular)),
        )

    def coarser_than(self, other: "Resolution") -> bool:
        return (2 * self.boundary_nodes <= other.boundary_nodes
                and 2 * self.radial <= other.radial
                and 2 * self.angular <= other.angular)


DATA_RESOLUTION = Resolution(boundary_nodes=512, radial=32, angular=64)
INVERSION_RESOLUTION = Resolution(boundary_nodes=256, radial=16, angular=32)


@dataclass(frozen=True)
class DomainConfig:
    """Disc-shaped Ω centred at the origin plus the physical constants of the cascade."""
    radius: float = 1.0
    boundary_nodes: int = 256
    radial_order: int = 32
    angular_order: int = 64
    omega: float = 5.0
    c: float = 1.0
    eta0: float = 1.0
    gamma: float = 0.0
    excitation: Excitation = field(default_factory=Excitation)

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"domain radius must be positive, got {self.radius}")
        if self.boundary_nodes < 64 or self.boundary_nodes % 2:
            raise ValueError(f"boundary_nodes must be even and >= 64, got {self.boundary_nodes}")
        if self.omega <= 0 or self.c <= 0:
            raise ValueError("omega and c must be positive")

    @property
    def kappa1(self) -> float:
        return self.omega / self.c

    def kappa(self, m: int) -> float:
        return m * self.kappa1

    def with_resolution(self, res: Resolution) -> "DomainConfig":
        return replace(self, boundary_nodes=res.boundary_nodes,
                       radial_order=res.radial, angular_order=res.angular)

    @staticmethod
    def from_any(cfg: Dict[str, Any], res: Optional[Resolution] = None) -> "DomainConfig":
        phys = cfg.get("physics", {}) or {}
        dom = cfg.get("domain", {}) or {}
        res = res or Resolution.from_any((cfg.get("resolution", {}) or {}).get("inversion"),
                                         INVERSION_RESOLUTION)
        return DomainConfig(
            radius=float(dom.get("radius", 1.0)),
            boundary_nodes=res.boundary_nodes,
            radial_order=res.radial,
            angular_order=res.angular,
            omega=float(phys.get("omega", 5.0)),
            c=float(phys.get("c", 1.0)),
            eta0=float(phys.get("eta0", 1.0)),
            gamma=float(phys.get("gamma", 0.0)),
            excitation=Excitation.from_any(phys.get("excitation")),
        )


@dataclass(frozen=True)
class PdapConfig:
    radii: int = 48
    angles: int = 96
    radius_fraction: float = 0.9
    max_iterations: int = 20
    tolerance: float = 1e-8
    prune: float = 1e-3
    refine_steps: int = 3
    noise_level: float = 0.0
    discrepancy_factor: float = 1.2
    polish: bool = True
    merge_spacing: float = 1.0  # in units of the candidate grid spacing

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("pdap.max_iterations must be >= 1")
        if self.tolerance <= 0:
            raise ValueError("pdap.tolerance must be positive")

    @property
    def stop_fraction(self) -> float:
        if self.noise_level > 0:
            return self.discrepancy_factor * self.noise_level
        return self.tolerance

    @staticmethod
    def from_any(x: Any) -> "PdapConfig":
        x = x or {}
        d = PdapConfig()
        return PdapConfig(
            radii=int(x.get("radii", d.radii)),
            angles=int(x.get("angles", d.angles)),
            radius_fraction=float(x.get("radius_fraction", d.radius_fraction)),
            max_iterations=int(x.get("max_iterations", d.max_iterations)),
            tolerance=float(x.get("tolerance", d.tolerance)),
            prune=float(x.get("prune", d.prune)),
            refine_steps=int(x.get("refine_steps", d.refine_steps)),
            noise_level=float(x.get("noise_level", d.noise_level)),
            discrepancy_factor=float(x.get("discrepancy_factor", d.discrepancy_factor)),
            polish=bool(x.get("polish", d.polish)),
            merge_spacing=float(x.get("merge_spacing", d.merge_spacing)),
        )


SCHEDULES = ("m2", "sequential", "simultaneous")


@dataclass(frozen=True)
class NewtonConfig:
    schedule: str = "m2"
    max_iterations: int = 30
    step_tol: float = 1e-8
    damping: float = 1e-3
    damping_up: float = 10.0
    damping_down: float = 3.0
    max_halvings: int = 20
    growth_tol: float = 0.0  # accepted steps may grow the residual by this fraction
    r_min: float = 1e-3
    order: int = 4
    trace_kind: str = "neumann"  # "neumann" | "dirichlet"
    jacobian: str = "fd"  # "fd" | "analytic"
    fd_step: float = 1e-6

    def __post_init__(self):
        if self.schedule not in SCHEDULES:
            raise ValueError(f"newton.schedule must be one of {SCHEDULES}, got {self.schedule!r}")
        if self.trace_kind not in ("neumann", "dirichlet"):
            raise ValueError(f"newton.trace_kind must be neumann|dirichlet, got {self.trace_kind!r}")
        if self.growth_tol < 0:
            raise ValueError(f"newton.growth_tol must be >= 0, got {self.growth_tol}")

    @staticmethod
    def from_any(x: Any) -> "NewtonConfig":
        x = x or {}
        d = NewtonConfig()
        return NewtonConfig(
            schedule=str(x.get("schedule", d.schedule)),
            max_iterations=int(x.get("max_iterations", d.max_iterations)),
            step_tol=float(x.get("step_tol", d.step_tol)),
            damping=float(x.get("damping", d.damping)),
            damping_up=float(x.get("damping_up", d.damping_up)),
            damping_down=float(x.get("damping_down", d.damping_down)),
            max_halvings=int(x.get("max_halvings", d.max_halvings)),
            growth_tol=float(x.get("growth_tol", d.growth_tol)),
            r_min=float(x.get("r_min", d.r_min)),
            order=int(x.get("order", d.order)),
            trace_kind=str(x.get("trace_kind", d.trace_kind)),
            jacobian=str(x.get("jacobian", d.jacobian)),
            fd_step=float(x.get("fd_step", d.fd_step)),
        )


@dataclass(frozen=True)
class AbstractConfig:
    """Settings of the 1-D spectral model checks; `system` feeds SpectralSystem.from_any."""
    system: Dict[str, Any] = field(default_factory=dict)
    harmonics: int = 3
    variants: Tuple[str, ...] = ("a", "b")
    range_harmonics: Tuple[int, ...] = (2, 3, 6)
    perturbations: int = 100
    radii: Tuple[float, ...] = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
    hankel_sizes: Tuple[int, ...] = (5, 10, 15, 20)
    alpha0: float = 1.0
    q: float = 0.5
    max_iterations: int = 60
    start_distance: float = 0.05  # ‖x₀ - x†‖ relative to ‖x†‖
    noise_levels: Tuple[float, ...] = (1e-2, 1e-3, 1e-4)
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.q < 1.0) or self.alpha0 <= 0:
            raise ValueError("abstract: need alpha0 > 0 and 0 < q < 1")
        if any(v not in ("a", "b") for v in self.variants):
            raise ValueError(f"abstract.variants must be a subset of ('a', 'b'), got {self.variants}")

    @staticmethod
    def from_any(x: Any) -> "AbstractConfig":
        x = x or {}
        d = AbstractConfig()
        system = {k: x[k] for k in ("modes", "omega", "c", "b", "obs_points", "obs_interval", "obs_count") if k in x}
        return AbstractConfig(
            system=system,
            harmonics=int(x.get("harmonics", d.harmonics)),
            variants=tuple(str(v) for v in as_list(x.get("variants")) or d.variants),
            range_harmonics=tuple(int(v) for v in as_list(x.get("range_harmonics")) or d.range_harmonics),
            perturbations=int(x.get("perturbations", d.perturbations)),
            radii=tuple(float(v) for v in as_list(x.get("radii")) or d.radii),
            hankel_sizes=tuple(int(v) for v in as_list(x.get("hankel_sizes")) or d.hankel_sizes),
            alpha0=float(x.get("alpha0", d.alpha0)),
            q=float(x.get("q", d.q)),
            max_iterations=int(x.get("max_iterations", d.max_iterations)),
            start_distance=float(x.get("start_distance", d.start_distance)),
            noise_levels=tuple(float(v) for v in as_list(x.get("noise_levels")) or d.noise_levels),
            seed=int(x.get("seed", d.seed)),
        )


@dataclass(frozen=True)
class RuntimeConfig:
    max_concurrency: int = 4
    output_dir: str = "outputs"

    @staticmethod
    def from_any(x: Any) -> "RuntimeConfig":
        x = x or {}
        return RuntimeConfig(
            max_concurrency=max(1, int(x.get("max_concurrency", 4))),
            output_dir=str(x.get("output_dir", "outputs")),
        )


def resolutions(cfg: Dict[str, Any]) -> Tuple[Resolution, Resolution]:
    res = cfg.get("resolution", {}) or {}
    return (Resolution.from_any(res.get("data"), DATA_RESOLUTION),
            Resolution.from_any(res.get("inversion"), INVERSION_RESOLUTION))


def as_list(x: Any) -> List[Any]:
    if x is None:
        return []
    return list(x) if isinstance(x, (list, tuple)) else [x]
