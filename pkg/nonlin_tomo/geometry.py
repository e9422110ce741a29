"""
Inclusion geometry: star-shaped curves, discs, interior quadrature and disc merging.

A StarCurve is q(t) = center + r(t)(cos t, sin t) with
r(t) = a_0 + Σ_k (a_k cos kt + b_k sin kt). Unknown vectors are packed
[a_0, a_1..a_K, b_1..b_K] per object, objects concatenated in order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Sequence, Tuple

import numpy as np
from scipy.special import roots_legendre

from .errors import InvalidCurveError

Point = Tuple[float, float]

DEFAULT_ORDER = 4
_CHECK_SAMPLES = 1024
_TANGENT_TOL = 1e-12


@dataclass(frozen=True)
class StarCurve:
    center: Point
    a: Tuple[float, ...]  # a_0..a_K
    b: Tuple[float, ...]  # b_1..b_K

    def __post_init__(self):
        if len(self.a) < 1 or len(self.b) != len(self.a) - 1:
            raise InvalidCurveError(f"need len(b) == len(a) - 1, got {len(self.a)}, {len(self.b)}")
        if not all(math.isfinite(v) for v in (*self.center, *self.a, *self.b)):
            raise InvalidCurveError("non-finite curve coefficient")
        t = np.linspace(0.0, 2.0 * np.pi, _CHECK_SAMPLES, endpoint=False)
        rmin = float(np.min(self.radius(t)))
        if rmin <= 0:
            raise InvalidCurveError(f"radial function not positive (min r = {rmin:.3e})")

    # ---------------------------------------------------------------- build

    @staticmethod
    def circle(center: Sequence[float], radius: float, order: int = 0) -> "StarCurve":
        return StarCurve((float(center[0]), float(center[1])),
                         (float(radius),) + (0.0,) * order, (0.0,) * order)

    @staticmethod
    def from_params(center: Sequence[float], params: Sequence[float]) -> "StarCurve":
        p = [float(v) for v in params]
        if len(p) % 2 == 0:
            raise InvalidCurveError(f"parameter vector must have odd length 1+2K, got {len(p)}")
        k = (len(p) - 1) // 2
        return StarCurve((float(center[0]), float(center[1])), tuple(p[: k + 1]), tuple(p[k + 1:]))

    @staticmethod
    def fit(center: Sequence[float], radius_fn, order: int, samples: int = 512) -> "StarCurve":
        """Trigonometric projection of a radial function onto `order` harmonics."""
        t = 2.0 * np.pi * np.arange(samples) / samples
        c = np.fft.rfft(radius_fn(t)) / samples
        a = [float(c[0].real)] + [float(2.0 * c[k].real) for k in range(1, order + 1)]
        b = [float(-2.0 * c[k].imag) for k in range(1, order + 1)]
        return StarCurve((float(center[0]), float(center[1])), tuple(a), tuple(b))

    @staticmethod
    def from_any(x: Any) -> "StarCurve":
        """Record {center, a, b}, or a phantom {shape: circle|ellipse|star, ...}."""
        x = x or {}
        center = x.get("center") or (0.0, 0.0)
        shape = str(x.get("shape", "star"))
        if shape == "circle":
            return StarCurve.circle(center, float(x["radius"]), int(x.get("order", 0)))
        if shape == "ellipse":
            ax, by = (float(v) for v in x["axes"])
            phi = float(x.get("angle", 0.0))
            fn = lambda t: ax * by / np.sqrt((by * np.cos(t - phi)) ** 2 + (ax * np.sin(t - phi)) ** 2)
            return StarCurve.fit(center, fn, int(x.get("order", 8)))
        a = tuple(float(v) for v in (x.get("a") or []))
        b = tuple(float(v) for v in (x.get("b") or []))
        return StarCurve((float(center[0]), float(center[1])), a, b)

    def to_dict(self) -> Dict[str, Any]:
        return {"center": list(self.center), "a": list(self.a), "b": list(self.b)}

    # ---------------------------------------------------------------- evaluate

    @property
    def order(self) -> int:
        return len(self.b)

    @property
    def params(self) -> np.ndarray:
        return np.array(self.a + self.b, dtype=float)

    def with_params(self, params: Sequence[float]) -> "StarCurve":
        return StarCurve.from_params(self.center, params)

    def with_order(self, order: int) -> "StarCurve":
        """Truncate or zero-pad the radial expansion."""
        a = (self.a + (0.0,) * order)[: order + 1]
        b = (self.b + (0.0,) * order)[:order]
        return StarCurve(self.center, a, b)

    def radius(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        r = np.full_like(t, self.a[0])
        for k in range(1, len(self.a)):
            r = r + self.a[k] * np.cos(k * t) + self.b[k - 1] * np.sin(k * t)
        return r

    def radius_derivative(self, t: np.ndarray, order: int = 1) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for k in range(1, len(self.a)):
            ck = self.a[k] * np.cos(k * t) + self.b[k - 1] * np.sin(k * t)
            sk = -self.a[k] * np.sin(k * t) + self.b[k - 1] * np.cos(k * t)
            # d/dt cycles cos -> -sin -> -cos -> sin
            out = out + (k ** order) * (sk if order % 4 == 1 else -ck if order % 4 == 2 else -sk if order % 4 == 3 else ck)
        return out

    def basis(self, t: np.ndarray) -> np.ndarray:
        """Columns ∂r/∂p for the packed parameter vector, shape (len(t), 1+2K)."""
        t = np.asarray(t, dtype=float)
        k = np.arange(1, self.order + 1)
        return np.hstack([np.ones((t.size, 1)), np.cos(np.outer(t, k)), np.sin(np.outer(t, k))])

    def points(self, t: np.ndarray) -> np.ndarray:
        r = self.radius(t)
        return np.stack([self.center[0] + r * np.cos(t), self.center[1] + r * np.sin(t)], axis=-1)

    def derivative(self, t: np.ndarray) -> np.ndarray:
        r, dr = self.radius(t), self.radius_derivative(t)
        return np.stack([dr * np.cos(t) - r * np.sin(t), dr * np.sin(t) + r * np.cos(t)], axis=-1)

    def scaled_normal(self, t: np.ndarray) -> np.ndarray:
        """Outward normal times |q'(t)|."""
        d = self.derivative(t)
        return np.stack([d[..., 1], -d[..., 0]], axis=-1)

    def bounding_radius(self) -> float:
        t = np.linspace(0.0, 2.0 * np.pi, _CHECK_SAMPLES, endpoint=False)
        return float(np.max(self.radius(t)))

    def min_radius(self) -> float:
        t = np.linspace(0.0, 2.0 * np.pi, _CHECK_SAMPLES, endpoint=False)
        return float(np.min(self.radius(t)))


@dataclass(frozen=True)
class Disc:
    center: Point
    radius: float

    def __post_init__(self):
        if not (self.radius > 0):
            raise InvalidCurveError(f"disc radius must be positive, got {self.radius}")

    @property
    def area(self) -> float:
        return math.pi * self.radius ** 2

    def to_curve(self, order: int = 0) -> StarCurve:
        return StarCurve.circle(self.center, self.radius, order)

    def to_dict(self) -> Dict[str, Any]:
        return {"center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class InteriorQuadrature:
    nodes: np.ndarray  # (N, 2)
    weights: np.ndarray  # (N,)
    owner: np.ndarray  # (N,) object index
    radial: int
    angular: int

    def __len__(self) -> int:
        return int(self.weights.size)

    def as_pairs(self) -> List[Tuple[Point, float]]:
        return [((float(x), float(y)), float(w)) for (x, y), w in zip(self.nodes, self.weights)]

    def object_slice(self, index: int) -> slice:
        n = self.radial * self.angular
        return slice(index * n, (index + 1) * n)


@dataclass(frozen=True)
class InclusionSet:
    objects: Tuple[StarCurve, ...] = ()
    radial_order: int = 32
    angular_order: int = 64

    @staticmethod
    def of(curves: Iterable[StarCurve], radial: int = 32, angular: int = 64) -> "InclusionSet":
        return InclusionSet(tuple(curves), radial, angular)

    def __len__(self) -> int:
        return len(self.objects)

    def with_objects(self, curves: Iterable[StarCurve]) -> "InclusionSet":
        return InclusionSet(tuple(curves), self.radial_order, self.angular_order)

    def with_orders(self, radial: int, angular: int) -> "InclusionSet":
        return InclusionSet(self.objects, radial, angular)

    @property
    def params(self) -> np.ndarray:
        if not self.objects:
            return np.zeros(0)
        return np.concatenate([c.params for c in self.objects])

    def with_params(self, params: Sequence[float]) -> "InclusionSet":
        out, i = [], 0
        for c in self.objects:
            n = 1 + 2 * c.order
            out.append(c.with_params(params[i:i + n]))
            i += n
        return self.with_objects(out)

    def overlapping_pairs(self, samples: int = 256) -> List[Tuple[int, int]]:
        return [(i, j) for i in range(len(self.objects)) for j in range(i + 1, len(self.objects))
                if curves_overlap(self.objects[i], self.objects[j], samples)]

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        inside = np.zeros(x.shape[0], dtype=bool)
        for c in self.objects:
            inside |= contains_point(c, x)
        return inside

    def to_list(self) -> List[Dict[str, Any]]:
        return [c.to_dict() for c in self.objects]


# ------------------------------------------------------------------ operations

def contains_point(c: StarCurve, x: np.ndarray) -> np.ndarray:
    """True iff |x - center| < r(angle of x - center). Accepts one point or (N, 2)."""
    xa = np.asarray(x, dtype=float)
    single = xa.ndim == 1
    xa = np.atleast_2d(xa)
    dx, dy = xa[:, 0] - c.center[0], xa[:, 1] - c.center[1]
    inside = np.hypot(dx, dy) < c.radius(np.arctan2(dy, dx))
    return bool(inside[0]) if single else inside


def area_centroid(c: StarCurve, samples: int = 512) -> Tuple[float, Point]:
    """Area ½∫r² dt and centroid center + (1/3A)∫r³(cos t, sin t) dt (periodic trapezoid)."""
    n = max(samples, 8 * (c.order + 1))
    t = 2.0 * np.pi * np.arange(n) / n
    r = c.radius(t)
    h = 2.0 * np.pi / n
    area = 0.5 * h * float(np.sum(r ** 2))
    mx = h * float(np.sum(r ** 3 * np.cos(t))) / (3.0 * area)
    my = h * float(np.sum(r ** 3 * np.sin(t))) / (3.0 * area)
    return area, (c.center[0] + mx, c.center[1] + my)


def interior_quadrature(s: InclusionSet) -> InteriorQuadrature:
    """Polar tensor rule per object: Gauss-Legendre in the scaled radius, trapezoid in angle.

    With x = c + ρ r(t)(cos t, sin t), dx = ρ r(t)² dρ dt, so the weights are
    (2π/n_t)·(w_i/2)·ρ_i·r(t_j)².
    """
    nr, nt = s.radial_order, s.angular_order
    xg, wg = roots_legendre(nr)
    rho, wr = 0.5 * (xg + 1.0), 0.5 * wg
    t = 2.0 * np.pi * np.arange(nt) / nt
    nodes, weights, owner = [], [], []
    for idx, c in enumerate(s.objects):
        r = c.radius(t)
        if np.any(r <= 0):
            raise InvalidCurveError(f"object {idx}: degenerate radial function")
        rr = np.outer(rho, r)  # (nr, nt)
        x = c.center[0] + rr * np.cos(t)[None, :]
        y = c.center[1] + rr * np.sin(t)[None, :]
        w = (2.0 * np.pi / nt) * np.outer(wr * rho, r ** 2)
        nodes.append(np.stack([x.ravel(), y.ravel()], axis=-1))
        weights.append(w.ravel())
        owner.append(np.full(nr * nt, idx))
    if not nodes:
        return InteriorQuadrature(np.zeros((0, 2)), np.zeros(0), np.zeros(0, dtype=int), nr, nt)
    return InteriorQuadrature(np.vstack(nodes), np.concatenate(weights), np.concatenate(owner), nr, nt)


def merge_discs(discs: Sequence[Disc]) -> List[Tuple[int, List[int]]]:
    """Connected components of the disc intersection graph; tangent discs are merged."""
    n = len(discs)
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            d = math.hypot(discs[i].center[0] - discs[j].center[0], discs[i].center[1] - discs[j].center[1])
            if d < discs[i].radius + discs[j].radius + _TANGENT_TOL:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)

    groups: Dict[int, List[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    ordered = sorted(groups.values(), key=lambda g: g[0])
    return [(k, g) for k, g in enumerate(ordered)]


def discs_centroid(members: Sequence[Disc]) -> Point:
    w = np.array([d.area for d in members])
    c = np.array([d.center for d in members], dtype=float)
    m = (w[:, None] * c).sum(axis=0) / w.sum()
    return float(m[0]), float(m[1])


def initial_curve_from_discs(members: Sequence[Disc], total_weight: complex, f_centroid: complex,
                             kappa: float, order: int = 0) -> StarCurve:
    """Circle at the area-weighted centroid whose equivalent weight is `total_weight`."""
    from .eqdiscs import WeightToRadiusProblem, radius_from_weight

    if not members:
        raise InvalidCurveError("initial curve needs at least one disc")
    center = discs_centroid(members)
    r = radius_from_weight(WeightToRadiusProblem(abs(total_weight), abs(kappa ** 2 * f_centroid), kappa))
    return StarCurve.circle(center, r, order)


def curves_overlap(c1: StarCurve, c2: StarCurve, samples: int = 256) -> bool:
    t = 2.0 * np.pi * np.arange(samples) / samples
    return bool(np.any(contains_point(c2, c1.points(t))) or np.any(contains_point(c1, c2.points(t))))


def symmetric_difference_area(c1: StarCurve, c2: StarCurve, n: int = 400) -> float:
    """Area of c1 Δ c2 by midpoint sampling on a grid over the joint bounding box."""
    r = max(c1.bounding_radius(), c2.bounding_radius())
    lo = np.minimum(c1.center, c2.center) - r
    hi = np.maximum(c1.center, c2.center) + r
    hx, hy = (hi - lo) / n
    xs = lo[0] + hx * (np.arange(n) + 0.5)
    ys = lo[1] + hy * (np.arange(n) + 0.5)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.stack([gx.ravel(), gy.ravel()], axis=-1)
    xor = contains_point(c1, pts) ^ contains_point(c2, pts)
    return float(np.count_nonzero(xor)) * hx * hy


def polygon_area(vertices: np.ndarray) -> float:
    """Shoelace formula."""
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))
