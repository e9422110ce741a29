"""
Equivalent discs: a disc of radius r with constant f has the flux moments of
one point source of weight λ = κ²f·πr²·2J_1(κr)/(κr) = 2π f κ r J_1(κr).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np
from scipy import optimize, special

from .config import log
from .errors import OutOfBranchError
from .forward import DiscreteMeasure
from .geometry import Disc, StarCurve, discs_centroid, initial_curve_from_discs, merge_discs
from .specfun import J0_FIRST_ZERO

# z J_1(z) is increasing on (0, j_{0,1}) since d/dz (z J_1) = z J_0(z)
BRANCH_MAX = J0_FIRST_ZERO * float(special.j1(J0_FIRST_ZERO))


@dataclass(frozen=True)
class WeightToRadiusProblem:
    weight: float  # |λ|
    source: float  # |κ² f(S)|
    kappa: float

    def __post_init__(self):
        if self.weight < 0 or self.source <= 0 or self.kappa <= 0:
            raise ValueError(f"invalid weight-to-radius problem {self}")


def weight_from_radius(r: float, kappa: float, f: complex) -> complex:
    return 2.0 * math.pi * f * kappa * r * float(special.j1(kappa * r))


def radius_from_weight(p: WeightToRadiusProblem) -> float:
    """Unique r with κr in (0, j_{0,1}) and |λ| = 2π |κ²f| r J_1(κr) / κ."""
    if p.weight == 0.0:
        raise OutOfBranchError("zero weight has no positive equivalent radius", 0.0)
    # |λ| = (2π |κ² f| / κ²) z J_1(z), z = κ r
    target = p.weight * p.kappa ** 2 / (2.0 * math.pi * p.source)
    if target > BRANCH_MAX:
        attainable = 2.0 * math.pi * p.source * BRANCH_MAX / p.kappa ** 2
        raise OutOfBranchError(f"|lambda|={p.weight:.4e} exceeds the monotone branch", attainable)
    if target == BRANCH_MAX:
        return J0_FIRST_ZERO / p.kappa
    z = optimize.brentq(lambda s: s * special.j1(s) - target, 0.0, J0_FIRST_ZERO, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    return float(z) / p.kappa


@dataclass(frozen=True)
class StartingGuess:
    discs: Tuple[Disc, ...]
    objects: Tuple[Tuple[int, Tuple[int, ...]], ...]
    curves: Tuple[StarCurve, ...]
    object_weights: Tuple[complex, ...]


def build_starting_guesses(mu: DiscreteMeasure, f_fn: Callable[[np.ndarray], np.ndarray], kappa: float,
                           order: int = 0) -> StartingGuess:
    """One disc per source (f at the source), merged into objects, one circle per object.

    Sources whose weight is off the monotone branch are clipped to the
    branch maximum and logged.
    """
    if len(mu) == 0:
        raise ValueError("starting guesses need a nonempty measure")
    fs = np.asarray(f_fn(mu.points), dtype=complex)
    discs: List[Disc] = []
    for k, (s, lam, f) in enumerate(zip(mu.points, mu.weights, fs)):
        prob = WeightToRadiusProblem(abs(lam), abs(kappa ** 2 * f), kappa)
        try:
            r = radius_from_weight(prob)
        except OutOfBranchError as e:
            log("eqdiscs", f"source={k} {e} attainable={e.attainable:.4e}; clipped")
            r = J0_FIRST_ZERO / kappa
        discs.append(Disc((float(s[0]), float(s[1])), r))

    objects = merge_discs(discs)
    curves, weights = [], []
    for oid, members in objects:
        mem = [discs[i] for i in members]
        total = complex(np.sum(mu.weights[members]))
        centroid = discs_centroid(mem)
        f_c = complex(np.asarray(f_fn(np.array([centroid])))[0])
        try:
            c = initial_curve_from_discs(mem, total, f_c, kappa, order)
        except OutOfBranchError as e:
            log("eqdiscs", f"object={oid} {e}; using branch maximum")
            c = StarCurve.circle(centroid, J0_FIRST_ZERO / kappa, order)
        curves.append(c)
        weights.append(total)
        log("eqdiscs", f"object={oid} members={members} center=({c.center[0]:.3f},{c.center[1]:.3f}) r={c.a[0]:.4f}")
    return StartingGuess(tuple(discs), tuple((o, tuple(m)) for o, m in objects), tuple(curves), tuple(weights))
