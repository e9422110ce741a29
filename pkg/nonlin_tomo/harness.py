"""
Scenario orchestration: synthetic data, the four-stage reconstruction pipeline,
partial-data and noise studies, conditioning diagnostics and sweeps.

A scenario is config.yaml merged with a file under scenarios/, plus a
`scenario` block:

  scenario:
    name: three_objects
    phantoms: [{shape: circle, center: [..], radius: ..}, {shape: ellipse, ...}, {a: [..], b: [..], ...}]
    harmonics: 2 | 3
    arc_fraction: 1.0          # α/2π
    arc_center: 0.0            # radians
    noise: 0.0                 # relative δ
    seed: 0
    schedules: [m2]            # any of m2, sequential, simultaneous
    moment_matching: false
    sweep: {key: scenario.arc_fraction, values: [...]}
"""

from __future__ import annotations

import copy
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import io
from .abstract_newton import (AbstractState, SpectralSystem, add_observation_noise, frozen_newton_run,
                              hankel_report, hankel_sigma_min, linearized_injectivity_sigma_min,
                              manufactured_problem, random_state, range_invariance_defect,
                              remainder_closeness_constant)
from .config import (SCHEDULES, AbstractConfig, DomainConfig, NewtonConfig, PdapConfig, Resolution, RuntimeConfig,
                     as_list, load_config, log, resolutions)
from .eqdiscs import StartingGuess, build_starting_guesses, weight_from_radius
from .errors import ScenarioError, SlepianDivergenceError, StagnationWarning, TomoError
from .forward import (BoundaryTrace, HarmonicField, extract_trace, fundamental_field, harmonic_cascade)
from .geometry import InclusionSet, StarCurve, area_centroid, interior_quadrature
from .pdap import PdapState, pdap_run
from .shape_newton import (NewtonReport, run_moment_newton, run_newton, shape_errors, split_data)

RUN_SCHEMA = "run_report.v1"
SWEEP_SCHEMA = "sweep_report.v1"
CONDITIONING_SCHEMA = "conditioning_report.v1"

STAGE_LETTERS = {"pdap": "a", "eqdiscs": "b", "m2": "c", "sequential": "d", "simultaneous": "e"}

# single inclusion, 9 basis functions: arc fraction -> (cond(J), c_N)
CONDITIONING_REFERENCE = {
    0.75: (29.6, 2.8e2),
    0.5: (64.9, 2.3e5),
    0.4: (73.7, 1.8e7),
    0.3: (1733.8, 2.6e8),
}

_STAGE_ERRORS = (TomoError, ValueError, ArithmeticError, np.linalg.LinAlgError)


# ------------------------------------------------------------------ scenario

@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    phantoms: Tuple[StarCurve, ...]
    domain: DomainConfig  # inversion resolution
    data_resolution: Resolution
    inversion_resolution: Resolution
    harmonics: int = 2
    arc_fraction: float = 1.0
    arc_center: float = 0.0
    noise: float = 0.0
    seed: int = 0
    schedules: Tuple[str, ...] = ("m2",)
    moment_matching: bool = False
    moment_waves: int = 4
    pdap: PdapConfig = field(default_factory=PdapConfig)
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    runtime: RuntimeConfig = field(default_factory=RuntimeConfig)
    document: Dict[str, Any] = field(default_factory=dict, repr=False)

    @property
    def data_domain(self) -> DomainConfig:
        return self.domain.with_resolution(self.data_resolution)

    @staticmethod
    def from_any(cfg: Dict[str, Any]) -> "Scenario":
        sc = cfg.get("scenario", {}) or {}
        data_res, inv_res = resolutions(cfg)
        if not inv_res.coarser_than(data_res):
            raise ScenarioError(f"inverse crime: data resolution {data_res} must be at least twice "
                                f"the inversion resolution {inv_res}")
        try:
            phantoms = tuple(StarCurve.from_any(p) for p in as_list(sc.get("phantoms")))
            domain = DomainConfig.from_any(cfg, inv_res)
        except ValueError as e:
            raise ScenarioError(f"invalid scenario: {e}") from e
        if not phantoms:
            raise ScenarioError("scenario needs at least one phantom")
        for i, p in enumerate(phantoms):
            if math.hypot(*p.center) + p.bounding_radius() >= 0.98 * domain.radius:
                raise ScenarioError(f"phantom {i} reaches the boundary of Ω")
        overlaps = InclusionSet.of(phantoms).overlapping_pairs()
        if overlaps:
            raise ScenarioError(f"phantoms overlap: {overlaps}")

        fraction = float(sc.get("arc_fraction", 1.0))
        if not (0.0 < fraction <= 1.0):
            raise ScenarioError(f"arc_fraction must be in (0, 1], got {fraction}")
        noise = float(sc.get("noise", 0.0))
        if noise < 0:
            raise ScenarioError(f"noise must be >= 0, got {noise}")
        harmonics = int(sc.get("harmonics", 2))
        if harmonics not in (2, 3):
            raise ScenarioError(f"harmonics must be 2 or 3, got {harmonics}")

        newton_raw = cfg.get("newton", {}) or {}
        schedules = tuple(str(s) for s in as_list(sc.get("schedules")) or [newton_raw.get("schedule", "m2")])
        bad = [s for s in schedules if s not in SCHEDULES]
        if bad:
            raise ScenarioError(f"unknown schedules {bad}; expected any of {SCHEDULES}")
        if harmonics < 3 and any(s != "m2" for s in schedules):
            raise ScenarioError(f"schedules {schedules} need harmonics: 3")

        pdap_raw = dict(cfg.get("pdap", {}) or {})
        pdap_raw.setdefault("noise_level", noise)
        try:
            pdap = PdapConfig.from_any(pdap_raw)
            newton = NewtonConfig.from_any(dict(newton_raw, schedule=schedules[0]))
        except ValueError as e:
            raise ScenarioError(str(e)) from e
        return Scenario(
            name=str(sc.get("name", "scenario")),
            phantoms=phantoms,
            domain=domain,
            data_resolution=data_res,
            inversion_resolution=inv_res,
            harmonics=harmonics,
            arc_fraction=fraction,
            arc_center=float(sc.get("arc_center", 0.0)),
            noise=noise,
            seed=int(sc.get("seed", 0)),
            schedules=schedules,
            moment_matching=bool(sc.get("moment_matching", False)),
            moment_waves=int(sc.get("moment_waves", 4)),
            pdap=pdap,
            newton=newton,
            runtime=RuntimeConfig.from_any(cfg.get("runtime")),
            document=copy.deepcopy(cfg),
        )


def load_scenario(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None,
                  seed: Optional[int] = None) -> Scenario:
    cfg = load_config(path, overrides)
    if seed is not None:
        cfg.setdefault("scenario", {})["seed"] = int(seed)
    return Scenario.from_any(cfg)


# ------------------------------------------------------------------ noise and aperture

def add_noise(trace: BoundaryTrace, delta: float, seed: int = 0) -> BoundaryTrace:
    """trace + δ‖trace‖ n/‖n‖ with n complex Gaussian; the realised relative level is exactly δ."""
    if delta < 0:
        raise ValueError(f"noise level must be >= 0, got {delta}")
    if delta == 0 or trace.samples.size == 0:
        return trace
    rng = np.random.default_rng(seed)
    n = rng.standard_normal(trace.samples.shape) + 1j * rng.standard_normal(trace.samples.shape)
    n *= delta * np.linalg.norm(trace.samples) / np.linalg.norm(n)
    return trace.with_samples(trace.samples + n)


def slepian_condition_number(n: int, alpha: float) -> float:
    """e^{γ(α)N}, γ(α) = log((√2 + √(1+cos α)) / (√2 - √(1+cos α)))."""
    if n < 1:
        raise ValueError(f"basis size must be >= 1, got {n}")
    if not (0.0 < alpha < 2.0 * math.pi):
        raise SlepianDivergenceError(f"alpha={alpha} outside (0, 2π)")
    s = math.sqrt(max(1.0 + math.cos(alpha), 0.0))
    den = math.sqrt(2.0) - s
    if den <= 0.0:
        raise SlepianDivergenceError(f"gamma(alpha) diverges at alpha={alpha}")
    gamma = math.log((math.sqrt(2.0) + s) / den)
    try:
        return math.exp(gamma * n)
    except OverflowError:
        return math.inf


def slepian_readings(fraction: float, n: int) -> Dict[str, Optional[float]]:
    """c_N under the observed-arc, missing-arc and half-aperture readings of α."""
    out: Dict[str, Optional[float]] = {}
    for key, alpha in (("observed", 2.0 * math.pi * fraction),
                       ("missing", 2.0 * math.pi * (1.0 - fraction)),
                       ("half_aperture", math.pi * fraction)):
        try:
            out[key] = slepian_condition_number(n, alpha)
        except SlepianDivergenceError:
            out[key] = None
    return out


# ------------------------------------------------------------------ pipeline stages

@dataclass
class SyntheticData:
    fields: List[HarmonicField]
    traces: Dict[Tuple[int, str], BoundaryTrace]
    clean_norms: Dict[int, float]

    def newton_data(self, kind: str) -> Dict[int, BoundaryTrace]:
        return {m: tr for (m, k), tr in self.traces.items() if k == kind}

    @property
    def third_to_second(self) -> Optional[float]:
        if 3 not in self.clean_norms or not self.clean_norms.get(2):
            return None
        return self.clean_norms[3] / self.clean_norms[2]


def generate_data(s: Scenario) -> SyntheticData:
    """Cascade on the fine data grid, arc restriction, then seeded noise per harmonic and trace kind."""
    dom = s.data_domain
    incl = InclusionSet.of(s.phantoms, s.data_resolution.radial, s.data_resolution.angular)
    fields = harmonic_cascade(dom, incl, s.harmonics)
    traces: Dict[Tuple[int, str], BoundaryTrace] = {}
    norms: Dict[int, float] = {}
    for fld in fields[1:]:
        h = 2.0 * math.pi * fld.radius / fld.n_boundary
        norms[fld.m] = float(np.sqrt(h * np.sum(np.abs(fld.dirichlet) ** 2)))
        for k, kind in enumerate(("neumann", "dirichlet")):
            tr = extract_trace(fld, s.arc_fraction, kind, s.arc_center)
            traces[(fld.m, kind)] = add_noise(tr, s.noise, s.seed * 1000 + 10 * fld.m + k)
    log("harness", f"data M={s.harmonics} arc={s.arc_fraction} noise={s.noise} samples="
                   f"{traces[(2, 'neumann')].samples.size}")
    return SyntheticData(fields, traces, norms)


def source_function(s: Scenario) -> Callable[[np.ndarray], np.ndarray]:
    """f_2 = (η₀/4) p̂_1² on the inversion grid."""
    p1 = fundamental_field(s.domain)
    return lambda x: 0.25 * s.domain.eta0 * p1.evaluate(x) ** 2


def object_weights(s: Scenario) -> List[Dict[str, Any]]:
    """Per phantom: equivalent point weight of its mean-radius disc and |κ²∫_D f| at κ_2."""
    kappa = s.domain.kappa(2)
    f = source_function(s)
    out = []
    for i, p in enumerate(s.phantoms):
        area, centroid = area_centroid(p)
        r_eq = math.sqrt(area / math.pi)
        f_c = complex(f(np.array([centroid]))[0])
        quad = interior_quadrature(InclusionSet.of([p], s.inversion_resolution.radial, s.inversion_resolution.angular))
        integral = complex(kappa ** 2 * np.sum(quad.weights * f(quad.nodes)))
        out.append({
            "object": i,
            "area": area,
            "mean_radius": float(p.a[0]),
            "equivalent_weight": abs(weight_from_radius(float(p.a[0]), kappa, f_c)),
            "area_radius_weight": abs(weight_from_radius(r_eq, kappa, f_c)),
            "source_integral": abs(integral),
        })
    return out


def _attempt(report: Dict[str, Any], stage: str, fn: Callable[..., Any], *args, **kwargs) -> Any:
    try:
        return fn(*args, **kwargs)
    except _STAGE_ERRORS as e:
        log("harness", f"stage={stage} failed: {type(e).__name__}: {e}")
        report["failures"].append({"stage": stage, "error": type(e).__name__, "message": str(e)})
        return None


def _recover_sources(s: Scenario, data: SyntheticData, report: Dict[str, Any]) -> PdapState:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", StagnationWarning)
        state = pdap_run(data.traces[(2, "neumann")], s.pdap, s.domain, s.domain.kappa(2))
    for w in caught:
        if issubclass(w.category, StagnationWarning):
            report["warnings"].append({"stage": "pdap", "message": str(w.message)})
    return state


def _newton_summary(rep: NewtonReport) -> Dict[str, Any]:
    errs = [e for e in rep.shape_errors if not e.get("missed")]
    return {
        "status": rep.status,
        "iterations": len(rep.step_norms),
        "residual_start": rep.residual_history[0] if rep.residual_history else None,
        "residual_final": rep.residual_history[-1] if rep.residual_history else None,
        "final_condition": rep.final_condition,
        "missed_objects": sum(1 for e in rep.shape_errors if e.get("missed")),
        "mean_relative_l2": float(np.mean([e["relative_l2"] for e in errs])) if errs else None,
        "mean_symmetric_difference": float(np.mean([e["symmetric_difference"] for e in errs])) if errs else None,
        "shape_errors": rep.shape_errors,
    }


def run_scenario(s: Scenario, out_dir: str, until: str = "newton") -> Dict[str, Any]:
    """generate data -> PDAP -> equivalent discs -> Newton per schedule, writing each stage's files.

    `until` stops after "data", "pdap", "eqdiscs" or "newton". A failing stage
    is recorded under `failures`; later stages that depend on it are skipped.
    """
    order = ("data", "pdap", "eqdiscs", "newton")
    if until not in order:
        raise ValueError(f"until must be one of {order}, got {until!r}")
    last = order.index(until)
    os.makedirs(out_dir, exist_ok=True)
    files: List[str] = []
    report: Dict[str, Any] = {
        "schema": RUN_SCHEMA,
        "scenario": s.name,
        "seed": s.seed,
        "arc_fraction": s.arc_fraction,
        "noise": s.noise,
        "harmonics": s.harmonics,
        "schedules": list(s.schedules),
        "stages": {},
        "failures": [],
        "warnings": [],
    }
    path = lambda name: os.path.join(out_dir, name)
    panels: List[Dict[str, str]] = []

    files.append(io.write_curves_csv(path("phantom_curves.csv"), s.phantoms))
    report["object_weights"] = _attempt(report, "object_weights", object_weights, s) or []

    # data
    data = _attempt(report, "data", generate_data, s)
    if data is not None:
        for (m, kind), tr in sorted(data.traces.items()):
            files.append(io.write_csv(path(f"data_m{m}_{kind}.csv"), ("theta", "x", "y", "re", "im"), tr.to_rows()))
        report["stages"]["data"] = {
            "norms": {f"m{m}": data.traces[(m, 'neumann')].norm() for m in range(2, s.harmonics + 1)},
            "third_to_second": data.third_to_second,
        }

    # pdap
    state = None
    if data is not None and last >= 1:
        state = _attempt(report, "pdap", _recover_sources, s, data, report)
        if state is not None:
            report["stages"]["pdap"] = state.to_dict()
            files.append(io.write_measure_csv(path("a_point_sources.csv"), state.measure.points, state.measure.weights))
            panels.append({"title": "(a) point sources", "phantom": "phantom_curves.csv",
                           "points": "a_point_sources.csv"})
            if len(state.measure) == 0:
                report["failures"].append({"stage": "pdap", "error": "EmptyMeasure",
                                           "message": "no point sources recovered"})
                state = None

    # equivalent discs
    guess: Optional[StartingGuess] = None
    f_fn = source_function(s)
    if state is not None and last >= 2:
        guess = _attempt(report, "eqdiscs", build_starting_guesses, state.measure, f_fn, s.domain.kappa(2))
        if guess is not None:
            files.append(io.write_csv(path("b_discs.csv"), ("x", "y", "r"),
                                      [(d.center[0], d.center[1], d.radius) for d in guess.discs]))
            files.append(io.write_curves_csv(path("b_start_curves.csv"), guess.curves))
            panels.append({"title": "(b) equivalent discs", "phantom": "phantom_curves.csv",
                           "curves": "b_start_curves.csv"})
            report["stages"]["eqdiscs"] = {
                "discs": [d.to_dict() for d in guess.discs],
                "objects": [{"object": o, "members": list(m)} for o, m in guess.objects],
                "curves": [c.to_dict() for c in guess.curves],
                "object_weights": [abs(w) for w in guess.object_weights],
                "shape_errors": shape_errors(list(guess.curves), list(s.phantoms)),
            }

    # optional per-object moment matching refines the start circles
    start_curves = list(guess.curves) if guess is not None else []
    if guess is not None and last >= 3 and s.moment_matching:
        refined = _attempt(report, "moments", _moment_matching, s, state, guess, data, f_fn)
        if refined is not None:
            start_curves = refined
            files.append(io.write_curves_csv(path("b_moment_curves.csv"), start_curves))
            report["stages"]["moments"] = {"curves": [c.to_dict() for c in start_curves],
                                           "shape_errors": shape_errors(start_curves, list(s.phantoms))}

    # newton
    if start_curves and last >= 3:
        start = InclusionSet.of(start_curves, s.inversion_resolution.radial, s.inversion_resolution.angular)
        newton_out: Dict[str, Any] = {}
        for schedule in s.schedules:
            cfg = replace(s.newton, schedule=schedule)
            rep = _attempt(report, f"newton:{schedule}", run_newton, start, data.newton_data(cfg.trace_kind),
                           s.domain, cfg, s.phantoms, s.runtime.max_concurrency)
            if rep is None:
                continue
            for fail in rep.failures:
                report["failures"].append(dict(fail, stage=f"newton:{schedule}:{fail['stage']}"))
            letter = STAGE_LETTERS[schedule]
            curves_file = f"{letter}_newton_{schedule}_curves.csv"
            files.append(io.write_curves_csv(path(curves_file), rep.final_curves.objects))
            files.append(io.write_json(path(f"{letter}_newton_{schedule}.json"), rep.to_dict()))
            rows = [(i, rep.stage_of_iteration[i - 1] if i else "start", rep.residual_history[i],
                     rep.step_norms[i - 1] if i else 0.0, rep.damping_history[i - 1] if i else s.newton.damping,
                     rep.conditions[i - 1] if i else float("nan"))
                    for i in range(len(rep.residual_history))]
            files.append(io.write_csv(path(f"{letter}_newton_{schedule}_residuals.csv"),
                                      ("iteration", "stage", "residual", "step", "damping", "condition"), rows))
            panels.append({"title": f"({letter}) newton {schedule}", "phantom": "phantom_curves.csv",
                           "curves": curves_file})
            newton_out[schedule] = _newton_summary(rep)
        report["stages"]["newton"] = newton_out
        report["third_harmonic"] = _third_harmonic_summary(newton_out, data)

    files.append(io.write_gnuplot(path("plot.gnuplot"), panels, s.domain.radius))
    report["files"] = sorted(os.path.relpath(p, out_dir) for p in files + [path("report.json")])
    files.append(io.write_json(path("report.json"), report))
    io.write_manifest(out_dir, s.document, files, {
        "scenario": s.name,
        "seed": s.seed,
        "resolutions": {"data": s.data_resolution.__dict__, "inversion": s.inversion_resolution.__dict__},
    })
    log("harness", f"scenario={s.name} stages={list(report['stages'])} failures={len(report['failures'])} out={out_dir}")
    return report


def _moment_matching(s: Scenario, state: PdapState, guess: StartingGuess, data: SyntheticData,
                     f_fn: Callable[[np.ndarray], np.ndarray]) -> List[StarCurve]:
    kappa = s.domain.kappa(2)
    parts = split_data(state.measure, guess.objects, s.domain, kappa, data.traces[(2, "neumann")])
    out = []
    for curve, g_l in zip(guess.curves, parts):
        f_c = complex(f_fn(np.array([curve.center]))[0])
        out.append(run_moment_newton(curve, g_l, f_c, kappa, s.moment_waves, s.domain, s.newton).curve)
    return out


def _third_harmonic_summary(newton_out: Dict[str, Any], data: Optional[SyntheticData]) -> Dict[str, Any]:
    out: Dict[str, Any] = {"third_to_second": data.third_to_second if data is not None else None}
    base = (newton_out.get("m2") or {}).get("mean_relative_l2")
    for sched in ("sequential", "simultaneous"):
        err = (newton_out.get(sched) or {}).get("mean_relative_l2")
        if base is not None and err:
            out[f"{sched}_improvement"] = base / err
    return out


# ------------------------------------------------------------------ conditioning

def conditioning_report(s: Scenario, fractions: Sequence[float], n_basis: int = 9,
                        out_dir: Optional[str] = None) -> List[Dict[str, Any]]:
    """cond(J) of the m2 Newton problem at its solution per arc fraction, next to c_N.

    Newton starts from the phantom truncated to (n_basis-1)/2 harmonics, so
    the reported Jacobian is the one at the converged reconstruction.
    """
    if len(s.phantoms) != 1:
        raise ScenarioError("conditioning report needs a single-inclusion scenario")
    if n_basis < 1 or n_basis % 2 == 0:
        raise ValueError(f"basis size must be odd, got {n_basis}")
    order = (n_basis - 1) // 2
    rows: List[Dict[str, Any]] = []
    for fr in fractions:
        sf = replace(s, arc_fraction=float(fr), schedules=("m2",))
        row: Dict[str, Any] = {"arc_fraction": float(fr), "cond_J": None}
        try:
            data = generate_data(sf)
            start = InclusionSet.of([s.phantoms[0].with_order(order)], s.inversion_resolution.radial,
                                    s.inversion_resolution.angular)
            cfg = replace(s.newton, schedule="m2", order=order)
            rep = run_newton(start, data.newton_data(cfg.trace_kind), s.domain, cfg, s.phantoms,
                             s.runtime.max_concurrency)
            row["cond_J"] = rep.final_condition
            row["newton_status"] = rep.status
        except _STAGE_ERRORS as e:
            log("harness", f"conditioning arc={fr} failed: {type(e).__name__}: {e}")
            row["error"] = type(e).__name__
        readings = slepian_readings(float(fr), n_basis)
        row.update({f"c_N_{k}": v for k, v in readings.items()})
        ref = CONDITIONING_REFERENCE.get(round(float(fr), 4))
        row["reference_cond_J"], row["reference_c_N"] = ref if ref else (None, None)
        log("harness", f"conditioning arc={fr} cond={row['cond_J']} c_N={readings['observed']}")
        rows.append(row)
    if out_dir:
        cols = ("arc_fraction", "cond_J", "c_N_observed", "c_N_missing", "c_N_half_aperture",
                "reference_cond_J", "reference_c_N")
        io.write_csv(os.path.join(out_dir, "conditioning.csv"), cols,
                     [tuple("" if r.get(c) is None else r.get(c) for c in cols) for r in rows])
        io.write_json(os.path.join(out_dir, "conditioning.json"),
                      {"schema": CONDITIONING_SCHEMA, "scenario": s.name, "n_basis": n_basis, "rows": rows})
    return rows


# ------------------------------------------------------------------ sweeps

def set_path(doc: Dict[str, Any], dotted: str, value: Any) -> Dict[str, Any]:
    """Copy of doc with the dotted key (list indices allowed) set to value."""
    out = copy.deepcopy(doc)
    keys = dotted.split(".")
    node: Any = out
    for k in keys[:-1]:
        if isinstance(node, list):
            node = node[int(k)]
        else:
            node = node.setdefault(k, {})
    last = keys[-1]
    if isinstance(node, list):
        node[int(last)] = value
    else:
        node[last] = value
    return out


def _sweep_job(job: Tuple[Dict[str, Any], str, str]) -> Dict[str, Any]:
    doc, out_dir, until = job
    try:
        s = Scenario.from_any(doc)
        rep = run_scenario(s, out_dir, until)
    except _STAGE_ERRORS as e:
        return {"status": "error", "error": type(e).__name__, "message": str(e), "out": out_dir}
    newton = rep["stages"].get("newton", {})
    return {
        "status": "ok" if not rep["failures"] else "partial",
        "out": out_dir,
        "failures": len(rep["failures"]),
        "support": rep["stages"].get("pdap", {}).get("support"),
        "newton": {k: {kk: v[kk] for kk in ("status", "mean_relative_l2", "mean_symmetric_difference",
                                             "missed_objects", "final_condition")}
                   for k, v in newton.items()},
    }


def sweep_jobs(cfg: Dict[str, Any], out_dir: str) -> List[Tuple[Dict[str, Any], str, Any]]:
    sw = (cfg.get("scenario", {}) or {}).get("sweep") or {}
    keys = as_list(sw.get("keys") or sw.get("key"))
    values = as_list(sw.get("values"))
    if not keys or not values:
        raise ScenarioError("sweep needs `key` (or `keys`) and `values`")
    jobs = []
    for i, v in enumerate(values):
        vs = as_list(v) if len(keys) > 1 else [v]
        if len(vs) != len(keys):
            raise ScenarioError(f"sweep value {v!r} does not match keys {keys}")
        doc = copy.deepcopy(cfg)
        doc["scenario"].pop("sweep", None)
        for k, x in zip(keys, vs):
            doc = set_path(doc, k, x)
        jobs.append((doc, os.path.join(out_dir, f"job_{i:02d}"), v))
    return jobs


def sweep(cfg: Dict[str, Any], out_dir: str, until: str = "newton",
          max_concurrency: Optional[int] = None) -> Dict[str, Any]:
    """Independent pipeline runs over the scenario's sweep block, one output directory each."""
    jobs = sweep_jobs(cfg, out_dir)
    workers = max_concurrency or RuntimeConfig.from_any(cfg.get("runtime")).max_concurrency
    log("harness", f"sweep jobs={len(jobs)} workers={workers}")
    payload = [(doc, d, until) for doc, d, _ in jobs]
    if workers <= 1 or len(jobs) == 1:
        results = [_sweep_job(p) for p in payload]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as ex:
            results = list(ex.map(_sweep_job, payload))
    sw = cfg["scenario"]["sweep"]
    rows = [dict(r, value=v) for r, (_, _, v) in zip(results, jobs)]
    out = {"schema": SWEEP_SCHEMA, "scenario": (cfg.get("scenario") or {}).get("name", "scenario"),
           "keys": as_list(sw.get("keys") or sw.get("key")), "results": rows}
    io.write_json(os.path.join(out_dir, "sweep.json"), out)
    csv_rows = []
    for r in rows:
        for sched, n in (r.get("newton") or {"-": {}}).items():
            csv_rows.append((str(r["value"]), r["status"], sched, n.get("mean_relative_l2", ""),
                             n.get("mean_symmetric_difference", ""), n.get("missed_objects", ""),
                             n.get("final_condition", "")))
    io.write_csv(os.path.join(out_dir, "sweep.csv"),
                 ("value", "status", "schedule", "relative_l2", "symmetric_difference", "missed", "condition"),
                 csv_rows)
    return out


# ------------------------------------------------------------------ 1-D spectral model

ABSTRACT_SCHEMA = "abstract_report.v1"


def _anchor_state(M: int, J: int, rng: np.random.Generator) -> AbstractState:
    """Random smooth state whose harmonics stay near the constant 1, so every B̃_m is bounded away from 0."""
    x = random_state(M, J, rng, decay=2.0).scaled(0.2)
    p = x.p.copy()
    p[:, 0] += 1.0
    eta = x.eta.copy()
    eta[:, 0] += 1.0
    return AbstractState(eta, p)


def range_invariance_check(sys: SpectralSystem, variant: str, M: int, perturbations: int,
                           radii: Sequence[float], seed: int = 0) -> Dict[str, Any]:
    rng = np.random.default_rng(seed)
    x0 = _anchor_state(M, sys.J, rng)
    worst = 0.0
    for _ in range(perturbations):
        d = random_state(M, sys.J, rng)
        worst = max(worst, range_invariance_defect(sys, variant, x0, x0 + d.scaled(0.1 / d.norm())))
    consts = [remainder_closeness_constant(sys, variant, x0, r, samples=10, seed=seed) for r in radii]
    slope = float(np.polyfit(np.log(radii), np.log(consts), 1)[0]) if len(radii) > 1 else float("nan")
    log("abstract", f"range invariance variant={variant} M={M} defect={worst:.2e} slope={slope:.3f}")
    return {"variant": variant, "M": M, "max_defect": worst, "radii": list(radii),
            "closeness": consts, "slope": slope}


def hankel_check(sys_cfg: Dict[str, Any], sizes: Sequence[int]) -> List[Dict[str, Any]]:
    """σ_min of square truncations for a valid system and after duplicating one eigen-triple."""
    base = SpectralSystem.from_any(dict(sys_cfg, modes=max(sizes)))
    dup = base.with_triple(2, base.lam[1], base.mu[1], base.rho[1])
    rows = []
    for n in sizes:
        rep = hankel_report(base, n, n)
        rep["sigma_min_duplicate"] = hankel_sigma_min(dup, n, n) if n >= 3 else None
        rows.append(rep)
        log("abstract", f"hankel n={n} sigma_min={rep['sigma_min']:.3e} duplicate={rep['sigma_min_duplicate']}")
    return rows


def injectivity_check(sys: SpectralSystem, variants: Sequence[str], M: int) -> List[Dict[str, Any]]:
    phi = lambda x: 1.0 + 0.5 * np.cos(np.pi * x)
    rows = [{"variant": "b", "M": 1,
             "sigma_min": linearized_injectivity_sigma_min(sys, "b", phi, [1.0])}]
    for v in variants:
        psi = [2.0 ** -k for k in range(M)]
        rows.append({"variant": v, "M": M, "sigma_min": linearized_injectivity_sigma_min(sys, v, phi, psi)})
    return rows


def frozen_newton_check(sys: SpectralSystem, variant: str, ac: AbstractConfig) -> Dict[str, Any]:
    prob = manufactured_problem(sys, variant, ac.harmonics, ac.seed)
    rng = np.random.default_rng(ac.seed + 1)
    d = random_state(ac.harmonics, sys.J, rng)
    x0 = prob.truth + d.scaled(ac.start_distance * prob.truth.norm() / d.norm())
    clean = frozen_newton_run(sys, variant, x0, prob.data, ac.alpha0, ac.q, ac.max_iterations, 0.0, prob.truth)
    runs = [{"level": 0.0, "noise": 0.0, "n_star": None, "final_error": clean.errors[-1], "errors": clean.errors}]
    for lvl in ac.noise_levels:
        data, delta = add_observation_noise(prob.data, lvl, ac.seed + 7)
        h = frozen_newton_run(sys, variant, x0, data, ac.alpha0, ac.q, ac.max_iterations, delta, prob.truth)
        runs.append({"level": lvl, "noise": delta, "n_star": h.n_star, "final_error": h.errors[-1],
                     "errors": h.errors})
    return {"variant": variant, "M": ac.harmonics, "J": sys.J, "runs": runs}


def abstract_report(cfg: Dict[str, Any], out_dir: Optional[str] = None) -> Dict[str, Any]:
    """Range invariance, Hankel σ_min, linearised injectivity and frozen Newton on the 1-D model."""
    ac = AbstractConfig.from_any(cfg.get("abstract"))
    sys = SpectralSystem.from_any(ac.system)
    out: Dict[str, Any] = {"schema": ABSTRACT_SCHEMA, "system": sys.to_dict(), "failures": []}
    holder = {"failures": out["failures"]}

    out["range_invariance"] = [r for r in (
        _attempt(holder, f"range_invariance:{v}:M{M}", range_invariance_check, sys, v, M,
                 ac.perturbations, ac.radii, ac.seed)
        for v in ac.variants for M in ac.range_harmonics) if r is not None]
    out["hankel"] = _attempt(holder, "hankel", hankel_check, ac.system, ac.hankel_sizes) or []
    out["injectivity"] = _attempt(holder, "injectivity", injectivity_check, sys, ac.variants, ac.harmonics) or []
    out["frozen_newton"] = [r for r in (_attempt(holder, f"frozen_newton:{v}", frozen_newton_check, sys, v, ac)
                                        for v in ac.variants) if r is not None]
    if out_dir:
        io.write_json(os.path.join(out_dir, "abstract.json"), out)
        io.write_csv(os.path.join(out_dir, "hankel.csv"),
                     ("n", "sigma_min", "sigma_min_equilibrated", "sigma_min_duplicate"),
                     [(r["m_max"], r["sigma_min"], r["sigma_min_equilibrated"], r["sigma_min_duplicate"])
                      for r in out["hankel"]])
        io.write_csv(os.path.join(out_dir, "frozen_newton.csv"), ("variant", "level", "iteration", "error"),
                     [(fn["variant"], run["level"], i, e) for fn in out["frozen_newton"]
                      for run in fn["runs"] for i, e in enumerate(run["errors"])])
    return out
