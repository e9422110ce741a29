import os
import sys

import numpy as np
import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from nonlin_tomo.config import DomainConfig, Resolution  # noqa: E402

# coarse enough for a laptop, fine enough for the tolerances asserted below
SMALL_DATA = Resolution(boundary_nodes=256, radial=16, angular=32)
SMALL_INVERSION = Resolution(boundary_nodes=128, radial=8, angular=16)


@pytest.fixture(autouse=True)
def quiet(monkeypatch):
    monkeypatch.setenv("NLT_QUIET", "1")


@pytest.fixture
def domain():
    return DomainConfig().with_resolution(SMALL_INVERSION)


@pytest.fixture
def data_domain():
    return DomainConfig().with_resolution(SMALL_DATA)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def small_scenario_doc(phantoms=None, **scenario):
    """In-memory override for load_config: one circle, small grids."""
    sc = {
        "name": "unit",
        "harmonics": 2,
        "seed": 0,
        "phantoms": phantoms or [{"shape": "circle", "center": [0.3, 0.1], "radius": 0.15}],
    }
    sc.update(scenario)
    return {
        "resolution": {
            "data": SMALL_DATA.__dict__,
            "inversion": SMALL_INVERSION.__dict__,
        },
        "pdap": {"radii": 16, "angles": 32, "max_iterations": 8},
        "newton": {"order": 1, "max_iterations": 4},
        "runtime": {"max_concurrency": 1},
        "scenario": sc,
    }


@pytest.fixture
def scenario_doc():
    return small_scenario_doc()


# 1-D model checks small enough for the default test run
SMALL_ABSTRACT = {
    "abstract": {
        "modes": 5,
        "obs_interval": [0.6, 1.0],
        "obs_count": 10,
        "harmonics": 2,
        "range_harmonics": [2],
        "perturbations": 2,
        "radii": [1.0e-2, 1.0e-3],
        "hankel_sizes": [3, 4],
        "max_iterations": 8,
        "noise_levels": [1.0e-2],
    }
}
