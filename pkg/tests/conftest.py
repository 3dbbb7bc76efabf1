"""Shared fixtures: repo presets and session-scoped built models.

Model construction is deterministic, so everything heavy is built once
per session and reused across test files.
"""
import json
from pathlib import Path

import pytest

from dirac_darboux.config import build_model, parse_config
from dirac_darboux.darboux2x2 import build_seed, transform
from dirac_darboux.free2x2 import FreeParams
from dirac_darboux.numerics import DEFAULT_GRID

REPO_ROOT = Path(__file__).resolve().parent.parent

FIG1_PARAMS = FreeParams(v=-2.0, w=5.0, a=0.0)
FIG3_PARAMS_1 = FreeParams(v=3.0, w=-2.0, a=1j)
FIG3_PARAMS_2 = FreeParams(v=2.5, w=-1.5, a=1.0)


def load_preset(name):
    with open(REPO_ROOT / f"{name}.json") as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def fig1_config():
    return parse_config(load_preset("fig1"))


@pytest.fixture(scope="session")
def fig1_model(fig1_config):
    return build_model(fig1_config)


@pytest.fixture(scope="session")
def fig2_model():
    return build_model(parse_config(load_preset("fig2")))


@pytest.fixture(scope="session")
def fig3_model():
    return build_model(parse_config(load_preset("fig3")))


@pytest.fixture(scope="session")
def fig4_model():
    return build_model(parse_config(load_preset("fig4")))


@pytest.fixture(scope="session")
def soc_model():
    return build_model(parse_config(load_preset("soc_klein")))


@pytest.fixture(scope="session")
def fig1_seed():
    return build_seed(FIG1_PARAMS, -1.0, 2.0, 0.0, 0.0)


@pytest.fixture(scope="session")
def fig1_transformed(fig1_seed):
    return transform(fig1_seed, grid=DEFAULT_GRID)


@pytest.fixture(scope="session")
def fig2_seed():
    return build_seed(FIG1_PARAMS, -1.0, 2.0, 4.0, -4.0)
