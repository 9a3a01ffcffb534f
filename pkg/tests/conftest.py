"""Shared fixtures for the nuchord test suite."""

from pathlib import Path

import numpy as np
import pytest

import nuchord
from nuchord.logging import reset_logging
from nuchord.plant_spec import load_bundled_spec
from nuchord.types import AlgebraInstance, GridSettings, InstanceKind

DATA_DIR = Path(nuchord.__file__).parent / "data"


@pytest.fixture(autouse=True)
def _reset_logging():
    """Every test starts from loguru's default configuration."""
    yield
    reset_logging()


@pytest.fixture
def halfplane() -> AlgebraInstance:
    return AlgebraInstance(InstanceKind.HALFPLANE_C0AP)


@pytest.fixture
def circle() -> AlgebraInstance:
    return AlgebraInstance(InstanceKind.CIRCLE)


@pytest.fixture
def annulus() -> AlgebraInstance:
    return AlgebraInstance(
        InstanceKind.ANNULUS,
        grid=GridSettings(initial_size=1024),
        annulus_radii=(0.9, 0.99, 0.9995, 0.9999, 0.99999),
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def data_path():
    """Path of a bundled plant spec file."""
    def _path(name: str) -> str:
        return str(DATA_DIR / name)
    return _path


@pytest.fixture
def delay_example(halfplane):
    """Nominal delay plant, its controller and the perturbation family."""
    nominal = load_bundled_spec("p1.json").to_fraction(halfplane)
    controller = load_bundled_spec("controller.json").to_fraction(halfplane)

    def perturbed(a: float):
        return load_bundled_spec("pa_template.json", parameter=a).to_fraction(halfplane)

    return nominal, controller, perturbed
