import os
from unittest.mock import patch

import pytest

from exciton_lab import config
from exciton_lab.utils.config_utils import get_config_value


@pytest.fixture(autouse=True)
def fresh_config_cache():
    get_config_value.cache_clear()
    config.get_quadrature_oversampling.cache_clear()
    config.get_integrator_method.cache_clear()
    yield
    get_config_value.cache_clear()
    config.get_quadrature_oversampling.cache_clear()
    config.get_integrator_method.cache_clear()


def test_fmo_defaults():
    assert config.FMO_TIME_PS == 5.0
    assert config.default_fmo_bracket() == (0.1, 1.0e4)
    assert config.default_sweep_points() == 40


def test_shared_getters_are_reexported():
    assert callable(config.get_fock_dimension_cap)
    assert callable(config.get_condition_number_cap)


@patch.dict(os.environ, {"QUADRATURE_OVERSAMPLING": "1"})
def test_oversampling_has_a_floor():
    assert config.get_quadrature_oversampling() == 2


@patch.dict(os.environ, {"INTEGRATOR_METHOD": "Euler"})
def test_unknown_integrator_falls_back():
    assert config.get_integrator_method() == "DOP853"


@patch.dict(os.environ, {"INTEGRATOR_METHOD": "Radau"})
def test_integrator_from_env():
    assert config.get_integrator_method() == "Radau"
