from pathlib import Path
from types import SimpleNamespace
from unittest.mock import patch

import numpy as np
import pytest

from exciton_lab.errors import IntegrationError, LabValidationError, NullSpaceError
from exciton_lab.experiment_config import load_config
from exciton_lab.network_model import (
    CM1_TO_RAD_PER_PS,
    ExcitonNetwork,
    build_fully_connected,
    dark_population,
    without_noise,
)
from exciton_lab.open_dynamics import (
    IntegratorSettings,
    assemble_generator,
    asymptotic_sink_population,
    evolve,
    slowest_decay_rate,
    site_state,
    trajectory_table,
)
from exciton_lab.quantum_core import DensityMatrix, vectorize

pytestmark = pytest.mark.unit

J_CM1 = 1.0 / CM1_TO_RAD_PER_PS
SETTINGS = IntegratorSettings(method="DOP853", rtol=1e-10, atol=1e-12)
CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def single_site(sink_rate=1.0, dissipation=0.0):
    return ExcitonNetwork([0.0], [[0.0]], [0.0], [dissipation], 1, sink_rate)


def test_generator_layout():
    model = assemble_generator(build_fully_connected(3, 0.0, J_CM1, sink_site=3))
    assert model.hilbert_dim == 5
    assert model.sink_index == 4
    assert model.generator.matrix.shape == (25, 25)
    assert len(model.jump_operators) == 7
    np.testing.assert_allclose(model.hamiltonian[1:4, 1:4][0, 1], 1.0)
    leak = model.generator.matrix.conj().T @ vectorize(np.eye(5))
    np.testing.assert_allclose(leak, 0.0, atol=1e-12)


def test_trapping_from_a_single_site():
    model = assemble_generator(single_site(sink_rate=1.5))
    times = np.linspace(0.0, 3.0, 7)
    result = evolve(model, model.initial_state(), times, SETTINGS)
    np.testing.assert_allclose(result.sink_population, 1.0 - np.exp(-1.5 * times), atol=1e-8)
    assert result.conservation_violations() == []
    assert result.final_efficiency == pytest.approx(1.0 - np.exp(-4.5), abs=1e-8)


def test_dissipation_feeds_the_ground_state():
    model = assemble_generator(single_site(sink_rate=0.0, dissipation=0.4))
    times = np.array([0.0, 1.0, 5.0])
    result = evolve(model, model.initial_state(), times, SETTINGS)
    np.testing.assert_allclose(result.ground_population, 1.0 - np.exp(-0.4 * times), atol=1e-8)
    np.testing.assert_allclose(result.sink_population, 0.0, atol=1e-12)


def test_dephasing_damps_site_coherence():
    net = ExcitonNetwork([0.0, 0.0], np.zeros((2, 2)), [1.0, 3.0], [0.0, 0.0], 2, 0.0)
    model = assemble_generator(net)
    psi = np.array([0.0, 1.0, 1.0, 0.0])
    times = np.linspace(0.0, 2.0, 5)
    result = evolve(model, DensityMatrix.pure(psi), times, SETTINGS)
    np.testing.assert_allclose(result.coherence_l1, np.exp(-2.0 * times), atol=1e-8)
    np.testing.assert_allclose(result.site_populations, 0.5, atol=1e-10)


def test_trajectory_conserves_trace_and_positivity():
    net = build_fully_connected(4, 0.0, J_CM1, sink_site=4, dephasing_rate=0.5)
    model = assemble_generator(net)
    result = evolve(model, model.initial_state(), np.linspace(0.0, 10.0, 41), SETTINGS)
    assert result.trace_errors.max() < 1e-8
    assert result.min_eigenvalues.min() > -1e-8
    assert np.all(np.diff(result.sink_population) > -1e-10)
    assert result.states.shape == (41, 6, 6)


def test_single_sample_returns_initial_state():
    model = assemble_generator(single_site())
    result = evolve(model, model.initial_state(), [0.0], SETTINGS)
    assert result.times.tolist() == [0.0]
    assert result.site_populations[0, 0] == 1.0


@pytest.mark.parametrize(
    "grid, message",
    [([], "empty"), ([0.5, 1.0], "start at 0"), ([0.0, 1.0, 1.0], "strictly increasing")],
)
def test_time_grid_validation(grid, message):
    model = assemble_generator(single_site())
    with pytest.raises(LabValidationError, match=message):
        evolve(model, model.initial_state(), grid, SETTINGS)


def test_initial_state_dimension_is_checked():
    model = assemble_generator(single_site())
    with pytest.raises(LabValidationError, match="dimension"):
        evolve(model, DensityMatrix.basis(2, 0), [0.0, 1.0], SETTINGS)
    with pytest.raises(LabValidationError):
        site_state(model.network, 2)


@patch("exciton_lab.open_dynamics.solve_ivp")
def test_integrator_failure_is_reported(mock_solve):
    mock_solve.return_value = SimpleNamespace(
        success=False, t=np.array([0.0, 0.25]), message="step size too small", nfev=12
    )
    model = assemble_generator(single_site())
    with pytest.raises(IntegrationError) as excinfo:
        evolve(model, model.initial_state(), [0.0, 1.0], SETTINGS)
    assert excinfo.value.time == 0.25


def test_implicit_methods_receive_the_jacobian():
    model = assemble_generator(single_site())
    settings = IntegratorSettings(method="Radau", rtol=1e-8, atol=1e-10)
    result = evolve(model, model.initial_state(), [0.0, 1.0], settings)
    assert result.final_efficiency == pytest.approx(1.0 - np.exp(-1.0), abs=1e-6)


def test_trajectory_table_columns():
    model = assemble_generator(build_fully_connected(2, 0.0, J_CM1, sink_site=2))
    header, rows = trajectory_table(evolve(model, model.initial_state(), [0.0, 1.0], SETTINGS))
    assert header == ["time_ps", "p_site_1", "p_site_2", "p_sink", "p_ground", "coherence_l1"]
    assert rows[0][:3] == pytest.approx([0.0, 1.0, 0.0], abs=1e-12)
    assert len(rows) == 2


def test_coherent_asymptote_of_fully_connected_network():
    net = build_fully_connected(4, 0.0, J_CM1, sink_site=4)
    model = assemble_generator(net)
    assert asymptotic_sink_population(model, model.initial_state()) == pytest.approx(
        1.0 / 3.0, abs=1e-6
    )


def test_dephasing_releases_trapped_population():
    net = build_fully_connected(4, 0.0, J_CM1, sink_site=4, dephasing_rate=1.0)
    model = assemble_generator(net)
    assert asymptotic_sink_population(model, model.initial_state()) == pytest.approx(1.0, abs=1e-6)


def test_asymptote_cross_validation():
    model = assemble_generator(single_site(sink_rate=1.0))
    value = asymptotic_sink_population(
        model, model.initial_state(), cross_validate=True, settings=SETTINGS
    )
    assert value == pytest.approx(1.0, abs=1e-8)


def test_asymptote_requires_a_sink():
    model = assemble_generator(single_site(sink_rate=0.0))
    with pytest.raises(LabValidationError, match="positive sink rate"):
        asymptotic_sink_population(model, model.initial_state())


def test_slowest_decay_rate_of_a_trapping_site():
    model = assemble_generator(single_site(sink_rate=1.0))
    assert slowest_decay_rate(model) == pytest.approx(0.5)


def test_slowest_decay_rate_needs_a_decaying_mode():
    model = assemble_generator(single_site(sink_rate=0.0))
    with pytest.raises(NullSpaceError, match="no decaying modes"):
        slowest_decay_rate(model)


def test_cross_validation_reaches_the_slow_bright_mode():
    net = build_fully_connected(8, 0.0, J_CM1, sink_site=8)
    model = assemble_generator(net)
    value = asymptotic_sink_population(
        model, model.initial_state(), cross_validate=True, settings=SETTINGS
    )
    assert value == pytest.approx(1.0 / 7.0, abs=1e-6)


def test_cross_validation_rejects_a_disagreeing_integration(monkeypatch):
    monkeypatch.setattr("exciton_lab.open_dynamics._long_time_sink_population", lambda *a: 0.5)
    model = assemble_generator(single_site(sink_rate=1.0))
    with pytest.raises(NullSpaceError):
        asymptotic_sink_population(model, model.initial_state(), cross_validate=True)


def dimer(detuning_cm1=0.0):
    couplings = [[0.0, J_CM1], [J_CM1, 0.0]]
    return ExcitonNetwork([0.0, detuning_cm1], couplings, np.zeros(2), np.zeros(2), 2, 0.0)


def test_resonant_dimer_oscillates_fully():
    model = assemble_generator(dimer())
    times = np.linspace(0.0, 3.0, 13)
    result = evolve(model, model.initial_state(), times, SETTINGS)
    np.testing.assert_allclose(result.site_populations[1], np.sin(times) ** 2, atol=1e-8)


def test_detuned_dimer_transfers_partially():
    model = assemble_generator(dimer(detuning_cm1=2.0 * J_CM1))
    times = np.linspace(0.0, 3.0, 13)
    result = evolve(model, model.initial_state(), times, SETTINGS)
    amplitude = 4.0 / (4.0 + 2.0**2)
    expected = amplitude * np.sin(0.5 * np.sqrt(8.0) * times) ** 2
    np.testing.assert_allclose(result.site_populations[1], expected, atol=1e-8)


@pytest.mark.parametrize(
    "net",
    [
        load_config(CONFIG_DIR / "transport_sweep.json").block.network.build(),
        load_config(CONFIG_DIR / "transport_disorder.json").block.network.build(),
        build_fully_connected(6, 0.0, J_CM1, sink_site=6),
    ],
    ids=["transport_sweep", "transport_disorder", "fully_connected_6"],
)
def test_coherent_asymptote_is_the_bright_weight(net):
    model = assemble_generator(without_noise(net))
    value = asymptotic_sink_population(model, model.initial_state())
    assert value == pytest.approx(1.0 - dark_population(net), abs=1e-8)
