import json

import numpy as np
import pytest
from scipy.linalg import expm

from exciton_lab.errors import LabValidationError
from exciton_lab.network_model import (
    CM1_TO_RAD_PER_PS,
    ExcitonNetwork,
    apply_static_disorder,
    build_fmo7,
    build_fully_connected,
    dark_population,
    dark_subspace,
    hybrid_basis,
    load_network,
    network_from_dict,
    network_to_dict,
    save_network,
    with_dephasing,
    without_noise,
)

pytestmark = pytest.mark.unit

J_CM1 = 1.0 / CM1_TO_RAD_PER_PS


def test_fully_connected_hamiltonian_in_rad_per_ps():
    net = build_fully_connected(4, 12000.0, J_CM1, sink_site=4)
    h = net.hamiltonian()
    np.testing.assert_allclose(np.diag(h), 0.0, atol=1e-12)
    np.testing.assert_allclose(h[0, 1:], 1.0)
    assert net.n_sites == 4
    assert net.energy_matrix()[0, 0] == 12000.0


def test_fully_connected_rejects_degenerate_input():
    with pytest.raises(LabValidationError, match="n >= 2"):
        build_fully_connected(1, 0.0, 1.0, sink_site=1)
    with pytest.raises(LabValidationError, match="non-zero"):
        build_fully_connected(3, 0.0, 0.0, sink_site=3)


def test_network_validation():
    couplings = np.array([[0.0, 1.0], [2.0, 0.0]])
    with pytest.raises(LabValidationError, match="symmetric"):
        ExcitonNetwork(np.zeros(2), couplings, np.zeros(2), np.zeros(2), 2, 1.0)
    with pytest.raises(LabValidationError, match="sink_site"):
        ExcitonNetwork(np.zeros(2), np.zeros((2, 2)), np.zeros(2), np.zeros(2), 3, 1.0)
    with pytest.raises(LabValidationError, match="non-negative"):
        ExcitonNetwork(np.zeros(2), np.zeros((2, 2)), [-1.0, 0.0], np.zeros(2), 1, 1.0)


def test_fmo_network_wiring():
    net = build_fmo7()
    assert net.n_sites == 7
    assert net.sink_site == 3
    assert net.initial_site == 1
    assert net.couplings[0, 1] == pytest.approx(-87.7)
    np.testing.assert_allclose(net.dissipation_rates, 5e-4)


def test_fmo_rejects_wrong_size(tmp_path):
    path = tmp_path / "small.json"
    save_network(build_fully_connected(3, 0.0, 1.0, sink_site=3), path)
    with pytest.raises(LabValidationError, match="7 sites"):
        build_fmo7(path)


def test_network_file_round_trip(tmp_path):
    net = with_dephasing(build_fully_connected(3, 10.0, 2.0, sink_site=2), 0.5)
    path = tmp_path / "net.json"
    save_network(net, path)
    assert load_network(path) == net
    assert network_from_dict(json.loads(path.read_text())) == net


def test_network_payload_errors(tmp_path):
    payload = network_to_dict(build_fully_connected(3, 0.0, 1.0, sink_site=3))
    del payload["sink_rate"]
    with pytest.raises(LabValidationError, match="sink_rate"):
        network_from_dict(payload)

    broken = tmp_path / "broken.json"
    broken.write_text('{"n_sites": 3,')
    with pytest.raises(LabValidationError, match="not valid JSON"):
        load_network(broken)
    with pytest.raises(LabValidationError, match="not found"):
        load_network(tmp_path / "missing.json")


def test_static_disorder_is_seeded():
    net = build_fully_connected(5, 0.0, 1.0, sink_site=5)
    a = apply_static_disorder(net, sigma=10.0, seed=3)
    b = apply_static_disorder(net, sigma=10.0, seed=3)
    assert a == b
    np.testing.assert_array_equal(a.couplings, net.couplings)
    shifted = apply_static_disorder(net, offsets=[1.0, 2.0, 3.0, 4.0, 5.0])
    np.testing.assert_allclose(shifted.site_energies, [1.0, 2.0, 3.0, 4.0, 5.0])
    with pytest.raises(LabValidationError):
        apply_static_disorder(net, sigma=1.0)
    with pytest.raises(LabValidationError, match="length"):
        apply_static_disorder(net, offsets=[1.0])


def test_with_dephasing_on_selected_sites():
    net = build_fully_connected(4, 0.0, 1.0, sink_site=4)
    np.testing.assert_allclose(with_dephasing(net, 2.0, [1, 3]).dephasing_rates, [2, 0, 2, 0])
    np.testing.assert_allclose(with_dephasing(net, [1, 2, 3, 4]).dephasing_rates, [1, 2, 3, 4])
    with pytest.raises(LabValidationError):
        with_dephasing(net, 1.0, [5])
    quiet = without_noise(with_dephasing(net, 3.0))
    assert not quiet.dephasing_rates.any()


def test_dark_subspace_of_fully_connected_network():
    net = build_fully_connected(4, 0.0, J_CM1, sink_site=4)
    dark = dark_subspace(net)
    assert dark.dimension == 2
    np.testing.assert_allclose(dark.basis[3, :], 0.0, atol=1e-12)
    assert dark_population(net) == pytest.approx(2.0 / 3.0, abs=1e-10)


def test_dark_subspace_empty_for_chain():
    couplings = np.diag([1.0, 1.0], 1) + np.diag([1.0, 1.0], -1)
    net = ExcitonNetwork([0.0, 50.0, 120.0], couplings, np.zeros(3), np.zeros(3), 3, 1.0)
    assert dark_subspace(net).dimension == 0
    assert dark_population(net) == 0.0


def test_hybrid_basis_diagonalizes_the_pair():
    net = build_fmo7()
    hybrid, angle = hybrid_basis(net, 1, 2)
    assert hybrid.couplings[0, 1] == 0.0
    pair = net.energy_matrix()[:2, :2]
    np.testing.assert_allclose(
        np.sort(hybrid.site_energies[:2]), np.linalg.eigvalsh(pair), atol=1e-9
    )
    np.testing.assert_allclose(
        np.linalg.eigvalsh(hybrid.energy_matrix()),
        np.linalg.eigvalsh(net.energy_matrix()),
        atol=1e-9,
    )
    assert angle != 0.0
    with pytest.raises(LabValidationError):
        hybrid_basis(net, 2, 2)


def test_complete_graph_spectrum():
    net = build_fully_connected(4, 100.0, 2.0, sink_site=4)
    np.testing.assert_allclose(
        np.linalg.eigvalsh(net.energy_matrix()), [98.0, 98.0, 98.0, 106.0], atol=1e-12
    )


def test_dark_states_never_reach_the_sink():
    net = build_fully_connected(5, 0.0, J_CM1, sink_site=5)
    dark = dark_subspace(net)
    assert dark.dimension == 3
    h = net.hamiltonian()
    for t in np.linspace(0.0, 20.0, 41):
        evolved = expm(-1j * h * t) @ dark.basis
        assert np.abs(evolved[4, :]).max() < 1e-8


def test_decoupled_sink_leaves_the_rest_dark():
    couplings = np.zeros((3, 3))
    couplings[0, 1] = couplings[1, 0] = 1.0
    net = ExcitonNetwork([0.0, 50.0, 120.0], couplings, np.zeros(3), np.zeros(3), 3, 1.0)
    assert dark_subspace(net).dimension == 2
    assert dark_population(net) == pytest.approx(1.0)


def test_resonant_dimer_has_no_dark_state():
    dimer = ExcitonNetwork([0.0, 0.0], [[0.0, 1.0], [1.0, 0.0]], np.zeros(2), np.zeros(2), 2, 1.0)
    assert dark_subspace(dimer).dimension == 0


def test_hybrid_basis_of_a_degenerate_pair():
    net = ExcitonNetwork(
        [100.0, 100.0, 90.0],
        [[0.0, 5.0, 1.0], [5.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
        np.zeros(3),
        np.zeros(3),
        3,
        1.0,
    )
    hybrid, angle = hybrid_basis(net, 1, 2)
    assert angle == pytest.approx(np.pi / 4)
    np.testing.assert_allclose(hybrid.site_energies[:2], [105.0, 95.0], atol=1e-12)
    np.testing.assert_allclose(hybrid.couplings[:2, 2], [np.sqrt(0.5), -np.sqrt(0.5)], atol=1e-12)


def test_hybrid_basis_of_an_uncoupled_pair():
    net = ExcitonNetwork([0.0, 10.0], np.zeros((2, 2)), np.zeros(2), np.zeros(2), 2, 1.0)
    hybrid, angle = hybrid_basis(net, 1, 2)
    assert angle == 0.0
    assert hybrid == net
