"""Single-excitation exciton networks and their dark (trapping) subspaces.

Energies and couplings are stored in cm⁻¹, rates in ps⁻¹. Hamiltonians handed to the dynamics
are converted once, via :data:`CM1_TO_RAD_PER_PS`, to angular frequency in rad/ps.
Site indices in the public API are 1-based.
"""

import json
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import null_space

from exciton_lab.errors import LabValidationError
from exciton_lab.quantum_core import hermitian_eigensystem
from exciton_lab.utils.setup_logger import setup_logger
from exciton_lab.utils.types import validate_dict

logger = setup_logger(__name__)

# 2πc with c in cm/ps: an energy of 1 cm⁻¹ corresponds to 0.188 rad/ps.
CM1_TO_RAD_PER_PS = 2.0 * np.pi * 2.99792458e-2

FMO_DATA_FILE = "fmo7_adolphs_renger.json"
FMO_SITES = 7

DEGENERACY_RTOL = 1e-8
SYMMETRY_ATOL = 1e-12

NETWORK_KEYS = [
    "n_sites",
    "energies_cm1",
    "couplings_cm1",
    "dephasing_rates",
    "dissipation_rates",
    "sink_site",
    "sink_rate",
    "initial_site",
]


def _vector(values: ArrayLike, name: str, length: int) -> NDArray[np.float64]:
    array = np.array(values, dtype=np.float64).reshape(-1)
    if array.shape != (length,):
        raise LabValidationError(f"{name} must have length {length}, got {array.size}")
    if not np.all(np.isfinite(array)):
        raise LabValidationError(f"{name} contains non-finite values")
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class ExcitonNetwork:
    """N-site network in the single-excitation manifold, wired to a sink.

    Attributes:
        site_energies: Site energies ε_j in cm⁻¹.
        couplings: Real symmetric coupling matrix in cm⁻¹ with zero diagonal.
        dephasing_rates: Per-site pure dephasing rates γ_j in ps⁻¹.
        dissipation_rates: Per-site decay rates κ_j to the ground state in ps⁻¹.
        sink_site: 1-based index of the site feeding the sink.
        sink_rate: Irreversible transfer rate Γ into the sink in ps⁻¹.
        initial_site: 1-based index of the initially excited site.

    """

    site_energies: NDArray[np.float64]
    couplings: NDArray[np.float64]
    dephasing_rates: NDArray[np.float64]
    dissipation_rates: NDArray[np.float64]
    sink_site: int
    sink_rate: float
    initial_site: int = 1

    def __post_init__(self) -> None:
        energies = np.array(self.site_energies, dtype=np.float64).reshape(-1)
        n = energies.size
        if n < 1:
            raise LabValidationError("network needs at least one site")
        object.__setattr__(self, "site_energies", _vector(energies, "site_energies", n))

        couplings = np.array(self.couplings, dtype=np.float64)
        if couplings.shape != (n, n):
            raise LabValidationError(f"couplings must be {n}×{n}, got {couplings.shape}")
        if not np.all(np.isfinite(couplings)):
            raise LabValidationError("couplings contain non-finite values")
        if not np.allclose(couplings, couplings.T, rtol=0.0, atol=SYMMETRY_ATOL):
            raise LabValidationError("couplings must be symmetric")
        if np.any(np.abs(np.diag(couplings)) > SYMMETRY_ATOL):
            raise LabValidationError("couplings must have a zero diagonal")
        couplings = 0.5 * (couplings + couplings.T)
        np.fill_diagonal(couplings, 0.0)
        couplings.flags.writeable = False
        object.__setattr__(self, "couplings", couplings)

        for name in ("dephasing_rates", "dissipation_rates"):
            rates = _vector(getattr(self, name), name, n)
            if np.any(rates < 0.0):
                raise LabValidationError(f"{name} must be non-negative")
            object.__setattr__(self, name, rates)

        if self.sink_rate < 0.0 or not np.isfinite(self.sink_rate):
            raise LabValidationError(f"sink_rate must be non-negative, got {self.sink_rate}")
        object.__setattr__(self, "sink_rate", float(self.sink_rate))
        for name in ("sink_site", "initial_site"):
            index = getattr(self, name)
            if int(index) != index or not 1 <= index <= n:
                raise LabValidationError(f"{name} must be in 1..{n}, got {index}")
            object.__setattr__(self, name, int(index))

    @property
    def n_sites(self) -> int:
        return int(self.site_energies.size)

    def energy_matrix(self) -> NDArray[np.float64]:
        """Site-basis Hamiltonian diag(ε) + J in cm⁻¹."""
        return np.diag(self.site_energies) + self.couplings

    def hamiltonian(self) -> NDArray[np.float64]:
        """Site-basis Hamiltonian in rad/ps, energies measured from their mean."""
        centered = self.site_energies - self.site_energies.mean()
        return CM1_TO_RAD_PER_PS * (np.diag(centered) + self.couplings)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ExcitonNetwork):
            return NotImplemented
        return (
            self.n_sites == other.n_sites
            and np.array_equal(self.site_energies, other.site_energies)
            and np.array_equal(self.couplings, other.couplings)
            and np.array_equal(self.dephasing_rates, other.dephasing_rates)
            and np.array_equal(self.dissipation_rates, other.dissipation_rates)
            and self.sink_site == other.sink_site
            and self.sink_rate == other.sink_rate
            and self.initial_site == other.initial_site
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class DarkSubspace:
    """Orthonormal basis (columns) of single-excitation states that never reach the sink site."""

    basis: NDArray[np.complex128]

    @property
    def dimension(self) -> int:
        return int(self.basis.shape[1])

    def projector(self) -> NDArray[np.complex128]:
        return self.basis @ self.basis.conj().T

    def population(self, state: ArrayLike) -> float:
        """‖P_dark ψ‖² for a site-basis state vector."""
        psi = np.asarray(state, dtype=np.complex128).reshape(-1)
        return float(np.linalg.norm(self.basis.conj().T @ psi) ** 2)


def build_fully_connected(
    n: int,
    energy: float,
    coupling: float,
    sink_site: int,
    *,
    sink_rate: float = 1.0,
    initial_site: int = 1,
    dephasing_rate: float = 0.0,
    dissipation_rate: float = 0.0,
) -> ExcitonNetwork:
    """Complete graph with equal site energies and equal couplings J.

    Args:
        n (int): Number of sites, at least 2.
        energy (float): Common site energy in cm⁻¹.
        coupling (float): Common coupling J in cm⁻¹, non-zero.
        sink_site (int): 1-based sink site.
        sink_rate (float): Γ in ps⁻¹.
        initial_site (int): 1-based initially excited site.
        dephasing_rate (float): Uniform dephasing rate in ps⁻¹.
        dissipation_rate (float): Uniform dissipation rate in ps⁻¹.

    Returns:
        ExcitonNetwork: The fully connected network.

    Raises:
        LabValidationError: If n < 2 or J = 0.

    """
    if n < 2:
        raise LabValidationError(f"a fully connected network needs n >= 2, got {n}")
    if coupling == 0.0:
        raise LabValidationError("coupling J must be non-zero")
    couplings = np.full((n, n), float(coupling))
    np.fill_diagonal(couplings, 0.0)
    return ExcitonNetwork(
        site_energies=np.full(n, float(energy)),
        couplings=couplings,
        dephasing_rates=np.full(n, float(dephasing_rate)),
        dissipation_rates=np.full(n, float(dissipation_rate)),
        sink_site=sink_site,
        sink_rate=sink_rate,
        initial_site=initial_site,
    )


def network_from_dict(payload: dict[str, Any]) -> ExcitonNetwork:
    """Parse the network JSON schema.

    Raises:
        LabValidationError: On missing keys or inconsistent sizes.

    """
    if not isinstance(payload, dict) or not validate_dict(payload, NETWORK_KEYS):
        missing = [k for k in NETWORK_KEYS if not isinstance(payload, dict) or k not in payload]
        raise LabValidationError(f"network payload missing keys: {missing}")
    n = payload["n_sites"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise LabValidationError(f"n_sites must be a positive integer, got {n!r}")
    try:
        energies = _vector(payload["energies_cm1"], "energies_cm1", n)
        couplings = np.array(payload["couplings_cm1"], dtype=np.float64)
        return ExcitonNetwork(
            site_energies=energies,
            couplings=couplings,
            dephasing_rates=payload["dephasing_rates"],
            dissipation_rates=payload["dissipation_rates"],
            sink_site=payload["sink_site"],
            sink_rate=float(payload["sink_rate"]),
            initial_site=payload["initial_site"],
        )
    except (TypeError, ValueError) as e:
        if isinstance(e, LabValidationError):
            raise
        raise LabValidationError(f"malformed network payload: {e}") from e


def network_to_dict(net: ExcitonNetwork) -> dict[str, Any]:
    """Serialize a network to the JSON schema."""
    return {
        "n_sites": net.n_sites,
        "energies_cm1": net.site_energies.tolist(),
        "couplings_cm1": net.couplings.tolist(),
        "dephasing_rates": net.dephasing_rates.tolist(),
        "dissipation_rates": net.dissipation_rates.tolist(),
        "sink_site": net.sink_site,
        "sink_rate": net.sink_rate,
        "initial_site": net.initial_site,
    }


def load_network(path: str | Path) -> ExcitonNetwork:
    """Read a network JSON file.

    Raises:
        LabValidationError: If the file is missing, not JSON, or not a valid network.

    """
    try:
        with open(path, encoding="utf-8") as handle:
            payload = json.load(handle)
    except FileNotFoundError as e:
        raise LabValidationError(f"network file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise LabValidationError(
            f"network file {path} is not valid JSON (line {e.lineno}, column {e.colno})"
        ) from e
    return network_from_dict(payload)


def save_network(net: ExcitonNetwork, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(network_to_dict(net), handle, indent=2)


def build_fmo7(params: str | Path | None = None) -> ExcitonNetwork:
    """Load the 7-site FMO network, sink at site 3 and excitation injected at site 1.

    Args:
        params (str | Path | None): Hamiltonian data file; the bundled literature file
            when omitted.

    Returns:
        ExcitonNetwork: The FMO network.

    Raises:
        LabValidationError: If the file is missing or does not describe 7 sites.

    """
    if params is None:
        source = resources.files("exciton_lab").joinpath("data", FMO_DATA_FILE)
        payload = json.loads(source.read_text(encoding="utf-8"))
        net = network_from_dict(payload)
    else:
        net = load_network(params)
    if net.n_sites != FMO_SITES:
        raise LabValidationError(f"FMO data must describe {FMO_SITES} sites, got {net.n_sites}")
    logger.debug("📄 Loaded FMO network from %s", params or FMO_DATA_FILE)
    return replace(net, sink_site=3, initial_site=1)


def apply_static_disorder(
    net: ExcitonNetwork,
    offsets: ArrayLike | None = None,
    *,
    sigma: float | None = None,
    seed: int | None = None,
) -> ExcitonNetwork:
    """Shift site energies by explicit offsets or by seeded Gaussian noise.

    Args:
        net (ExcitonNetwork): Network to perturb.
        offsets (ArrayLike | None): Per-site offsets in cm⁻¹.
        sigma (float | None): Standard deviation in cm⁻¹ of i.i.d. Gaussian offsets.
        seed (int | None): Required with ``sigma``.

    Returns:
        ExcitonNetwork: Network with shifted energies and untouched couplings.

    Raises:
        LabValidationError: On length mismatch or missing generator parameters.

    """
    if offsets is None:
        if sigma is None or seed is None:
            raise LabValidationError("static disorder needs offsets, or both sigma and seed")
        if sigma < 0.0:
            raise LabValidationError(f"sigma must be non-negative, got {sigma}")
        shifts = np.random.default_rng(seed).normal(0.0, sigma, net.n_sites)
    else:
        shifts = np.array(offsets, dtype=np.float64).reshape(-1)
        if shifts.size != net.n_sites:
            raise LabValidationError(
                f"offsets must have length {net.n_sites}, got {shifts.size}"
            )
    return replace(net, site_energies=net.site_energies + shifts)


def with_dephasing(
    net: ExcitonNetwork, rates: float | ArrayLike, sites: list[int] | None = None
) -> ExcitonNetwork:
    """Return the network with new dephasing rates.

    A scalar rate is applied to every site, or only to ``sites`` (1-based) with zero
    dephasing elsewhere. A vector gives per-site rates directly.
    """
    if np.ndim(rates) == 0:
        rate = float(rates)  # type: ignore[arg-type]
        if sites is None:
            new_rates = np.full(net.n_sites, rate)
        else:
            new_rates = np.zeros(net.n_sites)
            for site in sites:
                if not 1 <= site <= net.n_sites:
                    raise LabValidationError(f"site {site} outside 1..{net.n_sites}")
                new_rates[site - 1] = rate
    else:
        if sites is not None:
            raise LabValidationError("per-site rate vectors cannot be combined with a site list")
        new_rates = np.array(rates, dtype=np.float64)
    return replace(net, dephasing_rates=new_rates)


def without_noise(net: ExcitonNetwork) -> ExcitonNetwork:
    """Return the network with dephasing and dissipation switched off."""
    zeros = np.zeros(net.n_sites)
    return replace(net, dephasing_rates=zeros, dissipation_rates=zeros)


def hybrid_basis(net: ExcitonNetwork, i: int, j: int) -> tuple[ExcitonNetwork, float]:
    """Diagonalize the 2×2 block of sites i, j into hybrid levels |+⟩, |−⟩.

    With θ = ½·atan2(2J_ij, ε_i − ε_j), |+⟩ = cos θ|i⟩ + sin θ|j⟩ replaces site i and
    |−⟩ = −sin θ|i⟩ + cos θ|j⟩ replaces site j. Remaining couplings are rotated accordingly;
    rates and sink wiring are carried over unchanged.

    Returns:
        tuple: Transformed network and the mixing angle θ in radians.

    Raises:
        LabValidationError: If i = j or an index is out of range.

    """
    n = net.n_sites
    if i == j:
        raise LabValidationError("hybrid basis needs two distinct sites")
    for index in (i, j):
        if not 1 <= index <= n:
            raise LabValidationError(f"site {index} outside 1..{n}")
    a, b = i - 1, j - 1
    coupling = net.couplings[a, b]
    if coupling == 0.0:
        return net, 0.0

    theta = 0.5 * float(np.arctan2(2.0 * coupling, net.site_energies[a] - net.site_energies[b]))
    rotation = np.eye(n)
    rotation[a, a] = rotation[b, b] = np.cos(theta)
    rotation[a, b] = np.sin(theta)
    rotation[b, a] = -np.sin(theta)
    transformed = rotation @ net.energy_matrix() @ rotation.T
    transformed = 0.5 * (transformed + transformed.T)
    transformed[a, b] = transformed[b, a] = 0.0

    couplings = transformed - np.diag(np.diag(transformed))
    hybrid = replace(net, site_energies=np.diag(transformed).copy(), couplings=couplings)
    logger.debug("🔀 Hybrid basis for sites %d,%d: angle %.6f rad", i, j, theta)
    return hybrid, theta


def _eigen_clusters(values: NDArray[np.float64]) -> list[NDArray[np.intp]]:
    scale = max(1.0, float(np.max(np.abs(values))))
    breaks = np.flatnonzero(np.diff(values) > DEGENERACY_RTOL * scale) + 1
    return np.split(np.arange(values.size), breaks)


def dark_subspace(net: ExcitonNetwork) -> DarkSubspace:
    """States with zero amplitude on the sink site at all times under coherent evolution.

    In every (numerically clustered) eigenspace Q of the site Hamiltonian the component
    along Q†|s⟩ couples to the sink; its orthogonal complement inside Q is dark.
    """
    values, vectors = hermitian_eigensystem(net.energy_matrix())
    sink_index = net.sink_site - 1
    dark_columns: list[NDArray[np.complex128]] = []

    for cluster in _eigen_clusters(values):
        block = vectors[:, cluster]
        amplitudes = block[sink_index, :]
        if np.linalg.norm(amplitudes) < 1e-12:
            dark_columns.append(block)
            continue
        complement = null_space(amplitudes[None, :])
        if complement.shape[1]:
            dark_columns.append(block @ complement)

    if dark_columns:
        basis = np.hstack(dark_columns)
        # Re-orthonormalize across clusters split by round-off.
        basis, _ = np.linalg.qr(basis)
    else:
        basis = np.zeros((net.n_sites, 0), dtype=np.complex128)
    return DarkSubspace(basis=basis.astype(np.complex128))


def dark_population(net: ExcitonNetwork) -> float:
    """Weight ‖P_dark|initial⟩‖² of the initial site on the dark subspace."""
    initial = np.zeros(net.n_sites)
    initial[net.initial_site - 1] = 1.0
    return dark_subspace(net).population(initial)
