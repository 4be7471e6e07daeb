"""Experiment configuration files for the batch runner.

A config is a JSON object naming the experiment, an output directory, an optional seed and
worker count, and exactly one parameter block keyed by the experiment name::

    {"experiment": "scaling", "output_dir": "results/scaling",
     "scaling": {"n_sites": [3, 4, 5], "coupling_cm1": 5.3}}

Every problem is reported as a :class:`ConfigValidationError` with the dotted path of the
offending field and, where it can be located, the line and column in the file.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from exciton_lab import config
from exciton_lab.chain_mapping import SpectralDensity
from exciton_lab.errors import ConfigValidationError, LabValidationError
from exciton_lab.network_model import (
    ExcitonNetwork,
    build_fmo7,
    build_fully_connected,
    load_network,
)
from exciton_lab.transport_lab import FmoSettings
from exciton_lab.utils.types import ExperimentKind

TOP_LEVEL_KEYS = {"experiment", "output_dir", "seed", "workers"}
BLOCK_NAMES = tuple(kind.value for kind in ExperimentKind)
NETWORK_KINDS = ("fully_connected", "fmo", "file")
FAMILY_KINDS = ("unitary", "dephasing", "amplitude_damping", "random_unitary_mixture")


@dataclass(frozen=True)
class NetworkSpec:
    """How a transport experiment obtains its network."""

    kind: str
    n_sites: int = 0
    energy_cm1: float = 0.0
    coupling_cm1: float = 0.0
    sink_site: int = 0
    sink_rate: float = 1.0
    initial_site: int = 1
    dissipation_rate: float = 0.0
    path: Path | None = None

    def build(self) -> ExcitonNetwork:
        if self.kind == "fmo":
            return build_fmo7(self.path)
        if self.kind == "file":
            return load_network(self.path)  # type: ignore[arg-type]
        return build_fully_connected(
            self.n_sites,
            self.energy_cm1,
            self.coupling_cm1,
            self.sink_site,
            sink_rate=self.sink_rate,
            initial_site=self.initial_site,
            dissipation_rate=self.dissipation_rate,
        )


@dataclass(frozen=True)
class DisorderSpec:
    sigma_cm1: float
    realizations: int


@dataclass(frozen=True)
class TransportSweepConfig:
    network: NetworkSpec
    time_ps: float
    gamma_min: float
    gamma_max: float
    points: int
    sites: tuple[int, ...] | None = None
    optimize: bool = True
    disorder: DisorderSpec | None = None


@dataclass(frozen=True)
class ScalingConfig:
    n_sites: tuple[int, ...]
    coupling_cm1: float
    energy_cm1: float = 0.0
    sink_rate: float = 1.0


@dataclass(frozen=True)
class ChainmapConfig:
    spectral_density: SpectralDensity
    n_max: int
    star_modes: int
    n_fock: int
    gap: float
    tunneling: float
    t_max: float
    t_points: int


@dataclass(frozen=True)
class ChannelFamilySpec:
    """Generated family of maps Φ_t sampled at ``times``."""

    kind: str
    rate: float
    times: tuple[float, ...]
    terms: int = 2


@dataclass(frozen=True)
class ClassifyConfig:
    snapshots: Path | None = None
    family: ChannelFamilySpec | None = None
    project_cp: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment configuration.

    Attributes:
        experiment: Experiment to run.
        output_dir: Directory receiving artifacts and report.json.
        seed: Seed for stochastic elements, if any.
        workers: Worker pool size override.
        block: Parsed parameter block of the experiment.
        raw: The config document as read, echoed into the run report.

    """

    experiment: ExperimentKind
    output_dir: Path
    seed: int | None
    workers: int | None
    block: Any
    raw: dict[str, Any]


class _Block:
    """Typed field access on one JSON object, reporting errors by dotted path."""

    def __init__(self, data: Any, path: str, text: str) -> None:
        if not isinstance(data, dict):
            raise ConfigValidationError("expected a JSON object", field=path or None)
        self.data = data
        self.path = path
        self.text = text

    def _field(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def fail(self, key: str, message: str) -> ConfigValidationError:
        line, column = _locate(self.text, key)
        return ConfigValidationError(message, field=self._field(key), line=line, column=column)

    def reject_unknown(self, allowed: set[str]) -> None:
        for key in self.data:
            if key not in allowed:
                raise self.fail(key, f"unknown field; expected one of {sorted(allowed)}")

    def has(self, key: str) -> bool:
        return self.data.get(key) is not None

    def child(self, key: str) -> "_Block":
        if key not in self.data:
            raise self.fail(key, "missing required object")
        return _Block(self.data[key], self._field(key), self.text)

    def number(
        self,
        key: str,
        default: float | None = None,
        *,
        minimum: float | None = None,
        strict: bool = False,
    ) -> float:
        value = self.data.get(key, default)
        if value is None:
            raise self.fail(key, "missing required number")
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.fail(key, f"expected a number, got {value!r}")
        if minimum is not None and (value <= minimum if strict else value < minimum):
            raise self.fail(key, f"must be {'>' if strict else '>='} {minimum}, got {value}")
        return float(value)

    def integer(self, key: str, default: int | None = None, *, minimum: int | None = None) -> int:
        value = self.data.get(key, default)
        if value is None:
            raise self.fail(key, "missing required integer")
        if isinstance(value, bool) or not isinstance(value, int):
            raise self.fail(key, f"expected an integer, got {value!r}")
        if minimum is not None and value < minimum:
            raise self.fail(key, f"must be >= {minimum}, got {value}")
        return value

    def boolean(self, key: str, default: bool) -> bool:
        value = self.data.get(key, default)
        if not isinstance(value, bool):
            raise self.fail(key, f"expected true or false, got {value!r}")
        return value

    def string(self, key: str, default: str | None = None, *, choices: tuple[str, ...] = ()) -> str:
        value = self.data.get(key, default)
        if not isinstance(value, str) or not value:
            raise self.fail(key, "expected a non-empty string")
        if choices and value not in choices:
            raise self.fail(key, f"expected one of {list(choices)}, got {value!r}")
        return value

    def numbers(self, key: str, *, minimum: float | None = None) -> tuple[float, ...]:
        value = self.data.get(key)
        if not isinstance(value, list) or not value:
            raise self.fail(key, "expected a non-empty list of numbers")
        items = _Block({str(i): v for i, v in enumerate(value)}, self._field(key), self.text)
        return tuple(items.number(str(i), minimum=minimum) for i in range(len(value)))

    def integers(self, key: str, *, minimum: int | None = None) -> tuple[int, ...]:
        value = self.data.get(key)
        if not isinstance(value, list) or not value:
            raise self.fail(key, "expected a non-empty list of integers")
        items = _Block({str(i): v for i, v in enumerate(value)}, self._field(key), self.text)
        return tuple(items.integer(str(i), minimum=minimum) for i in range(len(value)))

    def path_value(self, key: str, base: Path) -> Path:
        candidate = Path(self.string(key))
        return candidate if candidate.is_absolute() else base / candidate


def _locate(text: str, key: str) -> tuple[int | None, int | None]:
    """Line and column of the first occurrence of ``"key"`` in the document."""
    index = text.find(f'"{key}"')
    if index < 0:
        return None, None
    line = text.count("\n", 0, index) + 1
    column = index - (text.rfind("\n", 0, index) + 1) + 1
    return line, column


def _network(block: _Block, base: Path) -> NetworkSpec:
    kind = block.string("kind", choices=NETWORK_KINDS)
    if kind == "fmo":
        block.reject_unknown({"kind", "path"})
        path = block.path_value("path", base) if block.has("path") else None
        return NetworkSpec(kind="fmo", path=path)
    if kind == "file":
        block.reject_unknown({"kind", "path"})
        return NetworkSpec(kind="file", path=block.path_value("path", base))
    block.reject_unknown(
        {
            "kind",
            "n_sites",
            "energy_cm1",
            "coupling_cm1",
            "sink_site",
            "sink_rate",
            "initial_site",
            "dissipation_rate",
        }
    )
    n_sites = block.integer("n_sites", minimum=1)
    sink_site = block.integer("sink_site", n_sites, minimum=1)
    initial_site = block.integer("initial_site", 1, minimum=1)
    if sink_site > n_sites:
        raise block.fail("sink_site", f"must lie in 1..{n_sites}")
    if initial_site > n_sites:
        raise block.fail("initial_site", f"must lie in 1..{n_sites}")
    return NetworkSpec(
        kind="fully_connected",
        n_sites=n_sites,
        energy_cm1=block.number("energy_cm1", 0.0),
        coupling_cm1=block.number("coupling_cm1"),
        sink_site=sink_site,
        sink_rate=block.number("sink_rate", 1.0, minimum=0.0),
        initial_site=initial_site,
        dissipation_rate=block.number("dissipation_rate", 0.0, minimum=0.0),
    )


def _transport_sweep(block: _Block, base: Path) -> TransportSweepConfig:
    block.reject_unknown(
        {"network", "time_ps", "gamma_min", "gamma_max", "points", "sites", "optimize", "disorder"}
    )
    gamma_min = block.number("gamma_min", minimum=0.0, strict=True)
    gamma_max = block.number("gamma_max", minimum=0.0, strict=True)
    if gamma_max < gamma_min:
        raise block.fail("gamma_max", "must be >= gamma_min")
    disorder = None
    if block.has("disorder"):
        spec = block.child("disorder")
        spec.reject_unknown({"sigma_cm1", "realizations"})
        disorder = DisorderSpec(
            sigma_cm1=spec.number("sigma_cm1", minimum=0.0),
            realizations=spec.integer("realizations", minimum=1),
        )
    return TransportSweepConfig(
        network=_network(block.child("network"), base),
        time_ps=block.number("time_ps", minimum=0.0, strict=True),
        gamma_min=gamma_min,
        gamma_max=gamma_max,
        points=block.integer("points", config.default_sweep_points(), minimum=1),
        sites=block.integers("sites", minimum=1) if block.has("sites") else None,
        optimize=block.boolean("optimize", True),
        disorder=disorder,
    )


def _scaling(block: _Block, base: Path) -> ScalingConfig:
    block.reject_unknown({"n_sites", "coupling_cm1", "energy_cm1", "sink_rate"})
    return ScalingConfig(
        n_sites=block.integers("n_sites", minimum=3),
        coupling_cm1=block.number("coupling_cm1"),
        energy_cm1=block.number("energy_cm1", 0.0),
        sink_rate=block.number("sink_rate", 1.0, minimum=0.0, strict=True),
    )


def _fmo(block: _Block, base: Path) -> FmoSettings:
    block.reject_unknown(
        {
            "time_ps",
            "sink_rate",
            "trajectory_points",
            "gamma_bracket",
            "sweep_points",
            "dephasing_rates",
            "hamiltonian_file",
        }
    )
    bracket = config.default_fmo_bracket()
    if block.has("gamma_bracket"):
        bracket = block.numbers("gamma_bracket", minimum=0.0)  # type: ignore[assignment]
        if len(bracket) != 2 or bracket[0] <= 0.0 or bracket[1] < bracket[0]:
            raise block.fail("gamma_bracket", "expected [gamma_lo, gamma_hi] with 0 < lo <= hi")
    rates = None
    if block.has("dephasing_rates"):
        rates = block.numbers("dephasing_rates", minimum=0.0)
        if len(rates) != 7:
            raise block.fail("dephasing_rates", "expected one rate per FMO site (7)")
    hamiltonian = None
    if block.has("hamiltonian_file"):
        hamiltonian = str(block.path_value("hamiltonian_file", base))
    return FmoSettings(
        time_ps=block.number("time_ps", config.FMO_TIME_PS, minimum=0.0, strict=True),
        sink_rate=block.number("sink_rate", config.FMO_SINK_RATE, minimum=0.0, strict=True),
        trajectory_points=block.integer(
            "trajectory_points", config.FMO_TRAJECTORY_POINTS, minimum=2
        ),
        gamma_bracket=(float(bracket[0]), float(bracket[1])),
        sweep_points=block.integer("sweep_points", config.default_sweep_points(), minimum=1),
        dephasing_rates=rates,
        hamiltonian_file=hamiltonian,
    )


def _spectral_density(block: _Block, base: Path) -> SpectralDensity:
    kind = block.string("kind", choices=("flat", "power_law", "tabulated"))
    try:
        if kind == "flat":
            block.reject_unknown({"kind", "lo", "hi", "height"})
            return SpectralDensity.flat(
                block.number("lo", 0.0), block.number("hi", 1.0), block.number("height", 1.0)
            )
        if kind == "power_law":
            block.reject_unknown({"kind", "exponent", "cutoff", "prefactor"})
            return SpectralDensity.power_law(
                block.number("exponent", 1.0),
                block.number("cutoff", 1.0),
                block.number("prefactor", 1.0),
            )
        block.reject_unknown({"kind", "path"})
        return SpectralDensity.from_csv(block.path_value("path", base))
    except ConfigValidationError:
        raise
    except LabValidationError as e:
        raise block.fail("kind", str(e)) from e


def _chainmap(block: _Block, base: Path) -> ChainmapConfig:
    block.reject_unknown(
        {
            "spectral_density",
            "n_max",
            "star_modes",
            "n_fock",
            "gap",
            "tunneling",
            "t_max",
            "t_points",
        }
    )
    return ChainmapConfig(
        spectral_density=_spectral_density(block.child("spectral_density"), base),
        n_max=block.integer("n_max", 20, minimum=1),
        star_modes=block.integer("star_modes", config.DEFAULT_STAR_MODES, minimum=1),
        n_fock=block.integer("n_fock", config.DEFAULT_N_FOCK, minimum=2),
        gap=block.number("gap", 1.0),
        tunneling=block.number("tunneling", 0.5),
        t_max=block.number("t_max", 10.0, minimum=0.0, strict=True),
        t_points=block.integer("t_points", 101, minimum=2),
    )


def _classify(block: _Block, base: Path) -> ClassifyConfig:
    block.reject_unknown({"snapshots", "family", "project_cp"})
    if block.has("snapshots") == block.has("family"):
        raise ConfigValidationError(
            "exactly one of 'snapshots' or 'family' is required", field=block.path
        )
    family = None
    if block.has("family"):
        spec = block.child("family")
        spec.reject_unknown({"kind", "rate", "times", "terms"})
        times = spec.numbers("times", minimum=0.0)
        if len(times) < 2 or any(b <= a for a, b in zip(times, times[1:])):
            raise spec.fail("times", "expected at least two strictly increasing times")
        family = ChannelFamilySpec(
            kind=spec.string("kind", choices=FAMILY_KINDS),
            rate=spec.number("rate", 1.0, minimum=0.0),
            times=times,
            terms=spec.integer("terms", 2, minimum=1),
        )
    return ClassifyConfig(
        snapshots=block.path_value("snapshots", base) if block.has("snapshots") else None,
        family=family,
        project_cp=block.boolean("project_cp", False),
    )


_BLOCK_PARSERS = {
    ExperimentKind.TRANSPORT_SWEEP: _transport_sweep,
    ExperimentKind.SCALING: _scaling,
    ExperimentKind.FMO: _fmo,
    ExperimentKind.CHAINMAP: _chainmap,
    ExperimentKind.CLASSIFY: _classify,
}


def _needs_seed(kind: ExperimentKind, block: Any) -> bool:
    if kind is ExperimentKind.TRANSPORT_SWEEP:
        return block.disorder is not None
    if kind is ExperimentKind.CLASSIFY:
        return block.family is not None and block.family.kind == "random_unitary_mixture"
    return False


def parse_config(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    """Validate a config document.

    Args:
        text (str): JSON document.
        base_dir (Path | None): Directory that relative paths in the document refer to.

    Returns:
        ExperimentConfig: Validated configuration.

    Raises:
        ConfigValidationError: On malformed JSON or any invalid field.

    """
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigValidationError(e.msg, line=e.lineno, column=e.colno) from e
    base = base_dir or Path.cwd()
    root = _Block(payload, "", text)

    blocks = [name for name in BLOCK_NAMES if name in payload]
    if len(blocks) != 1:
        raise ConfigValidationError(
            f"exactly one experiment block is required, found {len(blocks)}: {blocks}"
        )
    root.reject_unknown(TOP_LEVEL_KEYS | set(BLOCK_NAMES))
    kind = ExperimentKind(root.string("experiment", choices=BLOCK_NAMES))
    if blocks[0] != kind.value:
        raise root.fail(blocks[0], f"block does not match experiment '{kind.value}'")

    seed = root.integer("seed", minimum=0) if root.has("seed") else None
    workers = root.integer("workers", minimum=1) if root.has("workers") else None
    output_dir = Path(root.string("output_dir", f"results/{kind.value}"))

    block = _BLOCK_PARSERS[kind](root.child(kind.value), base)
    if seed is None and _needs_seed(kind, block):
        raise ConfigValidationError("a seed is required for stochastic experiments", field="seed")
    return ExperimentConfig(
        experiment=kind, output_dir=output_dir, seed=seed, workers=workers, block=block, raw=payload
    )


def load_config(path: str | Path) -> ExperimentConfig:
    """Read and validate a config file; relative paths inside resolve against its directory."""
    config_path = Path(path)
    try:
        text = config_path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigValidationError(f"cannot read config {config_path}: {e}") from e
    return parse_config(text, config_path.resolve().parent)
