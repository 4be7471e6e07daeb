import json
from pathlib import Path

import pytest

from exciton_lab.errors import ConfigValidationError
from exciton_lab.experiment_config import load_config, parse_config
from exciton_lab.utils.types import ExperimentKind

pytestmark = pytest.mark.unit

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def scaling_doc(**overrides):
    doc = {
        "experiment": "scaling",
        "output_dir": "out",
        "scaling": {"n_sites": [3, 4], "coupling_cm1": 5.3},
    }
    doc.update(overrides)
    return doc


def parse(doc, base_dir=None):
    return parse_config(json.dumps(doc, indent=2), base_dir)


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_configs_are_valid(path):
    cfg = load_config(path)
    assert cfg.output_dir.parts[0] == "results"
    assert cfg.raw == json.loads(path.read_text())


def test_transport_sweep_defaults_and_disorder():
    cfg = load_config(CONFIG_DIR / "transport_disorder.json")
    assert cfg.experiment is ExperimentKind.TRANSPORT_SWEEP
    assert cfg.seed == 7
    block = cfg.block
    assert block.network.kind == "fully_connected"
    assert block.network.sink_site == 4
    assert block.network.initial_site == 1
    assert block.optimize is False
    assert block.disorder.realizations == 16
    assert block.network.build().n_sites == 4


def test_scaling_block():
    cfg = parse(scaling_doc(workers=2))
    assert cfg.experiment is ExperimentKind.SCALING
    assert cfg.block.n_sites == (3, 4)
    assert cfg.block.sink_rate == 1.0
    assert cfg.workers == 2
    assert cfg.seed is None
    assert cfg.output_dir == Path("out")


def test_default_output_dir():
    doc = scaling_doc()
    del doc["output_dir"]
    assert parse(doc).output_dir == Path("results/scaling")


def test_unknown_field_is_located():
    doc = scaling_doc()
    doc["scaling"]["couplings"] = 1.0
    with pytest.raises(ConfigValidationError) as excinfo:
        parse(doc)
    assert excinfo.value.field == "scaling.couplings"
    assert excinfo.value.line is not None
    assert "unknown field" in str(excinfo.value)


def test_unknown_top_level_field():
    with pytest.raises(ConfigValidationError) as excinfo:
        parse(scaling_doc(verbose=True))
    assert excinfo.value.field == "verbose"


def test_missing_experiment_block():
    doc = scaling_doc()
    del doc["scaling"]
    with pytest.raises(ConfigValidationError, match="found 0"):
        parse(doc)


def test_block_must_match_experiment():
    doc = scaling_doc(experiment="fmo")
    with pytest.raises(ConfigValidationError, match="does not match"):
        parse(doc)


def test_two_blocks_are_rejected():
    with pytest.raises(ConfigValidationError, match="found 2"):
        parse(scaling_doc(fmo={}))


def test_json_syntax_error_reports_position():
    with pytest.raises(ConfigValidationError) as excinfo:
        parse_config('{\n  "experiment": "scaling",\n  "scaling": {,}\n}')
    assert excinfo.value.line == 3
    assert excinfo.value.column is not None
    assert str(excinfo.value).startswith("line 3")


def test_document_must_be_an_object():
    with pytest.raises(ConfigValidationError, match="JSON object"):
        parse_config("[1, 2]")


@pytest.mark.parametrize(
    "field, value, message",
    [
        ("n_sites", [2, 3], ">= 3"),
        ("n_sites", [], "non-empty list"),
        ("coupling_cm1", "strong", "expected a number"),
        ("sink_rate", 0.0, "> 0.0"),
    ],
)
def test_scaling_field_validation(field, value, message):
    doc = scaling_doc()
    doc["scaling"][field] = value
    with pytest.raises(ConfigValidationError, match=message):
        parse(doc)


def test_booleans_are_not_numbers():
    doc = scaling_doc()
    doc["scaling"]["coupling_cm1"] = True
    with pytest.raises(ConfigValidationError, match="expected a number"):
        parse(doc)


def test_disorder_requires_a_seed():
    doc = json.loads((CONFIG_DIR / "transport_disorder.json").read_text())
    del doc["seed"]
    with pytest.raises(ConfigValidationError) as excinfo:
        parse(doc)
    assert excinfo.value.field == "seed"


def test_transport_gamma_order():
    doc = json.loads((CONFIG_DIR / "transport_sweep.json").read_text())
    doc["transport_sweep"]["gamma_max"] = 1e-4
    with pytest.raises(ConfigValidationError, match="gamma_min"):
        parse(doc)


def test_sink_site_outside_network():
    doc = json.loads((CONFIG_DIR / "transport_sweep.json").read_text())
    doc["transport_sweep"]["network"]["sink_site"] = 9
    with pytest.raises(ConfigValidationError) as excinfo:
        parse(doc)
    assert excinfo.value.field == "transport_sweep.network.sink_site"


def test_fmo_block_defaults():
    cfg = parse({"experiment": "fmo", "fmo": {}})
    assert cfg.block.time_ps == 5.0
    assert cfg.block.gamma_bracket == (0.1, 1e4)
    assert cfg.block.dephasing_rates is None


def test_fmo_rates_need_seven_entries():
    with pytest.raises(ConfigValidationError, match="7"):
        parse({"experiment": "fmo", "fmo": {"dephasing_rates": [1.0, 2.0]}})


def test_chainmap_block():
    cfg = load_config(CONFIG_DIR / "chainmap.json")
    block = cfg.block
    assert block.star_modes == 4
    assert block.spectral_density.total_weight() == pytest.approx(1e-3)
    doc = cfg.raw
    doc["chainmap"]["spectral_density"] = {"kind": "flat", "lo": 1.0, "hi": 1.0}
    with pytest.raises(ConfigValidationError) as excinfo:
        parse(doc)
    assert excinfo.value.field == "chainmap.spectral_density.kind"


def test_classify_needs_exactly_one_source():
    with pytest.raises(ConfigValidationError, match="exactly one"):
        parse({"experiment": "classify", "classify": {}})
    both = {"snapshots": "snaps.json", "family": {"kind": "unitary", "times": [0.1, 0.2]}}
    with pytest.raises(ConfigValidationError, match="exactly one"):
        parse({"experiment": "classify", "classify": both})


def test_classify_family_validation():
    family = {"kind": "dephasing", "times": [0.5, 0.2]}
    with pytest.raises(ConfigValidationError, match="strictly increasing"):
        parse({"experiment": "classify", "classify": {"family": family}})
    family = {"kind": "random_unitary_mixture", "times": [0.1, 0.2]}
    with pytest.raises(ConfigValidationError, match="seed"):
        parse({"experiment": "classify", "classify": {"family": family}})
    cfg = parse({"experiment": "classify", "seed": 3, "classify": {"family": family}})
    assert cfg.block.family.terms == 2


def test_relative_paths_resolve_against_config_dir(tmp_path):
    doc = {"experiment": "classify", "classify": {"snapshots": "data/snaps.json"}}
    path = tmp_path / "classify.json"
    path.write_text(json.dumps(doc))
    cfg = load_config(path)
    assert cfg.block.snapshots == tmp_path.resolve() / "data" / "snaps.json"


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigValidationError, match="cannot read config"):
        load_config(tmp_path / "absent.json")
