import json
import os

import pytest

from mesh.generators import periodic_square, unit_square
from orchestrator.config import ConfigError, config_from_dict, load_config, resolve_tags


def error_path(raw):
    with pytest.raises(ConfigError) as info:
        config_from_dict(raw)
    return info.value.path


def test_defaults_are_merged(monkeypatch, tmp_path):
    monkeypatch.setenv("PORTFLOW_OUT_DIR", str(tmp_path))
    config = config_from_dict({"scenario": "lid-cavity"})
    assert config.dt == 0.005
    assert config.mesh == {"kind": "unit-square", "res": 16}
    assert config.bc["top"] == "lid"
    assert config.steps == 100
    assert config.out_dir == os.path.join(str(tmp_path), "lid-cavity")


def test_sections_merge_key_by_key():
    config = config_from_dict({"scenario": "lid-cavity", "mesh": {"res": 8}, "physics": {"kappa": 0.1}, "out_dir": "x"})
    assert config.mesh == {"kind": "unit-square", "res": 8}
    assert config.physics == {"kappa": 0.1, "rho": 1.0}
    assert config.out_dir == "x"


def test_defaults_are_not_shared():
    config = config_from_dict({"scenario": "free-body"})
    config.body["inertia"][0] = 99.0
    assert config_from_dict({"scenario": "free-body"}).body["inertia"][0] == 1.0


@pytest.mark.parametrize(
    "raw, path",
    [
        ({"scenario": "warp-drive"}, "scenario"),
        ({"scenario": "lid-cavity", "colour": "red"}, "colour"),
        ({"scenario": "lid-cavity", "dt": 0}, "dt"),
        ({"scenario": "lid-cavity", "seed": 1.5}, "seed"),
        ({"scenario": "lid-cavity", "physics": {"rho": 0}}, "physics.rho"),
        ({"scenario": "lid-cavity", "physics": {"kappa": "thick"}}, "physics.kappa"),
        ({"scenario": "lid-cavity", "bc": {"top": "slippery"}}, "bc.top"),
        ({"scenario": "lid-cavity", "mesh": {"kind": "hexagon"}}, "mesh.kind"),
        ({"scenario": "prescribed-cylinder", "mesh": {"r_in": 3.0}}, "mesh.r_out"),
        ({"scenario": "fsi-cylinder-2d", "coupling": {"subiterations": 0}}, "coupling.subiterations"),
        ({"scenario": "fsi-cylinder-2d", "coupling": {"mode": "loose"}}, "coupling.mode"),
        ({"scenario": "free-body", "body": {"momentum": [1, 2]}}, "body.momentum"),
    ],
)
def test_invalid_values_name_their_key(raw, path):
    assert error_path(raw) == path


def test_load_config_file(tmp_path):
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"scenario": "taylor-green", "mesh": {"res": 8}}))
    assert load_config(str(good)).mesh["res"] == 8

    bad = tmp_path / "bad.json"
    bad.write_text('{"scenario": "taylor-green",')
    with pytest.raises(ConfigError) as info:
        load_config(str(bad))
    assert info.value.path == "$"
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.json"))


def test_boundary_tags_must_exist():
    config = config_from_dict({"scenario": "lid-cavity", "bc": {"lid": "lid"}})
    with pytest.raises(ConfigError) as info:
        resolve_tags(config, unit_square(4))
    assert info.value.path == "bc.lid"

    periodic = config_from_dict({"scenario": "taylor-green", "bc": {"x": "periodic"}})
    resolve_tags(periodic, periodic_square(4))
    with pytest.raises(ConfigError):
        resolve_tags(periodic, unit_square(4))
