import json

import pandas as pd
import pytest

from main import build_parser, main
from orchestrator.engine import EXIT_CONFIG, EXIT_OK
from orchestrator.scenarios import SCENARIOS


def summary(out):
    with open(out / "summary.json", encoding="utf-8") as f:
        return json.load(f)


def write_config(path, raw):
    path.write_text(json.dumps(raw))
    return str(path)


def test_list_prints_every_scenario(capsys):
    assert main(["list"]) == EXIT_OK
    printed = capsys.readouterr().out
    for name in SCENARIOS:
        assert name in printed


def test_unknown_suite_is_an_argument_error():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["check", "warp-drive"])


def test_identities_pass(tmp_path):
    out = tmp_path / "identities"
    assert main(["check", "identities", "--out", str(out)]) == EXIT_OK
    result = summary(out)
    assert result["passed"] is True
    assert result["seed"] == 42
    assert result["checks"]["dd_zero"]["value"] == 0.0


def test_bad_config_exits_with_config_code(tmp_path):
    path = write_config(tmp_path / "bad.json", {"scenario": "lid-cavity", "physics": {"rho": 0}})
    assert main(["run", path, "--out", str(tmp_path / "never")]) == EXIT_CONFIG
    assert not (tmp_path / "never").exists()


def test_free_body_run_is_reproducible(tmp_path):
    path = write_config(tmp_path / "free.json", {"scenario": "free-body", "t_end": 0.5})
    outputs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["run", path, "--out", str(out)]) == EXIT_OK
        outputs.append((out / "rigid.csv").read_bytes())
        ledger = pd.read_csv(out / "ledger.csv")
        assert len(ledger) == 499
        assert "residual_rigid" in ledger.columns
    assert outputs[0] == outputs[1]
    assert summary(tmp_path / "a")["balances"]["rigid"] <= 1e-10


def test_seed_override_changes_the_body(tmp_path):
    path = write_config(tmp_path / "free.json", {"scenario": "free-body", "t_end": 0.01})
    main(["run", path, "--out", str(tmp_path / "a")])
    main(["run", path, "--out", str(tmp_path / "b"), "--seed", "8"])
    assert summary(tmp_path / "b")["seed"] == 8
    first = pd.read_csv(tmp_path / "a" / "rigid.csv")
    second = pd.read_csv(tmp_path / "b" / "rigid.csv")
    assert first["p0"].iloc[0] != second["p0"].iloc[0]


def test_falling_body(tmp_path):
    path = write_config(tmp_path / "fall.json", {"scenario": "falling-body-vacuum", "t_end": 0.2})
    assert main(["run", path, "--out", str(tmp_path / "fall")]) == EXIT_OK
    assert summary(tmp_path / "fall")["checks"]["free_fall"]["passed"] is True


def test_reynolds_translate(tmp_path):
    out = tmp_path / "reynolds"
    assert main(["check", "reynolds-translate", "--out", str(out)]) == EXIT_OK
    history = pd.read_csv(out / "history.csv")
    assert list(history["steps"]) == [2, 4, 8, 16]


def test_lid_cavity_writes_cochains(tmp_path):
    path = write_config(
        tmp_path / "lid.json",
        {"scenario": "lid-cavity", "t_end": 0.02, "mesh": {"res": 6}, "physics": {"kappa": 0.05}},
    )
    out = tmp_path / "lid"
    assert main(["run", path, "--out", str(out)]) == EXIT_OK
    for name in ("history.csv", "ledger.csv", "velocity.csv", "pressure.csv", "summary.json"):
        assert (out / name).exists()
    assert "fluid" in summary(out)["balances"]
