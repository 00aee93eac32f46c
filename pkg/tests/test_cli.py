import pytest

from amorsim import cli
from amorsim.config import (apply_overrides, config_hash, paper_default,
                            save_config)


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--version"])
    assert exc.value.code == 0
    assert "amorsim 0.1.0" in capsys.readouterr().out


def test_unknown_scenario_is_a_usage_error():
    with pytest.raises(SystemExit) as exc:
        cli.main(["warp-drive"])
    assert exc.value.code == 2


def test_dc_sweep_run(tmp_path, capsys):
    out = tmp_path / "run"
    assert cli.main(["dc-sweep", "--out", str(out)]) == cli.EXIT_OK
    stdout = capsys.readouterr().out
    assert "scenario: dc-sweep" in stdout
    assert "wrote dc_sweep.txt" in stdout
    assert (out / "manifest.txt").exists()


def test_seed_flag_overrides_config(tmp_path, capsys):
    out = tmp_path / "run"
    assert cli.main(["dc-sweep", "--seed", "31337",
                     "--out", str(out)]) == cli.EXIT_OK
    assert "seed: 31337" in capsys.readouterr().out
    assert "seed: 31337" in (out / "manifest.txt").read_text()


def test_set_overrides_and_config_file(tmp_path, capsys):
    cfg = apply_overrides(paper_default(), ["field.bias_Bz=0.79"])
    path = tmp_path / "cfg.json"
    save_config(cfg, path)
    out = tmp_path / "run"
    assert cli.main(["dc-sweep", "--config", str(path),
                     "--set", "pump.duty=0.4",
                     "--out", str(out)]) == cli.EXIT_OK
    expect = config_hash(apply_overrides(cfg, ["pump.duty=0.4"]))
    assert f"config_hash: {expect}" in capsys.readouterr().out


def test_invalid_override_exits_config(tmp_path, capsys):
    out = tmp_path / "run"
    code = cli.main(["dc-sweep", "--set", "pump.duty=2.0", "--out", str(out)])
    assert code == cli.EXIT_CONFIG
    assert "pump.duty" in capsys.readouterr().err
    assert not out.exists()


def test_unknown_preset_rejected_by_parser(tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli.main(["dc-sweep", "--preset", "mystery", "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_textbook_preset_moves_resonance(tmp_path, capsys):
    out = tmp_path / "run"
    assert cli.main(["lockin-sweep", "--preset", "textbook-gamma",
                     "--out", str(out)]) == cli.EXIT_OK
    stdout = capsys.readouterr().out
    # 580 kHz / 699.58 kHz/G
    assert "resonance_expected_g: 0.829" in stdout


def test_validate_failure_exit_code(tmp_path, capsys):
    out = tmp_path / "run"
    code = cli.main(["validate", "--max-substeps", "1", "--out", str(out)])
    assert code == cli.EXIT_VALIDATION
    stdout = capsys.readouterr().out
    assert "FAIL integrator-vs-rwa" in stdout
    assert (out / "validation.txt").exists()


def test_validate_success_exit_code(tmp_path):
    assert cli.main(["validate", "--out", str(tmp_path / "v")]) == cli.EXIT_OK
