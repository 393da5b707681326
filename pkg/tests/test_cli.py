import json

import pytest

from nsacodes.cli import main
from nsacodes.codes import code_from_json


def test_sweep_loss_to_file(tmp_path, capsys):
    out = tmp_path / "loss.csv"
    plot = tmp_path / "loss.gp"
    rc = main(["sweep-loss", "--points", "5", "--families", "NSA_SC,LNCY", "--out", str(out), "--gnuplot", str(plot)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "gamma,family,l1,l2" and len(lines) == 11
    assert "fit NSA_SC" in capsys.readouterr().err
    assert plot.exists()


def test_sweep_loss_reports_frozen_kink(capsys):
    rc = main(["sweep-loss", "--families", "NSA_PC", "--gamma0", str(10**-1.5)])
    assert rc == 0
    err = capsys.readouterr().err
    assert "kink NSA_PC@gamma0: at_gamma0=True" in err
    assert "kink NSA_PC: at_gamma0=False" in err


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"points": 3, "families": ["LNCY"]}))
    assert main(["sweep-loss", "--config", str(cfg), "--points", "2"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 3


@pytest.mark.parametrize(
    "argv",
    [
        ["sweep-loss", "--gamma-min", "0"],
        ["sweep-loss", "--families", "BOGUS"],
        ["sweep-loss", "--config", "/nonexistent.json"],
        ["sweep-fidelity", "--window", "0.1", "0.01"],
        ["learn", "--n", "3", "--k", "4"],
        ["learn", "--gamma0", "0"],
        ["export-code", "--family", "NOPE"],
        ["export-code", "--family", "NSA_SC", "--gamma", "1"],
        ["frobnicate"],
        [],
    ],
)
def test_usage_errors_exit_2(argv):
    assert main(argv) == 2


def test_empty_family_list(capsys):
    assert main(["sweep-loss", "--families", ""]) == 0
    assert capsys.readouterr().out == "gamma,family,l1,l2\n"


def test_sweep_fidelity(capsys):
    rc = main(["sweep-fidelity", "--points", "2", "--gamma-min", "0.01", "--gamma-max", "0.02", "--families", "NSA_SC"])
    assert rc == 0
    assert capsys.readouterr().out.startswith("gamma,family,n,k,q,F_plan,F_oracle,F_closed_form\n")


def test_search_basis(capsys):
    assert main(["search-basis", "--n", "4"]) == 0
    assert json.loads(capsys.readouterr().out)["classes"] == ["0000", "0011"]
    assert main(["search-basis", "--n", "4", "--k", "3"]) == 1


def test_export_code(tmp_path):
    out = tmp_path / "pc.json"
    assert main(["export-code", "--family", "NSA_PC", "--gamma", "0.05", "--out", str(out)]) == 0
    code = code_from_json(out.read_text())
    assert code.n == 4 and code.K == 2


def test_learn_writes_outputs(tmp_path, capsys):
    rc = main(["learn", "--n", "3", "--max-steps", "3", "--stage1-steps", "1", "--seeds", "2", "--out", str(tmp_path)])
    assert rc == 0
    assert (tmp_path / "learn_seed0.json").exists() and (tmp_path / "code_seed1.json").exists()
    assert "best seed=" in capsys.readouterr().out


def test_verify_with_skips(capsys):
    rc = main(["verify", "--skip", "7", "--skip", "8"])
    out = capsys.readouterr().out
    assert rc == 0
    for c in range(1, 7):
        assert f"criterion {c} [PASS]" in out
    assert "criterion 7" not in out
