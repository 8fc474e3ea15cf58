import json
from pathlib import Path

import pytest

from cqedgate.cli import main

ROOT = Path(__file__).resolve().parent.parent
QUICK = str(ROOT / "configs" / "quick.ini")


def _json_block(out: str) -> dict:
    return json.loads(out.split("--- json\n", 1)[1])


def test_design_subcommand(capsys):
    assert main(["design"]) == 0
    out = capsys.readouterr().out
    block = _json_block(out)
    assert block["g_mhz"][1] == pytest.approx(86.89, abs=0.05)
    assert block["t_gate_ns"] == pytest.approx(66.67, abs=0.01)
    assert "WEAK" in out


def test_flagship_config_file_matches_defaults(capsys):
    main(["design"])
    default = capsys.readouterr().out
    main(["design", "--config", str(ROOT / "configs" / "flagship.ini")])
    assert capsys.readouterr().out == default


def test_unknown_key_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[solver]\nstep = 1 ps\n")
    assert main(["run", "--config", str(bad)]) == 1
    assert "unknown key 'step'" in capsys.readouterr().err


def test_bad_flag_value_exit_1():
    assert main(["run", "--trunc", "1"]) == 1


def test_run_writes_csv(tmp_path):
    out = tmp_path / "run.csv"
    assert main(["run", "--config", QUICK, "--out", str(out)]) == 0
    data = out.read_bytes()
    assert b"\r" not in data
    lines = data.decode().splitlines()
    assert lines[0] == "T_us,kappa_inv_us,fidelity,leakage,trace_error,wall_ms"
    fields = lines[1].split(",")
    assert fields[:2] == ["5", "10"] and fields[-1] == ""
    assert 0.9 < float(fields[2]) <= 1.0


def test_sweep_csv_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sweep-detuning", "--config", QUICK, "--out", str(a)]) == 0
    assert main(["sweep-detuning", "--config", QUICK, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rows = a.read_text().splitlines()
    assert rows[0].startswith("d_delta_mhz,fidelity")
    assert [r.split(",")[0] for r in rows[1:]] == ["-20", "0", "20"]


def test_sweep_decoherence_to_stdout(capsys):
    assert main(["sweep-decoherence", "--config", QUICK]) == 0
    rows = capsys.readouterr().out.splitlines()
    assert rows[0] == "T_us,kappa_inv_us,fidelity,leakage,trace_error,wall_ms"
    assert [tuple(r.split(",")[:2]) for r in rows[1:]] == [("2", "5"), ("2", "10"), ("8", "5"), ("8", "10")]


def test_timing_fills_wall_ms(capsys):
    assert main(["run", "--config", QUICK, "--timing"]) == 0
    row = capsys.readouterr().out.splitlines()[1]
    assert float(row.split(",")[-1]) > 0


def test_partial_sweep_exit_3(tmp_path, capsys):
    cfg = tmp_path / "partial.ini"
    # A -2 GHz shift pushes cavity 1 above the g-f transition: that point cannot be built.
    cfg.write_text(Path(QUICK).read_text().replace("-20 MHz, 20 MHz, 3", "-2000 MHz, 0 MHz, 2"))
    assert main(["sweep-detuning", "--config", str(cfg)]) == 3
    out = capsys.readouterr()
    rows = out.out.splitlines()
    assert rows[1].startswith("-2000,nan") and rows[2].startswith("0,0.9")
    assert "failed" in out.err


def test_unstable_step_exit_2(capsys):
    assert main(["run", "--config", QUICK, "--dt", "500"]) == 2
    assert "not positive" in capsys.readouterr().err


def test_validate_effective_quick(capsys):
    assert main(["validate-effective", "--config", QUICK]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["effective_vs_analytic"] == pytest.approx(1.0, abs=1e-6)
    assert 0 <= report["fidelity"] <= 1
