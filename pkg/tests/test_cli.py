import json

import numpy as np
import pytest

from phonon_laser import config as cfgmod
from phonon_laser.cli import main
from phonon_laser.io import save_psd
from phonon_laser.spectra import PSD


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_unknown_subcommand(capsys):
    code, _, err = run(capsys, "bogus")
    assert code == 1 and "usage" in err


def test_missing_subcommand(capsys):
    code, _, err = run(capsys)
    assert code == 1 and "usage" in err


def test_missing_config(capsys):
    code, _, err = run(capsys, "splitting")
    assert code == 1 and "--config" in err


def test_nonexistent_config(capsys, tmp_path):
    code, _, err = run(capsys, "splitting", "--config", str(tmp_path / "none.cfg"))
    assert code == 1 and "not found" in err


def test_negative_q_mech_names_key(capsys, tmp_path):
    code, _, err = run(capsys, "splitting", "--config", "paper_device.cfg", "--out", str(tmp_path),
                       "--set", "mechanics.q_mech=-100")
    assert code == 1 and "mechanics.q_mech" in err


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0


def test_splitting_run_writes_outputs(capsys, tmp_path):
    code, out, _ = run(capsys, "splitting", "--config", "paper_device.cfg", "--out", str(tmp_path), "--seed", "3")
    assert code == 0
    assert "splitting_hz" in out and "r_squared" in out
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["seed"] == 3 and manifest["experiment"] == "splitting"
    echoed = cfgmod.load(tmp_path / "config.cfg")
    assert cfgmod.parse_text(cfgmod.echo(echoed)) == echoed
    assert echoed.get("run", "seed") == 3


def test_quiet_suppresses_table(capsys, tmp_path):
    code, out, _ = run(capsys, "crossing", "--config", "paper_device.cfg", "--out", str(tmp_path), "--quiet")
    assert code == 0 and out == ""
    assert (tmp_path / "result.csv").is_file()


def test_fit_failure_exits_two(capsys, tmp_path):
    f = np.linspace(0, 1e6, 1001)
    path = save_psd(PSD(f, np.ones_like(f), 1e3, {}), tmp_path / "flat.csv")
    code, _, err = run(capsys, "analyze-psd", "--config", "paper_device.cfg", "--input", str(path),
                       "--out", str(tmp_path / "run"))
    assert code == 2 and "runtime error" in err


def test_threshold_below_all_powers_exits_two(capsys, tmp_path):
    code, _, err = run(capsys, "threshold", "--config", "paper_device.cfg", "--out", str(tmp_path),
                       "--set", "threshold.threshold_fractions=0.02,0.04,0.06,0.08,0.1,0.15,0.2,0.3")
    assert code == 2 and ("knee" in err.lower() or "below" in err)


def test_calibrate(capsys, tmp_path):
    code, out, _ = run(capsys, "calibrate", "--config", "paper_device.cfg", "--out", str(tmp_path),
                       "--set", "calibrate.gaps=0 nm, 240 nm, 480 nm",
                       "--set", "calibrate.splittings=8 GHz, 1.0826822658929016 GHz, 146.52511110992258 MHz")
    assert code == 0
    text = (tmp_path / "result.csv").read_text()
    assert "decay_length_m" in text


def test_simulate_then_analyze(capsys, tmp_path):
    sim_dir = tmp_path / "sim"
    code, _, _ = run(capsys, "simulate", "--config", "paper_device.cfg", "--out", str(sim_dir),
                     "--set", "pump.power_fraction=0.5", "--set", "sim.duration=300 us", "--quiet")
    assert code == 0
    code, out, _ = run(capsys, "analyze-psd", "--config", "paper_device.cfg", "--out", str(tmp_path / "ana"),
                       "--input", str(sim_dir / "trajectory.csv"))
    assert code == 0
    center = float(out.splitlines()[1].split()[1])
    assert center == pytest.approx(40e6, abs=50e3)


def test_threshold_smoke(capsys, tmp_path):
    code, out, _ = run(capsys, "threshold", "--config", "paper_device.cfg", "--seed", "7", "--out", str(tmp_path))
    assert code == 0
    assert "knee_power_w" in out
    assert (tmp_path / "result.csv").is_file() and (tmp_path / "manifest.json").is_file()
