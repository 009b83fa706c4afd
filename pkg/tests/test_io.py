import json

import numpy as np

from phonon_laser.dynamics import NoiseModel, SimConfig, integrate, max_stable_dt
from phonon_laser.io import TRAJ_HEADER, load_psd, load_trajectory, save_psd, save_trajectory
from phonon_laser.model import Branch, MechanicalMode, PhotonicMolecule, PumpConfig, omega_from_wavelength
from phonon_laser.spectra import welch_psd


def short_run(n_modes=1):
    mechs = tuple(MechanicalMode.from_quality(2.5e8 * (1 + 0.1 * k), 1e3, 5e-11, 31.5e-6) for k in range(n_modes))
    mol = PhotonicMolecule.degenerate(omega_from_wavelength(1550e-9), 2e7, mechs[0].omega_m)
    pump = PumpConfig(5e-6, mol.supermodes().omega_minus, Branch.RED)
    dt = max_stable_dt(mol, mechs, pump)
    cfg = SimConfig(dt=dt, duration=2000 * dt, decimation=4, seed=3)
    return integrate(cfg, mol, mechs, pump, NoiseModel(bath_temp=300.0))


def test_trajectory_round_trip(tmp_path):
    tr = short_run()
    path = save_trajectory(tr, tmp_path / "traj.csv")
    assert path.read_text().splitlines()[0] == ",".join(TRAJ_HEADER)
    back = load_trajectory(path)
    assert np.array_equal(back.times, tr.times)
    assert np.array_equal(back.b, tr.b)
    assert np.array_equal(back.a_minus, tr.a_minus)
    assert back.config == tr.config
    assert back.molecule == tr.molecule and back.pump == tr.pump and back.frames == tr.frames
    meta = json.loads((tmp_path / "traj.csv.json").read_text())
    assert meta["seed"] == 3 and meta["dt"] == tr.config.dt


def test_multimode_columns(tmp_path):
    tr = short_run(3)
    path = save_trajectory(tr, tmp_path / "traj.csv")
    header = path.read_text().splitlines()[0].split(",")
    assert header[-4:] == ["re_b1", "im_b1", "re_b2", "im_b2"]
    assert np.array_equal(load_trajectory(path).b, tr.b)


def test_psd_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    psd = welch_psd(rng.standard_normal(1 << 14), 1e6, nperseg=1024)
    back = load_psd(save_psd(psd, tmp_path / "psd.csv", {"note": "x"}))
    assert np.array_equal(back.freqs, psd.freqs) and np.array_equal(back.values, psd.values)
    assert back.resolution_bw == psd.resolution_bw
    assert back.estimator == psd.estimator
