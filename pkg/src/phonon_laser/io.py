"""CSV + JSON sidecar export for trajectories and spectra."""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .dynamics import Frames, NoiseModel, SimConfig, Trajectory
from .model import Branch, MechanicalMode, OpticalMode, PhotonicMolecule, PumpConfig
from .spectra import PSD

TRAJ_HEADER = ["t_s", "re_aplus", "im_aplus", "re_aminus", "im_aminus", "re_b", "im_b"]


def _jsonable(obj):
    if isinstance(obj, Branch):
        return obj.value
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def dump_json(data, path):
    Path(path).write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


def trajectory_metadata(traj: Trajectory) -> dict:
    return {
        "seed": traj.config.seed,
        "stream": traj.config.stream,
        "dt": traj.config.dt,
        "decimation": traj.config.decimation,
        "frames": traj.frames.as_dict(),
        "config": asdict(traj.config),
        "molecule": {"mode1": asdict(traj.molecule.mode1), "mode2": asdict(traj.molecule.mode2),
                     "kappa": traj.molecule.kappa},
        "mechanics": [asdict(m) for m in traj.mechanics],
        "pump": asdict(traj.pump),
        "noise": asdict(traj.noise),
        "units": "SI (s, rad/s, W, m, kg)",
        **traj.meta,
    }


def _header(n_modes):
    cols = list(TRAJ_HEADER)
    for k in range(1, n_modes):
        cols += [f"re_b{k}", f"im_b{k}"]
    return cols


def save_trajectory(traj: Trajectory, path) -> Path:
    """Write ``path`` (CSV) and ``path.json`` (metadata)."""
    path = Path(path)
    cols = [traj.times, traj.a_plus.real, traj.a_plus.imag, traj.a_minus.real, traj.a_minus.imag]
    for k in range(traj.b.shape[1]):
        cols += [traj.b[:, k].real, traj.b[:, k].imag]
    np.savetxt(path, np.column_stack(cols), delimiter=",", fmt="%.17g",
               header=",".join(_header(traj.b.shape[1])), comments="")
    dump_json(trajectory_metadata(traj), path.with_suffix(path.suffix + ".json"))
    return path


def load_trajectory(path) -> Trajectory:
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    n_modes = (data.shape[1] - 5) // 2
    b = np.column_stack([data[:, 5 + 2 * k] + 1j * data[:, 6 + 2 * k] for k in range(n_modes)])
    fr = meta["frames"]
    mol = meta["molecule"]
    known = {"seed", "stream", "dt", "decimation", "frames", "config", "molecule", "mechanics",
             "pump", "noise", "units"}
    return Trajectory(
        times=data[:, 0],
        a_plus=data[:, 1] + 1j * data[:, 2],
        a_minus=data[:, 3] + 1j * data[:, 4],
        b=b,
        config=SimConfig(**meta["config"]),
        frames=Frames(fr["omega_laser"], fr["nu_b"], fr["det_plus"], fr["det_minus"],
                      tuple(fr["optical_offsets"])),
        molecule=PhotonicMolecule(OpticalMode(**mol["mode1"]), OpticalMode(**mol["mode2"]), mol["kappa"]),
        mechanics=tuple(MechanicalMode(**m) for m in meta["mechanics"]),
        pump=PumpConfig(**meta["pump"]),
        noise=NoiseModel(**meta["noise"]),
        meta={k: v for k, v in meta.items() if k not in known},
    )


def save_psd(psd: PSD, path, extra=None) -> Path:
    path = Path(path)
    np.savetxt(path, np.column_stack([psd.freqs, psd.values]), delimiter=",", fmt="%.17g",
               header="freq_hz,psd", comments="")
    meta = {"resolution_bw_hz": psd.resolution_bw, "estimator": psd.estimator}
    if extra:
        meta.update(extra)
    dump_json(meta, path.with_suffix(path.suffix + ".json"))
    return path


def load_psd(path) -> PSD:
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return PSD(data[:, 0], data[:, 1], meta["resolution_bw_hz"], meta["estimator"])
