"""Command-line front end.

Exit codes: 0 success, 1 usage or validation error, 2 runtime or fit
failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import experiments as ex
from .dynamics import NoiseModel, SimConfig, integrate, max_stable_dt, steady_phonon_number
from .errors import RuntimeFailure, ValidationError
from .io import load_psd, load_trajectory, save_psd, save_trajectory
from .model import Branch, CouplingModel, MechanicalMode, calibrate_coupling
from .spectra import lorentzian_fit, rf_photocurrent, welch_psd

TWO_PI = 2 * math.pi
SUBCOMMANDS = {
    "splitting": "supermode splitting against air gap",
    "crossing": "avoided crossing against bare detuning",
    "gain-tune": "sub-threshold gain bump tuned across splittings",
    "threshold": "RF line power against pump power, knee fit",
    "cooling": "red-pump phonon number and linewidth",
    "simulate": "single trajectory at one pump setting",
    "analyze-psd": "Lorentzian fit of a saved trajectory or PSD",
    "calibrate": "fit the gap-to-coupling law from measured splittings",
}

HEADLINE = {
    "splitting": "splitting_hz",
    "crossing": "separation_rad_s",
    "gain-tune": "bump_center_hz",
    "threshold": "line_power_w2",
    "cooling": "phonon_ratio",
    "simulate": "mean_phonons",
    "analyze-psd": "center_hz",
    "calibrate": "kappa_0_rad_s",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config file path or bundled config name")
    common.add_argument("--seed", type=int, help="master seed (overrides run.seed)")
    common.add_argument("--out", help="run directory (default runs/<subcommand>)")
    common.add_argument("--quiet", action="store_true", help="suppress the summary table")
    common.add_argument("--jobs", type=int, help="parallel sweep points")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override a config value, e.g. pump.power='20 uW'")
    common.add_argument("--save-trajectories", action="store_true", help="write per-point trajectories")
    parser = _Parser(prog="phonon-laser", description="Photonic-molecule phonon laser experiments.")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)
    for name, summary in SUBCOMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=summary, description=summary)
        if name == "analyze-psd":
            p.add_argument("--input", help="trajectory or PSD CSV (overrides analyze-psd.input)")
    return parser


# ---------------------------------------------------------------------------
# config -> objects


def _broadcast(values, n, key):
    if len(values) == 1:
        return values * n
    if len(values) != n:
        raise ValidationError(f"mechanics.{key} has {len(values)} entries, expected 1 or {n}", key=f"mechanics.{key}")
    return values


def _checked(fn, section):
    """Prefix a bare validation key with its config section."""
    try:
        return fn()
    except ValidationError as exc:
        if exc.key and "." not in str(exc.key):
            raise ValidationError(f"{section}.{exc.key}: {exc}", key=f"{section}.{exc.key}") from exc
        raise


def device_from_config(cfg: cfgmod.RunConfig) -> ex.Device:
    dev = cfg.section("device")
    mech = cfg.section("mechanics")
    if "omega_m" not in mech:
        raise ValidationError("mechanics.omega_m is required", key="mechanics.omega_m")
    omegas = list(mech["omega_m"])
    n = len(omegas)
    qs = _broadcast(list(mech.get("q_mech", (1e3,))), n, "q_mech")
    masses = _broadcast(list(mech.get("m_eff", (5e-11,))), n, "m_eff")
    radius = dev.get("radius", 31.5e-6)
    modes = tuple(
        _checked(lambda o=o, q=q, m=m: MechanicalMode.from_quality(o, q, m, radius), "mechanics")
        for o, q, m in zip(omegas, qs, masses))
    coupling = _checked(lambda: CouplingModel(dev.get("kappa_0", TWO_PI * 5e9), dev.get("decay_length", 120e-9)),
                        "device")
    return _checked(lambda: ex.Device(
        mechanics=modes,
        wavelength=dev.get("wavelength", 1550e-9),
        q_opt=dev.get("q_opt", 2e7),
        taper_fraction=dev.get("taper_fraction", 0.5),
        bare_detuning=dev.get("bare_detuning", 0.0),
        coupling=coupling,
        temperature=dev.get("temperature", 300.0),
    ), "device")


def _pump_power(cfg, device, default_fraction=None, mode=0):
    pump = cfg.section("pump")
    if "power" in pump:
        if pump["power"] < 0:
            raise ValidationError("pump.power must be >= 0", key="pump.power")
        return pump["power"]
    frac = pump.get("power_fraction", default_fraction)
    if frac is None:
        raise ValidationError("set pump.power or pump.power_fraction", key="pump.power")
    if frac < 0:
        raise ValidationError("pump.power_fraction must be >= 0", key="pump.power_fraction")
    return frac * device.threshold(mode)


# ---------------------------------------------------------------------------
# subcommands; each returns a SweepResult


def run_splitting(cfg, device, args, out):
    gaps = cfg.get("splitting", "gaps")
    if gaps is None:
        raise ValidationError("splitting.gaps is required", key="splitting.gaps")
    return ex.splitting_sweep(gaps, device)


def run_crossing(cfg, device, args, out):
    det = cfg.get("crossing", "detunings")
    kappa = cfg.get("crossing", "kappa")
    if det is None or kappa is None:
        raise ValidationError("crossing.detunings and crossing.kappa are required", key="crossing.detunings")
    gamma = device.bare_modes()[1].gamma
    return ex.avoided_crossing_sweep(det, kappa, device.omega_0, gamma)


def run_gain_tune(cfg, device, args, out):
    sec = cfg.section("gain-tune")
    if "splittings" not in sec:
        raise ValidationError("gain-tune.splittings is required", key="gain-tune.splittings")
    target = sec.get("target_mode", 0)
    power = _pump_power(cfg, device, 0.8, target)
    return ex.gain_tuning_sweep(
        device, sec["splittings"], power, target_mode=target, seed=args.seed,
        n_corr=sec.get("n_corr", 1200.0), n_opt=cfg.get("sim", "n_opt", 1e3), jobs=args.jobs,
        artifact_dir=out, save_trajectories=args.save_trajectories)


def run_threshold(cfg, device, args, out):
    sec = cfg.section("threshold")
    mode = sec.get("mode", 0)
    detuning = cfg.get("pump", "detuning", 0.0)
    if "powers" in sec:
        powers = np.asarray(sec["powers"])
    else:
        fractions = np.asarray(sec.get("threshold_fractions", tuple(np.geomspace(0.15, 1.5, 10))))
        powers = fractions * ex.simulated_threshold(device, mode, detuning)
    result, _ = ex.threshold_scan(
        device, powers, mode=mode, seed=args.seed, detuning=detuning,
        settle_periods=sec.get("settle_periods", 200.0), record_periods=sec.get("record_periods", 200.0),
        nperseg=cfg.get("sim", "nperseg", 2048), noise_enabled=cfg.get("sim", "noise", True), jobs=args.jobs,
        artifact_dir=out, save_trajectories=args.save_trajectories)
    return result


def run_cooling(cfg, device, args, out):
    sec = cfg.section("cooling")
    mode = sec.get("mode", 0)
    if "powers" in sec:
        powers = list(sec["powers"])
    else:
        ratios = sec.get("gain_ratios", (0.0, 0.25, 0.5, 1.0, 2.0))
        powers = [device.power_for_gain(r, mode, branch=Branch.RED) for r in ratios]
    return ex.cooling_scan(device, powers, mode=mode, seed=args.seed, n_corr=sec.get("n_corr", 4000.0),
                           jobs=args.jobs, artifact_dir=out, save_trajectories=args.save_trajectories)


def run_simulate(cfg, device, args, out):
    sim = cfg.section("sim")
    branch = Branch.parse(cfg.get("pump", "branch", "blue"))
    power = _pump_power(cfg, device, 0.8)
    splitting = device.mechanics[0].omega_m
    pump = device.pump(power, splitting, branch=branch, detuning=cfg.get("pump", "detuning", 0.0))
    mol = device.molecule(splitting)
    mechs = device.mechanics
    dt = sim.get("dt", max_stable_dt(mol, mechs, pump))
    gamma = min(m.gamma_m for m in mechs)
    n_opt = sim.get("n_opt", 0.0)
    noise = device.noise(optical_noise=n_opt > 0, n_opt=n_opt)
    config = SimConfig(dt=dt, duration=sim.get("duration", 200.0 / gamma), seed=args.seed,
                       decimation=sim.get("decimation", 8), noise_enabled=sim.get("noise", True),
                       settle=sim.get("settle", 0.0))
    traj = integrate(config, mol, mechs, pump, noise)
    fs = 1.0 / traj.sample_dt
    nperseg = sim.get("nperseg", 2048)
    psd = welch_psd(rf_photocurrent(traj), fs, nperseg=nperseg)
    save_trajectory(traj, Path(out) / "trajectory.csv")
    save_psd(psd, Path(out) / "psd.csv")
    row = {"mean_phonons": float(traj.phonons().mean()),
           "mean_blue_photons": float(np.mean(np.abs(traj.a_plus) ** 2)),
           "mean_red_photons": float(np.mean(np.abs(traj.a_minus) ** 2)),
           "line_power_w2": psd.line_power(mechs[0].omega_m / TWO_PI),
           "dt_s": dt, "samples": len(traj), "resolution_bw_hz": psd.resolution_bw}
    if config.noise_enabled and len(traj) > 64:
        try:
            est = steady_phonon_number(traj, 0.2)
            row["phonon_stderr"] = est.stderr
        except RuntimeFailure:
            pass
    return ex.SweepResult("simulate", "power", "w", [power], [row], args.seed,
                          artifacts=[{"trajectory_file": "trajectory.csv", "psd_file": "psd.csv"}])


def run_analyze_psd(cfg, device, args, out):
    src = args.input or cfg.get("analyze-psd", "input")
    if not src:
        raise ValidationError("analyze-psd needs an input file (--input or analyze-psd.input)",
                              key="analyze-psd.input")
    path = Path(src)
    if not path.is_file():
        raise ValidationError(f"input file {src!r} not found", key="analyze-psd.input")
    header = path.read_text(encoding="utf-8").split("\n", 1)[0]
    center = cfg.get("analyze-psd", "fit_center")
    if header.startswith("freq_hz"):
        psd = load_psd(path)
    else:
        traj = load_trajectory(path)
        psd = welch_psd(rf_photocurrent(traj), 1.0 / traj.sample_dt, nperseg=cfg.get("sim", "nperseg", 2048))
        save_psd(psd, Path(out) / "psd.csv")
        if center is None:
            center = traj.mechanics[0].omega_m
    if center is None:
        center = TWO_PI * psd.freqs[1 + int(np.argmax(psd.values[1:]))]
    span = cfg.get("analyze-psd", "fit_span", TWO_PI * 1e6) / TWO_PI
    f0 = center / TWO_PI
    fit = lorentzian_fit(psd, (f0 - span, f0 + span))
    row = {"center_hz": fit.center, "fwhm_hz": fit.fwhm, "height": fit.height, "background": fit.background,
           "rms_residual": fit.rms_residual, "resolution_bw_hz": psd.resolution_bw,
           "line_power_w2": psd.line_power(fit.center)}
    return ex.SweepResult("analyze-psd", "fit_center", "hz", [f0], [row], args.seed)


def run_calibrate(cfg, device, args, out):
    sec = cfg.section("calibrate")
    if "gaps" not in sec or "splittings" not in sec:
        raise ValidationError("calibrate.gaps and calibrate.splittings are required", key="calibrate.gaps")
    if len(sec["gaps"]) != len(sec["splittings"]):
        raise ValidationError("calibrate.gaps and calibrate.splittings differ in length", key="calibrate.splittings")
    model = calibrate_coupling(list(zip(sec["gaps"], sec["splittings"])))
    row = {"kappa_0_rad_s": model.kappa_0, "decay_length_m": model.decay_length,
           "residual_rms_log": model.residual_rms}
    return ex.SweepResult("calibrate", "samples", "", [len(sec["gaps"])], [row], args.seed)


RUNNERS = {
    "splitting": run_splitting,
    "crossing": run_crossing,
    "gain-tune": run_gain_tune,
    "threshold": run_threshold,
    "cooling": run_cooling,
    "simulate": run_simulate,
    "analyze-psd": run_analyze_psd,
    "calibrate": run_calibrate,
}


def _needs_device(command):
    return command not in ("analyze-psd", "calibrate")


def format_table(result: ex.SweepResult) -> str:
    key = HEADLINE.get(result.name)
    axis = f"{result.axis_name} [{result.axis_unit}]" if result.axis_unit else result.axis_name
    lines = [f"{axis:>24}  {key}"]
    for x, row in zip(result.axis_values, result.rows):
        lines.append(f"{float(x):>24.6g}  {row.get(key, float('nan')):.6g}")
    for k, v in result.summary.items():
        lines.append(f"{k} = {v:.6g}" if isinstance(v, (float, np.floating)) else f"{k} = {v}")
    return "\n".join(lines)


def run(argv) -> int:
    args = build_parser().parse_args(argv)
    if args.command is None:
        raise UsageError(build_parser().format_usage() + "phonon-laser: error: a subcommand is required")
    if not args.config:
        raise UsageError(build_parser().format_usage() + f"phonon-laser {args.command}: error: --config is required")
    cfg = cfgmod.apply_overrides(cfgmod.load(args.config), args.set)
    if args.seed is None:
        args.seed = cfg.get("run", "seed", 0)
    if not 0 <= args.seed < 2 ** 64:
        raise ValidationError("seed must be a 64-bit unsigned integer", key="run.seed")
    args.jobs = args.jobs if args.jobs is not None else cfg.get("run", "jobs", 1)
    if args.jobs < 1:
        raise ValidationError("jobs must be >= 1", key="run.jobs")
    out = Path(args.out or cfg.get("run", "out") or Path("runs") / args.command)
    cfg = cfg.with_value("run", "seed", args.seed).with_value("run", "experiment", args.command)
    device = device_from_config(cfg) if _needs_device(args.command) else None
    out.mkdir(parents=True, exist_ok=True)
    result = RUNNERS[args.command](cfg, device, args, out)
    if result.seed is None:
        result = dataclasses.replace(result, seed=args.seed)
    (out / "config.cfg").write_text(cfgmod.echo(cfg), encoding="utf-8")
    ex.write_sweep(result, out, cfg.as_dict())
    if not args.quiet:
        print(format_table(result))
        print(f"wrote {out / 'result.csv'}")
    return 0


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        return run(argv)
    except SystemExit as exc:          # --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RuntimeFailure as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
