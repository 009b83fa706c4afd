"""Parameter sweeps reproducing the splitting, crossing, gain-tuning,
threshold and cooling measurements at desk scale.

Every sweep returns a :class:`SweepResult`; :func:`write_sweep` turns it
into ``result.csv`` (tidy long format) plus ``manifest.json``. Stochastic
sweep points draw from independent Philox streams keyed by
``(seed, point_index)``, so results do not depend on scheduling.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import optimize

from . import __version__
from .dynamics import (
    NoiseModel,
    SimConfig,
    Trajectory,
    initial_state,
    integrate,
    make_rng,
    max_stable_dt,
    steady_phonon_number,
)
from .errors import KneeNotFoundError, NoPeakError, ValidationError
from .io import dump_json, save_psd, save_trajectory
from .model import (
    Branch,
    CouplingModel,
    MechanicalMode,
    OpticalMode,
    PhotonicMolecule,
    PumpConfig,
    cooling_factor,
    coupling_from_gap,
    intracavity_photons,
    inversion_from_pump,
    mechanical_gain,
    omega_from_wavelength,
    pump_power_for_inversion,
    rabi_rate,
    supermodes,
    thermal_occupancy,
    threshold_power,
)
from .spectra import lorentzian_fit, rf_photocurrent, welch_psd

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class Device:
    """Physical description of the coupled-toroid device.

    ``bare_detuning`` is omega_1 - omega_2 of the uncoupled modes; the
    operating splitting is chosen per experiment.
    """

    mechanics: tuple
    wavelength: float = 1550e-9
    q_opt: float = 2e7
    taper_fraction: float = 0.5
    bare_detuning: float = 0.0
    coupling: CouplingModel = CouplingModel()
    temperature: float = 300.0

    def __post_init__(self):
        mechs = (self.mechanics,) if isinstance(self.mechanics, MechanicalMode) else tuple(self.mechanics)
        if not mechs:
            raise ValidationError("device needs at least one mechanical mode", key="frequency")
        object.__setattr__(self, "mechanics", mechs)
        if self.wavelength <= 0:
            raise ValidationError("wavelength must be > 0", key="wavelength")
        if self.temperature < 0:
            raise ValidationError("temperature must be >= 0", key="temperature")
        OpticalMode.from_quality(self.omega_0, self.q_opt, self.taper_fraction)

    @property
    def omega_0(self):
        return omega_from_wavelength(self.wavelength)

    def bare_modes(self):
        half = 0.5 * self.bare_detuning
        m1 = OpticalMode.from_quality(self.omega_0 + half, self.q_opt, self.taper_fraction)
        m2 = OpticalMode.from_quality(self.omega_0 - half, self.q_opt, 0.0)
        return m1, m2

    def molecule(self, splitting=None, kappa=None) -> PhotonicMolecule:
        """Molecule with the given inter-resonator coupling or splitting."""
        m1, m2 = self.bare_modes()
        if kappa is None:
            if splitting is None:
                splitting = self.mechanics[0].omega_m
            half = 0.5 * abs(self.bare_detuning)
            if 0.5 * splitting < half:
                raise ValidationError(
                    f"splitting {splitting:.4e} rad/s is below the bare detuning {self.bare_detuning:.4e} rad/s",
                    key="splitting",
                )
            kappa = math.sqrt((0.5 * splitting) ** 2 - half ** 2)
        return PhotonicMolecule(m1, m2, kappa)

    def rabi(self, mode=0):
        return rabi_rate(self.mechanics[mode], self.omega_0)

    def noise(self, optical_noise=False, n_opt=0.0):
        return NoiseModel(bath_temp=self.temperature, optical_noise=optical_noise, n_opt=n_opt)

    def threshold(self, mode=0, splitting=None, at_fwhm=False):
        """Analytic blue-pump threshold with the gain centred on ``mode``."""
        mech = self.mechanics[mode]
        sm = self.molecule(mech.omega_m if splitting is None else splitting).supermodes()
        return threshold_power(sm, mech, self.rabi(mode), at_fwhm=at_fwhm)

    def power_for_gain(self, gain_ratio, mode=0, splitting=None, branch=Branch.BLUE):
        """Resonant pump power giving |G| = gain_ratio * Gamma for ``mode``."""
        mech = self.mechanics[mode]
        sm = self.molecule(mech.omega_m if splitting is None else splitting).supermodes()
        unit = mechanical_gain(1.0, sm, mech, self.rabi(mode)).gain
        inversion = gain_ratio * mech.gamma_m / unit
        branch = Branch.parse(branch)
        omega_l = sm.omega_plus if branch is Branch.BLUE else sm.omega_minus
        return pump_power_for_inversion(inversion, omega_l, sm, branch)

    def pump(self, power, splitting=None, branch=Branch.BLUE, detuning=0.0) -> PumpConfig:
        """Pump ``detuning`` (rad/s, supermode minus laser) from the driven branch."""
        sm = self.molecule(splitting).supermodes()
        branch = Branch.parse(branch)
        omega_d = sm.omega_plus if branch is Branch.BLUE else sm.omega_minus
        return PumpConfig(power, omega_d - detuning, branch)


def paper_device(**changes) -> Device:
    """The coupled-toroid device with the published parameter estimates."""
    mech = MechanicalMode.from_quality(8 * math.pi * 1e7, 1e3, 5e-11, 31.5e-6)
    return replace(Device(mechanics=(mech,)), **changes)


@dataclass
class SweepResult:
    name: str
    axis_name: str
    axis_unit: str
    axis_values: list
    rows: list                       # one dict of scalar summaries per axis value
    seed: int | None = None
    summary: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)   # per point {kind: relative path}
    psds: list = field(default_factory=list)

    def column(self, quantity):
        return np.array([row[quantity] for row in self.rows], dtype=float)

    def long_rows(self):
        for i, (x, row) in enumerate(zip(self.axis_values, self.rows)):
            for key, val in row.items():
                yield i, x, key, val
            for key, val in (self.artifacts[i] if i < len(self.artifacts) else {}).items():
                yield i, x, key, val

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["point", "axis", "axis_value", "quantity", "value"])
        axis = f"{self.axis_name}_{self.axis_unit}" if self.axis_unit else self.axis_name
        for i, x, key, val in self.long_rows():
            w.writerow([i, axis, _fmt(x), key, _fmt(val)])
        for key, val in self.summary.items():
            w.writerow(["", axis, "", key, _fmt(val)])
        return buf.getvalue()


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_sweep(result: SweepResult, out_dir, config_echo=None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "result.csv").write_text(result.to_csv())
    manifest = {
        "experiment": result.name,
        "seed": result.seed,
        "version": __version__,
        "axis": {"name": result.axis_name, "unit": result.axis_unit, "values": list(map(float, result.axis_values))},
        "summary": {k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in result.summary.items()},
        "config": config_echo or {},
    }
    dump_json(manifest, out / "manifest.json")
    return out


def _map_points(fn, items, jobs):
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _store_point(artifact_dir, index, psd=None, traj=None, extra=None):
    """Write per-point files; return relative references."""
    if artifact_dir is None:
        return {}
    base = Path(artifact_dir)
    sub = Path("points") / f"{index:03d}"
    (base / sub).mkdir(parents=True, exist_ok=True)
    refs = {}
    if psd is not None:
        save_psd(psd, base / sub / "psd.csv", extra)
        refs["psd_file"] = str(sub / "psd.csv")
    if traj is not None:
        save_trajectory(traj, base / sub / "trajectory.csv")
        refs["trajectory_file"] = str(sub / "trajectory.csv")
    return refs


# ---------------------------------------------------------------------------
# closed-form sweeps


def splitting_sweep(gaps: Sequence[float], device: Device) -> SweepResult:
    """Supermode splitting against air gap, with a log-linearity check."""
    gaps = np.asarray(gaps, dtype=float)
    if gaps.size < 3:
        raise ValidationError("splitting sweep needs at least 3 gaps", key="gaps")
    m1, m2 = device.bare_modes()
    rows = []
    for gap in gaps:
        kappa = coupling_from_gap(gap, device.coupling)
        sm = supermodes(m1, m2, kappa)
        rows.append({
            "kappa_rad_s": kappa,
            "omega_plus_offset_rad_s": sm.omega_plus - device.omega_0,
            "omega_minus_offset_rad_s": sm.omega_minus - device.omega_0,
            "splitting_rad_s": sm.splitting,
            "splitting_hz": sm.splitting / TWO_PI,
        })
    split = np.array([r["splitting_rad_s"] for r in rows])
    slope, intercept = np.polyfit(gaps, np.log(split), 1)
    pred = intercept + slope * gaps
    ss_res = float(np.sum((np.log(split) - pred) ** 2))
    ss_tot = float(np.sum((np.log(split) - np.log(split).mean()) ** 2))
    summary = {
        "log_slope_per_m": float(slope),
        "fitted_decay_length_m": float(-1.0 / slope) if slope < 0 else float("inf"),
        "r_squared": 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0,
        "max_splitting_hz": float(split.max() / TWO_PI),
        "min_splitting_hz": float(split.min() / TWO_PI),
    }
    return SweepResult("splitting", "gap", "m", list(gaps), rows, summary=summary)


def avoided_crossing_sweep(detunings: Sequence[float], kappa, omega_0=None, gamma=0.0) -> SweepResult:
    """Supermode branches while one bare mode is tuned through the other.

    ``detunings`` are bare omega_1 - omega_2 values (rad/s) and must bracket 0.
    """
    det = np.asarray(detunings, dtype=float)
    if det.size < 2 or not (det.min() <= 0.0 <= det.max()) or det.min() == det.max():
        raise ValidationError("detunings must bracket zero", key="detunings")
    if kappa < 0:
        raise ValidationError("kappa must be >= 0", key="kappa")
    omega_0 = omega_from_wavelength(1550e-9) if omega_0 is None else omega_0
    rows = []
    for d in det:
        m1 = OpticalMode(omega_0 + 0.5 * d, gamma)
        m2 = OpticalMode(omega_0 - 0.5 * d, gamma)
        sm = supermodes(m1, m2, kappa)
        rows.append({
            "omega_plus_offset_rad_s": sm.omega_plus - omega_0,
            "omega_minus_offset_rad_s": sm.omega_minus - omega_0,
            "separation_rad_s": sm.splitting,
            "mixing_angle_rad": sm.mixing_angle,
        })
    sep = np.array([r["separation_rad_s"] for r in rows])
    k = int(np.argmin(sep))
    summary = {
        "min_separation_sampled_rad_s": float(sep[k]),
        "min_separation_at_rad_s": float(det[k]),
        # the separation 2*sqrt((d/2)^2 + kappa^2) is minimal at d = 0, inside the bracket
        "min_separation_rad_s": 2.0 * float(kappa),
        "min_separation_location_rad_s": 0.0,
    }
    return SweepResult("crossing", "bare_detuning", "rad_s", list(det), rows, summary=summary)


# ---------------------------------------------------------------------------
# stochastic sweeps


def _fs_decimation(dt, fs_target):
    return max(1, int(1.0 / (dt * fs_target)))


def _pow2_at_least(n):
    return 1 << max(4, int(math.ceil(math.log2(max(n, 16)))))


def gain_tuning_sweep(device: Device, splittings: Sequence[float], power=None, *, power_fraction=0.8,
                      target_mode=0, seed=0, n_corr=1200.0, settle_corr=10.0, n_opt=1e3,
                      rbw_fraction=0.05, n_segments=128, jobs=1, artifact_dir=None,
                      save_trajectories=False) -> SweepResult:
    """Sub-threshold gain spectrum tuned across the given splittings.

    Every mechanical mode of ``device`` shares the optical pair. The pump
    is fixed at ``power`` (W) or ``power_fraction`` of the linecenter
    threshold of ``target_mode``. A weak broadband optical input of
    occupancy ``n_opt`` makes the gain/transduction band visible in the
    photocurrent; its Lorentzian centre is the detected bump.
    """
    splittings = np.asarray(splittings, dtype=float)
    if splittings.size < 1 or np.any(splittings <= 0):
        raise ValidationError("splittings must be positive", key="splittings")
    mechs = device.mechanics
    if power is None:
        power = power_fraction * device.threshold(target_mode)
    noise = device.noise(optical_noise=n_opt > 0, n_opt=n_opt)

    # every mode must stay below threshold at every setting
    for s in splittings:
        sm = device.molecule(s).supermodes()
        pump = device.pump(power, s)
        dn = inversion_from_pump(pump, sm)
        for k, m in enumerate(mechs):
            g = mechanical_gain(dn, sm, m, device.rabi(k)).gain
            if g >= m.gamma_m:
                raise ValidationError(
                    f"pump {power:.3e} W puts mode {k} ({m.omega_m / TWO_PI / 1e6:.3f} MHz) above threshold "
                    f"at splitting {s / TWO_PI / 1e6:.3f} MHz", key="power")

    def point(idx):
        s = splittings[idx]
        mol = device.molecule(s)
        sm = mol.supermodes()
        pump = device.pump(power, s)
        dn = inversion_from_pump(pump, sm)
        gains = [mechanical_gain(dn, sm, m, device.rabi(k)).gain for k, m in enumerate(mechs)]
        g_eff = min(m.gamma_m - g for m, g in zip(mechs, gains))
        dt = max_stable_dt(mol, mechs, pump)
        rng = make_rng(seed, idx)
        init = initial_state(mol, mechs, pump, noise, rng)

        t_stats = n_corr / g_eff
        stats_dec = max(1, int(0.05 / (g_eff * dt)))
        cfg = SimConfig(dt=dt, duration=t_stats, settle=settle_corr / g_eff, decimation=stats_dec,
                        seed=seed, stream=idx)
        tr_stats = integrate(cfg, mol, mechs, pump, noise, init, rng=rng)

        gamma_hz = sm.gamma_bar / TWO_PI
        f_s = s / TWO_PI
        f_top = max(f_s + 4 * gamma_hz, max(m.omega_m for m in mechs) / TWO_PI + 4 * gamma_hz)
        dec = _fs_decimation(dt, 2.5 * f_top)
        fs = 1.0 / (dt * dec)
        nperseg = _pow2_at_least(1.5 * fs / (rbw_fraction * gamma_hz))
        t_psd = (0.5 * n_segments + 1) * nperseg / fs
        cfg_psd = SimConfig(dt=dt, duration=t_psd, decimation=dec, seed=seed, stream=idx,
                            t_start=tr_stats.times[-1])
        tr_psd = integrate(cfg_psd, mol, mechs, pump, noise, tr_stats.final_state(), rng=rng)
        psd = welch_psd(rf_photocurrent(tr_psd), fs, nperseg=nperseg)

        rbw = psd.resolution_bw
        mask = [(m.omega_m / TWO_PI - 5 * rbw, m.omega_m / TWO_PI + 5 * rbw) for m in mechs]
        try:
            fit = lorentzian_fit(psd, (max(f_s - 2 * gamma_hz, psd.df), f_s + 2 * gamma_hz), exclude=mask)
            center, width = fit.center, fit.fwhm
        except NoPeakError:
            center, width = float("nan"), float("nan")

        row = {
            "splitting_hz": f_s,
            "bump_center_hz": center,
            "bump_fwhm_hz": width,
            "bump_offset_rbw": (center - f_s) / rbw,
            "resolution_bw_hz": rbw,
            "inversion": dn,
        }
        for k, (m, g) in enumerate(zip(mechs, gains)):
            n_th = noise.occupancy(m)
            est = steady_phonon_number(tr_stats, 0.0, mode=k, gamma_eff=m.gamma_m - g)
            f_m = m.omega_m / TWO_PI
            tag = f"mode{k}"
            row[f"{tag}_freq_hz"] = f_m
            row[f"{tag}_gain_ratio"] = g / m.gamma_m
            row[f"{tag}_phonon_ratio"] = est.mean / n_th
            row[f"{tag}_phonon_ratio_stderr"] = est.stderr / n_th
            row[f"{tag}_predicted_ratio"] = m.gamma_m / (m.gamma_m - g)
            row[f"{tag}_peak_to_background"] = _peak_to_background(psd, f_m)
        refs = _store_point(artifact_dir, idx, psd, tr_psd if save_trajectories else None,
                            {"splitting_hz": f_s})
        return row, refs, psd

    out = _map_points(point, range(splittings.size), jobs)
    rows = [o[0] for o in out]
    centers = np.array([r["bump_center_hz"] for r in rows])
    summary = {
        "pump_power_w": float(power),
        "max_abs_bump_offset_rbw": float(np.nanmax(np.abs([r["bump_offset_rbw"] for r in rows]))),
        "bump_monotone": bool(np.all(np.diff(centers[np.argsort(splittings)]) > 0)),
    }
    return SweepResult("gain-tune", "splitting", "hz", list(splittings / TWO_PI), rows, seed, summary,
                       [o[1] for o in out], [o[2] for o in out])


def _peak_to_background(psd, f0, inner=5.0, outer=20.0):
    rbw = psd.resolution_bw
    d = np.abs(psd.freqs - f0)
    peak = psd.values[d <= 2 * rbw]
    ring = psd.values[(d > inner * rbw) & (d <= outer * rbw)]
    if peak.size == 0 or ring.size == 0:
        return float("nan")
    return float(peak.max() / np.median(ring))


@dataclass(frozen=True)
class ThresholdFit:
    threshold_power: float
    below_slope: float
    above_slope: float
    knee_residual: float


def fit_knee(powers, line_powers) -> ThresholdFit:
    """Continuous two-segment line fit in log-log with a free breakpoint."""
    x = np.log10(np.asarray(powers, dtype=float))
    y = np.log10(np.asarray(line_powers, dtype=float))
    if x.size < 4 or not np.all(np.isfinite(y)):
        raise KneeNotFoundError("need >= 4 finite points to locate a knee")
    order = np.argsort(x)
    x, y = x[order], y[order]

    def solve(xb):
        design = np.column_stack([np.ones_like(x), np.minimum(x - xb, 0.0), np.maximum(x - xb, 0.0)])
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        r = y - design @ coef
        return float(r @ r), coef

    lo, hi = x[1], x[-2]
    grid = np.linspace(lo, hi, 401)
    sse = np.array([solve(xb)[0] for xb in grid])
    k = int(np.argmin(sse))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    if b > a:
        res = optimize.minimize_scalar(lambda xb: solve(xb)[0], bounds=(a, b), method="bounded",
                                       options={"xatol": 1e-10})
        xb = float(res.x) if res.fun <= sse[k] else float(grid[k])
    else:
        xb = float(grid[k])
    err, coef = solve(xb)
    fit = ThresholdFit(10 ** xb, float(coef[1]), float(coef[2]), math.sqrt(err / x.size))
    if not fit.above_slope > fit.below_slope:
        raise KneeNotFoundError(
            f"no knee: above-slope {fit.above_slope:.3f} does not exceed below-slope {fit.below_slope:.3f}")
    return fit


def threshold_scan(device: Device, powers: Sequence[float], *, mode=0, seed=0, detuning=0.0,
                   settle_periods=200.0, record_periods=200.0, nperseg=2048, n_rbw=3.0,
                   noise_enabled=True, jobs=1, artifact_dir=None, save_trajectories=False):
    """RF sideband power against blue pump power at splitting = Omega_m.

    Returns ``(SweepResult, ThresholdFit)``. Durations are in units of the
    intrinsic mechanical lifetime 1/Gamma. The laser sits ``detuning``
    (rad/s) below the blue supermode; a detuned laser loses pump photons
    and also detunes the Stokes photon from the red supermode, so the
    reference threshold carries both penalties.
    """
    powers = np.asarray(powers, dtype=float)
    mech = device.mechanics[mode]
    mechs = device.mechanics
    if not noise_enabled:
        raise ValidationError("threshold scan needs thermal noise to seed the sub-threshold signal",
                              key="noise")
    if powers.size < 8:
        raise ValidationError("threshold scan needs at least 8 powers", key="powers")
    if np.any(powers <= 0):
        raise ValidationError("powers must be > 0", key="powers")
    if powers.max() / powers.min() < 10 * (1 - 1e-9):
        raise ValidationError("powers must span at least one decade", key="powers")
    splitting = mech.omega_m
    mol = device.molecule(splitting)
    sm = mol.supermodes()
    p_line = threshold_power(sm, mech, device.rabi(mode))
    p_fwhm = threshold_power(sm, mech, device.rabi(mode), at_fwhm=True)
    p_sim = simulated_threshold(device, mode, detuning)
    if powers.max() < p_sim:
        raise KneeNotFoundError(
            f"all powers are below the analytic threshold {p_sim:.3e} W; no knee can be found")
    noise = device.noise()
    f_line = mech.omega_m / TWO_PI
    gamma = mech.gamma_m

    def point(idx):
        pump = device.pump(powers[idx], splitting, detuning=detuning)
        dt = max_stable_dt(mol, mechs, pump)
        dec = _fs_decimation(dt, 4.0 * (f_line + sm.gamma_bar / TWO_PI))
        cfg = SimConfig(dt=dt, duration=record_periods / gamma, settle=settle_periods / gamma,
                        decimation=dec, seed=seed, stream=idx)
        tr = integrate(cfg, mol, mechs, pump, noise)
        fs = 1.0 / tr.sample_dt
        psd = welch_psd(rf_photocurrent(tr), fs, nperseg=nperseg)
        row = {
            "power_w": float(powers[idx]),
            "power_over_threshold": float(powers[idx] / p_sim),
            "line_power_w2": psd.line_power(f_line, n_rbw),
            "phonon_number": float(tr.phonons(mode).mean()),
            "blue_photons": float(np.mean(np.abs(tr.a_plus) ** 2)),
            "red_photons": float(np.mean(np.abs(tr.a_minus) ** 2)),
            "resolution_bw_hz": psd.resolution_bw,
        }
        refs = _store_point(artifact_dir, idx, psd, tr if save_trajectories else None, {"power_w": row["power_w"]})
        return row, refs, psd

    out = _map_points(point, range(powers.size), jobs)
    rows = [o[0] for o in out]
    fit = fit_knee(powers, [r["line_power_w2"] for r in rows])
    summary = {
        "knee_power_w": fit.threshold_power,
        "below_slope": fit.below_slope,
        "above_slope": fit.above_slope,
        "knee_residual": fit.knee_residual,
        "analytic_threshold_w": p_sim,
        "analytic_threshold_linecenter_w": p_line,
        "analytic_threshold_fwhm_w": p_fwhm,
        "knee_over_analytic": fit.threshold_power / p_sim,
        "knee_over_fwhm_value": fit.threshold_power / p_fwhm,
    }
    result = SweepResult("threshold", "power", "w", list(powers), rows, seed, summary,
                         [o[1] for o in out], [o[2] for o in out])
    return result, fit


def simulated_threshold(device: Device, mode=0, detuning=0.0):
    """Blue-pump threshold at splitting = Omega_m for a laser ``detuning``
    below the blue supermode.

    Detuning costs twice: fewer pump photons, and a Stokes photon detuned
    from the red supermode by the same amount.
    """
    mech = device.mechanics[mode]
    sm = device.molecule(mech.omega_m).supermodes()
    probe = device.pump(1.0, mech.omega_m, detuning=detuning)
    stokes = 1.0 + (2.0 * detuning / sm.gamma_bar) ** 2
    return device.power_for_gain(1.0, mode) * _detuning_penalty(sm, probe) * stokes


def _detuning_penalty(sm, pump):
    """Factor by which pump detuning raises the threshold power."""
    resonant = replace(pump, omega_laser=sm.omega_plus)
    return intracavity_photons(resonant, sm) / intracavity_photons(pump, sm)


def cooling_scan(device: Device, powers: Sequence[float], *, mode=0, seed=0, n_corr=4000.0,
                 settle_corr=10.0, rbw_target=None, n_segments=160, fit_span=8.0, jobs=1,
                 artifact_dir=None, save_trajectories=False) -> SweepResult:
    """Red-supermode pumping at splitting = Omega_m.

    Per power: steady phonon number against Gamma/(Gamma+|G|) and fitted
    sideband linewidth against (Gamma+|G|)/2pi. The quantitative cooling
    law is the weak-coupling rate balance, a modelling choice.
    """
    powers = np.asarray(powers, dtype=float)
    if np.any(powers < 0):
        raise ValidationError("powers must be >= 0", key="powers")
    mech = device.mechanics[mode]
    mechs = device.mechanics
    splitting = mech.omega_m
    mol = device.molecule(splitting)
    sm = mol.supermodes()
    noise = device.noise()
    n_th = noise.occupancy(mech)
    gamma = mech.gamma_m
    f_line = mech.omega_m / TWO_PI
    rbw_target = rbw_target or gamma / TWO_PI / 18.0

    def point(idx):
        pump = device.pump(powers[idx], splitting, branch=Branch.RED)
        dn = inversion_from_pump(pump, sm)
        g = mechanical_gain(dn, sm, mech, device.rabi(mode)).gain
        g_eff = gamma - g
        dt = max_stable_dt(mol, mechs, pump)
        rng = make_rng(seed, idx)
        init = initial_state(mol, mechs, pump, noise, rng)
        stats_dec = max(1, int(0.05 / (g_eff * dt)))
        cfg = SimConfig(dt=dt, duration=n_corr / g_eff, settle=settle_corr / g_eff, decimation=stats_dec,
                        seed=seed, stream=idx)
        tr = integrate(cfg, mol, mechs, pump, noise, init, rng=rng)
        est = steady_phonon_number(tr, 0.0, mode=mode, gamma_eff=g_eff)
        row = {
            "power_w": float(powers[idx]),
            "inversion": dn,
            "gain_over_gamma": abs(g) / gamma,
            "phonon_ratio": est.mean / n_th,
            "phonon_ratio_stderr": est.stderr / n_th,
            "predicted_ratio": cooling_factor(dn, sm, mech, device.rabi(mode)),
            "predicted_linewidth_hz": g_eff / TWO_PI,
            "linewidth_hz": float("nan"),
            "linewidth_over_intrinsic": float("nan"),
        }
        psd = None
        if powers[idx] > 0:
            dec = _fs_decimation(dt, 2.5 * (f_line + sm.gamma_bar / TWO_PI))
            fs = 1.0 / (dt * dec)
            nperseg = _pow2_at_least(1.5 * fs / rbw_target)
            cfg_psd = SimConfig(dt=dt, duration=(0.5 * n_segments + 1) * nperseg / fs, decimation=dec,
                                seed=seed, stream=idx, t_start=tr.times[-1])
            tr_psd = integrate(cfg_psd, mol, mechs, pump, noise, tr.final_state(), rng=rng)
            psd = welch_psd(rf_photocurrent(tr_psd), fs, nperseg=nperseg)
            width = g_eff / TWO_PI
            fit = lorentzian_fit(psd, (f_line - fit_span * width, f_line + fit_span * width))
            row["linewidth_hz"] = fit.fwhm
            row["linewidth_over_intrinsic"] = fit.fwhm / (gamma / TWO_PI)
            row["line_center_hz"] = fit.center
            row["resolution_bw_hz"] = psd.resolution_bw
        refs = _store_point(artifact_dir, idx, psd, tr if save_trajectories else None,
                            {"power_w": row["power_w"]} if psd is not None else None)
        return row, refs, psd

    out = _map_points(point, range(powers.size), jobs)
    rows = [o[0] for o in out]
    summary = {
        "n_th": n_th,
        "intrinsic_linewidth_hz": gamma / TWO_PI,
        "cooling_law": "Gamma/(Gamma+|G|) weak-coupling rate balance (model choice)",
    }
    return SweepResult("cooling", "power", "w", list(powers), rows, seed, summary,
                       [o[1] for o in out], [o[2] for o in out])
