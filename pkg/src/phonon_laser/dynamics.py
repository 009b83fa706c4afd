"""Time-domain mean-field dynamics of the photonic molecule.

The two supermode amplitudes and every mechanical amplitude are evolved as
c-numbers normalised so that ``|a|**2`` is a photon number and ``|b|**2`` a
phonon number. Frames are chosen so the equations are autonomous:

* the driven supermode rotates with the pump laser,
* every mechanical amplitude rotates at ``nu_b = splitting + frame_offset``,
* the undriven supermode rotates at ``omega_laser -/+ nu_b`` (blue/red pump),

which leaves only slow residual detunings and allows nanosecond steps.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels
from .errors import (
    FitUnreliableError,
    InsufficientSamplesError,
    InvalidContextError,
    NonFiniteStateError,
    StabilityError,
    ValidationError,
)
from .model import (
    HBAR,
    Branch,
    MechanicalMode,
    PhotonicMolecule,
    PumpConfig,
    rabi_rate,
    thermal_occupancy,
)

CHUNK_STEPS = 1 << 15
STABILITY_FACTOR = 20.0


@dataclass(frozen=True)
class SimConfig:
    """Integration settings.

    ``settle`` is an unrecorded burn-in (seconds) run before ``duration``.
    ``stream`` selects an independent RNG stream under the same ``seed``.
    ``clamp_pump`` freezes the driven supermode at its initial value.
    ``t_start`` is the absolute time of the initial state, used when a run
    continues an earlier one so the frame phases stay continuous.
    """

    dt: float
    duration: float
    seed: int = 0
    decimation: int = 1
    noise_enabled: bool = True
    damping_enabled: bool = True
    settle: float = 0.0
    stream: int = 0
    clamp_pump: bool = False
    frame_offset: float = 0.0
    allow_unstable: bool = False
    t_start: float = 0.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValidationError(f"dt must be > 0, got {self.dt!r}", key="dt")
        if int(self.decimation) != self.decimation or self.decimation < 1:
            raise ValidationError("decimation must be an integer >= 1", key="decimation")
        if self.duration < 100 * self.dt:
            raise ValidationError(
                f"duration must be >= 100*dt ({100 * self.dt:.3e} s), got {self.duration!r}", key="duration"
            )
        if self.settle < 0:
            raise ValidationError("settle must be >= 0", key="settle")
        if not 0 <= self.seed < 2 ** 64:
            raise ValidationError("seed must be a 64-bit unsigned integer", key="seed")


@dataclass(frozen=True)
class NoiseModel:
    """Thermal bath settings.

    Either ``n_th`` or ``bath_temp`` sets the mechanical occupancy; with a
    temperature each mode gets ``k_B T / (hbar Omega_m)``. Optical input
    noise of occupancy ``n_opt`` is applied to both supermodes only when
    ``optical_noise`` is set.
    """

    n_th: float | None = None
    bath_temp: float | None = None
    optical_noise: bool = False
    n_opt: float = 0.0

    def __post_init__(self):
        if self.n_th is not None and self.n_th < 0:
            raise ValidationError("n_th must be >= 0", key="n_th")
        if self.bath_temp is not None and self.bath_temp < 0:
            raise ValidationError("temperature must be >= 0", key="temperature")
        if self.n_opt < 0:
            raise ValidationError("n_opt must be >= 0", key="n_opt")

    def occupancy(self, mech: MechanicalMode) -> float:
        if self.n_th is not None:
            return float(self.n_th)
        if self.bath_temp is not None:
            return thermal_occupancy(self.bath_temp, mech.omega_m)
        return 0.0


@dataclass
class State:
    a_plus: complex
    a_minus: complex
    b_amp: np.ndarray

    def __post_init__(self):
        self.b_amp = np.atleast_1d(np.asarray(self.b_amp, dtype=complex))

    def as_vector(self):
        return np.concatenate([[self.a_plus, self.a_minus], self.b_amp]).astype(np.complex128)

    @classmethod
    def from_vector(cls, y):
        return cls(complex(y[0]), complex(y[1]), np.array(y[2:], dtype=complex))


@dataclass(frozen=True)
class Frames:
    omega_laser: float
    nu_b: float                     # mechanical frame rate
    det_plus: float                 # residual detunings in the chosen frames
    det_minus: float
    optical_offsets: tuple          # (omega_laser - frame) for a+ and a-

    def as_dict(self):
        return asdict(self)


def _as_modes(mech) -> tuple:
    if isinstance(mech, MechanicalMode):
        return (mech,)
    modes = tuple(mech)
    if not modes:
        raise ValidationError("at least one mechanical mode is required", key="mechanics")
    return modes


def frames(molecule: PhotonicMolecule, pump: PumpConfig, frame_offset=0.0) -> Frames:
    sm = molecule.supermodes()
    wl = pump.omega_laser
    nu_b = sm.splitting + frame_offset
    if pump.branch is Branch.BLUE:
        det_p = sm.omega_plus - wl
        det_m = sm.omega_minus - (wl - nu_b)
        offsets = (0.0, nu_b)
    else:
        det_m = sm.omega_minus - wl
        det_p = sm.omega_plus - (wl + nu_b)
        offsets = (-nu_b, 0.0)
    return Frames(wl, nu_b, det_p, det_m, offsets)


def max_stable_dt(molecule, mech, pump, frame_offset=0.0) -> float:
    """Largest step allowed: 1 / (20 * fastest residual rate)."""
    modes = _as_modes(mech)
    fr = frames(molecule, pump, frame_offset)
    sm = molecule.supermodes()
    rates = [abs(fr.det_plus), abs(fr.det_minus), sm.gamma_plus, sm.gamma_minus]
    for m in modes:
        rates += [abs(m.omega_m - fr.nu_b), m.gamma_m]
    return 1.0 / (STABILITY_FACTOR * max(rates))


def drive_amplitudes(molecule, pump):
    """Complex drive terms ``sqrt(gamma_ext_eff) * s_in`` for (a+, a-)."""
    sm = molecule.supermodes()
    s_in = math.sqrt(pump.power_in / (HBAR * pump.omega_laser))
    if pump.branch is Branch.BLUE:
        return complex(math.sqrt(sm.gamma_ext_plus) * s_in), 0j
    return 0j, complex(math.sqrt(sm.gamma_ext_minus) * s_in)


def initial_state(molecule, mech, pump, noise=None, rng=None, b0=None) -> State:
    """Driven supermode at its linear steady state, other supermode empty.

    Mechanical amplitudes are ``b0`` when given, a thermal draw when both
    ``noise`` and ``rng`` are supplied, zero otherwise.
    """
    modes = _as_modes(mech)
    sm = molecule.supermodes()
    fr = frames(molecule, pump)
    d_p, d_m = drive_amplitudes(molecule, pump)
    a_p = d_p / (0.5 * sm.gamma_plus + 1j * fr.det_plus) if d_p else 0j
    a_m = d_m / (0.5 * sm.gamma_minus + 1j * fr.det_minus) if d_m else 0j
    if b0 is not None:
        b = np.broadcast_to(np.asarray(b0, dtype=complex), (len(modes),)).copy()
    elif noise is not None and rng is not None:
        n_th = np.array([noise.occupancy(m) for m in modes])
        b = np.sqrt(n_th / 2.0) * (rng.standard_normal(len(modes)) + 1j * rng.standard_normal(len(modes)))
    else:
        b = np.zeros(len(modes), dtype=complex)
    return State(a_p, a_m, b)


def make_rng(seed, stream=0):
    """Counter-based generator for run ``stream`` under master ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class Trajectory:
    times: np.ndarray
    a_plus: np.ndarray
    a_minus: np.ndarray
    b: np.ndarray                    # shape (n_samples, n_modes)
    config: SimConfig
    frames: Frames
    molecule: PhotonicMolecule
    mechanics: tuple
    pump: PumpConfig
    noise: NoiseModel
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.times.shape[0]

    @property
    def sample_dt(self):
        return self.config.dt * self.config.decimation

    def phonons(self, mode=0):
        return np.abs(self.b[:, mode]) ** 2

    def final_state(self):
        return State(self.a_plus[-1], self.a_minus[-1], self.b[-1])

    def states(self):
        return [State(self.a_plus[k], self.a_minus[k], self.b[k]) for k in range(len(self))]


def _coefficients(molecule, modes, pump, config):
    sm = molecule.supermodes()
    fr = frames(molecule, pump, config.frame_offset)
    damp = 1.0 if config.damping_enabled else 0.0
    opt_lin = np.array([
        -1j * fr.det_plus - damp * 0.5 * sm.gamma_plus,
        -1j * fr.det_minus - damp * 0.5 * sm.gamma_minus,
    ], dtype=np.complex128)
    drive = np.array(drive_amplitudes(molecule, pump), dtype=np.complex128)
    mech_lin = np.array(
        [-1j * (m.omega_m - fr.nu_b) - damp * 0.5 * m.gamma_m for m in modes], dtype=np.complex128
    )
    omega_0 = 0.5 * (molecule.mode1.omega + molecule.mode2.omega)
    half_rabi = np.array([0.5 * rabi_rate(m, omega_0) for m in modes], dtype=np.float64)
    clamp = -1
    if config.clamp_pump:
        clamp = 0 if pump.branch is Branch.BLUE else 1
    return fr, opt_lin, drive, mech_lin, half_rabi, clamp


def _noise_sigmas(molecule, modes, noise, config, clamp):
    """Per-quadrature standard deviation of each channel's increment."""
    sig = np.zeros(2 + len(modes))
    if not config.noise_enabled:
        return sig
    sm = molecule.supermodes()
    if noise.optical_noise and noise.n_opt > 0:
        sig[0] = math.sqrt(sm.gamma_plus * noise.n_opt * config.dt / 2.0)
        sig[1] = math.sqrt(sm.gamma_minus * noise.n_opt * config.dt / 2.0)
    for k, m in enumerate(modes):
        sig[2 + k] = math.sqrt(m.gamma_m * noise.occupancy(m) * config.dt / 2.0)
    if clamp >= 0:
        sig[clamp] = 0.0
    return sig


def integrate(config: SimConfig, molecule: PhotonicMolecule, mech, pump: PumpConfig,
              noise: NoiseModel | None = None, initial: State | None = None,
              rng: np.random.Generator | None = None) -> Trajectory:
    """Integrate the amplitude equations.

    Without noise the step is classic RK4; with noise it is stochastic Heun
    applied in the interaction picture of the diagonal linear terms, with
    an additive complex Gaussian kick on each mechanical amplitude of
    mean square ``Gamma * n_th * dt``. Noise comes from ``rng`` or, by
    default, from the Philox stream ``(config.seed, config.stream)``.
    """
    modes = _as_modes(mech)
    noise = noise or NoiseModel()
    dt_max = max_stable_dt(molecule, modes, pump, config.frame_offset)
    if config.dt > dt_max * (1 + 1e-12) and not config.allow_unstable:
        raise StabilityError(f"dt={config.dt:.4e} s exceeds the stability bound {dt_max:.4e} s", dt_max)
    if rng is None:
        rng = make_rng(config.seed, config.stream)
    if initial is None:
        initial = initial_state(molecule, modes, pump, noise if config.noise_enabled else None, rng)
    y = initial.as_vector()
    if y.shape[0] != 2 + len(modes):
        raise ValidationError("initial state does not match the number of mechanical modes", key="initial")

    fr, opt_lin, drive, mech_lin, half_rabi, clamp = _coefficients(molecule, modes, pump, config)
    sig = _noise_sigmas(molecule, modes, noise, config, clamp)
    active = np.flatnonzero(sig)
    stochastic = active.size > 0
    lin = np.concatenate([opt_lin, mech_lin])
    if clamp >= 0:
        lin[clamp] = 0.0
    prop = np.exp(lin * config.dt)

    dec = int(config.decimation)
    n_settle = int(round(config.settle / config.dt))
    n_steps = int(round(config.duration / config.dt))
    n_steps -= n_steps % dec
    n_rec = n_steps // dec + 1
    out = np.empty((n_rec, y.shape[0]), dtype=np.complex128)

    def run(n_total, record, pos, offset):
        done = 0
        # chunk length is a multiple of dec so record phase stays aligned
        chunk = max(dec, (CHUNK_STEPS // dec) * dec)
        while done < n_total:
            n = min(chunk, n_total - done)
            if stochastic:
                kicks = np.zeros((n, y.shape[0]), dtype=np.complex128)
                z = rng.standard_normal((n, active.size, 2))
                kicks[:, active] = sig[active] * (z[..., 0] + 1j * z[..., 1])
                pos, bad = _kernels.heun_steps(y, n, config.dt, prop, drive, half_rabi,
                                               clamp, kicks, dec, out, pos, record)
            else:
                pos, bad = _kernels.rk4_steps(y, n, config.dt, opt_lin, drive, mech_lin, half_rabi,
                                              clamp, dec, out, pos, record)
            if bad >= 0:
                idx = offset + done + bad + 1
                raise NonFiniteStateError(f"state became non-finite at step {idx} (t={idx * config.dt:.4e} s)", idx)
            done += n
        return pos

    if n_settle:
        run(n_settle, False, 0, 0)
    out[0] = y
    pos = run(n_steps, True, 1, n_settle)
    assert pos == n_rec

    times = config.t_start + (n_settle + dec * np.arange(n_rec)) * config.dt
    return Trajectory(
        times=times,
        a_plus=out[:, 0].copy(),
        a_minus=out[:, 1].copy(),
        b=out[:, 2:].copy(),
        config=config,
        frames=fr,
        molecule=molecule,
        mechanics=modes,
        pump=pump,
        noise=noise,
    )


def small_signal_growth_rate(traj: Trajectory, window, mode=0) -> float:
    """Slope of ``ln|b|^2`` over ``window`` = (t_start, t_stop), in 1/s."""
    t0, t1 = window
    if not (traj.times[0] <= t0 < t1 <= traj.times[-1]):
        raise ValidationError("window must lie inside the trajectory", key="window")
    sel = (traj.times >= t0) & (traj.times <= t1)
    t = traj.times[sel]
    n = traj.phonons(mode)[sel]
    if t.size < 3:
        raise FitUnreliableError("fewer than 3 samples in window", {"samples": int(t.size)})
    if np.any(n <= 0) or not np.all(np.isfinite(n)):
        raise FitUnreliableError("phonon number not strictly positive on window", {"min": float(n.min())})
    steps = np.diff(n)
    if not (np.all(steps > 0) or np.all(steps < 0)):
        raise FitUnreliableError(
            "phonon number is not monotone on the window",
            {"increasing": int((steps > 0).sum()), "decreasing": int((steps < 0).sum())},
        )
    slope, _ = np.polyfit(t - t[0], np.log(n), 1)
    return float(slope)


def manley_rowe_residuals(traj: Trajectory):
    """Max relative drift of C1 = |a+|^2 + sum|b|^2 and C2 = |a-|^2 - sum|b|^2."""
    cfg = traj.config
    if cfg.damping_enabled or (cfg.noise_enabled and _has_noise(traj)) or traj.pump.power_in > 0:
        raise InvalidContextError("Manley-Rowe residuals need a damping-, noise- and drive-free trajectory")
    nb = np.sum(np.abs(traj.b) ** 2, axis=1)
    c1 = np.abs(traj.a_plus) ** 2 + nb
    c2 = np.abs(traj.a_minus) ** 2 - nb

    def drift(c):
        scale = abs(c[0]) if c[0] != 0 else max(np.max(np.abs(c)), 1.0)
        return float(np.max(np.abs(c - c[0])) / scale)

    return drift(c1), drift(c2)


def _has_noise(traj):
    sig = _noise_sigmas(traj.molecule, traj.mechanics, traj.noise, traj.config, -1)
    return bool(np.any(sig))


class PhononEstimate(NamedTuple):
    mean: float
    stderr: float


def steady_phonon_number(traj: Trajectory, discard_fraction=0.2, mode=0, n_blocks=16,
                         gamma_eff=None) -> PhononEstimate:
    """Tail average of ``|b|^2`` with a block-average standard error."""
    if not 0 <= discard_fraction < 1:
        raise ValidationError("discard_fraction must lie in [0, 1)", key="discard_fraction")
    if n_blocks < 8:
        raise ValidationError("need at least 8 blocks", key="n_blocks")
    start = int(len(traj) * discard_fraction)
    tail = traj.phonons(mode)[start:]
    rate = gamma_eff if gamma_eff is not None else traj.mechanics[mode].gamma_m
    span = tail.size * traj.sample_dt
    if tail.size < 2 * n_blocks or span < 10.0 / rate:
        raise InsufficientSamplesError(
            f"retained {tail.size} samples spanning {span:.3e} s; need >= {2 * n_blocks} samples "
            f"and >= 10/Gamma_eff = {10.0 / rate:.3e} s"
        )
    usable = tail[: tail.size - tail.size % n_blocks]
    blocks = usable.reshape(n_blocks, -1).mean(axis=1)
    mean = float(tail.mean())
    stderr = float(blocks.std(ddof=1) / math.sqrt(n_blocks))
    return PhononEstimate(mean, stderr)


def with_config(config: SimConfig, **changes) -> SimConfig:
    return replace(config, **changes)
