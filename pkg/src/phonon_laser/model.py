"""Closed-form physics of the two-level photonic molecule.

Everything here is a pure function of immutable value types: supermode
hybridisation, the exponential gap law, the pump-to-inversion map, the
mechanical gain Lorentzian, threshold power and the cooling factor. SI
units throughout (rad/s for frequencies, 1/s for energy decay rates).
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import constants as _codata

from .errors import CalibrationUnderdetermined, ValidationError


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = _codata.hbar
    c_light: float = _codata.c
    k_B: float = _codata.k


CONST = PhysicalConstants()
HBAR = CONST.hbar
C_LIGHT = CONST.c_light
K_B = CONST.k_B


def _require(cond, message, key=None):
    if not cond:
        raise ValidationError(message, key=key)


@dataclass(frozen=True)
class OpticalMode:
    """A bare whispering-gallery mode.

    ``gamma_intrinsic`` and ``gamma_ext`` are energy decay rates; the taper
    rate is only meaningful for the resonator touching the fibre.
    """

    omega: float
    gamma_intrinsic: float
    gamma_ext: float = 0.0

    def __post_init__(self):
        _require(self.omega > 0, f"omega must be > 0, got {self.omega!r}", "omega")
        _require(self.gamma_intrinsic >= 0, "gamma_intrinsic must be >= 0", "gamma_intrinsic")
        _require(self.gamma_ext >= 0, "gamma_ext must be >= 0", "gamma_ext")

    @property
    def gamma(self) -> float:
        """Loaded energy decay rate."""
        return self.gamma_intrinsic + self.gamma_ext

    @classmethod
    def from_quality(cls, omega, q_loaded, taper_fraction=0.0):
        """Mode with loaded quality factor ``q_loaded``; ``taper_fraction``
        of the loaded loss goes out through the taper (0.5 is critical)."""
        _require(q_loaded > 0, f"q_opt must be > 0, got {q_loaded!r}", "q_opt")
        _require(0.0 <= taper_fraction <= 1.0, "taper_fraction must lie in [0, 1]", "taper_fraction")
        gamma = omega / q_loaded
        return cls(omega, gamma * (1.0 - taper_fraction), gamma * taper_fraction)


@dataclass(frozen=True)
class MechanicalMode:
    omega_m: float
    gamma_m: float
    m_eff: float
    radius_host: float

    def __post_init__(self):
        _require(self.omega_m > 0, f"omega_m must be > 0, got {self.omega_m!r}", "omega_m")
        _require(self.gamma_m > 0, f"gamma_m must be > 0, got {self.gamma_m!r}", "gamma_m")
        _require(self.gamma_m < self.omega_m,
                 f"mode must be underdamped (gamma_m={self.gamma_m!r} >= omega_m={self.omega_m!r})",
                 "gamma_m")
        _require(self.m_eff > 0, f"m_eff must be > 0, got {self.m_eff!r}", "m_eff")
        _require(self.radius_host > 0, f"radius must be > 0, got {self.radius_host!r}", "radius")

    @classmethod
    def from_quality(cls, omega_m, q_mech, m_eff, radius_host):
        _require(q_mech > 0, f"q_mech must be > 0, got {q_mech!r}", "q_mech")
        return cls(omega_m, omega_m / q_mech, m_eff, radius_host)

    @property
    def q_mech(self) -> float:
        return self.omega_m / self.gamma_m


@dataclass(frozen=True)
class CouplingModel:
    """Inter-resonator coupling ``kappa_0 * exp(-gap / decay_length)``."""

    kappa_0: float = 2 * math.pi * 5e9
    decay_length: float = 120e-9
    residual_rms: float | None = field(default=None, compare=False)

    def __post_init__(self):
        _require(self.kappa_0 > 0, "kappa_0 must be > 0", "kappa_0")
        _require(self.decay_length > 0, "decay_length must be > 0", "decay_length")


@dataclass(frozen=True)
class Supermodes:
    omega_plus: float
    omega_minus: float
    splitting: float
    mixing_angle: float
    gamma_plus: float
    gamma_minus: float
    gamma_bar: float
    # taper coupling rate into each supermode (mode-1 weight of its eigenvector)
    gamma_ext_plus: float = 0.0
    gamma_ext_minus: float = 0.0


@dataclass(frozen=True)
class PhotonicMolecule:
    mode1: OpticalMode
    mode2: OpticalMode
    kappa: float

    def __post_init__(self):
        _require(self.kappa >= 0, f"kappa must be >= 0, got {self.kappa!r}", "kappa")

    def supermodes(self) -> Supermodes:
        return supermodes(self.mode1, self.mode2, self.kappa)

    @classmethod
    def degenerate(cls, omega_0, q_loaded, splitting, taper_fraction=0.5):
        """Two identical-Q degenerate modes split by ``splitting`` (rad/s);
        the taper touches mode 1."""
        m1 = OpticalMode.from_quality(omega_0, q_loaded, taper_fraction)
        m2 = OpticalMode.from_quality(omega_0, q_loaded, 0.0)
        return cls(m1, m2, splitting / 2.0)


class Branch(enum.Enum):
    BLUE = "blue"
    RED = "red"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValidationError(f"branch must be 'blue' or 'red', got {value!r}", key="branch") from None


@dataclass(frozen=True)
class PumpConfig:
    power_in: float
    omega_laser: float
    branch: Branch = Branch.BLUE

    def __post_init__(self):
        _require(self.power_in >= 0, f"power must be >= 0, got {self.power_in!r}", "power")
        _require(self.omega_laser > 0, "omega_laser must be > 0", "omega_laser")
        object.__setattr__(self, "branch", Branch.parse(self.branch))


@dataclass(frozen=True)
class GainResult:
    gain: float
    effective_damping: float
    inversion: float
    rabi_rate: float


def omega_from_wavelength(wavelength):
    return 2 * math.pi * C_LIGHT / wavelength


def zero_point_amplitude(mech: MechanicalMode) -> float:
    return math.sqrt(HBAR / (2.0 * mech.m_eff * mech.omega_m))


def optomech_coupling(omega_0, radius):
    _require(omega_0 > 0, "omega_0 must be > 0", "omega_0")
    _require(radius > 0, "radius must be > 0", "radius")
    return omega_0 / radius


def rabi_rate(mech: MechanicalMode, omega_0) -> float:
    """Photon-phonon coupling rate g * x0 for a mode hosted on ``mech.radius_host``."""
    return optomech_coupling(omega_0, mech.radius_host) * zero_point_amplitude(mech)


def thermal_occupancy(temperature, omega_m):
    """Classical occupancy k_B T / (hbar Omega)."""
    _require(temperature >= 0, "temperature must be >= 0", "temperature")
    return K_B * temperature / (HBAR * omega_m)


def coupling_from_gap(gap, model: CouplingModel):
    gap_arr = np.asarray(gap, dtype=float)
    if np.any(gap_arr < 0):
        raise ValidationError(f"gap must be >= 0, got {gap!r}", key="gap")
    out = model.kappa_0 * np.exp(-gap_arr / model.decay_length)
    return float(out) if out.ndim == 0 else out


def calibrate_coupling(samples: Sequence[tuple[float, float]]) -> CouplingModel:
    """Fit the exponential gap law to measured ``(gap, splitting)`` pairs.

    Linear least squares on ``ln(splitting)`` against gap. The returned model
    carries the RMS residual of that log fit.
    """
    data = np.asarray(samples, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValidationError("samples must be (gap, splitting) pairs", key="samples")
    gaps, splits = data[:, 0], data[:, 1]
    if np.any(splits <= 0) or not np.all(np.isfinite(splits)):
        raise ValidationError("splittings must be finite and > 0", key="splitting")
    if np.any(gaps < 0):
        raise ValidationError("gaps must be >= 0", key="gap")
    if np.unique(gaps).size < 2:
        raise CalibrationUnderdetermined("need at least 2 distinct gaps to calibrate", key="gap")
    design = np.column_stack([np.ones_like(gaps), gaps])
    coef, *_ = np.linalg.lstsq(design, np.log(splits), rcond=None)
    intercept, slope = coef
    if slope >= 0:
        raise ValidationError("splitting does not decrease with gap; cannot fit a decay length", key="splitting")
    resid = np.log(splits) - design @ coef
    return CouplingModel(
        kappa_0=math.exp(intercept) / 2.0,
        decay_length=-1.0 / slope,
        residual_rms=float(np.sqrt(np.mean(resid ** 2))),
    )


def supermodes(mode1: OpticalMode, mode2: OpticalMode, kappa) -> Supermodes:
    """Diagonalise the 2x2 coupled-mode matrix [[w1, k], [k, w2]].

    Eigenvectors are v+ = (cos t, sin t) and v- = (sin t, -cos t) with
    t = atan2(k, d) / 2 and d = (w1 - w2) / 2, so mode 1 (the taper side)
    projects onto both supermodes with positive weight.
    """
    _require(kappa >= 0, f"kappa must be >= 0, got {kappa!r}", "kappa")
    mean = 0.5 * (mode1.omega + mode2.omega)
    delta = 0.5 * (mode1.omega - mode2.omega)
    root = math.hypot(delta, kappa)
    theta = 0.5 * math.atan2(kappa, delta)
    c2, s2 = math.cos(theta) ** 2, math.sin(theta) ** 2
    g1, g2 = mode1.gamma, mode2.gamma
    return Supermodes(
        omega_plus=mean + root,
        omega_minus=mean - root,
        splitting=2.0 * root,
        mixing_angle=theta,
        gamma_plus=c2 * g1 + s2 * g2,
        gamma_minus=s2 * g1 + c2 * g2,
        gamma_bar=0.5 * (g1 + g2),
        gamma_ext_plus=c2 * mode1.gamma_ext,
        gamma_ext_minus=s2 * mode1.gamma_ext,
    )


def _driven(pump: PumpConfig, sm: Supermodes):
    if pump.branch is Branch.BLUE:
        return sm.omega_plus, sm.gamma_plus, sm.gamma_ext_plus
    return sm.omega_minus, sm.gamma_minus, sm.gamma_ext_minus


def laser_detuning(pump: PumpConfig, sm: Supermodes) -> float:
    """Driven supermode frequency minus laser frequency."""
    return _driven(pump, sm)[0] - pump.omega_laser


def intracavity_photons(pump: PumpConfig, sm: Supermodes) -> float:
    """Steady photon number of the driven supermode, ignoring scattering."""
    omega_d, gamma_d, gamma_e = _driven(pump, sm)
    if pump.power_in == 0.0:
        return 0.0
    det = omega_d - pump.omega_laser
    if abs(det) > 10.0 * sm.gamma_bar:
        warnings.warn(
            f"laser is {abs(det) / sm.gamma_bar:.1f} linewidths from the driven supermode",
            RuntimeWarning,
            stacklevel=3,
        )
    flux = pump.power_in / (HBAR * pump.omega_laser)
    return flux * gamma_e / (det ** 2 + (0.5 * gamma_d) ** 2)


def inversion_from_pump(pump: PumpConfig, sm: Supermodes) -> float:
    """Photon-number inversion N+ - N- set by the pump.

    The undriven branch is taken as empty, so the result is +N for blue
    pumping and -N for red. With a critically coupled taper on resonance
    N = P / (hbar w gamma).
    """
    n = intracavity_photons(pump, sm)
    return n if pump.branch is Branch.BLUE else -n


def pump_power_for_inversion(inversion, omega_laser, sm: Supermodes, branch=Branch.BLUE) -> float:
    """Inverse of :func:`inversion_from_pump` for a fixed laser frequency."""
    probe = PumpConfig(1.0, omega_laser, branch)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        per_watt = abs(inversion_from_pump(probe, sm))
    if per_watt == 0:
        raise ValidationError("pump does not couple into the driven supermode", key="taper_fraction")
    return abs(inversion) / per_watt


def gain_lorentzian(splitting, omega_m, gamma):
    """Normalised gain profile, 1 at linecenter, FWHM ``gamma``."""
    half = 0.5 * gamma
    return half ** 2 / ((splitting - omega_m) ** 2 + half ** 2)


def mechanical_gain(dN, sm: Supermodes, mech: MechanicalMode, rabi) -> GainResult:
    gamma = sm.gamma_bar
    _require(gamma > 0, "gamma_bar must be > 0", "gamma_bar")
    gain = (0.5 * rabi) ** 2 * dN * gamma / ((sm.splitting - mech.omega_m) ** 2 + (0.5 * gamma) ** 2)
    return GainResult(gain=gain, effective_damping=mech.gamma_m - gain, inversion=dN, rabi_rate=rabi)


def threshold_power(sm: Supermodes, mech: MechanicalMode, rabi, at_fwhm=False) -> float:
    _require(rabi > 0, "rabi rate must be > 0", "rabi")
    p = mech.gamma_m * sm.gamma_bar ** 2 * HBAR * sm.omega_plus / rabi ** 2
    return 2.0 * p if at_fwhm else p


def threshold_inversion(sm: Supermodes, mech: MechanicalMode, rabi) -> float:
    """Inversion at which the gain equals the intrinsic damping."""
    unit = mechanical_gain(1.0, sm, mech, rabi).gain
    return mech.gamma_m / unit


def cooling_factor(dN_negative, sm: Supermodes, mech: MechanicalMode, rabi) -> float:
    """Cooled-to-ambient phonon ratio Gamma / (Gamma + |G|).

    Weak-coupling rate balance; only defined for red pumping.
    """
    if dN_negative > 0:
        raise ValidationError("cooling requires a non-positive inversion (red pumping)", key="inversion")
    g = mechanical_gain(dN_negative, sm, mech, rabi).gain
    return mech.gamma_m / (mech.gamma_m + abs(g))
