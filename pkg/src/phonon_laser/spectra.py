"""Photocurrent synthesis, Welch spectra and Lorentzian line fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, signal

from .dynamics import Trajectory
from .errors import ConvergenceError, NoPeakError, ValidationError
from .model import HBAR


@dataclass
class PSD:
    """Power spectral density.

    Real input gives a one-sided density starting at 0 Hz; complex input a
    two-sided density on an ascending grid (``estimator['sides']``).
    """

    freqs: np.ndarray
    values: np.ndarray
    resolution_bw: float
    estimator: dict = field(default_factory=dict)

    @property
    def df(self):
        return float(self.freqs[1] - self.freqs[0])

    def total_power(self):
        return float(np.sum(self.values) * self.df)

    def band_power(self, f_lo, f_hi):
        sel = (self.freqs >= f_lo) & (self.freqs <= f_hi)
        return float(np.sum(self.values[sel]) * self.df)

    def line_power(self, f_center, n_rbw=3.0):
        """Integrated power within +-n_rbw resolution bandwidths."""
        half = n_rbw * self.resolution_bw
        return self.band_power(f_center - half, f_center + half)


@dataclass(frozen=True)
class LorentzianFit:
    center: float
    fwhm: float
    height: float
    background: float
    rms_residual: float


def rf_photocurrent(traj: Trajectory, molecule=None, pump=None):
    """Transmitted taper power (W) at the trajectory sample times.

    Input-output relation ``s_out = s_in - sqrt(gamma_ext) * a_1`` where the
    taper-side bare mode is ``a_1 = cos(t) a+ + sin(t) a-``, each supermode
    carried back from its rotating frame to the laser frame.
    """
    molecule = molecule or traj.molecule
    pump = pump or traj.pump
    sm = molecule.supermodes()
    s_in = math.sqrt(pump.power_in / (HBAR * pump.omega_laser))
    theta = sm.mixing_angle
    r_p, r_m = traj.frames.optical_offsets
    t = traj.times
    a1 = math.cos(theta) * traj.a_plus * np.exp(1j * r_p * t) + math.sin(theta) * traj.a_minus * np.exp(1j * r_m * t)
    s_out = s_in - math.sqrt(molecule.mode1.gamma_ext) * a1
    return HBAR * pump.omega_laser * np.abs(s_out) ** 2


def n_segments(n_samples, nperseg, noverlap):
    if n_samples < nperseg:
        return 0
    return 1 + (n_samples - nperseg) // (nperseg - noverlap)


def welch_psd(series, fs, nperseg=4096, overlap=0.5, window="hann", detrend="constant") -> PSD:
    """Averaged modified periodogram, density scaled."""
    x = np.asarray(series)
    if x.ndim != 1:
        raise ValidationError("series must be one-dimensional", key="series")
    nperseg = int(nperseg)
    noverlap = int(round(overlap * nperseg))
    if not 0 <= noverlap < nperseg:
        raise ValidationError("overlap must lie in [0, 1)", key="overlap")
    nseg = n_segments(x.size, nperseg, noverlap)
    if nseg < 4:
        needed = nperseg + 3 * (nperseg - noverlap)
        raise ValidationError(
            f"series of {x.size} samples gives {nseg} segments of {nperseg}; need >= 4 "
            f"(>= {needed} samples): lengthen the run or shorten nperseg",
            key="nperseg",
        )
    complex_input = np.iscomplexobj(x)
    f, p = signal.welch(
        x, fs=fs, window=window, nperseg=nperseg, noverlap=noverlap, detrend=detrend,
        return_onesided=not complex_input, scaling="density",
    )
    if complex_input:
        f, p = np.fft.fftshift(f), np.fft.fftshift(p)
    win = signal.get_window(window, nperseg)
    enbw = nperseg * np.sum(win ** 2) / np.sum(win) ** 2
    return PSD(
        freqs=f,
        values=p,
        resolution_bw=float(enbw * fs / nperseg),
        estimator={
            "window": window,
            "nperseg": nperseg,
            "noverlap": noverlap,
            "n_segments": int(nseg),
            "fs": float(fs),
            "detrend": detrend,
            "scaling": "density",
            "sides": "two" if complex_input else "one",
            "enbw_bins": float(enbw),
        },
    )


def parseval_ratio(psd: PSD, series) -> float:
    """Integrated PSD over mean square of the detrended series."""
    x = np.asarray(series)
    if psd.estimator.get("detrend") == "constant":
        x = x - x.mean()
    return psd.total_power() / float(np.mean(np.abs(x) ** 2))


def _lorentz(f, center, fwhm, height, background):
    return height / (1.0 + ((f - center) / (0.5 * fwhm)) ** 2) + background


def lorentzian_fit(psd: PSD, window, exclude=(), max_iter=200) -> LorentzianFit:
    """Least-squares Lorentzian plus constant background over ``window``.

    ``exclude`` is a sequence of (f_lo, f_hi) bands dropped from the fit.
    """
    lo, hi = window
    sel = (psd.freqs >= lo) & (psd.freqs <= hi)
    for a, b in exclude:
        sel &= ~((psd.freqs >= a) & (psd.freqs <= b))
    f = psd.freqs[sel]
    y = psd.values[sel]
    if f.size < 5:
        raise NoPeakError(f"only {f.size} usable bins in window [{lo:.6g}, {hi:.6g}] Hz")
    bg = float(np.median(y))
    k = int(np.argmax(y))
    if not y[k] > 3.0 * bg:
        raise NoPeakError(f"no peak above 3x median background in [{lo:.6g}, {hi:.6g}] Hz")

    height0 = y[k] - bg
    half = bg + 0.5 * height0
    left = k
    while left > 0 and y[left] > half:
        left -= 1
    right = k
    while right < y.size - 1 and y[right] > half:
        right += 1
    width0 = max(f[right] - f[left], 2.0 * psd.df)

    # work in scaled units so parameters are O(1)
    f0, fs, ys = f[k], width0, y[k]
    u = (f - f0) / fs
    v = y / ys

    def resid(p):
        return _lorentz(u, p[0], p[1], p[2], p[3]) - v

    p0 = np.array([0.0, 1.0, height0 / ys, bg / ys])
    sol = optimize.least_squares(resid, p0, method="lm", xtol=1e-8, ftol=1e-12, gtol=1e-12,
                                 max_nfev=max_iter * (p0.size + 1))
    c, w, h, b = sol.x
    last = {"center": f0 + c * fs, "fwhm": abs(w) * fs, "height": h * ys, "background": b * ys}
    if sol.status <= 0:
        raise ConvergenceError(f"Lorentzian fit did not converge: {sol.message}", last)
    if not (w != 0 and h > 0):
        raise ConvergenceError("Lorentzian fit converged to a non-physical line", last)
    rms = float(np.sqrt(np.mean(sol.fun ** 2)) * ys)
    return LorentzianFit(center=last["center"], fwhm=last["fwhm"], height=last["height"],
                         background=last["background"], rms_residual=rms)
