"""Compiled stepping loops for the three-wave amplitude equations.

State layout: ``y = [a_plus, a_minus, b_0, ..., b_{M-1}]``. Coefficients
are packed by :mod:`phonon_laser.dynamics`; nothing here knows about
physical units.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def drift(y, dy, opt_lin, drive, mech_lin, half_rabi, clamp):
    ap = y[0]
    am = y[1]
    sb = 0j
    for m in range(mech_lin.shape[0]):
        sb += half_rabi[m] * y[2 + m]
    dy[0] = opt_lin[0] * ap - 1j * sb * am + drive[0]
    dy[1] = opt_lin[1] * am - 1j * np.conj(sb) * ap + drive[1]
    beat = np.conj(am) * ap
    for m in range(mech_lin.shape[0]):
        dy[2 + m] = mech_lin[m] * y[2 + m] - 1j * half_rabi[m] * beat
    if clamp >= 0:
        dy[clamp] = 0j


@njit(cache=True, nogil=True)
def coupling(y, dy, drive, half_rabi, clamp):
    """Drift without the diagonal linear part."""
    ap = y[0]
    am = y[1]
    sb = 0j
    for m in range(half_rabi.shape[0]):
        sb += half_rabi[m] * y[2 + m]
    dy[0] = -1j * sb * am + drive[0]
    dy[1] = -1j * np.conj(sb) * ap + drive[1]
    beat = np.conj(am) * ap
    for m in range(half_rabi.shape[0]):
        dy[2 + m] = -1j * half_rabi[m] * beat
    if clamp >= 0:
        dy[clamp] = 0j


@njit(cache=True, nogil=True)
def _finite(y):
    for k in range(y.shape[0]):
        if not (np.isfinite(y[k].real) and np.isfinite(y[k].imag)):
            return False
    return True


@njit(cache=True, nogil=True)
def rk4_steps(y, n_steps, dt, opt_lin, drive, mech_lin, half_rabi, clamp,
              dec, out, out_pos, record):
    """Advance ``y`` in place by ``n_steps`` classic RK4 steps.

    Returns ``(next_out_pos, bad_step)``; ``bad_step`` is -1 unless the
    state went non-finite.
    """
    n = y.shape[0]
    k1 = np.empty(n, np.complex128)
    k2 = np.empty(n, np.complex128)
    k3 = np.empty(n, np.complex128)
    k4 = np.empty(n, np.complex128)
    tmp = np.empty(n, np.complex128)
    h2 = 0.5 * dt
    h6 = dt / 6.0
    for step in range(n_steps):
        drift(y, k1, opt_lin, drive, mech_lin, half_rabi, clamp)
        for i in range(n):
            tmp[i] = y[i] + h2 * k1[i]
        drift(tmp, k2, opt_lin, drive, mech_lin, half_rabi, clamp)
        for i in range(n):
            tmp[i] = y[i] + h2 * k2[i]
        drift(tmp, k3, opt_lin, drive, mech_lin, half_rabi, clamp)
        for i in range(n):
            tmp[i] = y[i] + dt * k3[i]
        drift(tmp, k4, opt_lin, drive, mech_lin, half_rabi, clamp)
        for i in range(n):
            y[i] = y[i] + h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        if not _finite(y):
            return out_pos, step
        if record and (step + 1) % dec == 0:
            out[out_pos, :] = y
            out_pos += 1
    return out_pos, -1


@njit(cache=True, nogil=True)
def heun_steps(y, n_steps, dt, prop, drive, half_rabi, clamp,
               noise, dec, out, out_pos, record):
    """Stochastic Heun in the interaction picture of the linear part.

    ``prop`` is ``exp(L dt)`` for the diagonal linear coefficients ``L``,
    so free rotation and damping are exact and only the couplings and
    drive are integrated. Additive increments ``noise[step, :]`` are
    applied after propagation.
    """
    n = y.shape[0]
    f0 = np.empty(n, np.complex128)
    f1 = np.empty(n, np.complex128)
    pred = np.empty(n, np.complex128)
    h2 = 0.5 * dt
    for step in range(n_steps):
        coupling(y, f0, drive, half_rabi, clamp)
        for i in range(n):
            pred[i] = prop[i] * (y[i] + dt * f0[i]) + noise[step, i]
        coupling(pred, f1, drive, half_rabi, clamp)
        for i in range(n):
            y[i] = prop[i] * (y[i] + h2 * f0[i]) + h2 * f1[i] + noise[step, i]
        if not _finite(y):
            return out_pos, step
        if record and (step + 1) % dec == 0:
            out[out_pos, :] = y
            out_pos += 1
    return out_pos, -1
