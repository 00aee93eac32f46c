"""Hot numeric kernels with numba and pure-numpy implementations.

Two loops dominate runtime: fixed-step RK4 integration of the driven Bloch
equations and the single-pole filter cascade of the lock-in. Both exist as
numba scalar loops and as numpy/scipy equivalents computing the identical
update map; ``amorsim.backend`` picks which one the public wrappers call.

Bloch model (S = spin vector, z along the bias field):

    dSx/dt = -Gamma*Sx - omega(t)*Sy + R(t)
    dSy/dt =  omega(t)*Sx - Gamma*Sy
    dSz/dt = -Gamma*Sz

omega(t) = omega0 + inj_amp*sin(2*pi*inj_freq*t) is the instantaneous Larmor
rate in rad/s, R(t) the optical pumping rate along x.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.signal import lfilter

from . import backend

WAVEFORM_SQUARE = 0
WAVEFORM_SINE = 1
WAVEFORM_DC = 2

# chunk length for the numpy fallback paths, bounds peak memory
_CHUNK = 1 << 21

if backend._NUMBA_OK:
    from numba import njit

    @njit(cache=True)
    def _pump_rate_nb(t, r0, mod_freq, duty, waveform):
        if waveform == 0:
            frac = t * mod_freq
            frac = frac - math.floor(frac)
            return r0 if frac < duty else 0.0
        elif waveform == 1:
            return 0.5 * r0 * (1.0 + math.cos(2.0 * math.pi * mod_freq * t))
        return r0

    @njit(cache=True)
    def _bloch_rk4_nb(out, sx, sy, sz, n_steps, dt, t0, omega0, gamma,
                      r0, mod_freq, duty, waveform, inj_amp, inj_freq, stride):
        out[0, 0] = sx
        out[0, 1] = sy
        out[0, 2] = sz
        idx = 1
        two_pi = 2.0 * math.pi
        for i in range(n_steps):
            t = t0 + i * dt
            tm = t + 0.5 * dt
            te = t + dt
            if inj_amp != 0.0:
                o1 = omega0 + inj_amp * math.sin(two_pi * inj_freq * t)
                o2 = omega0 + inj_amp * math.sin(two_pi * inj_freq * tm)
                o4 = omega0 + inj_amp * math.sin(two_pi * inj_freq * te)
            else:
                o1 = omega0
                o2 = omega0
                o4 = omega0
            r1 = _pump_rate_nb(t, r0, mod_freq, duty, waveform)
            r2 = _pump_rate_nb(tm, r0, mod_freq, duty, waveform)
            r4 = _pump_rate_nb(te, r0, mod_freq, duty, waveform)

            k1x = -gamma * sx - o1 * sy + r1
            k1y = o1 * sx - gamma * sy
            k1z = -gamma * sz

            ax = sx + 0.5 * dt * k1x
            ay = sy + 0.5 * dt * k1y
            az = sz + 0.5 * dt * k1z
            k2x = -gamma * ax - o2 * ay + r2
            k2y = o2 * ax - gamma * ay
            k2z = -gamma * az

            bx = sx + 0.5 * dt * k2x
            by = sy + 0.5 * dt * k2y
            bz = sz + 0.5 * dt * k2z
            k3x = -gamma * bx - o2 * by + r2
            k3y = o2 * bx - gamma * by
            k3z = -gamma * bz

            cx = sx + dt * k3x
            cy = sy + dt * k3y
            cz = sz + dt * k3z
            k4x = -gamma * cx - o4 * cy + r4
            k4y = o4 * cx - gamma * cy
            k4z = -gamma * cz

            sx = sx + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
            sy = sy + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
            sz = sz + dt / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)

            if (i + 1) % stride == 0:
                out[idx, 0] = sx
                out[idx, 1] = sy
                out[idx, 2] = sz
                idx += 1

    @njit(cache=True)
    def _iir_cascade_nb(x, alpha, state, out):
        n = x.shape[0]
        m = state.shape[0]
        for i in range(n):
            v = x[i]
            for j in range(m):
                s = state[j]
                s = s + alpha * (v - s)
                state[j] = s
                v = s
            out[i] = v


def pump_rate_array(t, r0, mod_freq, duty, waveform):
    """Pump rate R(t) evaluated on an array of times (numpy path)."""
    t = np.asarray(t, dtype=np.float64)
    if waveform == WAVEFORM_SQUARE:
        frac = t * mod_freq
        frac = frac - np.floor(frac)
        return np.where(frac < duty, r0, 0.0)
    if waveform == WAVEFORM_SINE:
        return 0.5 * r0 * (1.0 + np.cos(2.0 * np.pi * mod_freq * t))
    return np.full(t.shape, float(r0))


def _rk4_propagator(z):
    """One-step RK4 growth factor for u' = lam*u, z = lam*dt."""
    return 1.0 + z + z**2 / 2.0 + z**3 / 6.0 + z**4 / 24.0


def _rk4_drive_term(z, dt, r1, r2, r4):
    """RK4 per-step forcing for u' = lam*u + r(t); r sampled at t, t+dt/2, t+dt."""
    k1 = r1 + 0j
    k2 = 0.5 * z * k1 + r2
    k3 = 0.5 * z * k2 + r2
    k4 = z * k3 + r4
    return (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _bloch_rk4_np(out, s0, n_steps, dt, t0, omega0, gamma,
                  r0, mod_freq, duty, waveform, inj_amp, inj_freq, stride):
    """Numpy fallback computing the same RK4 update map.

    The Bloch system is linear, so in the u = Sx + i*Sy basis one RK4 step is
    u[n+1] = mu*u[n] + beta[n] with mu constant when the field is static; the
    scan then runs through scipy.signal.lfilter. With field injection mu varies
    per step and a plain python scan is used.
    """
    sx, sy, sz = s0
    out[0, 0] = sx
    out[0, 1] = sy
    out[0, 2] = sz
    u0 = complex(sx, sy)

    lam_z = -gamma * dt
    mu_z = _rk4_propagator(lam_z)

    if inj_amp == 0.0:
        z = complex(-gamma, omega0) * dt
        mu = _rk4_propagator(z)
        u_carry = u0
        zi = np.array([mu * u_carry], dtype=np.complex128)
        idx = 1
        chunk = (_CHUNK // stride) * stride
        for start in range(0, n_steps, chunk):
            m = min(chunk, n_steps - start)
            # sample times built exactly as in the scalar loop so the square
            # wave flips on the same steps
            t = t0 + (start + np.arange(m)) * dt
            r1 = pump_rate_array(t, r0, mod_freq, duty, waveform)
            r2 = pump_rate_array(t + 0.5 * dt, r0, mod_freq, duty, waveform)
            r4 = pump_rate_array(t + dt, r0, mod_freq, duty, waveform)
            beta = _rk4_drive_term(z, dt, r1, r2, r4)
            u, zf = lfilter(np.array([1.0 + 0j]), np.array([1.0 + 0j, -mu]),
                            beta, zi=zi)
            zi = zf
            n_rec = m // stride
            if n_rec:
                rec = u[stride - 1::stride]
                out[idx:idx + n_rec, 0] = rec.real
                out[idx:idx + n_rec, 1] = rec.imag
                ks = start + stride * (1 + np.arange(n_rec))
                out[idx:idx + n_rec, 2] = sz * mu_z ** ks
                idx += n_rec
        return

    # time-varying field: per-step propagator, sequential scan
    idx = 1
    u = u0
    chunk = (_CHUNK // stride) * stride
    two_pi = 2.0 * np.pi
    for start in range(0, n_steps, chunk):
        m = min(chunk, n_steps - start)
        t = t0 + (start + np.arange(m)) * dt
        tm = t + 0.5 * dt
        te = t + dt
        r1 = pump_rate_array(t, r0, mod_freq, duty, waveform)
        r2 = pump_rate_array(tm, r0, mod_freq, duty, waveform)
        r4 = pump_rate_array(te, r0, mod_freq, duty, waveform)
        # omega sampled at t, t+dt/2, t+dt (midpoint shared by k2, k3)
        o1 = omega0 + inj_amp * np.sin(two_pi * inj_freq * t)
        o2 = omega0 + inj_amp * np.sin(two_pi * inj_freq * tm)
        o4 = omega0 + inj_amp * np.sin(two_pi * inj_freq * te)
        z1 = (-gamma + 1j * o1) * dt
        z2 = (-gamma + 1j * o2) * dt
        z4 = (-gamma + 1j * o4) * dt
        # mu, beta from the same staged elimination as the scalar loop
        a1 = z1
        a2 = z2 * (1.0 + 0.5 * a1)
        a3 = z2 * (1.0 + 0.5 * a2)
        a4 = z4 * (1.0 + a3)
        mu = 1.0 + (a1 + 2.0 * a2 + 2.0 * a3 + a4) / 6.0
        k1 = r1 + 0j
        k2 = 0.5 * z2 * k1 + r2
        k3 = 0.5 * z2 * k2 + r2
        k4 = z4 * k3 + r4
        beta = (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        mu_l = mu.tolist()
        beta_l = beta.tolist()
        rec = []
        for i in range(m):
            u = mu_l[i] * u + beta_l[i]
            if (i + 1) % stride == 0:
                rec.append(u)
        n_rec = len(rec)
        if n_rec:
            rec = np.asarray(rec)
            out[idx:idx + n_rec, 0] = rec.real
            out[idx:idx + n_rec, 1] = rec.imag
            ks = start + stride * (1 + np.arange(n_rec))
            out[idx:idx + n_rec, 2] = sz * mu_z ** ks
            idx += n_rec


def bloch_rk4(s0, n_steps, dt, t0, omega0, gamma, r0, mod_freq, duty,
              waveform, inj_amp=0.0, inj_freq=0.0, stride=1):
    """Integrate the driven Bloch equations, recording every `stride` steps.

    Returns an (n_steps//stride + 1, 3) array whose first row is the initial
    state. n_steps must be a multiple of stride.
    """
    if n_steps % stride != 0:
        raise ValueError("n_steps must be a multiple of stride")
    out = np.empty((n_steps // stride + 1, 3), dtype=np.float64)
    args = (n_steps, float(dt), float(t0), float(omega0), float(gamma),
            float(r0), float(mod_freq), float(duty), int(waveform),
            float(inj_amp), float(inj_freq), int(stride))
    if backend.use_numba():
        _bloch_rk4_nb(out, float(s0[0]), float(s0[1]), float(s0[2]), *args)
    else:
        _bloch_rk4_np(out, (float(s0[0]), float(s0[1]), float(s0[2])), *args)
    return out


def _iir_cascade_np(x, alpha, state, out):
    b = np.array([alpha])
    a = np.array([1.0, -(1.0 - alpha)])
    v = x
    for j in range(state.shape[0]):
        v, zf = lfilter(b, a, v, zi=np.array([(1.0 - alpha) * state[j]]))
        state[j] = v[-1]
    out[:] = v


def iir_cascade(x, alpha, state):
    """Cascaded single-pole low-pass y <- y + alpha*(x - y), one pass per stage.

    `state` carries the per-stage filter memory and is updated in place, which
    lets long inputs stream through in chunks.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty_like(x)
    if backend.use_numba():
        _iir_cascade_nb(x, float(alpha), state, out)
    else:
        _iir_cascade_np(x, float(alpha), state, out)
    return out
