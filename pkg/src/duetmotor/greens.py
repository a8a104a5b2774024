"""Response functions of the centre-of-mass (x) and relative (y) coordinates.

Frequency domain (convention ``G(w) = int dt exp(i w t) G(t)``)::

    Gx(w) = -1 / (m w^2 + i w eta(w))
    Gy(w) = -1 / (m w^2 + i w eta(w) - 2k)

Time domain: ``m G'' + eta * G' (+ 2k G) = delta(t)`` with G = 0 for t < 0.
"""
from __future__ import annotations

import math

import numpy as np

from .bath import MotorParams, Ohmic, memory_kernel_ft
from .filon import filon


class PoleError(ZeroDivisionError):
    """Raised when a response function is evaluated on its w = 0 pole."""


def _eta(params: MotorParams, omega):
    return memory_kernel_ft(params.bath1, omega)


def green_x(params: MotorParams, omega):
    w = np.asarray(omega, dtype=float)
    if np.any(w == 0):
        raise PoleError("green_x has a pole at omega = 0")
    out = -1.0 / (params.m * w * w + 1j * w * _eta(params, w))
    return out if np.ndim(omega) else complex(out)


def green_y(params: MotorParams, omega):
    w = np.asarray(omega, dtype=float)
    if params.k == 0 and np.any(w == 0):
        raise PoleError("green_y has a pole at omega = 0 when k = 0")
    out = -1.0 / (params.m * w * w + 1j * w * _eta(params, w) - 2.0 * params.k)
    return out if np.ndim(omega) else complex(out)


def _ohmic_gx(m, eta0, tau):
    tau = np.asarray(tau, dtype=float)
    g = eta0 / m
    return np.where(tau > 0, -np.expm1(-g * np.maximum(tau, 0.0)) / eta0, 0.0)


def _ohmic_gy(m, eta0, k, tau):
    tau = np.asarray(tau, dtype=float)
    if k == 0:
        return _ohmic_gx(m, eta0, tau)
    t = np.maximum(tau, 0.0)
    g = eta0 / m
    disc = 2.0 * k / m - 0.25 * g * g
    scale = max(2.0 * k / m, 0.25 * g * g)
    if abs(disc) <= 1e-12 * scale:
        out = t * np.exp(-0.5 * g * t) / m
    elif disc > 0:
        w1 = math.sqrt(disc)
        out = np.exp(-0.5 * g * t) * np.sin(w1 * t) / (m * w1)
    else:
        w1 = math.sqrt(-disc)
        # sinh(w1 t) exp(-g t/2) written with decaying exponentials
        out = (np.exp((w1 - 0.5 * g) * t) - np.exp(-(w1 + 0.5 * g) * t)) / (2.0 * m * w1)
    return np.where(tau > 0, out, 0.0)


def green_x_time(params: MotorParams, tau, grid=None):
    """Gx(t). Closed form for an Ohmic bath, otherwise a sine transform of Im Gx(w)
    on ``grid`` (a frequency grid from :func:`duetmotor.filon.frequency_grid`)."""
    if isinstance(params.cutoff, Ohmic):
        out = _ohmic_gx(params.m, params.eta0, tau)
        return out if np.ndim(tau) else float(out)
    grid = default_grid(params) if grid is None else grid
    return _numeric_time(params, tau, grid, which="x")


def green_y_time(params: MotorParams, tau, grid=None):
    if isinstance(params.cutoff, Ohmic):
        out = _ohmic_gy(params.m, params.eta0, params.k, tau)
        return out if np.ndim(tau) else float(out)
    if params.k == 0:
        return green_x_time(params, tau, grid)
    grid = default_grid(params) if grid is None else grid
    return _numeric_time(params, tau, grid, which="y")


def default_grid(params: MotorParams, resolution=0.02, span=1e5):
    from .correlators import frequency_features
    from .filon import frequency_grid

    feats, top = frequency_features(params)
    return frequency_grid(feats, span * top, resolution)


def _numeric_time(params, tau, omega, which):
    # causal G: G(t) = (2/pi) int_0^inf Im G(w) sin(w t) dw for t > 0
    tau_arr = np.atleast_1d(np.asarray(tau, dtype=float))
    m, eta0 = params.m, params.eta0
    lam = eta0 / m
    w = omega[1:]
    if which == "x":
        im = np.imag(green_x(params, w))
        # subtract the Ohmic-like 1/w singularity: (1/eta0) lam^2/(w (w^2+lam^2))
        im = im - lam * lam / (eta0 * w * (w * w + lam * lam))
        base = _ohmic_gx(m, eta0, tau_arr)
    else:
        im = np.imag(green_y(params, w))
        base = np.zeros_like(tau_arr)
    amp = np.concatenate(([0.0], im))
    _, s = filon(omega, 0.0, amp, np.abs(tau_arr))
    out = np.where(tau_arr > 0, base + 2.0 / math.pi * s, 0.0)
    return out if np.ndim(tau) else float(out[0])
