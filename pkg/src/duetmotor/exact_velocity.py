"""Second-order (in V0) steady-state velocity of the motor.

Free motor::

    I = 1/4 int_0^inf ds (Gx - Gy) K12 (exp(-c12/2) - exp(-c21/2))
    v = V0^2 b sin(phi) I / (2 eta(0))

with ``K_ij = sin(a_ij)/A_ij = b^2 sin(a_ij)/a_ij`` (b^2 for a classical bath).

Constant forces F1, F2 give the drifts ``<Q1 + Q2>/2 = v0 t``,
``v0 = (F1 + F2)/(2 eta(0))`` and ``<Q1 - Q2> = delta = (F1 - F2)/(2k)``; then::

    I_F = 1/8 int_0^inf ds { -(Gx + Gy) K11 sin(b v0 s) (exp(-c11/2) + exp(-c22/2))
          + (Gx - Gy) K12 [sin(phi - b v0 s - b delta) exp(-c12/2)
                           - sin(phi + b v0 s - b delta) exp(-c21/2)] }
    v_F = v0 + V0^2 b I_F / eta(0)

so that ``I_F = sin(phi) I / 2`` when F1 = F2 = 0.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .bath import BathSpec, MotorParams, memory_kernel_ft
from .correlators import CorrelatorTable, spectra

PANEL = 64
_SINC_SERIES = 1e-6


class TruncationError(RuntimeError):
    """The time integrand did not decay within the allowed range."""

    def __init__(self, message, suggested_tau_max=None):
        super().__init__(message)
        self.suggested_tau_max = suggested_tau_max


@dataclass(frozen=True)
class ForceSpec:
    f1: float = 0.0
    f2: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.f1) and math.isfinite(self.f2)):
            raise ValueError("forces must be finite")

    @property
    def zero(self) -> bool:
        return self.f1 == 0.0 and self.f2 == 0.0


@dataclass
class VelocityEstimate:
    value: float
    abs_error: float
    method: str
    params_fingerprint: str
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.value = float(self.value)
        self.abs_error = float(self.abs_error)
        if not self.abs_error >= 0:
            raise ValueError("abs_error must be non-negative")

    def __float__(self):
        return float(self.value)


def sinc_ratio(a, b):
    """sin(a)/A with A = a/b^2, using a series for small |a|."""
    a = np.asarray(a, dtype=float)
    small = np.abs(a) < _SINC_SERIES
    safe = np.where(small, 1.0, a)
    return b * b * np.where(small, 1.0 - a * a / 6.0, np.sin(safe) / safe)


def _eta0(params):
    return float(memory_kernel_ft(params.bath1, 0.0).real)


def _drifts(params, forces):
    v0 = (forces.f1 + forces.f2) / (2.0 * _eta0(params))
    delta = (forces.f1 - forces.f2) / (2.0 * params.k) if params.k > 0 else 0.0
    return v0, delta


def free_integrand(params, k):
    """Integrand of I at the kernel values ``k`` (dict of arrays)."""
    return 0.25 * (k["gx"] - k["gy"]) * sinc_ratio(k["a12"], params.b) * (
        np.exp(-0.5 * k["c12"]) - np.exp(-0.5 * k["c21"]))


def forced_integrand(params, forces, k, tau):
    """Integrand of I_F."""
    b, phi = params.b, params.phi
    v0, delta = _drifts(params, forces)
    bv = b * v0 * tau
    self_part = -(k["gx"] + k["gy"]) * sinc_ratio(k["a11"], b) * np.sin(bv) * (
        np.exp(-0.5 * k["c11"]) + np.exp(-0.5 * k["c22"]))
    if params.k > 0:
        cross = (k["gx"] - k["gy"]) * sinc_ratio(k["a12"], b) * (
            np.sin(phi - bv - b * delta) * np.exp(-0.5 * k["c12"])
            - np.sin(phi + bv - b * delta) * np.exp(-0.5 * k["c21"]))
    else:
        cross = 0.0
    return 0.125 * (self_part + cross)


def _time_steps(params, forces=None):
    """Initial step, the time after which the y-mode has died out, a step cap and
    the (time, step) pair used once the cutoff memory has decayed."""
    m, k, eta0, b = params.m, params.k, params.eta0, params.b
    gamma = eta0 / m
    scales = [1.0 / gamma]
    w0 = math.sqrt(2.0 * k / m) if k > 0 else 0.0
    if k > 0:
        scales.append(1.0 / w0)
    # thermal plus zero-point energy sets the ballistic decorrelation of exp(-c/2)
    energy = params.T1 + params.T2 + params.hbar * max(w0, gamma)
    if energy > 0:
        scales.append(math.sqrt(2.0 * m / (b * b * energy)))
    lam = params.cutoff.scale()
    cap = math.inf
    if forces is not None and not forces.zero:
        v0, _ = _drifts(params, forces)
        if v0 != 0:
            cap = 0.05 / (b * abs(v0))
            scales.append(1.0 / (b * abs(v0)))
    h_slow = 0.04 * min(scales)
    h0 = h_slow if lam is None else min(h_slow, 0.16 / lam)
    if k > 0:
        disc = 0.25 * gamma * gamma - 2.0 * k / m
        rate = 0.5 * gamma - math.sqrt(disc) if disc > 0 else 0.5 * gamma
        rate = max(rate, 2.0 * k / (eta0 * 4.0)) if disc > 0 and rate < 1e-300 else rate
    else:
        rate = gamma
    lam_t = 0.0 if lam is None else 30.0 / lam
    t_smooth = max(30.0 / rate, lam_t)
    return h0, t_smooth, cap, (lam_t, h_slow)


def _simpson(g, h):
    return h / 3.0 * (g[0] + 4.0 * g[1:-1:2].sum() + 2.0 * g[2:-1:2].sum() + g[-1])


def _integrate(params, integrand, tol, forces=None, max_panels=20000, numba=None):
    """Panel-wise Simpson integration of ``integrand(kernels, tau)`` over [0, inf).

    Returns ``(value, abs_error, diagnostics)``. The error combines a Richardson
    estimate in tau with the difference to a coarser frequency grid.
    """
    fine = spectra(params, tol)
    coarse = spectra(params, 16.0 * tol)
    h, t_smooth, cap, (t_slow, h_slow) = _time_steps(params, forces)
    t = 0.0
    total = total_c = err_tau = 0.0
    quiet = 0
    n_panels = 0
    steps = np.arange(PANEL + 1)
    while True:
        tau = t + h * steps
        g = integrand(fine.evaluate(tau, numba=numba), tau)
        gc = integrand(coarse.evaluate(tau, numba=numba), tau)
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite integrand near tau = {t:.4g}")
        s = _simpson(g, h)
        total += s
        total_c += _simpson(gc, h)
        err_tau += abs(s - _simpson(g[::2], 2 * h)) / 15.0
        env = np.max(np.abs(g)) * PANEL * h
        n_panels += 1
        t = tau[-1]
        if env <= 1e-10 * abs(total):
            quiet += 1
            if quiet >= 3:
                break
        else:
            quiet = 0
        if n_panels >= max_panels:
            raise TruncationError(
                f"integrand not decayed at tau = {t:.4g} (envelope {env:.3e}, integral {total:.3e})",
                suggested_tau_max=2.0 * t)
        if t >= t_slow and h < h_slow:
            h = h_slow
        if t >= t_smooth:
            h = min(2.0 * h, cap) if cap < math.inf else 2.0 * h
    err_omega = abs(total - total_c) / 15.0
    err = err_tau + err_omega + 1e-14 * abs(total)
    diag = {"tau_max": t, "panels": n_panels, "tail_fraction": fine.tail_fraction(),
            "err_tau": err_tau, "err_omega": err_omega, "n_omega": int(fine.omega.size)}
    return total, err, diag


def velocity_integral_I(table: CorrelatorTable, params: MotorParams, tol=1e-10):
    """I from a tabulated set of kernels (monotone-cubic quadrature on the table grid)."""
    if table.params_hash != params.fingerprint():
        raise ValueError("table was built for different parameters")
    kern = {n: getattr(table, n) for n in ("gx", "gy", "a12", "c12", "c21")}
    g = free_integrand(params, kern)
    total = float(PchipInterpolator(table.tau, g).integrate(table.tau[0], table.tau[-1]))
    tail = abs(g[-1]) * (table.tau[-1] - table.tau[-2])
    if tail > tol * max(abs(total), 1e-300) and np.any(g != 0):
        raise TruncationError(f"integrand not negligible at tau_max = {table.tau[-1]:.4g}",
                              suggested_tau_max=2.0 * table.tau[-1])
    return total


def check_v0_regime(params: MotorParams, stacklevel=3):
    """Warn when V0 is not small against the other energy scales."""
    scales = [T for T in (params.T1, params.T2) if T > 0]
    if params.k > 0:
        scales.append(params.k / params.b**2)
        if params.hbar > 0:
            scales.append(params.hbar * math.sqrt(params.k / params.m))
    if scales and params.V0 > 0.5 * min(scales):
        warnings.warn(f"V0 = {params.V0:g} is not small against min energy scale {min(scales):g}; "
                      "the second-order result may be inaccurate", RuntimeWarning, stacklevel=stacklevel)


def free_integral(params: MotorParams, tol=1e-8, numba=None):
    """(I, abs_error, diagnostics) by adaptive panel quadrature."""
    if params.T1 == params.T2 or params.k == 0:
        # exactly zero by symmetry; skip the quadrature
        return 0.0, 0.0, {"tau_max": 0.0, "panels": 0, "tail_fraction": 0.0, "exact_zero": True}
    return _integrate(params, lambda k, tau: free_integrand(params, k), tol, numba=numba)


def steady_velocity(params: MotorParams, tol=1e-8, numba=None) -> VelocityEstimate:
    """v = V0^2 b sin(phi) I / (2 eta(0))."""
    check_v0_regime(params)
    I, err, diag = free_integral(params, tol, numba)
    pref = params.V0**2 * params.b * math.sin(params.phi) / (2.0 * _eta0(params))
    if params.phi % math.pi == 0.0:
        pref = 0.0
    diag = dict(diag, I=I, I_error=err, tol=tol)
    return VelocityEstimate(pref * I, abs(pref) * err, "quadrature", params.fingerprint(), diag)


def classical_velocity(params: MotorParams, tol=1e-8, numba=None) -> VelocityEstimate:
    """Same formula with hbar -> 0 (F_i -> T_i, sin(a)/A -> b^2)."""
    est = steady_velocity(params.classical(), tol, numba)
    est.method = "quadrature-classical"
    return est


def forced_velocity(params: MotorParams, forces: ForceSpec, tol=1e-8, numba=None,
                    include_drift=True) -> VelocityEstimate:
    """Centre-of-mass velocity with constant forces: v0 + V0^2 b I_F / eta(0).

    ``include_drift=False`` returns only the V0^2 part.
    """
    check_v0_regime(params)
    eta0 = _eta0(params)
    v0, delta = _drifts(params, forces)
    if forces.zero:
        est = steady_velocity(params, tol, numba)
        I, err = 0.5 * math.sin(params.phi) * est.diagnostics["I"], 0.5 * est.diagnostics["I_error"]
        diag = dict(est.diagnostics)
    else:
        I, err, diag = _integrate(params, lambda k, tau: forced_integrand(params, forces, k, tau),
                                  tol, forces=forces, numba=numba)
    pref = params.V0**2 * params.b / eta0
    value = pref * I + (v0 if include_drift else 0.0)
    diag = dict(diag, I_F=I, I_F_error=err, drift=v0, offset=delta, tol=tol)
    return VelocityEstimate(value, abs(pref) * err, "quadrature", params.fingerprint(), diag)


def output_work_rate(params: MotorParams, forces: ForceSpec, tol=1e-8, numba=None) -> float:
    """W' = -F v for equal forces F1 = F2 = F."""
    if forces.f1 != forces.f2:
        raise NotImplementedError("the work rate is defined only for equal forces")
    if forces.f1 == 0.0:
        return 0.0
    return -forces.f1 * forced_velocity(params, forces, tol, numba).value


def single_params(bath: BathSpec, m, b, V0) -> MotorParams:
    """Two decoupled copies of one particle in one bath."""
    return MotorParams(m=m, k=0.0, b=b, V0=V0, phi=0.0, bath1=bath, bath2=bath)


def single_particle_velocity(bath: BathSpec, m, b, V0, force, tol=1e-8, numba=None,
                             include_drift=True) -> VelocityEstimate:
    """Drift velocity of one particle in -V0 cos(bx) - F x."""
    p = single_params(bath, m, b, V0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        est = forced_velocity(p, ForceSpec(force, force), tol, numba, include_drift)
    scales = [bath.temperature] + ([bath.hbar * bath.eta0 / m] if bath.hbar > 0 else [])
    if V0 > 0.5 * max(scales):
        warnings.warn(f"V0 = {V0:g} is not small against the thermal scale", RuntimeWarning,
                      stacklevel=2)
    return est
