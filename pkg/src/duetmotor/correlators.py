"""Two-time kernels of the unperturbed (V0 = 0) motor.

With ``P = |Gx|^2``, ``R = |Gy|^2``, ``C + iJ = Gx conj(Gy)``, the real-noise
spectra ``S_i = N hbar w/2 coth(hbar w/2T_i)``, ``S+ = S1 + S2`` and
``S- = S1 - S2``, all integrals running over w in [0, inf)::

    c12(t) = b^2/2pi int S+ [P (1 - cos wt) + R (1 + cos wt)] + b^2/pi int S- J sin wt
    c21(t) = c12(-t)
    c11(t) = b^2/2pi int (1 - cos wt) [S+ (P + R) + 2 S- C]      (c22: -2 S- C)
    a12(t) = b^2/4pi int N hbar w (P - R) sin wt                 (a11: P + R)

``c_ij`` are mean-square displacements between the dimensionless positions
``q = bQ`` at two times, ``a_ij`` are (i/2) times their commutators.
The 1/w^2 (diffusive) and 1/w singularities at w = 0 are removed with the
Lorentzian ``L(w) = lam^2/(w^2 + lam^2)``, ``lam = eta0/m``, and integrated in
closed form; Filon quadrature handles the rest.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special
from scipy.interpolate import PchipInterpolator

from .bath import (Exponential, MotorParams, Ohmic, density_of_states, memory_kernel_ft,
                   symmetric_psd)
from .filon import filon, frequency_grid, power_tail

KERNELS = ("gx", "gy", "a12", "a11", "c11", "c22", "c12", "c21")


class ConvergenceError(RuntimeError):
    """Frequency quadrature did not reach the requested tolerance."""

    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval


def frequency_features(params: MotorParams):
    """``(center, width)`` pairs for the frequency grid, and the largest scale."""
    m, k, eta0 = params.m, params.k, params.eta0
    gamma = eta0 / m
    feats = [(0.0, gamma)]
    scales = [gamma]
    if k > 0:
        wr = math.sqrt(2.0 * k / m)
        feats += [(0.0, wr), (wr, max(0.5 * gamma, 1e-9 * wr)), (0.0, 2.0 * k / eta0)]
        scales.append(wr)
    if not params.bath1.classical:
        for T in (params.T1, params.T2):
            if T > 0:
                feats.append((0.0, T / params.hbar))
                scales.append(T / params.hbar)
    lam = params.cutoff.scale()
    if lam is not None:
        feats.append((0.0, lam))
        scales.append(lam)
    if isinstance(params.cutoff, Exponential) or (
            not params.bath1.classical and min(params.T1, params.T2) == 0.0):
        # non-analytic remainders at w = 0: grade the grid down geometrically
        feats.append((0.0, 1e-7 * min(s for s in scales)))
    return feats, max(scales)


def _resolution(tol):
    # Filon-Simpson error scales as resolution^4
    return float(np.clip(0.015 * (tol / 1e-8) ** 0.25, 0.002, 0.2))


def _omega_max(params, tol):
    _, top = frequency_features(params)
    return top * max(1e3, 1e5 * math.sqrt(1e-8 / tol))


def make_grid(params: MotorParams, tol=1e-8):
    feats, _ = frequency_features(params)
    return frequency_grid(feats, _omega_max(params, tol), _resolution(tol))


def _psi(tau, lam):
    """int_0^inf L(w) (1 - cos wt) / w^2 dw."""
    t = np.abs(tau)
    return 0.5 * math.pi * (t + np.expm1(-lam * t) / lam)


def _phi(tau, lam):
    """int_0^inf L(w) sin(wt) / w dw."""
    return -0.5 * math.pi * np.sign(tau) * np.expm1(-lam * np.abs(tau))


def _chi(tau, lam):
    """int_0^inf L(w) (1 - cos wt) / w dw = ln x + gamma + (e^x E1(x) - e^-x Ei(x))/2, x = lam|t|."""
    x = lam * np.abs(np.asarray(tau, dtype=float))
    out = np.zeros_like(x)
    big = x > 40.0
    xb = x[big]
    ix2 = 1.0 / (xb * xb)
    out[big] = np.log(xb) + np.euler_gamma - ix2 * (1.0 + ix2 * (6.0 + ix2 * (120.0 + ix2 * 5040.0)))
    mid = (x > 0) & ~big
    xm = x[mid]
    out[mid] = (np.log(xm) + np.euler_gamma
                + 0.5 * (np.exp(xm) * special.exp1(xm) - np.exp(-xm) * special.expi(xm)))
    return out


def _extrapolate_even(w, row):
    # value at w = 0 of an even function from nodes 1 and 2
    w1, w2 = w[1] ** 2, w[2] ** 2
    row[0] = (w2 * row[1] - w1 * row[2]) / (w2 - w1)


class _Spectra:
    """Amplitude rows on a frequency grid, ready for Filon quadrature."""

    def __init__(self, params: MotorParams, omega):
        self.params = params
        self.omega = omega
        p = params
        m, k, eta0, hbar = p.m, p.k, p.eta0, p.hbar
        lam = eta0 / m
        self.lam = lam
        w = omega[1:]
        eta = memory_kernel_ft(p.bath1, w)
        gxw = -1.0 / (m * w + 1j * eta)          # w * Gx
        gx = gxw / w
        P = np.abs(gxw) ** 2 / w**2
        L = lam * lam / (w * w + lam * lam)
        N = density_of_states(p.bath1, w)
        S1 = symmetric_psd(p.bath1, w)
        S2 = symmetric_psd(p.bath2, w)
        Sp, Sm = S1 + S2, S1 - S2
        N0 = density_of_states(p.bath1, 0.0)
        S10, S20 = N0 * p.T1, N0 * p.T2
        # singular coefficients: lim w^2 (.) for cos rows, lim w (.) for sin rows
        beta_a = N0 * hbar / eta0**2
        # residual 1/w in the cos rows: exponential cutoff (linear term of Re eta)
        # and the hbar|w|/2 weight of a zero-temperature quantum bath
        lam_e = p.cutoff.cutoff if isinstance(p.cutoff, Exponential) else None

        def kap(S0, T):
            out = S0 / lam_e if lam_e else 0.0
            if T == 0.0 and hbar > 0:
                out += 0.5 * N0 * hbar
            return out / eta0**2

        k1, k2 = kap(S10, p.T1), kap(S20, p.T2)
        Lw = L / w
        self.k0 = k == 0
        nw = omega.size
        cos_rows = np.zeros((4, nw))
        sin_rows = np.zeros((5, nw))
        if not self.k0:
            gy = -1.0 / (m * w * w + 1j * w * eta - 2.0 * k)
            R = np.abs(gy) ** 2
            gg = gx * np.conj(gy)
            C, J = gg.real, gg.imag
            self.alpha = {"x": (S10 + S20) / eta0**2}
            self.kappa = {"x": k1 + k2}
            self.beta = {"J": (S10 - S20) / (2.0 * k * eta0), "a12": beta_a, "a11": beta_a}
            cos_rows[0, 1:] = Sp * P - self.alpha["x"] * L / w**2 - self.kappa["x"] * Lw
            cos_rows[1, 1:] = Sp * R
            cos_rows[2, 1:] = Sp * R + 2.0 * Sm * C
            cos_rows[3, 1:] = Sp * R - 2.0 * Sm * C
            sin_rows[0, 1:] = Sm * J - self.beta["J"] * L / w
            sin_rows[1, 1:] = N * hbar * w * (P - R) - beta_a * L / w
            sin_rows[2, 1:] = N * hbar * w * (P + R) - beta_a * L / w
            if not isinstance(p.cutoff, Ohmic):
                sin_rows[4, 1:] = gy.imag
        else:
            self.alpha = {"11": 4.0 * S10 / eta0**2, "22": 4.0 * S20 / eta0**2}
            self.kappa = {"11": 4.0 * k1, "22": 4.0 * k2}
            self.beta = {"a11": 2.0 * beta_a}
            cos_rows[2, 1:] = 4.0 * S1 * P - self.alpha["11"] * L / w**2 - self.kappa["11"] * Lw
            cos_rows[3, 1:] = 4.0 * S2 * P - self.alpha["22"] * L / w**2 - self.kappa["22"] * Lw
            sin_rows[2, 1:] = 2.0 * N * hbar * w * P - 2.0 * beta_a * L / w
        if not isinstance(p.cutoff, Ohmic):
            sin_rows[3, 1:] = gx.imag - L / (eta0 * w)
        for row in cos_rows:
            _extrapolate_even(omega, row)
        self.cos_rows = cos_rows
        self.sin_rows = sin_rows

    def tail_fraction(self):
        """Largest relative contribution beyond w_max among the constant parts."""
        worst = 0.0
        for row in self.cos_rows:
            total = np.sum(np.abs(row))
            if total == 0:
                continue
            base = abs(filon(self.omega, row, 0.0, 0.0)[0])
            tail = abs(power_tail(self.omega, row))
            if base > 0:
                worst = max(worst, tail / base)
        return worst

    def worst_interval(self):
        """Panel pair with the largest Simpson-vs-trapezoid discrepancy."""
        w = self.omega
        h = 0.5 * (w[2::2] - w[0:-1:2])
        err = np.zeros(h.size)
        for row in self.cos_rows:
            simp = h / 3.0 * (row[0:-1:2] + 4.0 * row[1::2] + row[2::2])
            trap = 0.5 * h * (row[0:-1:2] + 2.0 * row[1::2] + row[2::2])
            err += np.abs(simp - trap)
        i = int(np.argmax(err))
        return float(w[2 * i]), float(w[2 * i + 2])

    def evaluate(self, tau, numba=None):
        """All kernels at the times ``tau`` (any sign)."""
        p = self.params
        tau = np.asarray(tau, dtype=float)
        b2 = p.b * p.b
        lam = self.lam
        fc, fs = filon(self.omega, self.cos_rows, self.sin_rows, tau, numba=numba)
        f0, _ = filon(self.omega, self.cos_rows, self.sin_rows[:1], np.zeros(1), numba=numba)
        const = f0[:, 0]
        psi, phi, chi = _psi(tau, lam), _phi(tau, lam), _chi(tau, lam)
        out = {}
        if not self.k0:
            X = self.alpha["x"] * psi + self.kappa["x"] * chi + (const[0] - fc[0])
            Yp = const[1] + fc[1]
            Z = self.beta["J"] * phi + fs[0]
            out["c12"] = b2 / (2 * math.pi) * (X + Yp) + b2 / math.pi * Z
            out["c21"] = b2 / (2 * math.pi) * (X + Yp) - b2 / math.pi * Z
            out["c11"] = b2 / (2 * math.pi) * (X + const[2] - fc[2])
            out["c22"] = b2 / (2 * math.pi) * (X + const[3] - fc[3])
            out["a12"] = b2 / (4 * math.pi) * (self.beta["a12"] * phi + fs[1])
            out["a11"] = b2 / (4 * math.pi) * (self.beta["a11"] * phi + fs[2])
        else:
            out["c12"] = np.full(tau.shape, np.inf)
            out["c21"] = np.full(tau.shape, np.inf)
            out["c11"] = b2 / (2 * math.pi) * (self.alpha["11"] * psi + self.kappa["11"] * chi + const[2] - fc[2])
            out["c22"] = b2 / (2 * math.pi) * (self.alpha["22"] * psi + self.kappa["22"] * chi + const[3] - fc[3])
            out["a12"] = np.zeros(tau.shape)
            out["a11"] = b2 / (4 * math.pi) * (self.beta["a11"] * phi + fs[2])
        if isinstance(p.cutoff, Ohmic):
            from .greens import _ohmic_gx, _ohmic_gy

            out["gx"] = _ohmic_gx(p.m, p.eta0, tau)
            out["gy"] = _ohmic_gy(p.m, p.eta0, p.k, tau)
        else:
            from .greens import _ohmic_gx

            gx = _ohmic_gx(p.m, p.eta0, tau) + 2.0 / math.pi * fs[3]
            gx = np.where(tau > 0, gx, 0.0)
            out["gx"] = gx
            out["gy"] = gx.copy() if self.k0 else np.where(tau > 0, 2.0 / math.pi * fs[4], 0.0)
        return out


_SPECTRA_CACHE: dict = {}


def effective_params(params: MotorParams) -> MotorParams:
    """Quantum baths colder than 1e-9 of the slowest dynamical rate are set to
    T = 0: the difference only shows at times beyond hbar/T, and the thermal
    feature would otherwise push the grid into underflow."""
    if params.bath1.classical:
        return params
    rates = [params.eta0 / params.m]
    if params.k > 0:
        rates += [math.sqrt(2.0 * params.k / params.m), 2.0 * params.k / params.eta0]
    if params.cutoff.scale() is not None:
        rates.append(params.cutoff.scale())
    floor = 1e-9 * params.hbar * min(rates)
    changes = {name: 0.0 for name, T in (("T1", params.T1), ("T2", params.T2)) if 0 < T < floor}
    return params.with_(**changes) if changes else params


def spectra(params: MotorParams, tol=1e-8) -> _Spectra:
    key = (params.fingerprint(), float(tol))
    sp = _SPECTRA_CACHE.get(key)
    if sp is None:
        if len(_SPECTRA_CACHE) > 64:
            _SPECTRA_CACHE.clear()
        eff = effective_params(params)
        sp = _Spectra(eff, make_grid(eff, tol))
        _SPECTRA_CACHE[key] = sp
    return sp


def commutator_a12(params: MotorParams, tau, tol=1e-8):
    """(i/2)[q1(t + tau), q2(t)]; zero for a classical bath."""
    out = spectra(params, tol).evaluate(np.atleast_1d(tau))["a12"]
    return out if np.ndim(tau) else float(out[0])


def commutator_a11(params: MotorParams, tau, tol=1e-8):
    """(i/2)[q1(t + tau), q1(t)] (identical for particle 2)."""
    out = spectra(params, tol).evaluate(np.atleast_1d(tau))["a11"]
    return out if np.ndim(tau) else float(out[0])


def msd_cross(params: MotorParams, tau, tol=1e-8):
    """``(c12, c21)`` with c12(tau) = <(q1(t + tau) - q2(t))^2>."""
    out = spectra(params, tol).evaluate(np.atleast_1d(tau))
    if np.ndim(tau):
        return out["c12"], out["c21"]
    return float(out["c12"][0]), float(out["c21"][0])


def msd_self(params: MotorParams, tau, particle=1, tol=1e-8):
    """c11 or c22: <(q_i(t + tau) - q_i(t))^2>."""
    if particle not in (1, 2):
        raise ValueError("particle must be 1 or 2")
    out = spectra(params, tol).evaluate(np.atleast_1d(tau))["c11" if particle == 1 else "c22"]
    return out if np.ndim(tau) else float(out[0])


def tau_grid(params: MotorParams, tau_max, n_points):
    """Linear spacing up to 5/w_char, geometric beyond (w_char = sqrt(2k/m))."""
    if not tau_max > 0:
        raise ValueError("tau_max must be positive")
    if n_points < 16:
        raise ValueError("n_points must be >= 16")
    wc = math.sqrt(2 * params.k / params.m) if params.k > 0 else params.eta0 / params.m
    t_lin = min(5.0 / wc, tau_max)
    if t_lin >= tau_max:
        return np.linspace(0.0, tau_max, n_points)
    n_lin = n_points // 2
    lin = np.linspace(0.0, t_lin, n_lin, endpoint=False)
    geo = np.geomspace(t_lin, tau_max, n_points - n_lin)
    return np.concatenate((lin, geo))


@dataclass
class CorrelatorTable:
    tau: np.ndarray
    gx: np.ndarray
    gy: np.ndarray
    a12: np.ndarray
    a11: np.ndarray
    c11: np.ndarray
    c22: np.ndarray
    c12: np.ndarray
    c21: np.ndarray
    params_hash: str
    tol: float = 1e-8
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self._interp = {}

    def interp(self, name, tau):
        """Monotone-cubic interpolation of one kernel."""
        if name not in KERNELS:
            raise KeyError(name)
        f = self._interp.get(name)
        if f is None:
            f = PchipInterpolator(self.tau, getattr(self, name), extrapolate=False)
            self._interp[name] = f
        return f(tau)

    def to_dict(self):
        d = {name: getattr(self, name).tolist() for name in ("tau",) + KERNELS}
        d.update(params_hash=self.params_hash, tol=self.tol, diagnostics=self.diagnostics,
                 schema="duetmotor.correlator_table/1")
        return d

    def save(self, path):
        path = Path(path)
        if path.suffix == ".json":
            path.write_text(json.dumps(self.to_dict(), allow_nan=True))
        else:
            np.savez(path, **{n: getattr(self, n) for n in ("tau",) + KERNELS},
                     meta=json.dumps({"params_hash": self.params_hash, "tol": self.tol,
                                      "diagnostics": self.diagnostics}))

    @classmethod
    def load(cls, path):
        path = Path(path)
        if path.suffix == ".json":
            d = json.loads(path.read_text())
            arrays = {n: np.asarray(d[n], dtype=float) for n in ("tau",) + KERNELS}
            return cls(**arrays, params_hash=d["params_hash"], tol=d["tol"],
                       diagnostics=d.get("diagnostics", {}))
        with np.load(path) as z:
            meta = json.loads(str(z["meta"]))
            arrays = {n: z[n] for n in ("tau",) + KERNELS}
        return cls(**arrays, **meta)


def check_invariants(table: CorrelatorTable, rtol=1e-10):
    """Return a list of invariant violations (empty when the table is sound)."""
    bad = []
    scale = max(np.max(np.abs(table.c11[np.isfinite(table.c11)]), initial=0.0), 1e-300)
    at0 = np.flatnonzero(table.tau == 0.0)
    if at0.size:
        i = at0[0]
        if table.a12[i] != 0.0 or table.a11[i] != 0.0:
            bad.append("a(0) != 0")
        if abs(table.c11[i]) > rtol * scale or abs(table.c22[i]) > rtol * scale:
            bad.append("c11(0) or c22(0) != 0")
        if np.isfinite(table.c12[i]) and abs(table.c12[i] - table.c21[i]) > rtol * abs(table.c12[i]):
            bad.append("c12(0) != c21(0)")
    for name in ("c11", "c22", "c12", "c21"):
        v = getattr(table, name)
        fin = np.isfinite(v)
        if np.any(v[fin] < -rtol * scale):
            bad.append(f"{name} negative")
    return bad


def build_table(params: MotorParams, tau_max=None, n_points=512, *, tau=None, tol=1e-8,
                numba=None, check=True) -> CorrelatorTable:
    """Tabulate every kernel on a tau grid.

    Either pass an explicit ``tau`` array or ``tau_max`` and ``n_points`` for the
    default linear-then-geometric grid.
    """
    if tau is None:
        if tau_max is None:
            raise ValueError("pass tau or tau_max")
        tau = tau_grid(params, tau_max, n_points)
    tau = np.asarray(tau, dtype=float)
    sp = spectra(params, tol)
    tail = sp.tail_fraction()
    if tail > tol:
        lo, hi = sp.worst_interval()
        raise ConvergenceError(
            f"frequency tail fraction {tail:.2e} exceeds tol {tol:.1e}; "
            f"worst panel [{lo:.4g}, {hi:.4g}]", interval=(lo, hi))
    k = sp.evaluate(tau, numba=numba)
    table = CorrelatorTable(tau=tau, params_hash=params.fingerprint(), tol=tol,
                            diagnostics={"tail_fraction": tail, "n_omega": int(sp.omega.size),
                                         "omega_max": float(sp.omega[-1])},
                            **k)
    if check:
        bad = check_invariants(table)
        if bad:
            raise ConvergenceError("correlator invariants violated: " + ", ".join(bad))
    return table
