"""Bath spectral densities, memory-kernel transforms and FDT weights.

Conventions (k_B = 1):

* density of states ``N(w) = 2 eta0 f(|w|)``
* memory kernel ``eta(t) = theta(t) int dw/2pi N(w) cos(w t)``
* one-sided transform ``eta_ft(w) = int_0^inf dt exp(i w t) eta(t)``
* FDT weight ``F(w) = hbar w / 2 (1 + coth(hbar w / 2T))``; the real-noise
  spectrum used for simulations is the even part ``N(w) hbar w/2 coth(hbar w/2T)``.

A bath with ``hbar == 0`` is classical: ``F(w) = T``.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Union

import numpy as np
from scipy import special

ArrayLike = Union[float, np.ndarray]

# |hbar w / 2T| below this uses the series of x coth x
_SERIES_X = 1e-4


@dataclass(frozen=True)
class Ohmic:
    """Flat spectral density, f(w) = 1 (memoryless friction)."""

    name = "ohmic"

    def f(self, omega):
        return np.ones_like(np.asarray(omega, dtype=float))

    def eta_ft(self, eta0, omega):
        return np.full(np.shape(omega), eta0, dtype=complex)

    def scale(self):
        return None


@dataclass(frozen=True)
class SoftLorentzian:
    """f(w) = L^2 / (w^2 + L^2); eta(t) = eta0 L exp(-L t)."""

    cutoff: float
    name = "lorentzian"

    def __post_init__(self):
        if not self.cutoff > 0:
            raise ValueError(f"cutoff must be positive, got {self.cutoff}")

    def f(self, omega):
        w = np.asarray(omega, dtype=float)
        return self.cutoff**2 / (w * w + self.cutoff**2)

    def eta_ft(self, eta0, omega):
        w = np.asarray(omega, dtype=float)
        return eta0 * self.cutoff / (self.cutoff - 1j * w)

    def scale(self):
        return self.cutoff


@dataclass(frozen=True)
class Exponential:
    """f(w) = exp(-|w|/L); eta(t) = (2 eta0 L / pi) / (1 + L^2 t^2)."""

    cutoff: float
    name = "exponential"

    def __post_init__(self):
        if not self.cutoff > 0:
            raise ValueError(f"cutoff must be positive, got {self.cutoff}")

    def f(self, omega):
        return np.exp(-np.abs(np.asarray(omega, dtype=float)) / self.cutoff)

    def eta_ft(self, eta0, omega):
        w = np.asarray(omega, dtype=float)
        a = np.abs(w) / self.cutoff
        im = np.zeros_like(a)
        small = a < 500.0
        asmall = a[small]
        nz = asmall > 0
        vals = np.zeros_like(asmall)
        an = asmall[nz]
        vals[nz] = np.exp(-an) * special.expi(an) + np.exp(an) * special.exp1(an)
        im[small] = vals
        al = a[~small]
        # asymptotic series of exp(-a)Ei(a) + exp(a)E1(a)
        im[~small] = 2.0 / al * (1.0 + 2.0 / al**2 + 24.0 / al**4)
        im = eta0 / math.pi * im * np.sign(w)
        return eta0 * np.exp(-a) + 1j * im

    def scale(self):
        return self.cutoff


CutoffKind = Union[Ohmic, SoftLorentzian, Exponential]


def cutoff_from_dict(d) -> CutoffKind:
    kind = str(d.get("kind", "ohmic")).lower()
    if kind == "ohmic":
        return Ohmic()
    if kind in ("lorentzian", "softlorentzian", "soft"):
        return SoftLorentzian(float(d["cutoff"]))
    if kind in ("exponential", "exp"):
        return Exponential(float(d["cutoff"]))
    raise ValueError(f"unknown cutoff kind {kind!r}")


def cutoff_to_dict(c: CutoffKind) -> dict:
    out = {"kind": c.name}
    if c.scale() is not None:
        out["cutoff"] = c.scale()
    return out


@dataclass(frozen=True)
class BathSpec:
    eta0: float
    cutoff: CutoffKind = field(default_factory=Ohmic)
    temperature: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if not self.eta0 > 0:
            raise ValueError(f"eta0 must be positive, got {self.eta0}")
        if not self.temperature >= 0:
            raise ValueError(f"temperature must be non-negative, got {self.temperature}")
        if not self.hbar >= 0:
            raise ValueError(f"hbar must be non-negative, got {self.hbar}")

    @property
    def classical(self) -> bool:
        return self.hbar == 0.0

    def to_dict(self) -> dict:
        return {
            "eta0": self.eta0,
            "cutoff": cutoff_to_dict(self.cutoff),
            "temperature": self.temperature,
            "hbar": self.hbar,
        }


@dataclass(frozen=True)
class MotorParams:
    """Two particles of mass m on tracks -V0 cos(bQ1), -V0 cos(bQ2 + phi),
    coupled by k/2 (Q1 - Q2)^2, each attached to its own bath."""

    m: float
    k: float
    b: float
    V0: float
    phi: float
    bath1: BathSpec
    bath2: BathSpec

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError("m must be positive")
        if not self.k >= 0:
            raise ValueError("k must be non-negative")
        if not self.b > 0:
            raise ValueError("b must be positive")
        if not self.V0 >= 0:
            raise ValueError("V0 must be non-negative")
        if self.bath1.cutoff != self.bath2.cutoff or self.bath1.eta0 != self.bath2.eta0:
            raise ValueError("both baths must share eta0 and the cutoff function")
        if self.bath1.hbar != self.bath2.hbar:
            raise ValueError("both baths must share hbar")

    @property
    def eta0(self) -> float:
        return self.bath1.eta0

    @property
    def cutoff(self) -> CutoffKind:
        return self.bath1.cutoff

    @property
    def hbar(self) -> float:
        return self.bath1.hbar

    @property
    def T1(self) -> float:
        return self.bath1.temperature

    @property
    def T2(self) -> float:
        return self.bath2.temperature

    def with_(self, **changes) -> "MotorParams":
        """Copy with changes; accepts the bath shortcuts T1, T2, hbar, eta0, cutoff."""
        b1, b2 = self.bath1, self.bath2
        if "T1" in changes:
            b1 = replace(b1, temperature=changes.pop("T1"))
        if "T2" in changes:
            b2 = replace(b2, temperature=changes.pop("T2"))
        for key in ("hbar", "eta0", "cutoff"):
            if key in changes:
                val = changes.pop(key)
                b1 = replace(b1, **{key: val})
                b2 = replace(b2, **{key: val})
        return replace(self, bath1=b1, bath2=b2, **changes)

    def swapped_temperatures(self) -> "MotorParams":
        return self.with_(T1=self.T2, T2=self.T1)

    def classical(self) -> "MotorParams":
        return self.with_(hbar=0.0)

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k not in ("bath1", "bath2")}
        d["bath1"] = self.bath1.to_dict()
        d["bath2"] = self.bath2.to_dict()
        return d

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @classmethod
    def reduced(cls, *, m=1.0, k=1.0, b=1.0, V0=0.5, phi=math.pi / 2, eta0=1.0,
                T1=1.0, T2=2.5, hbar=1.0, cutoff=None) -> "MotorParams":
        """Reduced-unit parameter set (defaults: the theta = 1 two-temperature motor)."""
        cutoff = Ohmic() if cutoff is None else cutoff
        return cls(m=m, k=k, b=b, V0=V0, phi=phi,
                   bath1=BathSpec(eta0, cutoff, T1, hbar),
                   bath2=BathSpec(eta0, cutoff, T2, hbar))

    @classmethod
    def from_dict(cls, d) -> "MotorParams":
        def bath(bd):
            return BathSpec(float(bd["eta0"]), cutoff_from_dict(bd.get("cutoff", {})),
                            float(bd["temperature"]), float(bd.get("hbar", 1.0)))
        return cls(m=float(d["m"]), k=float(d["k"]), b=float(d["b"]), V0=float(d["V0"]),
                   phi=float(d["phi"]), bath1=bath(d["bath1"]), bath2=bath(d["bath2"]))


def density_of_states(spec: BathSpec, omega: ArrayLike) -> ArrayLike:
    """N(w) = 2 eta0 f(|w|)."""
    out = 2.0 * spec.eta0 * spec.cutoff.f(np.abs(np.asarray(omega, dtype=float)))
    return out if np.ndim(omega) else float(out)


def memory_kernel_ft(spec: BathSpec, omega: ArrayLike) -> ArrayLike:
    """One-sided Fourier transform of the memory kernel.

    Ohmic: eta0. Lorentzian: eta0 L/(L - i w). Exponential:
    eta0 exp(-|w|/L) + i (eta0/pi) sgn(w) [exp(-a)Ei(a) + exp(a)E1(a)], a=|w|/L.
    The real part is always N(w)/2, so the value at w = 0 is eta0.
    """
    out = spec.cutoff.eta_ft(spec.eta0, np.asarray(omega, dtype=float))
    return out if np.ndim(omega) else complex(out)


def _x_coth_x(x):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < _SERIES_X
    xs = x[small]
    x2 = xs * xs
    out[small] = 1.0 + x2 / 3.0 - x2 * x2 / 45.0
    xl = x[~small]
    out[~small] = xl / np.tanh(xl)
    return out


def fdt_kernel(spec: BathSpec, omega: ArrayLike) -> ArrayLike:
    """F(w) = hbar w/2 (1 + coth(hbar w / 2T)); T in the classical limit.

    At T = 0 (quantum) this is hbar w for w > 0 and 0 for w <= 0.
    """
    w = np.asarray(omega, dtype=float)
    T = spec.temperature
    if spec.classical:
        out = np.full_like(w, T)
    elif T == 0.0:
        out = np.where(w > 0, spec.hbar * w, 0.0)
    else:
        # hbar w / (1 - exp(-hbar w/T)), no cancellation at negative w
        x = spec.hbar * w / T
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(x == 0, T, T * x / -np.expm1(-x))
    return out if np.ndim(omega) else float(out)


def symmetric_weight(spec: BathSpec, omega: ArrayLike) -> ArrayLike:
    """Even part of F: hbar w/2 coth(hbar w/2T) (T for a classical bath)."""
    w = np.asarray(omega, dtype=float)
    T = spec.temperature
    if spec.classical:
        out = np.full_like(w, T)
    elif T == 0.0:
        out = 0.5 * spec.hbar * np.abs(w)
    else:
        out = T * _x_coth_x(spec.hbar * w / (2.0 * T))
    return out if np.ndim(omega) else float(out)


def symmetric_psd(spec: BathSpec, omega: ArrayLike) -> ArrayLike:
    """Real-noise power spectrum N(w) hbar w/2 coth(hbar w/2T)."""
    out = density_of_states(spec, omega) * symmetric_weight(spec, omega)
    return out if np.ndim(omega) else float(out)
