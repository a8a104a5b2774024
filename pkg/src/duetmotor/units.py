"""Physical <-> reduced units.

Base scales: mass 1 amu, length 1 um, energy k_B * 1 uK. The time unit follows
as ``t0 = sqrt(amu um^2 / (k_B uK))`` (about 11 us) and hbar becomes a number
of order one. Frequencies given in Hz or kHz are read as angular rates (s^-1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .bath import BathSpec, MotorParams, Ohmic, SoftLorentzian, Exponential

AMU = 1.66053906660e-27      # kg
KB = 1.380649e-23            # J/K
HBAR = 1.054571817e-34       # J s
M0 = AMU
L0 = 1e-6
E0 = KB * 1e-6
T0 = math.sqrt(M0 * L0 * L0 / E0)
HBAR_REDUCED = HBAR / (E0 * T0)
VELOCITY = L0 / T0           # m/s per reduced velocity unit


@dataclass(frozen=True)
class PhysicalParams:
    """Inputs in the units of the experimental proposal."""

    m_amu: float = 40.0
    T1_uK: float = 1.0
    T2_uK: float = 2.5
    b_per_um: float = 10.0
    eta_over_m_Hz: float = 10.0
    Omega_kHz: float = 702.5
    V0_uK: float = 0.25
    phi: float = math.pi / 2
    cutoff_kind: str = "lorentzian"
    cutoff_kHz: float | None = None
    quantum: bool = True

    def __post_init__(self):
        for name in ("m_amu", "b_per_um", "eta_over_m_Hz"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("T1_uK", "T2_uK", "V0_uK", "Omega_kHz"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative")
        if self.cutoff_kind != "ohmic" and not (self.cutoff_kHz and self.cutoff_kHz > 0):
            raise ValueError("a cutoff frequency is required for a non-Ohmic bath")


def _cutoff(kind, rate):
    if kind == "ohmic":
        return Ohmic()
    if kind == "lorentzian":
        return SoftLorentzian(rate)
    if kind == "exponential":
        return Exponential(rate)
    raise ValueError(f"unknown cutoff kind {kind!r}")


def convert_units(phys: PhysicalParams) -> MotorParams:
    m = phys.m_amu
    gamma = phys.eta_over_m_Hz * T0
    omega = phys.Omega_kHz * 1e3 * T0
    eta0 = m * gamma
    hbar = HBAR_REDUCED if phys.quantum else 0.0
    lam = None if phys.cutoff_kHz is None else phys.cutoff_kHz * 1e3 * T0
    cut = _cutoff(phys.cutoff_kind, lam)
    return MotorParams(m=m, k=m * omega * omega, b=phys.b_per_um, V0=phys.V0_uK, phi=phys.phi,
                       bath1=BathSpec(eta0, cut, phys.T1_uK, hbar),
                       bath2=BathSpec(eta0, cut, phys.T2_uK, hbar))


def to_physical(p: MotorParams) -> PhysicalParams:
    """Inverse of :func:`convert_units`."""
    lam = p.cutoff.scale()
    return PhysicalParams(
        m_amu=p.m, T1_uK=p.T1, T2_uK=p.T2, b_per_um=p.b,
        eta_over_m_Hz=p.eta0 / p.m / T0, Omega_kHz=math.sqrt(p.k / p.m) / T0 / 1e3,
        V0_uK=p.V0, phi=p.phi, cutoff_kind=p.cutoff.name,
        cutoff_kHz=None if lam is None else lam / T0 / 1e3, quantum=p.hbar > 0)


def velocity_to_si(v):
    """Reduced velocity to m/s."""
    return v * VELOCITY
