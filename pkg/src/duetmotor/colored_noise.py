"""Stationary Gaussian noise with a prescribed power spectrum.

Spectral synthesis on a periodic block of ``n`` samples: with ``w_k = 2 pi k/(n dt)``
the sample ``xi_j = sum_k c_k exp(i w_k j dt)`` has independent complex Gaussian
coefficients, ``<|c_k|^2> = S(w_k)/(n dt)`` and ``c_-k = conj(c_k)``. The
autocovariance is then ``(1/(n dt)) sum_k S(w_k) cos(w_k lag)``, the discrete
version of ``int dw/2pi S(w) cos(w lag)``; for white noise of strength ``S`` the
per-sample variance is ``S/dt``.
"""
from __future__ import annotations

import hashlib
import json
import math
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bath import BathSpec, Ohmic, symmetric_psd

_MAGIC = b"DMNOISE1"
_HEADER = struct.Struct("<8sQdQ16s")
_MASK64 = (1 << 64) - 1


class NyquistError(ValueError):
    """The time step is too coarse for the spectrum."""


def spec_fingerprint(spec: BathSpec) -> str:
    blob = json.dumps(spec.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def derive_seed(master: int, trajectory: int, particle: int) -> int:
    """Per-track seed: master XOR the first 8 bytes of blake2b("trajectory:particle")."""
    h = hashlib.blake2b(f"{trajectory}:{particle}".encode(), digest_size=8).digest()
    return (int(master) ^ int.from_bytes(h, "little")) & _MASK64


@dataclass
class NoiseTrack:
    dt: float
    samples: np.ndarray
    spec: BathSpec
    seed: int

    @property
    def n(self) -> int:
        return self.samples.size

    def dump(self, path):
        """Raw binary: header (magic, n, dt, seed, spec fingerprint) + little-endian float64."""
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(_MAGIC, self.n, self.dt, self.seed & _MASK64,
                                  spec_fingerprint(self.spec).encode()))
            fh.write(np.ascontiguousarray(self.samples, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path, spec: BathSpec):
        raw = Path(path).read_bytes()
        magic, n, dt, seed, fp = _HEADER.unpack_from(raw)
        if magic != _MAGIC:
            raise ValueError("not a noise dump")
        if fp.decode() != spec_fingerprint(spec):
            raise ValueError("noise dump was generated for a different bath")
        samples = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size, count=n).astype(float)
        return cls(dt=dt, samples=samples, spec=spec, seed=seed)


def _check_n(n):
    if n < 2**10 or n & (n - 1):
        raise ValueError(f"n must be a power of two >= 1024, got {n}")


def frequencies(n, dt):
    return 2.0 * math.pi * np.arange(n // 2 + 1) / (n * dt)


def check_nyquist(spec: BathSpec, dt, warn_at=1e-3, fail_at=0.1):
    """Compare the spectrum at the Nyquist frequency with its peak.

    Only meaningful for baths with a cutoff: the Ohmic spectrum is flat
    (classical) or rising (quantum), so a finite time step always truncates it.
    """
    if isinstance(spec.cutoff, Ohmic):
        return
    wn = math.pi / dt
    grid = np.linspace(0.0, wn, 2049)
    s = symmetric_psd(spec, grid)
    peak = float(np.max(s))
    if peak <= 0:
        return
    ratio = float(s[-1]) / peak
    if ratio > fail_at:
        raise NyquistError(f"PSD at Nyquist is {ratio:.2%} of its peak; reduce dt")
    if ratio > warn_at:
        warnings.warn(f"PSD at Nyquist is {ratio:.2e} of its peak", RuntimeWarning, stacklevel=3)


def _amplitudes(spec, n, dt):
    s = symmetric_psd(spec, frequencies(n, dt))
    return np.sqrt(np.maximum(s, 0.0) / (n * dt))


def _draw(rng, amp, n):
    m = amp.size
    re = rng.standard_normal(m)
    im = rng.standard_normal(m)
    coef = np.empty(m, dtype=complex)
    coef.real = re * amp / math.sqrt(2.0)
    coef.imag = im * amp / math.sqrt(2.0)
    # k = 0 and k = n/2 are real with the full variance
    coef[0] = re[0] * amp[0]
    coef[-1] = re[-1] * amp[-1]
    return np.fft.irfft(coef * n, n)


def synthesize(spec: BathSpec, n: int, dt: float, seed: int) -> NoiseTrack:
    """One noise track; deterministic in (spec, n, dt, seed)."""
    _check_n(n)
    if not dt > 0:
        raise ValueError("dt must be positive")
    check_nyquist(spec, dt)
    amp = _amplitudes(spec, n, dt)
    rng = np.random.default_rng(int(seed) & _MASK64)
    return NoiseTrack(dt=dt, samples=_draw(rng, amp, n), spec=spec, seed=int(seed))


def synthesize_many(spec: BathSpec, n: int, dt: float, seeds) -> np.ndarray:
    """Rows identical to ``synthesize(spec, n, dt, s).samples`` for each seed."""
    _check_n(n)
    check_nyquist(spec, dt)
    amp = _amplitudes(spec, n, dt)
    seeds = list(seeds)
    out = np.empty((len(seeds), n))
    for i, s in enumerate(seeds):
        out[i] = _draw(np.random.default_rng(int(s) & _MASK64), amp, n)
    return out


def periodogram(samples, dt):
    """Raw periodogram ``|FFT|^2 dt / n`` on ``w_k``, an estimate of S(w_k)."""
    n = samples.size
    return frequencies(n, dt), np.abs(np.fft.rfft(samples)) ** 2 * dt / n


def periodogram_check(track: NoiseTrack, bins: int = 32, target: BathSpec | None = None,
                      return_centers=False):
    """Binned periodogram over binned target PSD, minus one, for each of ``bins``
    equal-width bins of the interior modes 0 < w_k < Nyquist."""
    if bins < 8:
        raise ValueError("bins must be >= 8")
    spec = track.spec if target is None else target
    w, p = periodogram(track.samples, track.dt)
    w, p = w[1:-1], p[1:-1]
    s = symmetric_psd(spec, w)
    edges = np.linspace(0, w.size, bins + 1).astype(int)
    dev = np.empty(bins)
    centers = np.empty(bins)
    for i in range(bins):
        sl = slice(edges[i], edges[i + 1])
        ts = s[sl].sum()
        dev[i] = p[sl].sum() / ts - 1.0 if ts > 0 else (0.0 if p[sl].sum() == 0 else np.inf)
        centers[i] = w[sl].mean()
    return (centers, dev) if return_centers else dev


def autocovariance(samples, lags):
    x = np.asarray(samples, dtype=float)
    n = x.size
    return np.array([np.dot(x[: n - l], x[l:]) / (n - l) for l in lags])
