import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from duetmotor.bath import BathSpec, Exponential, Ohmic, SoftLorentzian
from duetmotor.colored_noise import (NoiseTrack, NyquistError, autocovariance, check_nyquist,
                                     derive_seed, periodogram_check, synthesize, synthesize_many)

QUANTUM = BathSpec(1.0, Ohmic(), 1.0, 1.0)
CLASSICAL = BathSpec(1.0, Ohmic(), 1.0, 0.0)


def test_deterministic_in_seed():
    a = synthesize(QUANTUM, 4096, 0.05, 7)
    b = synthesize(QUANTUM, 4096, 0.05, 7)
    c = synthesize(QUANTUM, 4096, 0.05, 8)
    np.testing.assert_array_equal(a.samples, b.samples)
    assert not np.allclose(a.samples, c.samples)


def test_batch_equals_single():
    seeds = [derive_seed(5, t, 1) for t in range(4)]
    rows = synthesize_many(QUANTUM, 2048, 0.05, seeds)
    for s, row in zip(seeds, rows):
        np.testing.assert_array_equal(row, synthesize(QUANTUM, 2048, 0.05, s).samples)


@given(st.integers(0, 2**63), st.integers(0, 10**6))
def test_seed_derivation(master, traj):
    s1, s2 = derive_seed(master, traj, 1), derive_seed(master, traj, 2)
    assert s1 != s2
    assert 0 <= s1 < 2**64
    assert derive_seed(master, traj, 1) == s1


def test_dump_and_load(tmp_path):
    track = synthesize(QUANTUM, 1024, 0.1, 3)
    path = tmp_path / "noise.bin"
    track.dump(path)
    back = NoiseTrack.load(path, QUANTUM)
    np.testing.assert_array_equal(back.samples, track.samples)
    assert (back.dt, back.seed, back.n) == (0.1, 3, 1024)
    with pytest.raises(ValueError):
        NoiseTrack.load(path, CLASSICAL)
    path.write_bytes(b"garbage" + bytes(64))
    with pytest.raises(ValueError):
        NoiseTrack.load(path, QUANTUM)


@pytest.mark.parametrize("n", [1000, 512, 3000])
def test_length_must_be_power_of_two(n):
    with pytest.raises(ValueError):
        synthesize(QUANTUM, n, 0.1, 0)


def test_dt_must_be_positive():
    with pytest.raises(ValueError):
        synthesize(QUANTUM, 1024, 0.0, 0)


def test_white_noise_variance():
    n, dt = 2**20, 0.05
    x = synthesize(CLASSICAL, n, dt, 11).samples
    target = 2 * 1.0 * 1.0 / dt
    se = target * math.sqrt(2.0 / n)
    assert abs(x.var() - target) < 3 * se
    # uncorrelated between samples
    assert abs(autocovariance(x, [1])[0]) < 4 * target / math.sqrt(n)


@pytest.mark.parametrize("n", [2**20, 2**22])
def test_quantum_periodogram_matches_target(n):
    track = synthesize(QUANTUM, n, 0.05, 12)
    dev = periodogram_check(track, bins=32)
    assert np.max(np.abs(dev)) < 0.05


def test_deviations_of_different_seeds_are_independent():
    a = periodogram_check(synthesize(QUANTUM, 2**20, 0.05, 1), bins=32)
    b = periodogram_check(synthesize(QUANTUM, 2**20, 0.05, 2), bins=32)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.1 * 4   # 32 bins: sd of r is ~0.18


def test_classical_zero_temperature_is_silent():
    x = synthesize(BathSpec(1.0, Ohmic(), 0.0, 0.0), 1024, 0.1, 4).samples
    assert np.all(x == 0.0)


def block_autocov(x, lags, blocks=16):
    parts = np.array_split(x, blocks)
    vals = np.array([autocovariance(p, lags) for p in parts])
    return vals.mean(axis=0), vals.std(axis=0, ddof=1) / math.sqrt(blocks)


def test_stationarity_between_halves():
    spec = BathSpec(1.0, SoftLorentzian(2.0), 0.5, 1.0)
    x = synthesize(spec, 2**22, 0.02, 31).samples
    lags = [0, 10, 100]
    m1, s1 = block_autocov(x[: x.size // 2], lags)
    m2, s2 = block_autocov(x[x.size // 2:], lags)
    assert np.all(np.abs(m1 - m2) < 3 * np.hypot(s1, s2))


def test_zero_point_motion_adds_variance():
    # same T, quantum spectrum exceeds the classical one for hbar w > T
    q = synthesize(BathSpec(1.0, Exponential(5.0), 0.2, 1.0), 2**18, 0.05, 5).samples
    c = synthesize(BathSpec(1.0, Exponential(5.0), 0.2, 0.0), 2**18, 0.05, 5).samples
    assert q.var() > 2 * c.var()


def test_periodogram_negative_control():
    # quantum noise judged against the classical spectrum must fail at high frequency
    track = synthesize(QUANTUM, 2**20, 0.05, 13)
    centers, dev = periodogram_check(track, bins=32, target=CLASSICAL, return_centers=True)
    assert dev[-1] > 1.0
    assert centers[-1] > centers[0]


def test_lorentzian_autocovariance():
    # classical Lorentzian bath: <xi(t) xi(0)> = eta0 T L exp(-L |t|)
    L, T = 2.0, 0.5
    spec = BathSpec(1.0, SoftLorentzian(L), T, 0.0)
    dt = 0.02
    x = synthesize(spec, 2**20, dt, 21).samples
    lags = np.array([0, 10, 25, 50])
    ref = T * L * np.exp(-L * lags * dt)
    got = autocovariance(x, lags)
    np.testing.assert_allclose(got, ref, atol=0.03 * ref[0])


def test_nyquist_guard():
    spec = BathSpec(1.0, SoftLorentzian(1.0), 1.0, 0.0)
    check_nyquist(spec, 0.01)
    with pytest.warns(RuntimeWarning):
        check_nyquist(spec, 0.5)
    with pytest.raises(NyquistError):
        synthesize(spec, 1024, 2.0, 0)
    check_nyquist(QUANTUM, 10.0)   # Ohmic spectra are never checked


def test_periodogram_check_validates_bins():
    track = synthesize(QUANTUM, 1024, 0.1, 0)
    with pytest.raises(ValueError):
        periodogram_check(track, bins=4)
