#!/usr/bin/env python3
"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Covers the Filon sine/cosine transform used by the correlators and the BAOAB
batch integrator. Both paths are checked for agreement before timing.
"""
import argparse
import time

import numpy as np

from duetmotor import MotorParams
from duetmotor._accel import HAVE_NUMBA
from duetmotor.correlators import make_grid
from duetmotor.dynamics import SimConfig, _run_batch_nb, _run_batch_np, stable_dt
from duetmotor.filon import _filon_numba, _filon_numpy


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def bench_filon(repeat):
    params = MotorParams.reduced()
    omega = make_grid(params, 1e-8)
    rng = np.random.default_rng(0)
    ac = rng.standard_normal((4, omega.size))
    as_ = rng.standard_normal((5, omega.size))
    tau = np.linspace(0.0, 40.0, 2048)
    c1, s1 = _filon_numpy(omega, ac, as_, tau)
    c2, s2 = _filon_numba(omega, ac, as_, tau)
    diff = max(np.max(np.abs(c1 - c2)), np.max(np.abs(s1 - s2)))
    t_np = best_of(lambda: _filon_numpy(omega, ac, as_, tau), repeat)
    t_nb = best_of(lambda: _filon_numba(omega, ac, as_, tau), repeat)
    return f"filon  nodes={omega.size} tau={tau.size}", t_np, t_nb, diff


def bench_integrator(repeat):
    params = MotorParams.reduced()
    dt = stable_dt(params)
    n, nb = 2**15, 8
    cfg = SimConfig(dt=dt, n_steps=n, n_traj=nb)
    rng = np.random.default_rng(1)
    xi = rng.standard_normal((nb, 2, n))
    q0 = np.zeros((nb, 2))
    p0 = np.zeros((nb, 2))
    phase = np.array([0.0, params.phi])
    force = np.zeros(2)
    args = (dt, params.m, params.eta0, params.k, params.V0, params.b, phase, force, cfg.every)

    def run(kernel):
        out = np.zeros((nb, n // cfg.every))
        kernel(q0.copy(), p0.copy(), xi, *args, out)
        return out

    diff = float(np.max(np.abs(run(_run_batch_np) - run(_run_batch_nb))))
    t_np = best_of(lambda: run(_run_batch_np), repeat)
    t_nb = best_of(lambda: run(_run_batch_nb), repeat)
    return f"baoab  traj={nb} steps={n}", t_np, t_nb, diff


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        print("numba disabled or missing; both columns time the numpy path")
    print(f"{'kernel':36s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s} {'max diff':>10s}")
    for bench in (bench_filon, bench_integrator):
        name, t_np, t_nb, diff = bench(args.repeat)
        print(f"{name:36s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
