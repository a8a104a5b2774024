"""Langevin simulation of the motor and of a single tilted-washboard particle.

QMD: classical equations of motion driven by noise with the symmetrised quantum
spectrum ``N(w) hbar w/2 coth(hbar w/2T)``. MD: the same with the classical
spectrum ``N(w) T``. Only Ohmic friction is supported.

Integrator (BAOAB, per step of length dt)::

    B: p += dt/2 f(q)      A: q += dt/2 p/m
    O: p  = c p + xi_j (1 - c)/gamma,   c = exp(-gamma dt), gamma = eta0/m
    A: q += dt/2 p/m       B: p += dt/2 f(q)

where xi_j is the pre-synthesised noise sample held constant over the step.
"""
from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ._accel import njit, use_numba
from .bath import BathSpec, MotorParams, Ohmic
from .colored_noise import derive_seed, synthesize_many
from .exact_velocity import ForceSpec, VelocityEstimate

MODES = ("qmd", "md")


class SimulationError(RuntimeError):
    def __init__(self, message, seed=None, step=None):
        super().__init__(message)
        self.seed = seed
        self.step = step


@dataclass(frozen=True)
class SingleParticle:
    """One particle in -V0 cos(b x) - F x attached to ``bath``."""

    bath: BathSpec
    m: float = 1.0
    b: float = 1.0
    V0: float = 0.1
    force: float = 0.0

    def to_dict(self):
        return {"bath": self.bath.to_dict(), "m": self.m, "b": self.b, "V0": self.V0,
                "force": self.force}


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.02
    n_steps: int = 2**18
    n_traj: int = 512
    master_seed: int = 20240611
    mode: str = "qmd"
    estimator_window: float = 0.5
    initial_conditions: str = "origin"
    n_saved: int = 4096
    batch: int = 16
    workers: int = 1
    numba: bool | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.n_steps < 1024 or self.n_steps & (self.n_steps - 1):
            raise ValueError("n_steps must be a power of two >= 1024")
        if not 0 < self.estimator_window <= 1:
            raise ValueError("estimator_window must be in (0, 1]")
        if self.initial_conditions not in ("origin", "thermal"):
            raise ValueError("initial_conditions must be 'origin' or 'thermal'")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.n_traj < 1 or self.batch < 1 or self.workers < 1:
            raise ValueError("n_traj, batch and workers must be positive")

    @property
    def every(self) -> int:
        return max(1, self.n_steps // self.n_saved)

    def to_dict(self):
        d = asdict(self)
        d.pop("workers")
        d.pop("numba")
        d.pop("batch")
        return d

    def fingerprint(self):
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    com: np.ndarray
    slope: float
    seed: int


@dataclass
class EnsembleResult:
    times: np.ndarray
    mean_com_trajectory: np.ndarray
    velocity: VelocityEstimate
    per_traj_slopes: np.ndarray
    config_fingerprint: str
    diagnostics: dict = field(default_factory=dict)
    # end-of-run positions and momenta, one row per trajectory
    final_q: np.ndarray | None = None
    final_p: np.ndarray | None = None


def omega_max(system) -> float:
    if isinstance(system, MotorParams):
        return max(math.sqrt((2 * system.k + system.V0 * system.b**2) / system.m),
                   system.eta0 / system.m)
    return max(math.sqrt(system.V0 * system.b**2 / system.m), system.bath.eta0 / system.m)


def stable_dt(system, fraction=0.5) -> float:
    """A time step at ``fraction`` of the stability limit dt * omega_max < 0.1."""
    return fraction * 0.1 / omega_max(system)


def check_stability(system, dt):
    w = omega_max(system)
    if not dt * w < 0.1:
        raise ValueError(f"dt = {dt:g} violates dt * omega_max < 0.1 (omega_max = {w:.4g})")


@njit(cache=True, nogil=True)
def _run_batch_nb(q0, p0, xi, dt, m, eta, k, V0, b, phase, force, every, out):
    nb, npart, n = xi.shape
    gam = eta / m
    c = math.exp(-gam * dt)
    w = -math.expm1(-gam * dt) / gam
    hd = 0.5 * dt
    fail = np.full(nb, -1)
    q = np.empty(npart)
    p = np.empty(npart)
    f = np.empty(npart)
    for r in range(nb):
        for i in range(npart):
            q[i] = q0[r, i]
            p[i] = p0[r, i]
        for i in range(npart):
            f[i] = -V0 * b * math.sin(b * q[i] + phase[i]) + force[i]
        if npart == 2:
            f[0] -= k * (q[0] - q[1])
            f[1] -= k * (q[1] - q[0])
        for j in range(n):
            for i in range(npart):
                p[i] += hd * f[i]
                q[i] += hd * p[i] / m
                p[i] = c * p[i] + w * xi[r, i, j]
                q[i] += hd * p[i] / m
            for i in range(npart):
                f[i] = -V0 * b * math.sin(b * q[i] + phase[i]) + force[i]
            if npart == 2:
                f[0] -= k * (q[0] - q[1])
                f[1] -= k * (q[1] - q[0])
            for i in range(npart):
                p[i] += hd * f[i]
            if (j + 1) % every == 0:
                s = 0.0
                for i in range(npart):
                    s += q[i]
                s /= npart
                if not (math.isfinite(s) and math.isfinite(p[0])):
                    fail[r] = j
                    break
                out[r, (j + 1) // every - 1] = s
        for i in range(npart):
            q0[r, i] = q[i]
            p0[r, i] = p[i]
    return fail


def _run_batch_np(q0, p0, xi, dt, m, eta, k, V0, b, phase, force, every, out):
    nb, npart, n = xi.shape
    gam = eta / m
    c = math.exp(-gam * dt)
    w = -math.expm1(-gam * dt) / gam
    hd = 0.5 * dt
    q = q0       # advanced in place: on return q0, p0 hold the final state
    p = p0
    fail = np.full(nb, -1)

    def forces(q):
        f = -V0 * b * np.sin(b * q + phase) + force
        if npart == 2:
            d = k * (q[:, 0] - q[:, 1])
            f[:, 0] -= d
            f[:, 1] += d
        return f

    f = forces(q)
    for j in range(n):
        p += hd * f
        q += hd / m * p
        p *= c
        p += w * xi[:, :, j]
        q += hd / m * p
        f = forces(q)
        p += hd * f
        if (j + 1) % every == 0:
            s = q.mean(axis=1)
            bad = ~np.isfinite(s) & (fail < 0)
            fail[bad] = j
            out[:, (j + 1) // every - 1] = s
    return fail


def _layout(system, forces):
    """(npart, m, eta, k, V0, b, phase, force, baths)."""
    if isinstance(system, MotorParams):
        if not isinstance(system.cutoff, Ohmic):
            raise ValueError("simulation supports Ohmic baths only")
        forces = forces or ForceSpec()
        return (2, system.m, system.eta0, system.k, system.V0, system.b,
                np.array([0.0, system.phi]), np.array([forces.f1, forces.f2]),
                (system.bath1, system.bath2))
    if not isinstance(system.bath.cutoff, Ohmic):
        raise ValueError("simulation supports Ohmic baths only")
    return (1, system.m, system.bath.eta0, 0.0, system.V0, system.b,
            np.array([0.0]), np.array([system.force]), (system.bath,))


def _noise_spec(bath: BathSpec, mode):
    return bath if mode == "qmd" else replace(bath, hbar=0.0)


def _initial(system, cfg, layout, rows):
    npart, m, *_ = layout
    phase = layout[6]
    b = layout[5]
    nb = len(rows)
    q0 = np.tile(-phase / b, (nb, 1))
    p0 = np.zeros((nb, npart))
    if cfg.initial_conditions == "thermal":
        baths = layout[8]
        for r, t in enumerate(rows):
            rng = np.random.default_rng(derive_seed(cfg.master_seed, t, 99))
            for i, bath in enumerate(baths):
                p0[r, i] = rng.normal(0.0, math.sqrt(m * bath.temperature))
    return q0, p0


def _fit_slopes(times, com, window):
    n0 = int(round((1.0 - window) * times.size))
    t = times[n0:]
    y = com[:, n0:]
    tc = t - t.mean()
    norm = np.dot(tc, tc)
    # row by row so the result does not depend on how trajectories were batched
    out = np.empty(y.shape[0])
    for j in range(y.shape[0]):
        row = np.ascontiguousarray(y[j])
        out[j] = np.dot(row - row.mean(), tc) / norm
    return out


def _simulate_rows(system, forces, cfg, rows, v0_sign=1):
    layout = _layout(system, forces)
    npart, m, eta, k, V0, b, phase, force, baths = layout
    V0 = v0_sign * V0
    n = cfg.n_steps
    xi = np.empty((len(rows), npart, n))
    for i, bath in enumerate(baths):
        spec = _noise_spec(bath, cfg.mode)
        xi[:, i, :] = synthesize_many(spec, n, cfg.dt,
                                      [derive_seed(cfg.master_seed, t, i + 1) for t in rows])
    q0, p0 = _initial(system, cfg, layout, rows)
    n_out = n // cfg.every
    out = np.zeros((len(rows), n_out))
    run = _run_batch_nb if use_numba(cfg.numba) else _run_batch_np
    fail = run(q0, p0, xi, cfg.dt, m, eta, k, V0, b, phase, force, cfg.every, out)
    bad = np.flatnonzero(fail >= 0)
    if bad.size:
        r = int(bad[0])
        raise SimulationError(f"trajectory {rows[r]} blew up at step {int(fail[r])}",
                              seed=derive_seed(cfg.master_seed, rows[r], 1), step=int(fail[r]))
    return out, q0, p0


def _times(cfg):
    return cfg.dt * cfg.every * np.arange(1, cfg.n_steps // cfg.every + 1)


def integrate_motor(params: MotorParams, forces: ForceSpec | None, cfg: SimConfig,
                    traj_index: int) -> TrajectoryRecord:
    check_stability(params, cfg.dt)
    com, _, _ = _simulate_rows(params, forces, cfg, [traj_index])
    times = _times(cfg)
    return TrajectoryRecord(times, com[0], float(_fit_slopes(times, com, cfg.estimator_window)[0]),
                            derive_seed(cfg.master_seed, traj_index, 1))


def integrate_single(bath: BathSpec, m, b, V0, force, cfg: SimConfig,
                     traj_index: int) -> TrajectoryRecord:
    system = SingleParticle(bath, m, b, V0, force)
    check_stability(system, cfg.dt)
    com, _, _ = _simulate_rows(system, None, cfg, [traj_index])
    times = _times(cfg)
    return TrajectoryRecord(times, com[0], float(_fit_slopes(times, com, cfg.estimator_window)[0]),
                            derive_seed(cfg.master_seed, traj_index, 1))


def run_ensemble(system, cfg: SimConfig, forces: ForceSpec | None = None,
                 v0_sign: int = 1) -> EnsembleResult:
    """Mean centre-of-mass slope over ``cfg.n_traj`` independent trajectories.

    ``system`` is a :class:`MotorParams` (with optional ``forces``) or a
    :class:`SingleParticle`. The result does not depend on ``batch`` or ``workers``.
    ``v0_sign=-1`` runs the same system with the potential turned upside down
    (parameter sets keep V0 >= 0).
    """
    if cfg.n_traj < 2:
        raise ValueError("run_ensemble needs n_traj >= 2")
    if v0_sign not in (1, -1):
        raise ValueError("v0_sign must be +1 or -1")
    check_stability(system, cfg.dt)
    times = _times(cfg)
    batches = [list(range(s, min(s + cfg.batch, cfg.n_traj)))
               for s in range(0, cfg.n_traj, cfg.batch)]
    slopes = np.empty(cfg.n_traj)
    com_sum = np.zeros(times.size)
    npart = _layout(system, forces)[0]
    final_q = np.empty((cfg.n_traj, npart))
    final_p = np.empty((cfg.n_traj, npart))

    def work(rows):
        return (rows, *_simulate_rows(system, forces, cfg, rows, v0_sign))

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(work, batches))
    else:
        results = map(work, batches)
    for rows, com, q, p in results:
        slopes[rows] = _fit_slopes(times, com, cfg.estimator_window)
        final_q[rows] = q
        final_p[rows] = p
        for row in com:
            com_sum += row
    mean = float(slopes.mean())
    err = float(slopes.std(ddof=1) / math.sqrt(cfg.n_traj))
    fp = hashlib.sha256(json.dumps({"cfg": cfg.to_dict(), "system": system.to_dict(),
                                    "forces": asdict(forces) if forces else None,
                                    "v0_sign": v0_sign},
                                   sort_keys=True).encode()).hexdigest()[:16]
    est = VelocityEstimate(mean, err, cfg.mode, system_fingerprint(system), {
        "n_traj": cfg.n_traj, "n_steps": cfg.n_steps, "dt": cfg.dt})
    return EnsembleResult(times, com_sum / cfg.n_traj, est, slopes, fp,
                          final_q=final_q, final_p=final_p)


def system_fingerprint(system) -> str:
    if isinstance(system, MotorParams):
        return system.fingerprint()
    return hashlib.sha256(json.dumps(system.to_dict(), sort_keys=True).encode()).hexdigest()[:16]
