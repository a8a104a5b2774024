import math
import os

import numpy as np
import pytest
import scipy.linalg as sl
from hypothesis import HealthCheck, settings
from scipy.integrate import quad

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=10,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def lyapunov_msd(params, taus):
    """Classical Ohmic oracle for (c12, c21, c11, c22) from the linear SDE.

    State (X(t) - X(0), Y(t), Xdot, Ydot, Y(0)); the stationary covariance comes
    from a Lyapunov equation and is propagated with the Van Loan exponential on
    a short step, then by doubling so nothing grows.
    """
    m, k, eta = params.m, params.k, params.eta0
    A = np.zeros((5, 5))
    A[0, 2] = A[1, 3] = 1.0
    A[2, 2] = A[3, 3] = -eta / m
    A[3, 1] = -2.0 * k / m
    B = np.zeros((5, 2))
    B[2] = [1.0 / m, 1.0 / m]
    B[3] = [1.0 / m, -1.0 / m]
    Q = B @ np.diag([2 * eta * params.T1, 2 * eta * params.T2]) @ B.T
    idx = [1, 2, 3]
    S = sl.solve_continuous_lyapunov(A[np.ix_(idx, idx)], -Q[np.ix_(idx, idx)])
    C0 = np.zeros((5, 5))
    C0[np.ix_(idx, idx)] = S
    C0[4, 4] = S[0, 0]
    C0[4, idx] = S[0]
    C0[idx, 4] = S[0]
    vecs = [np.array([1, 1, 0, 0, 1.0]), np.array([1, -1, 0, 0, -1.0]),
            np.array([1, 1, 0, 0, -1.0]), np.array([1, -1, 0, 0, 1.0])]
    out = []
    for t in taus:
        n = max(0, math.ceil(math.log2(max(t, 1e-300) / 0.25))) if t > 0 else 0
        h = t / 2**n
        M = np.zeros((10, 10))
        M[:5, :5] = -A
        M[:5, 5:] = Q
        M[5:, 5:] = A.T
        E = sl.expm(M * h)
        F = E[5:, 5:].T
        G = F @ E[:5, 5:]
        for _ in range(n):
            G = G + F @ G @ F.T
            F = F @ F
        Ct = F @ C0 @ F.T + G
        out.append([v @ Ct @ v * params.b**2 / 4 for v in vecs])
    return np.array(out)


def quad_kernels(params, tau, names=("c12", "c11", "a12", "a11")):
    """Direct adaptive quadrature of the spectral definitions (slow, independent)."""
    from duetmotor.bath import density_of_states, symmetric_psd
    from duetmotor.greens import green_x, green_y

    b2 = params.b**2

    def parts(w):
        gx = green_x(params, w)
        gy = green_y(params, w)
        s1 = symmetric_psd(params.bath1, w)
        s2 = symmetric_psd(params.bath2, w)
        n = density_of_states(params.bath1, w)
        gg = gx * np.conj(gy)
        return s1 + s2, s1 - s2, abs(gx)**2, abs(gy)**2, gg.real, gg.imag, n

    def c12(w):
        sp, sm, P, R, _, J, _ = parts(w)
        return (b2 / (2 * math.pi) * sp * (P * (1 - math.cos(w * tau)) + R * (1 + math.cos(w * tau)))
                + b2 / math.pi * sm * J * math.sin(w * tau))

    def c11(w):
        sp, sm, P, R, C, _, _ = parts(w)
        return b2 / (2 * math.pi) * (1 - math.cos(w * tau)) * (sp * (P + R) + 2 * sm * C)

    def a12(w):
        _, _, P, R, _, _, n = parts(w)
        return b2 / (4 * math.pi) * n * params.hbar * w * (P - R) * math.sin(w * tau)

    def a11(w):
        _, _, P, R, _, _, n = parts(w)
        return b2 / (4 * math.pi) * n * params.hbar * w * (P + R) * math.sin(w * tau)

    funcs = {"c12": c12, "c11": c11, "a12": a12, "a11": a11}
    edges = [1e-12, 0.1, 1, 3, 10, 30, 100, 1e3, 1e4, 1e5, 1e6]
    out = {}
    for name in names:
        out[name] = sum(quad(funcs[name], a, b, limit=2000, epsabs=1e-15, epsrel=1e-13)[0]
                        for a, b in zip(edges[:-1], edges[1:]))
    return out


def overdamped_single(T, eta, b, V0, F):
    """Known overdamped result for a tilted cosine at second order in V0."""
    v0 = F / eta
    D = T / eta
    return v0 * (1 - V0**2 * b**2 / (2 * eta**2 * (b**2 * D**2 + v0**2)))


def classical_single_oracle(m, eta, T, b, V0, F):
    """Classical Ohmic single particle with inertia, second order in V0, from
    the free Brownian MSD and response in closed form."""
    v0 = F / eta
    g = eta / m

    def resp(t):
        return -math.expm1(-g * t) / eta

    def msd(t):
        return 2 * T / eta * (t + math.expm1(-g * t) / g)

    a = b * v0
    if a == 0:
        return 0.0
    val = quad(lambda t: resp(t) * math.exp(-0.5 * b * b * msd(t)), 0, np.inf,
               weight="sin", wvar=a, limit=400)[0]
    return v0 - V0**2 * b**3 / (2 * eta) * val


@pytest.fixture
def fig2a():
    from duetmotor import MotorParams
    return MotorParams.reduced()


# one line per acceptance criterion, echoed at the end of the run even when output is captured
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
