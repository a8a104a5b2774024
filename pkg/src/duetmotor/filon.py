"""Filon-Simpson quadrature of Fourier integrals on a graded frequency grid.

The grid is a sequence of panel pairs ``(w0, w0 + h, w0 + 2h)``; on each pair the
amplitude is interpolated by a parabola and multiplied by cos(w t) or sin(w t)
integrated exactly, so the cost and accuracy do not depend on how many
oscillations a panel spans.
"""
from __future__ import annotations

import math

import numpy as np

from ._accel import njit, use_numba

# below this value of theta = h t the Filon weights use their Taylor series
_THETA_SERIES = 0.02


def frequency_grid(features, omega_max, resolution=0.05):
    """Nodes on [0, omega_max] whose local spacing is
    ``resolution * min_f max(width_f, |w - center_f|)``.

    ``features`` is a sequence of ``(center, width)`` pairs. The returned array has
    an odd number of nodes, and each panel pair has its middle node exactly centred.
    """
    feats = [(float(c), float(w)) for c, w in features if w > 0]
    if not feats:
        raise ValueError("need at least one feature with positive width")
    centers = np.array([c for c, _ in feats])
    widths = np.array([w for _, w in feats])

    def step(w):
        return resolution * np.min(np.maximum(widths, np.abs(w - centers)))

    nodes = [0.0]
    w = 0.0
    while w < omega_max:
        h = step(w)
        # do not step over a feature centre
        ahead = centers[(centers > w + 1e-12 * max(w, 1.0))]
        if ahead.size:
            nxt = ahead.min()
            if w + 2 * h > nxt:
                h = 0.5 * (nxt - w)
        if w + 2 * h > omega_max:
            h = 0.5 * (omega_max - w)
        nodes.append(w + h)
        nodes.append(w + 2 * h)
        w = w + 2 * h
    return np.asarray(nodes)


def _weights_np(theta):
    """Filon weights alpha, beta, gamma for an array of theta >= 0."""
    theta = np.asarray(theta, dtype=float)
    a = np.empty_like(theta)
    b = np.empty_like(theta)
    g = np.empty_like(theta)
    s = theta < _THETA_SERIES
    t = theta[s]
    t2 = t * t
    a[s] = t * t2 * (2.0 / 45.0 - t2 * (2.0 / 315.0 - t2 * 2.0 / 4725.0))
    b[s] = 2.0 / 3.0 + t2 * (2.0 / 15.0 - t2 * (4.0 / 105.0 - t2 * 2.0 / 567.0))
    g[s] = 4.0 / 3.0 - t2 * (2.0 / 15.0 - t2 * (1.0 / 210.0 - t2 / 11340.0))
    t = theta[~s]
    sn, cs = np.sin(t), np.cos(t)
    t2, t3 = t * t, t * t * t
    a[~s] = 1.0 / t + sn * cs / t2 - 2.0 * sn * sn / t3
    b[~s] = 2.0 * ((1.0 + cs * cs) / t2 - 2.0 * sn * cs / t3)
    g[~s] = 4.0 * (sn / t3 - cs / t2)
    return a, b, g


def _filon_numpy(omega, amp_cos, amp_sin, tau, chunk=128):
    w0 = omega[0:-1:2]
    w1 = omega[1::2]
    w2 = omega[2::2]
    h = 0.5 * (w2 - w0)
    c0, c1, c2 = amp_cos[:, 0:-1:2], amp_cos[:, 1::2], amp_cos[:, 2::2]
    s0, s1, s2 = amp_sin[:, 0:-1:2], amp_sin[:, 1::2], amp_sin[:, 2::2]
    out_c = np.empty((amp_cos.shape[0], tau.size))
    out_s = np.empty((amp_sin.shape[0], tau.size))
    for start in range(0, tau.size, chunk):
        t = tau[start:start + chunk, None]
        at = np.abs(t)
        sg = np.sign(t)[:, 0]
        a, b, g = _weights_np(h[None, :] * at)
        x0, x1, x2 = at * w0, at * w1, at * w2
        sin0, cos0 = np.sin(x0), np.cos(x0)
        sin1, cos1 = np.sin(x1), np.cos(x1)
        sin2, cos2 = np.sin(x2), np.cos(x2)
        # per-node weights, shape (nt, npanel)
        wa_c2, wa_c0 = h * a * sin2, -h * a * sin0
        wb_c0, wb_c2 = 0.5 * h * b * cos0, 0.5 * h * b * cos2
        wg_c1 = h * g * cos1
        wa_s0, wa_s2 = h * a * cos0, -h * a * cos2
        wb_s0, wb_s2 = 0.5 * h * b * sin0, 0.5 * h * b * sin2
        wg_s1 = h * g * sin1
        sl = slice(start, start + chunk)
        out_c[:, sl] = (c2 @ (wa_c2 + wb_c2).T + c0 @ (wa_c0 + wb_c0).T + c1 @ wg_c1.T)
        out_s[:, sl] = (s0 @ (wa_s0 + wb_s0).T + s2 @ (wa_s2 + wb_s2).T + s1 @ wg_s1.T) * sg
    return out_c, out_s


@njit(cache=True, fastmath=False)
def _filon_numba(omega, amp_cos, amp_sin, tau):
    npan = (omega.size - 1) // 2
    nt = tau.size
    nc = amp_cos.shape[0]
    ns = amp_sin.shape[0]
    out_c = np.zeros((nc, nt))
    out_s = np.zeros((ns, nt))
    for j in range(nt):
        t = abs(tau[j])
        sg = 1.0 if tau[j] >= 0 else -1.0
        x0 = omega[0] * t
        sin0 = math.sin(x0)
        cos0 = math.cos(x0)
        for p in range(npan):
            i = 2 * p
            h = 0.5 * (omega[i + 2] - omega[i])
            th = h * t
            if th < _THETA_SERIES:
                t2 = th * th
                a = th * t2 * (2.0 / 45.0 - t2 * (2.0 / 315.0 - t2 * 2.0 / 4725.0))
                b = 2.0 / 3.0 + t2 * (2.0 / 15.0 - t2 * (4.0 / 105.0 - t2 * 2.0 / 567.0))
                g = 4.0 / 3.0 - t2 * (2.0 / 15.0 - t2 * (1.0 / 210.0 - t2 / 11340.0))
            else:
                sn = math.sin(th)
                cs = math.cos(th)
                t2 = th * th
                t3 = t2 * th
                a = 1.0 / th + sn * cs / t2 - 2.0 * sn * sn / t3
                b = 2.0 * ((1.0 + cs * cs) / t2 - 2.0 * sn * cs / t3)
                g = 4.0 * (sn / t3 - cs / t2)
            x1 = omega[i + 1] * t
            x2 = omega[i + 2] * t
            sin1 = math.sin(x1)
            cos1 = math.cos(x1)
            sin2 = math.sin(x2)
            cos2 = math.cos(x2)
            for q in range(nc):
                out_c[q, j] += h * (a * (amp_cos[q, i + 2] * sin2 - amp_cos[q, i] * sin0)
                                    + 0.5 * b * (amp_cos[q, i] * cos0 + amp_cos[q, i + 2] * cos2)
                                    + g * amp_cos[q, i + 1] * cos1)
            for q in range(ns):
                out_s[q, j] += h * (a * (amp_sin[q, i] * cos0 - amp_sin[q, i + 2] * cos2)
                                    + 0.5 * b * (amp_sin[q, i] * sin0 + amp_sin[q, i + 2] * sin2)
                                    + g * amp_sin[q, i + 1] * sin1)
            sin0 = sin2
            cos0 = cos2
        for q in range(ns):
            out_s[q, j] *= sg
    return out_c, out_s


def filon(omega, amp_cos, amp_sin, tau, numba=None):
    """Return ``(int A_c(w) cos(w t) dw, int A_s(w) sin(w t) dw)`` over the grid
    for every t in ``tau`` (negative t allowed).

    Amplitudes may be 1-D (one per node) or 2-D ``(n_amplitudes, n_nodes)``; the
    results then have shape ``(n_amplitudes, n_tau)``. Scalars broadcast.
    """
    omega = np.ascontiguousarray(omega, dtype=float)
    if omega.size < 3 or omega.size % 2 == 0:
        raise ValueError("grid must have an odd number (>= 3) of nodes")
    tau_arr = np.ascontiguousarray(np.atleast_1d(np.asarray(tau, dtype=float)))
    one_c = np.ndim(amp_cos) < 2
    one_s = np.ndim(amp_sin) < 2
    ac = np.ascontiguousarray(np.atleast_2d(np.broadcast_to(amp_cos, omega.shape) if one_c else amp_cos),
                              dtype=float)
    as_ = np.ascontiguousarray(np.atleast_2d(np.broadcast_to(amp_sin, omega.shape) if one_s else amp_sin),
                               dtype=float)
    if use_numba(numba):
        c, s = _filon_numba(omega, ac, as_, tau_arr)
    else:
        c, s = _filon_numpy(omega, ac, as_, tau_arr)
    if one_c:
        c = c[0]
    if one_s:
        s = s[0]
    if np.ndim(tau) == 0:
        return (float(c[0]) if one_c else c[:, 0]), (float(s[0]) if one_s else s[:, 0])
    return c, s


def simpson_nodes(omega, amp):
    """Plain Simpson integral of ``amp`` over the panel-pair grid."""
    h = 0.5 * (omega[2::2] - omega[0:-1:2])
    return float(np.sum(h / 3.0 * (amp[0:-1:2] + 4.0 * amp[1::2] + amp[2::2])))


def power_tail(omega, amp):
    """Estimate int_{w_max}^inf amp assuming a power-law decay fitted to the last nodes."""
    w1, w2 = omega[-3], omega[-1]
    a1, a2 = abs(amp[-3]), abs(amp[-1])
    if a2 == 0.0 or a1 == 0.0:
        return 0.0
    p = -math.log(a2 / a1) / math.log(w2 / w1)
    if p <= 1.0:
        # no clean power law (round-off noise or slow decay): crude bound
        return float(np.sign(amp[-1]) * max(a1, a2) * w2)
    return float(np.sign(amp[-1]) * a2 * w2 / (p - 1.0))
