"""One-step implicit Lax-Oleinik kernels.

For every arrival node ``x_i`` the departure point ``y`` ranges over the
cells ``[x_i + k dx, x_i + (k+1) dx]``, ``k = -W .. W-1``, and the data is
the linear interpolant of the node values.  On each cell the objective is
linear + convex in ``y``, so its extremum is either a cell endpoint (read
from the precomputed table ``ltab[i, k + W] = delta * l(x_i, k dx / delta)``)
or the interior critical point at velocity ``v* = h_p(x_i, s)`` with ``s``
the cell slope, where the objective equals ``f_k - s k dx -+ delta h(x_i, s)``.

``*_quad`` kernels assume ``h = a p^2 + b p + e`` with per-node coefficient
arrays and are compiled when numba is active.  ``*_numpy`` kernels take
vectorised callables ``h(x, p)`` and ``h_p(x, p)`` and work for any model.

All kernels return ``(max |out - f|, max |out|)`` and set ``viol[i] = 1``
where the step moved against the expected monotone direction by more than
``slack``.
"""

import numpy as np

from ._accel import njit


@njit(cache=True)
def backward_quad(f, a, b, e, lam, ltab, W, dx, delta, c, slack, out, viol):
    n = f.size
    slope = np.empty(n)
    for j in range(n):
        slope[j] = (f[(j + 1) % n] - f[j]) / dx
    change = 0.0
    vmax = 0.0
    for i in range(n):
        ai = a[i]
        bi = b[i]
        ei = e[i]
        best = np.inf
        for k in range(-W, W + 1):
            j = (i + k) % n
            val = f[j] + ltab[i, W - k]
            if val < best:
                best = val
            if k < W:
                s = slope[j]
                off = -delta * (2.0 * ai * s + bi) / dx
                if off > k and off < k + 1:
                    val = f[j] - s * (k * dx) - delta * ((ai * s + bi) * s + ei)
                    if val < best:
                        best = val
        u = (best + delta * c) / (1.0 + delta * lam[i])
        out[i] = u
        d = abs(u - f[i])
        if d > change:
            change = d
        if abs(u) > vmax:
            vmax = abs(u)
        if u < f[i] - slack:
            viol[i] = 1
    return change, vmax


@njit(cache=True)
def forward_quad(f, a, b, e, lam, ltab, W, dx, delta, c, slack, out, viol):
    n = f.size
    slope = np.empty(n)
    for j in range(n):
        slope[j] = (f[(j + 1) % n] - f[j]) / dx
    change = 0.0
    vmax = 0.0
    for i in range(n):
        ai = a[i]
        bi = b[i]
        ei = e[i]
        best = -np.inf
        for k in range(-W, W + 1):
            j = (i + k) % n
            val = f[j] - ltab[i, W + k]
            if val > best:
                best = val
            if k < W:
                s = slope[j]
                off = delta * (2.0 * ai * s + bi) / dx
                if off > k and off < k + 1:
                    val = f[j] - s * (k * dx) + delta * ((ai * s + bi) * s + ei)
                    if val > best:
                        best = val
        u = (best - delta * c) / (1.0 - delta * lam[i])
        out[i] = u
        d = abs(u - f[i])
        if d > change:
            change = d
        if abs(u) > vmax:
            vmax = abs(u)
        if u > f[i] + slack:
            viol[i] = 1
    return change, vmax


def _stencil(f, W):
    n = f.size
    idx = (np.arange(n)[:, None] + np.arange(-W, W + 1)[None, :]) % n
    F = f[idx]
    S = np.diff(F, axis=1)
    return F, S


def backward_numpy(f, x, h, h_p, lam, ltab, W, dx, delta, c, slack, out, viol):
    F, S = _stencil(f, W)
    S = S / dx
    k = np.arange(-W, W)[None, :]
    X = x[:, None]
    nodal = F + ltab[:, ::-1]
    off = -delta * h_p(X, S) / dx
    inside = (off > k) & (off < k + 1)
    with np.errstate(over="ignore", invalid="ignore"):
        cell = F[:, :-1] - S * (k * dx) - delta * h(X, S)
    cell = np.where(inside, cell, np.inf)
    best = np.minimum(nodal.min(axis=1), cell.min(axis=1))
    out[:] = (best + delta * c) / (1.0 + delta * lam)
    viol[out < f - slack] = 1
    return float(np.max(np.abs(out - f))), float(np.max(np.abs(out)))


def forward_numpy(f, x, h, h_p, lam, ltab, W, dx, delta, c, slack, out, viol):
    F, S = _stencil(f, W)
    S = S / dx
    k = np.arange(-W, W)[None, :]
    X = x[:, None]
    nodal = F - ltab
    off = delta * h_p(X, S) / dx
    inside = (off > k) & (off < k + 1)
    with np.errstate(over="ignore", invalid="ignore"):
        cell = F[:, :-1] - S * (k * dx) + delta * h(X, S)
    cell = np.where(inside, cell, -np.inf)
    best = np.maximum(nodal.max(axis=1), cell.max(axis=1))
    out[:] = (best - delta * c) / (1.0 - delta * lam)
    viol[out > f + slack] = 1
    return float(np.max(np.abs(out - f))), float(np.max(np.abs(out)))
