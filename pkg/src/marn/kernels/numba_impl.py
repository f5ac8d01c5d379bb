"""Numba-jitted twins of the kernels in ``numpy_impl``.

Plain loops compile to tight machine code; ``cache=True`` persists the
compiled artifacts so only the first process ever pays the compile cost.
No fastmath: results must be deterministic run to run.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def matvec(w, x):
    out = np.empty(w.shape[0])
    for i in range(w.shape[0]):
        s = 0.0
        for j in range(w.shape[1]):
            s += w[i, j] * x[j]
        out[i] = s
    return out


@njit(cache=True)
def matvec_t_acc(w, g, out):
    for i in range(w.shape[0]):
        gi = g[i]
        for j in range(w.shape[1]):
            out[j] += w[i, j] * gi


@njit(cache=True)
def ger_acc(g, x, out):
    for i in range(g.shape[0]):
        gi = g[i]
        for j in range(x.shape[0]):
            out[i, j] += gi * x[j]


@njit(cache=True)
def vec_acc(g, out):
    for i in range(g.shape[0]):
        out[i] += g[i]


@njit(cache=True)
def affine(w, x, b):
    out = np.empty(w.shape[0])
    for i in range(w.shape[0]):
        s = b[i]
        for j in range(w.shape[1]):
            s += w[i, j] * x[j]
        out[i] = s
    return out


@njit(cache=True)
def gate_pre(w, x, u, h, b):
    out = np.empty(w.shape[0])
    for i in range(w.shape[0]):
        s = b[i]
        for j in range(w.shape[1]):
            s += w[i, j] * x[j]
        for j in range(u.shape[1]):
            s += u[i, j] * h[j]
        out[i] = s
    return out


@njit(cache=True)
def acc_matvec(v, z, y):
    for i in range(v.shape[0]):
        s = 0.0
        for j in range(v.shape[1]):
            s += v[i, j] * z[j]
        y[i] += s


@njit(cache=True)
def sigmoid(x):
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        out[i] = 1.0 / (1.0 + np.exp(-x[i]))
    return out


@njit(cache=True)
def tanh_fwd(x):
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        out[i] = np.tanh(x[i])
    return out


@njit(cache=True)
def relu(x):
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        v = x[i]
        # three-way branch so NaN propagates instead of flushing to 0
        if v > 0.0:
            out[i] = v
        elif v <= 0.0:
            out[i] = 0.0
        else:
            out[i] = v
    return out


@njit(cache=True)
def sigmoid_bwd_acc(g, y, out):
    for i in range(g.shape[0]):
        out[i] += g[i] * y[i] * (1.0 - y[i])


@njit(cache=True)
def tanh_bwd_acc(g, y, out):
    for i in range(g.shape[0]):
        out[i] += g[i] * (1.0 - y[i] * y[i])


@njit(cache=True)
def relu_bwd_acc(g, y, out):
    for i in range(g.shape[0]):
        if y[i] > 0.0:
            out[i] += g[i]


@njit(cache=True)
def lsthm_point_fwd(pi, pf, po, pc, cprev):
    n = pi.shape[0]
    i = np.empty(n)
    f = np.empty(n)
    o = np.empty(n)
    g = np.empty(n)
    c = np.empty(n)
    h = np.empty(n)
    tc = np.empty(n)
    for j in range(n):
        i[j] = 1.0 / (1.0 + np.exp(-pi[j]))
        f[j] = 1.0 / (1.0 + np.exp(-pf[j]))
        o[j] = 1.0 / (1.0 + np.exp(-po[j]))
        g[j] = np.tanh(pc[j])
        c[j] = f[j] * cprev[j] + i[j] * g[j]
        tc[j] = np.tanh(c[j])
        h[j] = o[j] * tc[j]
    return i, f, o, g, c, h, tc


@njit(cache=True)
def lsthm_point_bwd(gh, gc, i, f, o, g, cprev, tc):
    n = gh.shape[0]
    dpi = np.empty(n)
    dpf = np.empty(n)
    dpo = np.empty(n)
    dpc = np.empty(n)
    dcprev = np.empty(n)
    for j in range(n):
        dc = gc[j] + gh[j] * o[j] * (1.0 - tc[j] * tc[j])
        do = gh[j] * tc[j]
        dpi[j] = dc * g[j] * i[j] * (1.0 - i[j])
        dpf[j] = dc * cprev[j] * f[j] * (1.0 - f[j])
        dpo[j] = do * o[j] * (1.0 - o[j])
        dpc[j] = dc * i[j] * (1.0 - g[j] * g[j])
        dcprev[j] = dc * f[j]
    return dpi, dpf, dpo, dpc, dcprev


@njit(cache=True)
def softmax_rows(x):
    out = np.empty_like(x)
    for r in range(x.shape[0]):
        m = x[r, 0]
        for j in range(1, x.shape[1]):
            if x[r, j] > m:
                m = x[r, j]
        s = 0.0
        for j in range(x.shape[1]):
            e = np.exp(x[r, j] - m)
            out[r, j] = e
            s += e
        for j in range(x.shape[1]):
            out[r, j] /= s
    return out


@njit(cache=True)
def softmax_rows_bwd_acc(g, s, out):
    for r in range(g.shape[0]):
        dot = 0.0
        for j in range(g.shape[1]):
            dot += g[r, j] * s[r, j]
        for j in range(g.shape[1]):
            out[r, j] += s[r, j] * (g[r, j] - dot)


@njit(cache=True)
def tile_mul(a, h, k):
    d = h.shape[0]
    out = np.empty(k * d)
    for r in range(k):
        for j in range(d):
            out[r * d + j] = a[r * d + j] * h[j]
    return out


@njit(cache=True)
def tile_mul_bwd_a_acc(g, h, k, out):
    d = h.shape[0]
    for r in range(k):
        for j in range(d):
            out[r * d + j] += g[r * d + j] * h[j]


@njit(cache=True)
def tile_mul_bwd_h_acc(g, a, k, out):
    d = out.shape[0]
    for r in range(k):
        for j in range(d):
            out[j] += g[r * d + j] * a[r * d + j]


@njit(cache=True)
def gather(x, idx):
    out = np.empty(idx.shape[0])
    for i in range(idx.shape[0]):
        out[i] = x[idx[i]]
    return out


@njit(cache=True)
def scatter_acc(g, idx, out):
    for i in range(idx.shape[0]):
        out[idx[i]] += g[i]


@njit(cache=True)
def adam_update(p, g, m, v, lr, b1, b2, eps, bc1, bc2):
    for i in range(p.shape[0]):
        m[i] = b1 * m[i] + (1.0 - b1) * g[i]
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i]
        p[i] -= lr * (m[i] / bc1) / (np.sqrt(v[i] / bc2) + eps)
