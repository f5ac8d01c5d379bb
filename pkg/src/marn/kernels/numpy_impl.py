"""Pure-numpy implementations of the hot numeric kernels.

Every function here has a numba twin in ``numba_impl`` with the same name
and signature. All arrays are contiguous float64; ``*_acc`` kernels
accumulate into their last argument in place.
"""

import numpy as np


def matvec(w, x):
    return w @ x


def matvec_t_acc(w, g, out):
    out += w.T @ g


def ger_acc(g, x, out):
    out += np.outer(g, x)


def vec_acc(g, out):
    out += g


def affine(w, x, b):
    return w @ x + b


def gate_pre(w, x, u, h, b):
    return w @ x + u @ h + b


def acc_matvec(v, z, y):
    y += v @ z


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def tanh_fwd(x):
    return np.tanh(x)


def relu(x):
    return np.maximum(x, 0.0)


def sigmoid_bwd_acc(g, y, out):
    out += g * y * (1.0 - y)


def tanh_bwd_acc(g, y, out):
    out += g * (1.0 - y * y)


def relu_bwd_acc(g, y, out):
    out += g * (y > 0.0)


def lsthm_point_fwd(pi, pf, po, pc, cprev):
    i = 1.0 / (1.0 + np.exp(-pi))
    f = 1.0 / (1.0 + np.exp(-pf))
    o = 1.0 / (1.0 + np.exp(-po))
    g = np.tanh(pc)
    c = f * cprev + i * g
    tc = np.tanh(c)
    h = o * tc
    return i, f, o, g, c, h, tc


def lsthm_point_bwd(gh, gc, i, f, o, g, cprev, tc):
    dc = gc + gh * o * (1.0 - tc * tc)
    do = gh * tc
    dpi = dc * g * i * (1.0 - i)
    dpf = dc * cprev * f * (1.0 - f)
    dpo = do * o * (1.0 - o)
    dpc = dc * i * (1.0 - g * g)
    dcprev = dc * f
    return dpi, dpf, dpo, dpc, dcprev


def softmax_rows(x):
    m = x.max(axis=1, keepdims=True)
    e = np.exp(x - m)
    return e / e.sum(axis=1, keepdims=True)


def softmax_rows_bwd_acc(g, s, out):
    dot = (g * s).sum(axis=1, keepdims=True)
    out += s * (g - dot)


def tile_mul(a, h, k):
    return (a.reshape(k, h.shape[0]) * h).ravel()


def tile_mul_bwd_a_acc(g, h, k, out):
    out += (g.reshape(k, h.shape[0]) * h).ravel()


def tile_mul_bwd_h_acc(g, a, k, out):
    d = out.shape[0]
    out += (g.reshape(k, d) * a.reshape(k, d)).sum(axis=0)


def gather(x, idx):
    return x[idx]


def scatter_acc(g, idx, out):
    np.add.at(out, idx, g)


def adam_update(p, g, m, v, lr, b1, b2, eps, bc1, bc2):
    m *= b1
    m += (1.0 - b1) * g
    v *= b2
    v += (1.0 - b2) * g * g
    p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
