"""Reverse-mode differentiation on a flat operation tape.

Every op below computes its value eagerly (through the selected kernel
backend) and, when a :class:`Tape` is passed, appends a backward closure.
``backward`` replays the closures in exact reverse recording order, which
is a valid reverse topological order because operands always exist before
the ops that consume them.

Ops accept either a :class:`Var` or a plain ndarray per operand; only
``Var`` operands receive gradients. With ``tape=None`` the same numeric
path runs without any recording, which is what finite-difference checks
and plain evaluation use.
"""

import numpy as np

from . import kernels as K


class Var:
    """A tensor tracked for differentiation: a value and its gradient."""

    __slots__ = ("value", "grad")

    def __init__(self, value):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None


class Tape:
    """Recorded backward closures for one forward pass, single reverse sweep."""

    def __init__(self):
        self._ops = []
        self._spent = False

    def record(self, fn):
        self._ops.append(fn)

    def __len__(self):
        return len(self._ops)


def backward(tape, loss):
    """Run the reverse sweep, seeding d(loss)/d(loss) = 1.

    Raises if the tape was already swept; re-record to differentiate again.
    """
    if tape._spent:
        raise RuntimeError("tape already backpropagated; re-record the forward pass")
    tape._spent = True
    loss.grad = np.ones_like(loss.value)
    for fn in reversed(tape._ops):
        fn()


def _val(x):
    return x.value if isinstance(x, Var) else x


def _g(var):
    if var.grad is None:
        var.grad = np.zeros_like(var.value)
    return var.grad


def sigmoid(x, tape=None):
    """Elementwise logistic 1/(1+exp(-x)), values in (0, 1)."""
    y = K.sigmoid(np.atleast_1d(_val(x)))
    if tape is None:
        return y
    out = Var(y)

    def _bwd():
        if out.grad is not None and isinstance(x, Var):
            K.sigmoid_bwd_acc(out.grad, y, _g(x))

    tape.record(_bwd)
    return out


def tanh_act(x, tape=None):
    """Elementwise hyperbolic tangent, values in (-1, 1)."""
    y = K.tanh_fwd(np.atleast_1d(_val(x)))
    if tape is None:
        return y
    out = Var(y)

    def _bwd():
        if out.grad is not None and isinstance(x, Var):
            K.tanh_bwd_acc(out.grad, y, _g(x))

    tape.record(_bwd)
    return out


def relu(x, tape=None):
    y = K.relu(np.atleast_1d(_val(x)))
    if tape is None:
        return y
    out = Var(y)

    def _bwd():
        if out.grad is not None and isinstance(x, Var):
            K.relu_bwd_acc(out.grad, y, _g(x))

    tape.record(_bwd)
    return out


def softmax_rows(x, tape=None):
    """Row-wise softmax of a 2-D array, stabilized by per-row max subtraction.

    Each output row is non-negative and sums to 1 (within 1e-12).
    """
    xv = _val(x)
    if xv.ndim != 2:
        raise ValueError(f"softmax_rows expects a 2-D input, got shape {xv.shape}")
    s = K.softmax_rows(np.ascontiguousarray(xv))
    if tape is None:
        return s
    out = Var(s)

    def _bwd():
        if out.grad is not None and isinstance(x, Var):
            K.softmax_rows_bwd_acc(out.grad, s, _g(x))

    tape.record(_bwd)
    return out


def matvec(w, x, tape=None):
    wv, xv = _val(w), _val(x)
    if wv.shape[1] != xv.shape[0]:
        raise ValueError(f"matvec shape mismatch: {wv.shape} @ {xv.shape}")
    y = K.matvec(wv, xv)
    if tape is None:
        return y
    out = Var(y)

    def _bwd():
        g = out.grad
        if g is None:
            return
        if isinstance(w, Var):
            K.ger_acc(g, xv, _g(w))
        if isinstance(x, Var):
            K.matvec_t_acc(wv, g, _g(x))

    tape.record(_bwd)
    return out


def affine(w, x, b, tape=None):
    """w @ x + b, the single dense layer primitive."""
    wv, xv, bv = _val(w), _val(x), _val(b)
    if wv.shape[1] != xv.shape[0]:
        raise ValueError(f"affine shape mismatch: {wv.shape} @ {xv.shape}")
    y = K.affine(wv, xv, bv)
    if tape is None:
        return y
    out = Var(y)

    def _bwd():
        g = out.grad
        if g is None:
            return
        if isinstance(w, Var):
            K.ger_acc(g, xv, _g(w))
        if isinstance(x, Var):
            K.matvec_t_acc(wv, g, _g(x))
        if isinstance(b, Var):
            K.vec_acc(g, _g(b))

    tape.record(_bwd)
    return out


def gate_preact(w, x, u, h, b, v=None, z=None, tape=None):
    """Gate pre-activation w@x + u@h + b, plus v@z when a code path is wired in."""
    wv, xv, uv, hv, bv = _val(w), _val(x), _val(u), _val(h), _val(b)
    y = K.gate_pre(wv, xv, uv, hv, bv)
    if v is not None:
        vv, zv = _val(v), _val(z)
        K.acc_matvec(vv, zv, y)
    if tape is None:
        return y
    out = Var(y)

    def _bwd():
        g = out.grad
        if g is None:
            return
        if isinstance(w, Var):
            K.ger_acc(g, xv, _g(w))
        if isinstance(x, Var):
            K.matvec_t_acc(wv, g, _g(x))
        if isinstance(u, Var):
            K.ger_acc(g, hv, _g(u))
        if isinstance(h, Var):
            K.matvec_t_acc(uv, g, _g(h))
        if isinstance(b, Var):
            K.vec_acc(g, _g(b))
        if v is not None:
            if isinstance(v, Var):
                K.ger_acc(g, zv, _g(v))
            if isinstance(z, Var):
                K.matvec_t_acc(vv, g, _g(z))

    tape.record(_bwd)
    return out


def add(a, b, tape=None):
    y = _val(a) + _val(b)
    if tape is None:
        return y
    out = Var(y)

    def _bwd():
        g = out.grad
        if g is None:
            return
        if isinstance(a, Var):
            _g(a)
            a.grad += g
        if isinstance(b, Var):
            _g(b)
            b.grad += g

    tape.record(_bwd)
    return out


def mul(a, b, tape=None):
    av, bv = _val(a), _val(b)
    y = av * bv
    if tape is None:
        return y
    out = Var(y)

    def _bwd():
        g = out.grad
        if g is None:
            return
        if isinstance(a, Var):
            _g(a)
            a.grad += g * bv
        if isinstance(b, Var):
            _g(b)
            b.grad += g * av

    tape.record(_bwd)
    return out


def scale(x, c, tape=None):
    y = _val(x) * c
    if tape is None:
        return y
    out = Var(y)

    def _bwd():
        if out.grad is not None and isinstance(x, Var):
            _g(x)
            x.grad += out.grad * c

    tape.record(_bwd)
    return out


def concat(parts, tape=None):
    vals = [np.atleast_1d(_val(p)) for p in parts]
    y = np.concatenate(vals)
    if tape is None:
        return y
    out = Var(y)
    offsets = np.cumsum([0] + [v.shape[0] for v in vals])

    def _bwd():
        g = out.grad
        if g is None:
            return
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            if isinstance(p, Var):
                _g(p)
                p.grad += g[lo:hi]

    tape.record(_bwd)
    return out


def gather(x, idx, tape=None):
    """y[i] = x[idx[i]] for a 1-D x and integer index array."""
    xv = _val(x)
    y = K.gather(xv, idx)
    if tape is None:
        return y
    out = Var(y)

    def _bwd():
        if out.grad is not None and isinstance(x, Var):
            K.scatter_acc(out.grad, idx, _g(x))

    tape.record(_bwd)
    return out


def tile_mul(a, h, k, tape=None):
    """Broadcast h to k stacked copies and multiply elementwise by flat a."""
    av, hv = _val(a), _val(h)
    if av.shape[0] != k * hv.shape[0]:
        raise ValueError(
            f"tile_mul shape mismatch: len(a)={av.shape[0]}, k*len(h)={k * hv.shape[0]}"
        )
    y = K.tile_mul(av, hv, k)
    if tape is None:
        return y
    out = Var(y)

    def _bwd():
        g = out.grad
        if g is None:
            return
        if isinstance(a, Var):
            K.tile_mul_bwd_a_acc(g, hv, k, _g(a))
        if isinstance(h, Var):
            K.tile_mul_bwd_h_acc(g, av, k, _g(h))

    tape.record(_bwd)
    return out


def reshape(x, shape, tape=None):
    y = np.reshape(_val(x), shape)
    if tape is None:
        return y
    out = Var(y)

    def _bwd():
        if out.grad is not None and isinstance(x, Var):
            _g(x)
            x.grad += out.grad.reshape(x.value.shape)

    tape.record(_bwd)
    return out


def sum_all(x, tape=None):
    y = np.asarray(_val(x).sum())
    if tape is None:
        return y
    out = Var(y)

    def _bwd():
        if out.grad is not None and isinstance(x, Var):
            _g(x)
            x.grad += out.grad

    tape.record(_bwd)
    return out


def cross_entropy(logits, label, tape=None):
    """Negative log softmax probability of ``label``, via log-sum-exp.

    Requires at least two classes; raises if the label is out of range.
    """
    lv = np.atleast_1d(_val(logits))
    n = lv.shape[0]
    if n < 2:
        raise ValueError(f"cross_entropy needs >= 2 classes, got {n}")
    if not 0 <= label < n:
        raise ValueError(f"label {label} out of range for {n} classes")
    m = lv.max()
    exps = np.exp(lv - m)
    lse = m + np.log(exps.sum())
    y = np.asarray(lse - lv[label])
    if tape is None:
        return y
    out = Var(y)
    probs = exps / exps.sum()

    def _bwd():
        g = out.grad
        if g is None or not isinstance(logits, Var):
            return
        d = probs.copy()
        d[label] -= 1.0
        _g(logits)
        logits.grad += g * d

    tape.record(_bwd)
    return out


def mse(pred, target, tape=None):
    """Squared error (pred - target)^2 for a scalar prediction."""
    pv = np.atleast_1d(_val(pred))
    if pv.shape[0] != 1:
        raise ValueError(f"mse expects a scalar prediction, got shape {pv.shape}")
    diff = pv[0] - target
    y = np.asarray(diff * diff)
    if tape is None:
        return y
    out = Var(y)

    def _bwd():
        if out.grad is not None and isinstance(pred, Var):
            _g(pred)
            pred.grad += np.atleast_1d(out.grad * 2.0 * diff)

    tape.record(_bwd)
    return out
