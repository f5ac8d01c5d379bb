"""Long-short term hybrid memory: a gated recurrent cell per modality whose
gates and candidate also condition on the shared cross-view code z.

Gate equations for one modality:

    i = sigmoid(W_i x + U_i h_prev + V_i z_prev + b_i)
    f = sigmoid(W_f x + U_f h_prev + V_f z_prev + b_f)
    o = sigmoid(W_o x + U_o h_prev + V_o z_prev + b_o)
    cbar = W_c x + U_c h_prev + V_c z_prev + b_c          (linear candidate)
    c = f * c_prev + i * tanh(cbar)
    h = o * tanh(c)

The candidate is deliberately left unsquashed; tanh is applied only inside
the memory update. With the z path removed (no V weights) this is a
standard LSTM with a linear candidate, which is what the no-code ablation
and the early-fusion baseline use.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels as K
from .tape import Var, gate_preact

GATES = ("i", "f", "o", "c")


@dataclass(frozen=True)
class ModalityConfig:
    """Dimensions for one input channel."""

    name: str
    d_in: int
    d_mem: int
    d_local: int

    def __post_init__(self):
        if min(self.d_in, self.d_mem, self.d_local) <= 0:
            raise ValueError(f"modality {self.name!r}: all dims must be positive")


@dataclass
class LsthmState:
    """Per-modality memory c and output h, both of length d_mem."""

    c: object
    h: object


@dataclass
class LsthmWeights:
    """The four gates' W (d_mem x d_in), U (d_mem x d_mem), optional
    V (d_mem x D_mem) and b (d_mem) for one modality."""

    name: str
    W: dict
    U: dict
    V: dict  # empty when the cell runs without a code path
    b: dict

    @property
    def has_code_path(self):
        return bool(self.V)


def weight_shapes(name, d_in, d_mem, d_code=None):
    """(name, shape) pairs for one cell, in gate order i, f, o, c."""
    shapes = []
    for g in GATES:
        shapes.append((f"lsthm.{name}.W_{g}", (d_mem, d_in)))
        shapes.append((f"lsthm.{name}.U_{g}", (d_mem, d_mem)))
        if d_code is not None:
            shapes.append((f"lsthm.{name}.V_{g}", (d_mem, d_code)))
        shapes.append((f"lsthm.{name}.b_{g}", (d_mem,)))
    return shapes


def weights_from(params, name, with_code):
    """Collect one cell's weights out of a name->Var/array mapping."""
    pick = lambda key: params[f"lsthm.{name}.{key}"]
    return LsthmWeights(
        name=name,
        W={g: pick(f"W_{g}") for g in GATES},
        U={g: pick(f"U_{g}") for g in GATES},
        V={g: pick(f"V_{g}") for g in GATES} if with_code else {},
        b={g: pick(f"b_{g}") for g in GATES},
    )


def _check_shapes(x, prev, z_prev, w):
    d_mem, d_in = (w.W["i"].value if isinstance(w.W["i"], Var) else w.W["i"]).shape
    xv = x.value if isinstance(x, Var) else x
    cv = prev.c.value if isinstance(prev.c, Var) else prev.c
    if xv.shape[0] != d_in:
        raise ValueError(
            f"modality {w.name!r}: input length {xv.shape[0]}, expected {d_in}"
        )
    if cv.shape[0] != d_mem:
        raise ValueError(
            f"modality {w.name!r}: state length {cv.shape[0]}, expected {d_mem}"
        )
    if w.has_code_path and z_prev is None:
        raise ValueError(f"modality {w.name!r}: cell has V weights but no z was given")


def lsthm_step(x, prev, z_prev, w, tape=None):
    """Advance one modality's cell a single timestep.

    ``x`` is the modality input, ``prev`` the previous state, ``z_prev`` the
    cross-view code from the previous step (ignored when the cell has no V
    weights). Returns the new state; differentiable through every input and
    weight when a tape is given.
    """
    _check_shapes(x, prev, z_prev, w)
    use_z = w.has_code_path
    pre = {
        g: gate_preact(
            w.W[g], x, w.U[g], prev.h, w.b[g],
            v=w.V[g] if use_z else None, z=z_prev if use_z else None, tape=tape,
        )
        for g in GATES
    }
    if tape is None:
        _, _, _, _, c, h, _ = K.lsthm_point_fwd(
            pre["i"], pre["f"], pre["o"], pre["c"], prev.c
        )
        return LsthmState(c=c, h=h)

    cprev_v = prev.c.value if isinstance(prev.c, Var) else prev.c
    i, f, o, g_, c, h, tc = K.lsthm_point_fwd(
        pre["i"].value, pre["f"].value, pre["o"].value, pre["c"].value, cprev_v
    )
    c_out = Var(c)
    h_out = Var(h)

    def _bwd():
        gh = h_out.grad
        gc = c_out.grad
        if gh is None and gc is None:
            return
        zeros = np.zeros_like(c)
        dpi, dpf, dpo, dpc, dcprev = K.lsthm_point_bwd(
            gh if gh is not None else zeros,
            gc if gc is not None else zeros,
            i, f, o, g_, cprev_v, tc,
        )
        for gate, d in zip(GATES, (dpi, dpf, dpo, dpc)):
            node = pre[gate]
            node.grad = d if node.grad is None else node.grad + d
        if isinstance(prev.c, Var):
            if prev.c.grad is None:
                prev.c.grad = np.zeros_like(cprev_v)
            prev.c.grad += dcprev

    tape.record(_bwd)
    return LsthmState(c=c_out, h=h_out)


def lsthm_step_all(inputs, states, z_prev, weights, order, tape=None):
    """Step every modality independently and concatenate the outputs.

    ``order`` fixes the modality concatenation order (configuration
    declaration order). Returns (new states dict, h_cat) where h_cat is the
    concatenation of the per-modality h in that order.
    """
    if set(inputs) != set(order) or set(states) != set(order):
        missing = set(order) - set(inputs)
        extra = set(inputs) - set(order)
        raise ValueError(
            f"modality streams do not match configuration: missing={sorted(missing)}, "
            f"unexpected={sorted(extra)}"
        )
    from .tape import concat

    new_states = {}
    for name in order:
        new_states[name] = lsthm_step(inputs[name], states[name], z_prev, weights[name], tape)
    h_cat = concat([new_states[name].h for name in order], tape)
    return new_states, h_cat
