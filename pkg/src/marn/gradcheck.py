"""Central finite-difference verification of the analytic gradients.

The analytic side comes from one taped backward pass; the numeric side
re-evaluates the same forward path at theta +/- step for every single
parameter entry. A parameter passes when

    |analytic - numeric| <= tol * (1 + |numeric|)

holds for all of its entries (tol 1e-4, step 1e-5 by default).
"""

from dataclasses import dataclass

import numpy as np

from .data import MultimodalSequence
from .model import init_params, sequence_loss
from .store import bind, harvest
from .tape import Tape, add, backward


@dataclass
class GradCheckRow:
    name: str
    shape: tuple
    max_rel_err: float
    ok: bool


def numeric_gradient(loss_fn, arr, step):
    """Central differences of loss_fn w.r.t. every entry of arr (in place)."""
    grad = np.empty_like(arr)
    flat = arr.ravel()
    out = grad.ravel()
    for i in range(flat.shape[0]):
        orig = flat[i]
        flat[i] = orig + step
        up = loss_fn()
        flat[i] = orig - step
        down = loss_fn()
        flat[i] = orig
        out[i] = (up - down) / (2.0 * step)
    return grad


def check_gradients(loss_fn, arrays, analytic, step=1e-5, tol=1e-4):
    """Compare analytic gradients against central differences.

    ``arrays`` maps names to the live parameter buffers loss_fn reads;
    ``analytic`` maps the same names to the taped gradients.
    """
    rows = []
    for name, arr in arrays.items():
        numeric = numeric_gradient(loss_fn, arr, step)
        err = np.abs(analytic[name] - numeric) / (1.0 + np.abs(numeric))
        worst = float(err.max()) if err.size else 0.0
        rows.append(
            GradCheckRow(name=name, shape=arr.shape, max_rel_err=worst, ok=worst <= tol)
        )
    return rows


def model_gradient_rows(cfg, seqs, store=None, step=1e-5, tol=1e-4):
    """Per-parameter finite-difference report for the summed sequence loss."""
    if store is None:
        store = init_params(cfg)
    tape = Tape()
    binding = bind(store, tape)
    total = None
    for seq in seqs:
        loss = sequence_loss(seq, cfg, binding, tape)
        total = loss if total is None else add(total, loss, tape)
    store.zero_grads()
    backward(tape, total)
    harvest(binding, store)
    analytic = {name: store.grad(name).copy() for name in store.names()}

    def loss_fn():
        return sum(float(sequence_loss(seq, cfg, store)) for seq in seqs)

    return check_gradients(loss_fn, dict(store.items()), analytic, step, tol)


def probe_sequences(cfg, n=2, t_len=5, seed=1234):
    """Small random sequences matching the model dims, for gradient probing."""
    rng = np.random.default_rng(seed)
    seqs = []
    for i in range(n):
        streams = {
            m.name: rng.normal(0.0, 1.0, size=(t_len, m.d_in)) for m in cfg.modalities
        }
        if cfg.task.kind == "classification":
            label = int(rng.integers(0, cfg.task.n_classes))
        else:
            label = float(rng.normal())
        seqs.append(MultimodalSequence(id=f"probe-{i}", label=label, streams=streams))
    return seqs
