"""Named parameter storage with parallel gradient buffers.

Iteration order is insertion order everywhere, which is what makes
initialization, checkpoints and training byte-reproducible.
"""

import json

import numpy as np

from .tape import Var


class ParamStore:
    """Ordered map of parameter name -> float64 array, plus matching grads."""

    def __init__(self):
        self._params = {}
        self._grads = {}

    def add(self, name, value):
        if name in self._params:
            raise ValueError(f"duplicate parameter {name!r}")
        arr = np.ascontiguousarray(value, dtype=np.float64)
        self._params[name] = arr
        self._grads[name] = np.zeros_like(arr)

    def __contains__(self, name):
        return name in self._params

    def __getitem__(self, name):
        return self._params[name]

    def __len__(self):
        return len(self._params)

    def names(self):
        return list(self._params)

    def items(self):
        return self._params.items()

    def grad(self, name):
        return self._grads[name]

    def zero_grads(self):
        for g in self._grads.values():
            g[...] = 0.0

    def grad_norm(self):
        total = 0.0
        for g in self._grads.values():
            total += float(np.dot(g.ravel(), g.ravel()))
        return np.sqrt(total)

    def scale_grads(self, factor):
        for g in self._grads.values():
            g *= factor

    @property
    def n_tensors(self):
        return len(self._params)

    @property
    def n_scalars(self):
        return sum(int(v.size) for v in self._params.values())

    def copy(self):
        dup = ParamStore()
        for name, value in self._params.items():
            dup.add(name, value.copy())
        return dup

    def equals(self, other):
        if self.names() != other.names():
            return False
        return all(
            np.array_equal(self._params[n], other._params[n]) for n in self._params
        )


def init_store(shapes, seed):
    """Build a ParamStore from (name, shape) pairs, fully determined by seed.

    Matrices get Xavier-uniform values with bound sqrt(6/(fan_in+fan_out));
    bias vectors start at zero, except forget-gate biases (names ending in
    ``.b_f``) which start at 1.0 so memories are initially retained.
    """
    rng = np.random.default_rng(seed)
    store = ParamStore()
    for name, shape in shapes:
        if len(shape) == 2:
            fan_out, fan_in = shape
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            store.add(name, rng.uniform(-bound, bound, size=shape))
        elif len(shape) == 1:
            if name.endswith(".b_f"):
                store.add(name, np.ones(shape))
            else:
                store.add(name, np.zeros(shape))
        else:
            raise ValueError(f"unsupported parameter rank for {name!r}: {shape}")
    return store


def bind(store, tape=None):
    """Map every parameter to a Var leaf (or to its raw array when untaped)."""
    if tape is None:
        return dict(store.items())
    return {name: Var(value) for name, value in store.items()}


def harvest(binding, store):
    """Accumulate leaf gradients back into the store's gradient buffers.

    Parameters never touched by the loss keep their exact-zero buffers.
    """
    for name, var in binding.items():
        if isinstance(var, Var) and var.grad is not None:
            store.grad(name)[...] += var.grad


def save_store(store, path):
    """Write a self-describing textual checkpoint (name, shape, exact values)."""
    records = [
        {"name": name, "shape": list(value.shape), "values": value.ravel().tolist()}
        for name, value in store.items()
    ]
    doc = {"format": "marn-params", "version": 1, "params": records}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_store(path, expected_shapes=None):
    """Read a checkpoint; if expected (name, shape) pairs are given, validate
    that names, order and every shape match exactly."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != "marn-params":
        raise ValueError(f"{path}: not a parameter checkpoint")
    store = ParamStore()
    for rec in doc["params"]:
        shape = tuple(rec["shape"])
        arr = np.asarray(rec["values"], dtype=np.float64).reshape(shape)
        store.add(rec["name"], arr)
    if expected_shapes is not None:
        expected = [(n, tuple(s)) for n, s in expected_shapes]
        found = [(n, v.shape) for n, v in store.items()]
        if expected != found:
            exp_d, got_d = dict(expected), dict(found)
            for name in {n for n, _ in expected} | {n for n, _ in found}:
                if name not in got_d:
                    raise ValueError(f"checkpoint missing parameter {name!r}")
                if name not in exp_d:
                    raise ValueError(f"checkpoint has unexpected parameter {name!r}")
                if exp_d[name] != got_d[name]:
                    raise ValueError(
                        f"checkpoint shape mismatch for {name!r}: "
                        f"expected {exp_d[name]}, got {got_d[name]}"
                    )
            raise ValueError("checkpoint parameter order does not match the model")
    return store
