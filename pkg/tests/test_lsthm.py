"""Hybrid memory cell: closed-form cases, an independent single-cell oracle,
finite-difference gradients, and cross-modality isolation."""

import numpy as np
import pytest

from marn.gradcheck import check_gradients
from marn.lsthm import (
    LsthmState,
    ModalityConfig,
    lsthm_step,
    lsthm_step_all,
    weight_shapes,
    weights_from,
)
from marn.store import ParamStore, bind, harvest, init_store
from marn.tape import Tape, Var, backward, sum_all

TANH_HALF = 0.46211715726000974  # 50-digit tanh(1/2), rounded to float64


def _zero_weights(name, d_in, d_mem, d_code=None):
    store = ParamStore()
    for pname, shape in weight_shapes(name, d_in, d_mem, d_code):
        store.add(pname, np.zeros(shape))
    return store


def _random_weights(name, d_in, d_mem, d_code=None, seed=0):
    return init_store(weight_shapes(name, d_in, d_mem, d_code), seed)


class TestClosedForms:
    def test_zero_weights_halve_previous_memory(self):
        # all pre-activations 0: every gate is 1/2 and the candidate is 0,
        # so c = c_prev / 2 and h = tanh(c) / 2
        d_in, d_mem = 3, 4
        store = _zero_weights("m", d_in, d_mem)
        w = weights_from(dict(store.items()), "m", with_code=False)
        prev = LsthmState(c=np.ones(d_mem), h=np.zeros(d_mem))
        out = lsthm_step(np.zeros(d_in), prev, None, w)
        np.testing.assert_allclose(out.c, 0.5 * np.ones(d_mem), rtol=1e-15)
        np.testing.assert_allclose(out.h, 0.5 * TANH_HALF * np.ones(d_mem), rtol=1e-15)

    def test_all_zero_stays_zero(self):
        d_in, d_mem = 3, 4
        store = _zero_weights("m", d_in, d_mem, d_code=5)
        w = weights_from(dict(store.items()), "m", with_code=True)
        prev = LsthmState(c=np.zeros(d_mem), h=np.zeros(d_mem))
        out = lsthm_step(np.zeros(d_in), prev, np.zeros(5), w)
        np.testing.assert_array_equal(out.c, np.zeros(d_mem))
        np.testing.assert_array_equal(out.h, np.zeros(d_mem))

    def test_output_magnitude_stays_below_one(self):
        rng = np.random.default_rng(3)
        store = _random_weights("m", 3, 4, d_code=6, seed=3)
        w = weights_from(dict(store.items()), "m", with_code=True)
        for _ in range(50):
            prev = LsthmState(c=rng.normal(size=4) * 3, h=rng.uniform(-1, 1, 4))
            out = lsthm_step(rng.normal(size=3), prev, rng.normal(size=6), w)
            assert (np.abs(out.h) < 1).all()

    def test_memory_growth_bound(self):
        # f, i are in (0,1) and |tanh| < 1, so |c_t| <= |c_prev| + 1
        rng = np.random.default_rng(4)
        store = _random_weights("m", 3, 4, seed=5)
        w = weights_from(dict(store.items()), "m", with_code=False)
        for _ in range(100):
            c_prev = rng.normal(size=4) * 5
            prev = LsthmState(c=c_prev, h=rng.uniform(-1, 1, 4))
            out = lsthm_step(rng.normal(size=3) * 2, prev, None, w)
            assert (np.abs(out.c) <= np.abs(c_prev) + 1).all()


def _reference_lstm_linear_candidate(x, h_prev, c_prev, W, U, b):
    """Independent plain-numpy oracle: standard LSTM with a linear candidate."""
    sig = lambda v: 1.0 / (1.0 + np.exp(-v))
    i = sig(W["i"] @ x + U["i"] @ h_prev + b["i"])
    f = sig(W["f"] @ x + U["f"] @ h_prev + b["f"])
    o = sig(W["o"] @ x + U["o"] @ h_prev + b["o"])
    cbar = W["c"] @ x + U["c"] @ h_prev + b["c"]
    c = f * c_prev + i * np.tanh(cbar)
    h = o * np.tanh(c)
    return c, h


def test_without_code_equals_plain_lstm_oracle():
    rng = np.random.default_rng(6)
    store = _random_weights("m", 3, 4, d_code=8, seed=7)
    params = dict(store.items())
    # arbitrary V weights must be inert when z is zero
    w = weights_from(params, "m", with_code=True)
    x = rng.normal(size=3)
    prev = LsthmState(c=rng.normal(size=4), h=rng.uniform(-1, 1, 4))
    out = lsthm_step(x, prev, np.zeros(8), w)
    W = {g: params[f"lsthm.m.W_{g}"] for g in "ifoc"}
    U = {g: params[f"lsthm.m.U_{g}"] for g in "ifoc"}
    b = {g: params[f"lsthm.m.b_{g}"] for g in "ifoc"}
    c_ref, h_ref = _reference_lstm_linear_candidate(x, prev.h, prev.c, W, U, b)
    np.testing.assert_allclose(out.c, c_ref, rtol=1e-12)
    np.testing.assert_allclose(out.h, h_ref, rtol=1e-12)


def test_shape_errors_name_the_modality():
    store = _zero_weights("vision", 3, 4)
    w = weights_from(dict(store.items()), "vision", with_code=False)
    prev = LsthmState(c=np.zeros(4), h=np.zeros(4))
    with pytest.raises(ValueError, match="vision"):
        lsthm_step(np.zeros(7), prev, None, w)
    with pytest.raises(ValueError, match="vision"):
        lsthm_step(np.zeros(3), LsthmState(c=np.zeros(2), h=np.zeros(2)), None, w)


def test_gradients_match_finite_differences():
    d_in, d_mem, d_code = 3, 4, 5
    store = _random_weights("m", d_in, d_mem, d_code=d_code, seed=9)
    rng = np.random.default_rng(10)
    inputs = {
        "x": rng.normal(size=d_in),
        "c_prev": rng.normal(size=d_mem),
        "h_prev": rng.uniform(-0.9, 0.9, d_mem),
        "z": rng.normal(size=d_code),
    }

    def run(params, extra, tape):
        w = weights_from(params, "m", with_code=True)
        prev = LsthmState(c=extra["c_prev"], h=extra["h_prev"])
        out = lsthm_step(extra["x"], prev, extra["z"], w, tape)
        return sum_all(out.h, tape) if tape else np.asarray(out.h.sum())

    tape = Tape()
    binding = bind(store, tape)
    leaves = {k: Var(v) for k, v in inputs.items()}
    loss = run(binding, leaves, tape)
    backward(tape, loss)
    harvest(binding, store)
    analytic = {n: store.grad(n).copy() for n in store.names()}
    analytic.update({k: leaves[k].grad for k in inputs})

    arrays = dict(store.items())
    arrays.update(inputs)

    def loss_fn():
        return float(run(dict(store.items()), inputs, None))

    rows = check_gradients(loss_fn, arrays, analytic, step=1e-5, tol=1e-4)
    assert all(r.ok for r in rows), [(r.name, r.max_rel_err) for r in rows if not r.ok]


class TestStepAll:
    def _setup(self, dims, d_code=None, seed=0):
        stores = {}
        params = {}
        for i, (name, (d_in, d_mem)) in enumerate(dims.items()):
            s = _random_weights(name, d_in, d_mem, d_code, seed=seed + i)
            stores[name] = s
            params.update(dict(s.items()))
        weights = {
            name: weights_from(params, name, with_code=d_code is not None)
            for name in dims
        }
        return params, weights

    def test_concatenation_order_and_length(self):
        dims = {"a": (3, 4), "b": (2, 6)}
        _, weights = self._setup(dims)
        order = ["a", "b"]
        inputs = {"a": np.ones(3), "b": np.ones(2)}
        states = {n: LsthmState(c=np.zeros(d), h=np.zeros(d)) for n, (_, d) in dims.items()}
        new_states, h_cat = lsthm_step_all(inputs, states, None, weights, order)
        assert h_cat.shape == (10,)
        np.testing.assert_array_equal(h_cat[:4], new_states["a"].h)
        np.testing.assert_array_equal(h_cat[4:], new_states["b"].h)

    def test_zero_weights_give_zero_concat(self):
        dims = {"a": (2, 3), "b": (2, 3), "c": (2, 4)}
        weights = {}
        params = {}
        for name, (d_in, d_mem) in dims.items():
            s = _zero_weights(name, d_in, d_mem)
            params.update(dict(s.items()))
            weights[name] = weights_from(params, name, with_code=False)
        inputs = {n: np.ones(d_in) for n, (d_in, _) in dims.items()}
        states = {n: LsthmState(c=np.zeros(d), h=np.zeros(d)) for n, (_, d) in dims.items()}
        _, h_cat = lsthm_step_all(inputs, states, None, weights, list(dims))
        np.testing.assert_array_equal(h_cat, np.zeros(10))

    def test_modality_isolation_at_fixed_code(self):
        dims = {"a": (3, 4), "b": (3, 4)}
        _, weights = self._setup(dims, d_code=8, seed=2)
        rng = np.random.default_rng(13)
        z = rng.normal(size=8)
        states = {n: LsthmState(c=rng.normal(size=4), h=rng.uniform(-1, 1, 4)) for n in dims}
        x_a = rng.normal(size=3)
        base_inputs = {"a": x_a, "b": rng.normal(size=3)}
        out1, _ = lsthm_step_all(base_inputs, states, z, weights, ["a", "b"])
        poked = {"a": x_a, "b": base_inputs["b"] + 10.0}
        out2, _ = lsthm_step_all(poked, states, z, weights, ["a", "b"])
        np.testing.assert_array_equal(out1["a"].h, out2["a"].h)
        np.testing.assert_array_equal(out1["a"].c, out2["a"].c)
        assert not np.array_equal(out1["b"].h, out2["b"].h)

    def test_missing_or_extra_modality_errors(self):
        dims = {"a": (3, 4), "b": (3, 4)}
        _, weights = self._setup(dims)
        states = {n: LsthmState(c=np.zeros(4), h=np.zeros(4)) for n in dims}
        with pytest.raises(ValueError, match="missing"):
            lsthm_step_all({"a": np.zeros(3)}, states, None, weights, ["a", "b"])
        three = {"a": np.zeros(3), "b": np.zeros(3), "c": np.zeros(3)}
        with pytest.raises(ValueError, match="unexpected"):
            lsthm_step_all(three, states, None, weights, ["a", "b"])
