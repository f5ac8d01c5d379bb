"""Full recurrence, the three ablation/baseline variants, parameter
registries, checkpointing, and the step-composition oracle."""

import numpy as np
import pytest

import marn
from marn import (
    MarnConfig,
    ModalityConfig,
    MultimodalSequence,
    ParamStore,
    TaskSpec,
    forward,
    init_params,
    param_shapes,
)
from marn.gradcheck import model_gradient_rows, probe_sequences


def tiny_cfg(variant="full", k=2, n_mod=3, task=None, **kw):
    mods = tuple(
        ModalityConfig(name, 3, 4, 2) for name in ("language", "vision", "acoustic")[:n_mod]
    )
    return MarnConfig(
        modalities=mods,
        task=task or TaskSpec("classification", 2),
        k=k,
        variant=variant,
        seed=7,
        **kw,
    )


def zero_store(cfg):
    store = ParamStore()
    for name, shape in param_shapes(cfg):
        store.add(name, np.zeros(shape))
    return store


class TestShapes:
    def test_result_dimensions(self):
        cfg = tiny_cfg()
        store = init_params(cfg)
        seq = probe_sequences(cfg, n=1, t_len=4)[0]
        res = forward(seq, cfg, store)
        assert res.h_last.shape == (12,)
        assert res.z_last.shape == (12,)
        assert res.prediction.shape == (2,)
        assert cfg.head_input_dim == 24

    def test_regression_prediction_is_scalar(self):
        cfg = tiny_cfg(task=TaskSpec("regression"))
        seq = probe_sequences(cfg, n=1, t_len=3)[0]
        res = forward(seq, cfg, init_params(cfg))
        assert res.prediction.shape == (1,)

    def test_single_step_zero_params_zero_prediction(self):
        cfg = tiny_cfg()
        seq = probe_sequences(cfg, n=1, t_len=1)[0]
        res = forward(seq, cfg, zero_store(cfg))
        np.testing.assert_array_equal(res.prediction, np.zeros(2))

    def test_mismatched_stream_lengths_error(self):
        with pytest.raises(ValueError, match="unequal stream lengths"):
            MultimodalSequence(
                id="bad",
                label=0,
                streams={"language": np.zeros((5, 3)), "vision": np.zeros((4, 3)),
                         "acoustic": np.zeros((5, 3))},
            )

    def test_wrong_modality_set_errors(self):
        cfg = tiny_cfg()
        seq = MultimodalSequence(
            id="s", label=0, streams={"language": np.zeros((2, 3))}
        )
        with pytest.raises(ValueError, match="do not match"):
            forward(seq, cfg, init_params(cfg))


class TestVariantRegistries:
    def test_no_attention_has_no_attention_params(self):
        names = [n for n, _ in param_shapes(tiny_cfg("no_attention"))]
        assert not any(n.startswith("mab.A.") for n in names)
        full_names = [n for n, _ in param_shapes(tiny_cfg("full"))]
        assert any(n.startswith("mab.A.") for n in full_names)

    def test_no_mab_has_no_code_or_block_params(self):
        names = [n for n, _ in param_shapes(tiny_cfg("no_mab"))]
        assert not any(".V_" in n for n in names)
        assert not any(n.startswith("mab.") for n in names)

    def test_parameter_counts_strictly_ordered(self):
        counts = {
            v: init_params(tiny_cfg(v)).n_scalars
            for v in ("no_mab", "no_attention", "full")
        }
        assert counts["no_mab"] < counts["no_attention"] < counts["full"]

    def test_ef_lstm_cell_spans_concatenated_inputs(self):
        shapes = dict(param_shapes(tiny_cfg("ef_lstm")))
        assert shapes["lsthm.fused.W_i"] == (12, 9)  # D_mem x sum(d_in)
        assert shapes["head.l1.W"][0] == 2

    def test_reduction_width_scales_with_k(self):
        s1 = dict(param_shapes(tiny_cfg("no_attention", k=1)))
        s2 = dict(param_shapes(tiny_cfg("no_attention", k=2)))
        assert s1["mab.C.language.l0.W"][1] == 4
        assert s2["mab.C.language.l0.W"][1] == 8


class TestVariantBehavior:
    def test_no_mab_modality_isolation_is_bitwise(self):
        cfg = tiny_cfg("no_mab")
        store = init_params(cfg)
        seq = probe_sequences(cfg, n=1, t_len=5)[0]
        res1 = forward(seq, cfg, store)
        streams = {k: v.copy() for k, v in seq.streams.items()}
        streams["acoustic"] += 25.0
        poked = MultimodalSequence(id="p", label=seq.label, streams=streams)
        res2 = forward(poked, cfg, store)
        np.testing.assert_array_equal(res1.h_last[:4], res2.h_last[:4])  # language block
        np.testing.assert_array_equal(res1.h_last[4:8], res2.h_last[4:8])
        assert not np.array_equal(res1.h_last[8:], res2.h_last[8:])
        assert res1.z_last is None

    def test_full_collapses_to_no_mab_when_code_is_forced_zero(self):
        head_h = (6,)
        cfg_nm = tiny_cfg("no_mab", head_hidden=head_h)
        cfg_full = tiny_cfg("full", head_hidden=head_h)
        store_nm = init_params(cfg_nm, seed=3)
        store_full = init_params(cfg_full, seed=4)

        forced = ParamStore()
        d = cfg_full.d_mem_total
        for name, shape in param_shapes(cfg_full):
            if name in store_nm and not name.startswith("head."):
                forced.add(name, store_nm[name].copy())
            elif name == "head.l0.W":
                w = np.zeros(shape)
                w[:, :d] = store_nm["head.l0.W"]
                forced.add(name, w)  # columns reading z_T are zeroed
            elif name.startswith("head."):
                forced.add(name, store_nm[name].copy())
            elif name.startswith("mab.G.l1."):
                forced.add(name, np.zeros(shape))  # code output forced to 0
            else:
                forced.add(name, store_full[name].copy())

        seq = probe_sequences(cfg_nm, n=1, t_len=5, seed=77)[0]
        res_nm = forward(seq, cfg_nm, store_nm)
        res_full = forward(seq, cfg_full, forced)
        np.testing.assert_array_equal(res_full.z_last, np.zeros(d))
        np.testing.assert_array_equal(res_full.h_last, res_nm.h_last)
        np.testing.assert_array_equal(res_full.prediction, res_nm.prediction)

    def test_no_attention_trace_is_all_ones(self):
        cfg = tiny_cfg("no_attention")
        seq = probe_sequences(cfg, n=1, t_len=3)[0]
        res = forward(seq, cfg, init_params(cfg), want_trace=True)
        for a in res.trace.steps:
            np.testing.assert_array_equal(a, np.ones((2, 12)))

    def test_ef_lstm_zero_params_zero_prediction(self):
        cfg = tiny_cfg("ef_lstm")
        seq = probe_sequences(cfg, n=1, t_len=4)[0]
        res = forward(seq, cfg, zero_store(cfg))
        np.testing.assert_array_equal(res.prediction, np.zeros(2))

    def test_variant_wrappers_enforce_variant(self):
        cfg = tiny_cfg("full")
        seq = probe_sequences(cfg, n=1, t_len=2)[0]
        store = init_params(cfg)
        with pytest.raises(ValueError, match="no_mab"):
            marn.marn_forward_no_mab(seq, cfg, store)
        assert marn.marn_forward(seq, cfg, store).prediction.shape == (2,)


class TestDeterminismAndComposition:
    def test_forward_is_bitwise_deterministic(self):
        cfg = tiny_cfg()
        store = init_params(cfg)
        seq = probe_sequences(cfg, n=1, t_len=5)[0]
        r1 = forward(seq, cfg, store, want_trace=True)
        r2 = forward(seq, cfg, store, want_trace=True)
        np.testing.assert_array_equal(r1.prediction, r2.prediction)
        np.testing.assert_array_equal(r1.h_last, r2.h_last)
        np.testing.assert_array_equal(r1.z_last, r2.z_last)
        for a, b in zip(r1.trace.steps, r2.trace.steps):
            np.testing.assert_array_equal(a, b)

    def test_manual_step_composition_matches_forward(self):
        from marn.lsthm import LsthmState, lsthm_step_all, weights_from
        from marn.mab import mab_step
        from marn.mlp import mlp_forward

        cfg = tiny_cfg()
        store = init_params(cfg)
        params = dict(store.items())
        seq = probe_sequences(cfg, n=1, t_len=5, seed=31)[0]

        d = cfg.d_mem_total
        weights = {m.name: weights_from(params, m.name, True) for m in cfg.modalities}
        states = {m.name: LsthmState(c=np.zeros(4), h=np.zeros(4)) for m in cfg.modalities}
        z = np.zeros(d)
        mab_cfg = cfg.mab_config()
        for t in range(5):
            inputs = {m.name: seq.streams[m.name][t] for m in cfg.modalities}
            states, h_cat = lsthm_step_all(inputs, states, z, weights, cfg.order)
            z, _ = mab_step(h_cat, mab_cfg, params)
        pred = mlp_forward(cfg.head_spec(), params, "head", np.concatenate([h_cat, z]))

        res = forward(seq, cfg, store)
        np.testing.assert_array_equal(res.h_last, h_cat)
        np.testing.assert_array_equal(res.z_last, z)
        np.testing.assert_array_equal(res.prediction, pred)


@pytest.mark.parametrize("variant", ["full", "no_mab", "no_attention", "ef_lstm"])
def test_variant_gradients_match_finite_differences(variant):
    cfg = tiny_cfg(variant, n_mod=2)
    seqs = probe_sequences(cfg, n=1, t_len=3, seed=5)
    rows = model_gradient_rows(cfg, seqs)
    assert all(r.ok for r in rows), [(r.name, r.max_rel_err) for r in rows if not r.ok]


def test_regression_gradients_match_finite_differences():
    cfg = tiny_cfg("full", n_mod=2, task=TaskSpec("regression"))
    seqs = probe_sequences(cfg, n=1, t_len=3, seed=6)
    rows = model_gradient_rows(cfg, seqs)
    assert all(r.ok for r in rows)


class TestCheckpoint:
    def test_roundtrip_and_validation(self, tmp_path):
        cfg = tiny_cfg()
        store = init_params(cfg)
        path = tmp_path / "ckpt.json"
        marn.save_checkpoint(store, path)
        loaded = marn.load_checkpoint(path, cfg)
        assert loaded.equals(store)
        other = tiny_cfg("no_mab")
        with pytest.raises(ValueError):
            marn.load_checkpoint(path, other)
