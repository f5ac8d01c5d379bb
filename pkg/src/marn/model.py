"""The full recurrence: per-modality hybrid memory cells plus the
multi-attention block, composed over time, with a prediction head and the
three reference variants used for ablation comparisons.

Variants:
  full          cells with code path + attention block; head on h_T ++ z_T
  no_mab        disjoint cells, no code (z never computed, no V weights);
                head on h_T alone
  no_attention  like full but the attention network is removed and all K
                coefficients are 1
  ef_lstm       early fusion: one cell of width D_mem over the concatenated
                inputs; head on h_T
"""

from dataclasses import dataclass

import numpy as np

from . import lsthm
from .lsthm import LsthmState, ModalityConfig
from .mab import AttentionTrace, MabConfig, mab_step, mab_step_no_attention
from .mlp import MlpSpec, default_spec, mlp_forward, mlp_param_shapes
from .store import ParamStore, bind, init_store, load_store, save_store
from .tape import Var, concat, cross_entropy, mse

VARIANTS = ("full", "no_mab", "no_attention", "ef_lstm")
EF_CELL = "fused"


@dataclass(frozen=True)
class TaskSpec:
    kind: str  # classification | regression
    n_classes: int = 0

    def __post_init__(self):
        if self.kind not in ("classification", "regression"):
            raise ValueError(f"unknown task kind {self.kind!r}")
        if self.kind == "classification" and self.n_classes < 2:
            raise ValueError("classification needs at least 2 classes")

    @property
    def output_dim(self):
        return self.n_classes if self.kind == "classification" else 1


@dataclass(frozen=True)
class MarnConfig:
    modalities: tuple
    task: TaskSpec
    k: int = 4
    variant: str = "full"
    seed: int = 0
    hidden_activation: str = "relu"
    code_output_activation: str = "identity"
    attn_hidden: tuple = None
    reduce_hidden: tuple = None
    code_hidden: tuple = None
    head_hidden: tuple = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.k < 1:
            raise ValueError(f"attention count must be >= 1, got {self.k}")
        names = [m.name for m in self.modalities]
        if len(names) != len(set(names)):
            raise ValueError(f"modality names must be unique, got {names}")
        if not names:
            raise ValueError("at least one modality is required")

    @property
    def d_mem_total(self):
        return sum(m.d_mem for m in self.modalities)

    @property
    def order(self):
        return [m.name for m in self.modalities]

    @property
    def uses_code(self):
        return self.variant in ("full", "no_attention")

    @property
    def head_input_dim(self):
        return 2 * self.d_mem_total if self.uses_code else self.d_mem_total

    def attn_spec(self):
        d = self.d_mem_total
        return default_spec(d, self.k * d, self.attn_hidden, self.hidden_activation)

    def reduce_spec(self, m):
        return default_spec(
            self.k * m.d_mem, m.d_local, self.reduce_hidden, self.hidden_activation
        )

    def code_spec(self):
        d_local_sum = sum(m.d_local for m in self.modalities)
        spec = default_spec(
            d_local_sum, self.d_mem_total, self.code_hidden, self.hidden_activation
        )
        if self.code_output_activation != "identity":
            spec = MlpSpec(
                spec.input_dim, spec.hidden_dims, spec.output_dim,
                spec.hidden_activation, self.code_output_activation,
            )
        return spec

    def head_spec(self):
        return default_spec(
            self.head_input_dim, self.task.output_dim,
            self.head_hidden, self.hidden_activation,
        )

    def mab_config(self):
        return MabConfig(
            k=self.k,
            modalities=self.modalities,
            spec_a=self.attn_spec(),
            spec_c={m.name: self.reduce_spec(m) for m in self.modalities},
            spec_g=self.code_spec(),
        )


@dataclass
class ForwardResult:
    h_last: np.ndarray
    z_last: np.ndarray  # None for variants that learn no code
    prediction: np.ndarray
    trace: AttentionTrace = None


def param_shapes(cfg):
    """Every (name, shape) the variant owns, in registration order."""
    shapes = []
    d = cfg.d_mem_total
    if cfg.variant == "ef_lstm":
        d_in_total = sum(m.d_in for m in cfg.modalities)
        shapes += lsthm.weight_shapes(EF_CELL, d_in_total, d)
    else:
        d_code = d if cfg.uses_code else None
        for m in cfg.modalities:
            shapes += lsthm.weight_shapes(m.name, m.d_in, m.d_mem, d_code)
    if cfg.uses_code:
        if cfg.variant == "full":
            shapes += mlp_param_shapes("mab.A", cfg.attn_spec())
        for m in cfg.modalities:
            shapes += mlp_param_shapes(f"mab.C.{m.name}", cfg.reduce_spec(m))
        shapes += mlp_param_shapes("mab.G", cfg.code_spec())
    shapes += mlp_param_shapes("head", cfg.head_spec())
    return shapes


def init_params(cfg, seed=None):
    """Seed-determined parameter store for the variant."""
    return init_store(param_shapes(cfg), cfg.seed if seed is None else seed)


def _check_sequence(seq, cfg):
    names = cfg.order if cfg.variant != "ef_lstm" else [m.name for m in cfg.modalities]
    if set(seq.streams) != set(names):
        raise ValueError(
            f"sequence {seq.id!r}: streams {sorted(seq.streams)} do not match "
            f"configured modalities {sorted(names)}"
        )
    lengths = {name: seq.streams[name].shape[0] for name in names}
    if len(set(lengths.values())) != 1:
        raise ValueError(f"sequence {seq.id!r}: unequal stream lengths {lengths}")
    t_len = next(iter(lengths.values()))
    if t_len < 1:
        raise ValueError(f"sequence {seq.id!r}: empty sequence (T=0)")
    for m in cfg.modalities:
        if seq.streams[m.name].shape[1] != m.d_in:
            raise ValueError(
                f"sequence {seq.id!r}: modality {m.name!r} has width "
                f"{seq.streams[m.name].shape[1]}, expected {m.d_in}"
            )
    return t_len


def _forward_nodes(seq, cfg, params, tape=None, want_trace=False):
    """Shared recurrence; returns (prediction node, h_T node, z_T node, trace)."""
    t_len = _check_sequence(seq, cfg)
    d = cfg.d_mem_total

    if cfg.variant == "ef_lstm":
        weights = {EF_CELL: lsthm.weights_from(params, EF_CELL, with_code=False)}
        order = [EF_CELL]
        cell_dims = {EF_CELL: d}
        stream = np.concatenate([seq.streams[name] for name in cfg.order], axis=1)
        inputs_at = lambda t: {EF_CELL: stream[t]}
    else:
        with_code = cfg.uses_code
        weights = {
            name: lsthm.weights_from(params, name, with_code) for name in cfg.order
        }
        order = cfg.order
        cell_dims = {m.name: m.d_mem for m in cfg.modalities}
        inputs_at = lambda t: {name: seq.streams[name][t] for name in cfg.order}

    # c_0 = h_0 = 0 exactly (and z_0 = 0 below)
    states = {
        name: LsthmState(c=np.zeros(dim), h=np.zeros(dim))
        for name, dim in cell_dims.items()
    }
    mab_cfg = cfg.mab_config() if cfg.uses_code else None
    z = np.zeros(d) if cfg.uses_code else None
    trace_steps = [] if (want_trace and cfg.uses_code) else None

    h_cat = None
    for t in range(t_len):
        states, h_cat = lsthm.lsthm_step_all(
            inputs_at(t), states, z, weights, order, tape
        )
        if cfg.uses_code:
            if cfg.variant == "full":
                z, a = mab_step(h_cat, mab_cfg, params, tape)
            else:
                z, a = mab_step_no_attention(h_cat, mab_cfg, params, tape)
            if trace_steps is not None:
                trace_steps.append(a)

    head_in = concat([h_cat, z], tape) if cfg.uses_code else h_cat
    pred = mlp_forward(cfg.head_spec(), params, "head", head_in, tape)
    trace = None
    if trace_steps is not None:
        trace = AttentionTrace(steps=trace_steps, boundaries=mab_cfg.boundaries())
    return pred, h_cat, z, trace


def _as_result(pred, h_cat, z, trace):
    val = lambda x: x.value.copy() if isinstance(x, Var) else np.array(x, copy=True)
    return ForwardResult(
        h_last=val(h_cat),
        z_last=val(z) if z is not None else None,
        prediction=val(pred),
        trace=trace,
    )


def forward(seq, cfg, params, tape=None, want_trace=False):
    """Run the configured variant on one sequence.

    ``params`` may be a ParamStore (evaluated untracked) or a name->Var
    binding created by ``bind(store, tape)`` when differentiating.
    """
    if isinstance(params, ParamStore):
        if tape is not None:
            raise ValueError("pass a bind(store, tape) mapping when taping")
        params = bind(params)
    return _as_result(*_forward_nodes(seq, cfg, params, tape, want_trace))


def marn_forward(seq, cfg, params, tape=None, want_trace=False):
    """Full model: memories + attention block, head on h_T ++ z_T."""
    if cfg.variant != "full":
        raise ValueError(f"marn_forward requires variant 'full', got {cfg.variant!r}")
    return forward(seq, cfg, params, tape, want_trace)


def marn_forward_no_mab(seq, cfg, params, tape=None):
    """Ablation: disjoint per-modality cells, no cross-view code at all."""
    if cfg.variant != "no_mab":
        raise ValueError(f"requires variant 'no_mab', got {cfg.variant!r}")
    return forward(seq, cfg, params, tape)


def marn_forward_no_attention(seq, cfg, params, tape=None, want_trace=False):
    """Ablation: attention network removed, every coefficient fixed at 1."""
    if cfg.variant != "no_attention":
        raise ValueError(f"requires variant 'no_attention', got {cfg.variant!r}")
    return forward(seq, cfg, params, tape, want_trace)


def ef_lstm_forward(seq, cfg, params, tape=None):
    """Early-fusion baseline: one cell over the concatenated modality inputs."""
    if cfg.variant != "ef_lstm":
        raise ValueError(f"requires variant 'ef_lstm', got {cfg.variant!r}")
    return forward(seq, cfg, params, tape)


def sequence_loss(seq, cfg, params, tape=None):
    """Task loss node for one sequence (cross-entropy or squared error)."""
    if isinstance(params, ParamStore):
        params = bind(params)
    pred, _, _, _ = _forward_nodes(seq, cfg, params, tape)
    if cfg.task.kind == "classification":
        return cross_entropy(pred, int(seq.label), tape)
    return mse(pred, float(seq.label), tape)


def predict(seq, cfg, store):
    """Hard prediction: argmax class index, or the regression scalar."""
    res = forward(seq, cfg, store)
    if cfg.task.kind == "classification":
        return int(np.argmax(res.prediction))
    return float(res.prediction[0])


def save_checkpoint(store, path):
    save_store(store, path)


def load_checkpoint(path, cfg):
    """Load a checkpoint, validating every name and shape against the config."""
    return load_store(path, expected_shapes=param_shapes(cfg))
