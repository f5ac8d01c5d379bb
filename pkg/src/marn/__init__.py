"""Multi-attention recurrent network over aligned multimodal sequences.

Per-modality hybrid-memory cells exchange a learned cross-view code
produced each step by a multi-attention block; everything runs on a small
tape-based reverse-mode engine whose gradients are finite-difference
checked end to end.
"""

from .data import (
    CoOccurrenceRule,
    DataError,
    DatasetSplit,
    MultimodalSequence,
    SynthTaskSpec,
    generate_synthetic,
    load_jsonl,
    save_jsonl,
    scan_label,
    unimodal_projection,
)
from .gradcheck import check_gradients, model_gradient_rows, probe_sequences
from .kernels import BACKEND
from .lsthm import LsthmState, LsthmWeights, ModalityConfig, lsthm_step, lsthm_step_all
from .mab import (
    AttentionTrace,
    MabConfig,
    export_attention_trace,
    mab_step,
    mab_step_no_attention,
    read_attention_trace,
)
from .metrics import EvalReport, metrics, pearson_r
from .mlp import MlpSpec, default_spec, mlp_forward, mlp_param_shapes
from .model import (
    ForwardResult,
    MarnConfig,
    TaskSpec,
    ef_lstm_forward,
    forward,
    init_params,
    load_checkpoint,
    marn_forward,
    marn_forward_no_attention,
    marn_forward_no_mab,
    param_shapes,
    save_checkpoint,
    sequence_loss,
)
from .optim import Adam
from .store import ParamStore, bind, harvest, init_store, load_store, save_store
from .tape import (
    Tape,
    Var,
    backward,
    cross_entropy,
    mse,
    relu,
    sigmoid,
    softmax_rows,
    tanh_act,
)
from .train import (
    DivergenceError,
    EpochRecord,
    TrainConfig,
    evaluate,
    mean_loss,
    train,
    write_history_csv,
)

__version__ = "0.1.0"
