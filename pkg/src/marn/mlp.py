"""Small fully connected blocks used for the attention, reduction, code and
prediction networks."""

from dataclasses import dataclass

from . import tape as T

_HIDDEN_ACTS = {"relu": T.relu, "tanh": T.tanh_act}
_OUTPUT_ACTS = {"identity": None, "tanh": T.tanh_act}


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int
    hidden_dims: tuple
    output_dim: int
    hidden_activation: str = "relu"
    output_activation: str = "identity"

    def __post_init__(self):
        dims = (self.input_dim, *self.hidden_dims, self.output_dim)
        if any(d <= 0 for d in dims):
            raise ValueError(f"all MLP dims must be positive, got {dims}")
        if self.hidden_activation not in _HIDDEN_ACTS:
            raise ValueError(f"unknown hidden activation {self.hidden_activation!r}")
        if self.output_activation not in _OUTPUT_ACTS:
            raise ValueError(f"unknown output activation {self.output_activation!r}")

    def layer_dims(self):
        dims = (self.input_dim, *self.hidden_dims, self.output_dim)
        return list(zip(dims[:-1], dims[1:]))


def default_spec(input_dim, output_dim, hidden_dims=None, hidden_activation="relu"):
    """One hidden layer of width 2*input_dim unless widths are given."""
    if hidden_dims is None:
        hidden_dims = (2 * input_dim,)
    return MlpSpec(input_dim, tuple(hidden_dims), output_dim, hidden_activation)


def mlp_param_shapes(prefix, spec):
    shapes = []
    for i, (d_in, d_out) in enumerate(spec.layer_dims()):
        shapes.append((f"{prefix}.l{i}.W", (d_out, d_in)))
        shapes.append((f"{prefix}.l{i}.b", (d_out,)))
    return shapes


def mlp_forward(spec, params, prefix, x, tape=None):
    """Run the block on a vector; records on the tape when one is given.

    ``params`` maps parameter names (``{prefix}.l{i}.W`` / ``.b``) to Vars
    or arrays. Raises on input length mismatch, naming both dims.
    """
    n = (x.value if isinstance(x, T.Var) else x).shape[0]
    if n != spec.input_dim:
        raise ValueError(
            f"{prefix}: input length mismatch, expected {spec.input_dim}, got {n}"
        )
    hidden_act = _HIDDEN_ACTS[spec.hidden_activation]
    output_act = _OUTPUT_ACTS[spec.output_activation]
    out = x
    last = len(spec.layer_dims()) - 1
    for i in range(last + 1):
        out = T.affine(params[f"{prefix}.l{i}.W"], out, params[f"{prefix}.l{i}.b"], tape)
        if i < last:
            out = hidden_act(out, tape)
        elif output_act is not None:
            out = output_act(out, tape)
    return out
