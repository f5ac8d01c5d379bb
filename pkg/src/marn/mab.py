"""Multi-attention block: K softmax distributions over the concatenated
hidden state, attended outputs, per-modality reduction, and the cross-view
code.

One step takes the concatenated cell outputs h (length D = sum of modality
memory dims) and computes

    a    = row_softmax(reshape(A(h), K x D))      K attention rows
    htil = a * broadcast_K(h)                     attended outputs
    s_m  = C_m(htil columns of modality m)        per-modality reduction
    z    = G(concat_m s_m)                        cross-view code

The flat output of A is laid out row-major as K rows of D before the row
softmax; each C_m consumes its K x d_mem block flattened row-major. Both
orderings are part of the trace file format.
"""

import csv
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .mlp import MlpSpec, mlp_forward
from .tape import Var, concat, gather, reshape, softmax_rows, tile_mul


@dataclass(frozen=True)
class MabConfig:
    k: int
    modalities: tuple
    spec_a: MlpSpec
    spec_c: dict
    spec_g: MlpSpec

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"attention count must be >= 1, got {self.k}")
        d = self.d_mem_total
        if (self.spec_a.input_dim, self.spec_a.output_dim) != (d, self.k * d):
            raise ValueError(
                f"attention network must map {d} -> {self.k * d}, got "
                f"{self.spec_a.input_dim} -> {self.spec_a.output_dim}"
            )
        d_local_sum = 0
        for m in self.modalities:
            spec = self.spec_c[m.name]
            if (spec.input_dim, spec.output_dim) != (self.k * m.d_mem, m.d_local):
                raise ValueError(
                    f"reduction network for {m.name!r} must map "
                    f"{self.k * m.d_mem} -> {m.d_local}, got "
                    f"{spec.input_dim} -> {spec.output_dim}"
                )
            d_local_sum += m.d_local
        if (self.spec_g.input_dim, self.spec_g.output_dim) != (d_local_sum, d):
            raise ValueError(
                f"code network must map {d_local_sum} -> {d}, got "
                f"{self.spec_g.input_dim} -> {self.spec_g.output_dim}"
            )

    @property
    def d_mem_total(self):
        return sum(m.d_mem for m in self.modalities)

    def boundaries(self):
        """Column range (lo, hi) of each modality inside the concatenated h."""
        out, lo = [], 0
        for m in self.modalities:
            out.append((m.name, lo, lo + m.d_mem))
            lo += m.d_mem
        return out


@lru_cache(maxsize=None)
def _block_indices(k, d_total, lo, hi):
    # flat indices of one modality's columns across all K rows
    rows = np.arange(k) * d_total
    cols = np.arange(lo, hi)
    return (rows[:, None] + cols[None, :]).ravel()


def _reduce_and_code(htil, h, cfg, params, tape):
    parts = []
    for name, lo, hi in cfg.boundaries():
        idx = _block_indices(cfg.k, cfg.d_mem_total, lo, hi)
        block = gather(htil, idx, tape)
        parts.append(mlp_forward(cfg.spec_c[name], params, f"mab.C.{name}", block, tape))
    s = concat(parts, tape)
    return mlp_forward(cfg.spec_g, params, "mab.G", s, tape)


def mab_step(h, cfg, params, tape=None):
    """One attention step: returns (z, a) with a the K x D coefficient matrix.

    z is differentiable through the attention, reduction and code networks
    and through h; a is returned as a plain array for tracing.
    """
    raw = mlp_forward(cfg.spec_a, params, "mab.A", h, tape)
    a2 = softmax_rows(reshape(raw, (cfg.k, cfg.d_mem_total), tape), tape)
    a_flat = reshape(a2, (cfg.k * cfg.d_mem_total,), tape)
    htil = tile_mul(a_flat, h, cfg.k, tape)
    z = _reduce_and_code(htil, h, cfg, params, tape)
    a_val = a2.value if isinstance(a2, Var) else a2
    return z, a_val.copy()


def mab_step_no_attention(h, cfg, params, tape=None):
    """Ablated step with every attention coefficient fixed to 1.

    The attention network is bypassed entirely: each of the K broadcast rows
    is h itself. The returned coefficient matrix is all ones so traces stay
    shape-compatible.
    """
    d = cfg.d_mem_total
    ones = np.ones(cfg.k * d)
    htil = tile_mul(ones, h, cfg.k, tape)
    z = _reduce_and_code(htil, h, cfg, params, tape)
    return z, np.ones((cfg.k, d))


@dataclass
class AttentionTrace:
    """Per-timestep K x D coefficient matrices plus modality column ranges."""

    steps: list
    boundaries: list  # (modality name, lo, hi) column ranges

    def dim_modality(self, dim):
        for name, lo, hi in self.boundaries:
            if lo <= dim < hi:
                return name
        raise ValueError(f"dimension {dim} outside all modality ranges")


TRACE_HEADER = ("t", "k", "dim", "modality", "coef")


def export_attention_trace(trace, sink):
    """Write the trace as CSV rows t,k,dim,modality,coef; returns row count.

    Coefficients are written with 17 significant digits so a re-import
    reproduces the matrices exactly.
    """
    if not trace.steps:
        raise ValueError("attention trace is empty")
    own = isinstance(sink, (str, bytes)) or hasattr(sink, "__fspath__")
    fh = open(sink, "w", encoding="utf-8", newline="\n") if own else sink
    rows = 0
    try:
        fh.write(",".join(TRACE_HEADER) + "\n")
        for t, a in enumerate(trace.steps):
            k_n, d_n = a.shape
            for k in range(k_n):
                for dim in range(d_n):
                    fh.write(
                        f"{t},{k},{dim},{trace.dim_modality(dim)},{a[k, dim]:.17g}\n"
                    )
                    rows += 1
    finally:
        if own:
            fh.close()
    return rows


def read_attention_trace(source):
    """Re-load a trace written by export_attention_trace."""
    own = isinstance(source, (str, bytes)) or hasattr(source, "__fspath__")
    fh = open(source, encoding="utf-8", newline="") if own else source
    try:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != TRACE_HEADER:
            raise ValueError(f"unexpected trace header {header!r}")
        cells = {}
        dim_mod = {}
        for row in reader:
            t, k, dim = int(row[0]), int(row[1]), int(row[2])
            cells[(t, k, dim)] = float(row[4])
            dim_mod[dim] = row[3]
    finally:
        if own:
            fh.close()
    if not cells:
        raise ValueError("trace file contains no rows")
    n_t = max(t for t, _, _ in cells) + 1
    n_k = max(k for _, k, _ in cells) + 1
    n_d = max(d for _, _, d in cells) + 1
    steps = [np.empty((n_k, n_d)) for _ in range(n_t)]
    for (t, k, dim), coef in cells.items():
        steps[t][k, dim] = coef
    boundaries = []
    start = 0
    for dim in range(n_d):
        if dim + 1 == n_d or dim_mod[dim + 1] != dim_mod[dim]:
            boundaries.append((dim_mod[start], start, dim + 1))
            start = dim + 1
    return AttentionTrace(steps=steps, boundaries=boundaries)
