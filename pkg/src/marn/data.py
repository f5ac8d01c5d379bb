"""Multimodal sequence datasets: the JSONL interchange format, a synthetic
generator with planted cross-view dependencies, and stream projection.

Record schema, one JSON object per line:

    {"id": str, "label": number, "streams": {"<modality>": [[f64, ...], ...]}}

All streams of a record share the same length T >= 1 (word-level style
alignment); zero rows are valid (pauses). Floats survive a write/read
round trip exactly.

The generator plants spike patterns (value 1.0 + noise) on a signal
dimension of each rule's two modalities. A sequence is labeled 1 iff for
every rule the response modality spikes at some t while the trigger
modality spikes at t - lag. Negative sequences carry the same spikes with
the alignment broken (and, for multi-rule tasks, exactly one rule left
aligned), so no single stream's marginal distribution carries label
information; only cross-view timing does.
"""

import json
from dataclasses import dataclass

import numpy as np

SPIKE_THRESHOLD = 0.5  # spikes are 1.0 + noise; noise stays well below this


class DataError(ValueError):
    """Malformed dataset input, with file/line or record context."""


@dataclass
class MultimodalSequence:
    id: str
    label: object  # class index (int) or regression target (float)
    streams: dict  # modality name -> (T, d_in) float64 matrix

    def __post_init__(self):
        if not self.streams:
            raise DataError(f"sequence {self.id!r}: no streams")
        self.streams = {
            name: np.ascontiguousarray(mat, dtype=np.float64)
            for name, mat in self.streams.items()
        }
        lengths = set()
        for name, mat in self.streams.items():
            if mat.ndim != 2:
                raise DataError(
                    f"sequence {self.id!r}: stream {name!r} must be a matrix"
                )
            lengths.add(mat.shape[0])
        if len(lengths) != 1:
            detail = {n: m.shape[0] for n, m in self.streams.items()}
            raise DataError(f"sequence {self.id!r}: unequal stream lengths {detail}")
        if lengths.pop() < 1:
            raise DataError(f"sequence {self.id!r}: empty sequence (T=0)")

    @property
    def length(self):
        return next(iter(self.streams.values())).shape[0]


@dataclass
class DatasetSplit:
    train: list
    val: list
    test: list

    def __post_init__(self):
        seen = {}
        for part, seqs in (("train", self.train), ("val", self.val), ("test", self.test)):
            for s in seqs:
                if s.id in seen:
                    raise DataError(
                        f"id {s.id!r} appears in both {seen[s.id]} and {part}"
                    )
                seen[s.id] = part


@dataclass(frozen=True)
class CoOccurrenceRule:
    """Spike in ``response`` at t together with a spike in ``trigger`` at
    t - lag, both on dimension ``dim`` of their streams."""

    response: str
    trigger: str
    lag: int
    dim: int

    def __post_init__(self):
        if self.lag < 0:
            raise DataError(f"rule lag must be >= 0, got {self.lag}")
        if self.response == self.trigger:
            raise DataError("rule must span two different modalities")


@dataclass(frozen=True)
class SynthTaskSpec:
    modality_dims: dict  # ordered name -> d_in
    t_min: int
    t_max: int
    rules: tuple
    noise: float = 0.0
    contradiction_rate: float = 0.0
    positive_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.t_min < 1 or self.t_max < self.t_min:
            raise DataError(f"bad length range [{self.t_min}, {self.t_max}]")
        if not self.rules:
            raise DataError("at least one rule is required")
        if not 0.0 <= self.contradiction_rate <= 1.0:
            raise DataError("contradiction rate must be in [0, 1]")
        if not 0.0 < self.positive_fraction < 1.0:
            raise DataError("positive fraction must be in (0, 1)")
        if self.noise < 0.0:
            raise DataError("noise must be >= 0")
        for rule in self.rules:
            for side in (rule.response, rule.trigger):
                if side not in self.modality_dims:
                    raise DataError(f"rule references unknown modality {side!r}")
                if rule.dim >= self.modality_dims[side]:
                    raise DataError(
                        f"rule dim {rule.dim} out of range for {side!r} "
                        f"(width {self.modality_dims[side]})"
                    )
            if rule.lag >= self.t_min:
                raise DataError(
                    f"rule lag {rule.lag} must be smaller than t_min {self.t_min}"
                )
            if rule.lag + 2 > self.t_min:
                raise DataError(
                    f"rule lag {rule.lag} leaves no room for misaligned spikes "
                    f"at t_min {self.t_min}; need lag + 2 <= t_min"
                )


def scan_label(streams, rules, threshold=SPIKE_THRESHOLD):
    """Label a sequence directly from its planted-spike definition."""
    for rule in rules:
        resp = streams[rule.response][:, rule.dim]
        trig = streams[rule.trigger][:, rule.dim]
        n = resp.shape[0]
        if not any(
            resp[t] > threshold and trig[t - rule.lag] > threshold
            for t in range(rule.lag, n)
        ):
            return 0
    return 1


class _Retry(Exception):
    pass


def _draw_slot(rng, lo, hi, taken, avoid=None):
    for _ in range(200):
        t = int(rng.integers(lo, hi))
        if t not in taken and t != avoid:
            return t
    raise _Retry


def _plant_pair(streams, rule, t_len, rng, aligned, occupied):
    occ_r = occupied.setdefault((rule.response, rule.dim), set())
    occ_t = occupied.setdefault((rule.trigger, rule.dim), set())
    if aligned:
        for _ in range(200):
            t_resp = int(rng.integers(rule.lag, t_len))
            if t_resp not in occ_r and (t_resp - rule.lag) not in occ_t:
                break
        else:
            raise _Retry
        t_trig = t_resp - rule.lag
    else:
        t_resp = _draw_slot(rng, rule.lag, t_len, occ_r)
        t_trig = _draw_slot(rng, 0, t_len - rule.lag, occ_t, avoid=t_resp - rule.lag)
    occ_r.add(t_resp)
    occ_t.add(t_trig)
    streams[rule.response][t_resp, rule.dim] += 1.0
    streams[rule.trigger][t_trig, rule.dim] += 1.0


def _make_sequence(seq_id, label, spec, rng):
    for _ in range(64):
        t_len = int(rng.integers(spec.t_min, spec.t_max + 1))
        streams = {
            name: rng.normal(0.0, spec.noise, size=(t_len, dim)) if spec.noise > 0
            else np.zeros((t_len, dim))
            for name, dim in spec.modality_dims.items()
        }
        occupied = {}
        if label == 1:
            aligned_idx = set(range(len(spec.rules)))
        elif len(spec.rules) > 1:
            # exactly one rule stays aligned, so a model must verify every
            # rule rather than just spot any single alignment
            aligned_idx = {int(rng.integers(0, len(spec.rules)))}
        else:
            aligned_idx = set()
        try:
            for i, rule in enumerate(spec.rules):
                _plant_pair(streams, rule, t_len, rng, i in aligned_idx, occupied)
            if spec.contradiction_rate > 0 and rng.random() < spec.contradiction_rate:
                extra = spec.rules[int(rng.integers(0, len(spec.rules)))]
                _plant_pair(streams, extra, t_len, rng, aligned=False, occupied=occupied)
        except _Retry:
            continue
        if scan_label(streams, spec.rules) == label:
            return MultimodalSequence(id=seq_id, label=label, streams=streams)
    raise DataError(
        f"could not realize label {label} for {seq_id!r}; spec too constrained"
    )


def generate_synthetic(spec, n):
    """Produce a labeled dataset split 60/20/20 by id.

    Labels are interleaved to stay balanced within one sequence at the
    requested positive fraction; the whole dataset is a pure function of
    ``spec.seed``.
    """
    if n < 10:
        raise DataError(f"need at least 10 sequences, got {n}")
    rng = np.random.default_rng(spec.seed)
    n_pos = round(n * spec.positive_fraction)
    labels = [
        ((i + 1) * n_pos) // n - (i * n_pos) // n  # evenly interleaved 0/1
        for i in range(n)
    ]
    seqs = [
        _make_sequence(f"seq-{i:05d}", labels[i], spec, rng) for i in range(n)
    ]
    n_train = n * 6 // 10
    n_val = n * 2 // 10
    return DatasetSplit(
        train=seqs[:n_train],
        val=seqs[n_train : n_train + n_val],
        test=seqs[n_train + n_val :],
    )


def unimodal_projection(ds, modality):
    """Copy of the dataset with every stream except ``modality`` zeroed.

    Shapes are preserved; applying the projection twice is a no-op.
    """
    if isinstance(ds, DatasetSplit):
        return DatasetSplit(
            train=unimodal_projection(ds.train, modality),
            val=unimodal_projection(ds.val, modality),
            test=unimodal_projection(ds.test, modality),
        )
    out = []
    for seq in ds:
        if modality not in seq.streams:
            raise DataError(f"unknown modality {modality!r} in sequence {seq.id!r}")
        streams = {
            name: mat.copy() if name == modality else np.zeros_like(mat)
            for name, mat in seq.streams.items()
        }
        out.append(MultimodalSequence(id=seq.id, label=seq.label, streams=streams))
    return out


def save_jsonl(seqs, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for seq in seqs:
            rec = {
                "id": seq.id,
                "label": seq.label,
                "streams": {n: m.tolist() for n, m in seq.streams.items()},
            }
            fh.write(json.dumps(rec) + "\n")


def load_jsonl(path):
    """Read and validate a JSONL dataset; empty file gives an empty list."""
    seqs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise DataError(f"{path}:{lineno}: malformed record: {e}") from None
            extra = set(rec) - {"id", "label", "streams"}
            missing = {"id", "label", "streams"} - set(rec)
            if extra or missing:
                raise DataError(
                    f"{path}:{lineno}: record keys wrong "
                    f"(missing {sorted(missing)}, unknown {sorted(extra)})"
                )
            seqs.append(
                MultimodalSequence(
                    id=rec["id"], label=rec["label"], streams=rec["streams"]
                )
            )
    return seqs
