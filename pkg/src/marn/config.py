"""Strict JSON configuration documents for the command line.

Parsing fails loudly on unknown keys at any level (a typo in a
hyperparameter name must never train a silently different model) and on
missing files, before any work starts.
"""

import json
from dataclasses import dataclass, replace

from .data import CoOccurrenceRule, DataError, SynthTaskSpec
from .lsthm import ModalityConfig
from .model import MarnConfig, TaskSpec
from .train import TrainConfig


class ConfigError(ValueError):
    """Invalid configuration document."""


def _check_keys(doc, path, required, optional=()):
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected an object")
    unknown = set(doc) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    missing = set(required) - set(doc)
    if missing:
        raise ConfigError(f"{path}: missing keys {sorted(missing)}")


def _int(doc, path, key, default=None):
    if key not in doc:
        return default
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}.{key}: expected an integer, got {v!r}")
    return v


def _num(doc, path, key, default=None):
    if key not in doc:
        return default
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {v!r}")
    return float(v)


def _str(doc, path, key, default=None):
    if key not in doc:
        return default
    v = doc[key]
    if not isinstance(v, str):
        raise ConfigError(f"{path}.{key}: expected a string, got {v!r}")
    return v


def _dims(doc, path, key):
    if key not in doc:
        return None
    v = doc[key]
    if not isinstance(v, list) or any(isinstance(x, bool) or not isinstance(x, int) for x in v):
        raise ConfigError(f"{path}.{key}: expected a list of integers")
    return tuple(v)


def _parse_task(doc, path):
    _check_keys(doc, path, required=["kind"], optional=["classes"])
    kind = _str(doc, path, "kind")
    if kind == "classification":
        classes = _int(doc, path, "classes")
        if classes is None:
            raise ConfigError(f"{path}: classification needs 'classes'")
        return TaskSpec("classification", classes)
    if kind == "regression":
        if "classes" in doc:
            raise ConfigError(f"{path}: regression takes no 'classes'")
        return TaskSpec("regression")
    raise ConfigError(f"{path}.kind: must be 'classification' or 'regression'")


def _parse_modality(doc, path):
    _check_keys(doc, path, required=["name", "d_in", "d_mem", "d_local"])
    try:
        return ModalityConfig(
            name=_str(doc, path, "name"),
            d_in=_int(doc, path, "d_in"),
            d_mem=_int(doc, path, "d_mem"),
            d_local=_int(doc, path, "d_local"),
        )
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from None


def parse_model_config(doc, path="model"):
    _check_keys(
        doc, path,
        required=["modalities", "task"],
        optional=[
            "k", "variant", "seed", "hidden_activation", "code_output_activation",
            "attn_hidden", "reduce_hidden", "code_hidden", "head_hidden",
        ],
    )
    if not isinstance(doc["modalities"], list) or not doc["modalities"]:
        raise ConfigError(f"{path}.modalities: expected a non-empty list")
    modalities = tuple(
        _parse_modality(m, f"{path}.modalities[{i}]")
        for i, m in enumerate(doc["modalities"])
    )
    try:
        return MarnConfig(
            modalities=modalities,
            task=_parse_task(doc["task"], f"{path}.task"),
            k=_int(doc, path, "k", 4),
            variant=_str(doc, path, "variant", "full"),
            seed=_int(doc, path, "seed", 0),
            hidden_activation=_str(doc, path, "hidden_activation", "relu"),
            code_output_activation=_str(doc, path, "code_output_activation", "identity"),
            attn_hidden=_dims(doc, path, "attn_hidden"),
            reduce_hidden=_dims(doc, path, "reduce_hidden"),
            code_hidden=_dims(doc, path, "code_hidden"),
            head_hidden=_dims(doc, path, "head_hidden"),
        )
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from None


def parse_train_config(doc, path="train"):
    _check_keys(
        doc, path,
        required=[],
        optional=[
            "epochs", "batch_size", "lr", "beta1", "beta2", "eps",
            "clip_norm", "patience", "seed",
        ],
    )
    clip = doc.get("clip_norm", 1.0)
    if clip is not None:
        clip = _num(doc, path, "clip_norm", 1.0)
    try:
        return TrainConfig(
            epochs=_int(doc, path, "epochs", 30),
            batch_size=_int(doc, path, "batch_size", 16),
            lr=_num(doc, path, "lr", 1e-3),
            beta1=_num(doc, path, "beta1", 0.9),
            beta2=_num(doc, path, "beta2", 0.999),
            eps=_num(doc, path, "eps", 1e-8),
            clip_norm=clip,
            patience=_int(doc, path, "patience", 10),
            seed=_int(doc, path, "seed", 0),
        )
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from None


@dataclass(frozen=True)
class RunConfig:
    model: MarnConfig
    train: TrainConfig
    data: dict  # split name -> jsonl path
    out_dir: str
    seed: int = None  # master seed overriding model and train seeds

    def with_seed(self, seed):
        if seed is None:
            return self
        return replace(
            self,
            seed=seed,
            model=replace(self.model, seed=seed),
            train=replace(self.train, seed=seed),
        )


def parse_run_config(path):
    doc = _load_json(path)
    _check_keys(
        doc, "run", required=["model", "data", "out_dir"],
        optional=["train", "seed"],
    )
    data = doc["data"]
    _check_keys(data, "run.data", required=["train", "val", "test"])
    paths = {split: _str(data, "run.data", split) for split in ("train", "val", "test")}
    run = RunConfig(
        model=parse_model_config(doc["model"]),
        train=parse_train_config(doc.get("train", {})),
        data=paths,
        out_dir=_str(doc, "run", "out_dir"),
        seed=_int(doc, "run", "seed"),
    )
    return run.with_seed(run.seed)


def _parse_rule(doc, path):
    _check_keys(doc, path, required=["response", "trigger", "lag", "dim"])
    try:
        return CoOccurrenceRule(
            response=_str(doc, path, "response"),
            trigger=_str(doc, path, "trigger"),
            lag=_int(doc, path, "lag"),
            dim=_int(doc, path, "dim"),
        )
    except DataError as e:
        raise ConfigError(f"{path}: {e}") from None


def parse_gen_config(path):
    """Parse a generation document; returns (SynthTaskSpec, n)."""
    doc = _load_json(path)
    _check_keys(
        doc, "gen",
        required=["n", "modalities", "t_min", "t_max", "rules", "seed"],
        optional=["noise", "contradiction_rate", "positive_fraction"],
    )
    mods = doc["modalities"]
    if not isinstance(mods, dict) or not mods:
        raise ConfigError("gen.modalities: expected a non-empty object of widths")
    for name, width in mods.items():
        if isinstance(width, bool) or not isinstance(width, int) or width < 1:
            raise ConfigError(f"gen.modalities.{name}: expected a positive integer")
    if not isinstance(doc["rules"], list) or not doc["rules"]:
        raise ConfigError("gen.rules: expected a non-empty list")
    rules = tuple(
        _parse_rule(r, f"gen.rules[{i}]") for i, r in enumerate(doc["rules"])
    )
    n = _int(doc, "gen", "n")
    try:
        spec = SynthTaskSpec(
            modality_dims=dict(mods),
            t_min=_int(doc, "gen", "t_min"),
            t_max=_int(doc, "gen", "t_max"),
            rules=rules,
            noise=_num(doc, "gen", "noise", 0.0),
            contradiction_rate=_num(doc, "gen", "contradiction_rate", 0.0),
            positive_fraction=_num(doc, "gen", "positive_fraction", 0.5),
            seed=_int(doc, "gen", "seed"),
        )
    except DataError as e:
        raise ConfigError(f"gen: {e}") from None
    return spec, n


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON: {e}") from None
