"""Command line entry point.

Subcommands: gen, train, eval, gradcheck, attn. Exit codes are fixed:
0 success, 2 configuration/input problem, 3 training divergence,
4 gradient-check failure.
"""

import argparse
import json
import os
import sys

from .config import ConfigError, parse_gen_config, parse_run_config
from .data import DataError, generate_synthetic, load_jsonl, save_jsonl
from .gradcheck import model_gradient_rows, probe_sequences
from .mab import export_attention_trace
from .model import forward, init_params, load_checkpoint, save_checkpoint
from .train import DivergenceError, evaluate, train, write_history_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_GRADCHECK = 4

GRADCHECK_PARAM_LIMIT = 5000


def _fail(msg, code=EXIT_CONFIG):
    print(f"error: {msg}", file=sys.stderr)
    return code


def _load_split_file(run, split):
    path = run.data[split]
    if not os.path.exists(path):
        raise ConfigError(f"dataset file not found: {path}")
    return load_jsonl(path)


def cmd_gen(args):
    spec, n = parse_gen_config(args.config)
    if args.seed is not None:
        from dataclasses import replace

        spec = replace(spec, seed=args.seed)
    split = generate_synthetic(spec, n)
    out = args.out
    try:
        os.makedirs(out, exist_ok=True)
        for name, seqs in (("train", split.train), ("val", split.val), ("test", split.test)):
            save_jsonl(seqs, os.path.join(out, f"{name}.jsonl"))
        manifest = {
            "spec": {
                "modalities": spec.modality_dims,
                "t_min": spec.t_min,
                "t_max": spec.t_max,
                "rules": [
                    {"response": r.response, "trigger": r.trigger, "lag": r.lag, "dim": r.dim}
                    for r in spec.rules
                ],
                "noise": spec.noise,
                "contradiction_rate": spec.contradiction_rate,
                "positive_fraction": spec.positive_fraction,
            },
            "seed": spec.seed,
            "n": n,
            "split_sizes": {
                "train": len(split.train),
                "val": len(split.val),
                "test": len(split.test),
            },
        }
        with open(os.path.join(out, "manifest.json"), "w", encoding="utf-8", newline="\n") as fh:
            json.dump(manifest, fh, indent=2)
            fh.write("\n")
    except OSError as e:
        return _fail(f"cannot write to {out}: {e}")
    print(
        f"wrote {len(split.train)}/{len(split.val)}/{len(split.test)} "
        f"sequences to {out}"
    )
    return EXIT_OK


def cmd_train(args):
    run = parse_run_config(args.config).with_seed(args.seed)
    splits = {name: _load_split_file(run, name) for name in ("train", "val", "test")}
    from .data import DatasetSplit

    dataset = DatasetSplit(train=splits["train"], val=splits["val"], test=splits["test"])
    out_dir = args.out if args.out is not None else run.out_dir
    os.makedirs(out_dir, exist_ok=True)
    store, history = train(run.model, dataset, run.train)
    save_checkpoint(store, os.path.join(out_dir, "checkpoint.json"))
    write_history_csv(history, os.path.join(out_dir, "history.csv"))
    report = evaluate(store, run.model, dataset.test)
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK


def cmd_eval(args):
    run = parse_run_config(args.config).with_seed(args.seed)
    seqs = _load_split_file(run, args.split)
    try:
        store = load_checkpoint(args.checkpoint, run.model)
    except (OSError, ValueError) as e:
        raise ConfigError(f"checkpoint {args.checkpoint}: {e}") from None
    report = evaluate(store, run.model, seqs)
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK


def cmd_gradcheck(args):
    run = parse_run_config(args.config).with_seed(args.seed)
    store = init_params(run.model)
    if store.n_scalars > GRADCHECK_PARAM_LIMIT:
        raise ConfigError(
            f"gradcheck requires a tiny model (<= {GRADCHECK_PARAM_LIMIT} "
            f"parameters), this one has {store.n_scalars}"
        )
    seqs = probe_sequences(run.model, n=2, t_len=5, seed=run.model.seed + 1)
    rows = model_gradient_rows(run.model, seqs, store=store)
    width = max(len(r.name) for r in rows)
    print(f"{'parameter':<{width}}  {'shape':>10}  {'max_rel_err':>12}  status")
    for r in rows:
        status = "ok" if r.ok else "FAIL"
        print(f"{r.name:<{width}}  {str(r.shape):>10}  {r.max_rel_err:12.3e}  {status}")
    failing = [r.name for r in rows if not r.ok]
    if failing:
        print(f"gradient check failed for: {', '.join(failing)}", file=sys.stderr)
        return EXIT_GRADCHECK
    print(f"all {len(rows)} parameter tensors pass (tolerance 1e-4)")
    return EXIT_OK


def cmd_attn(args):
    run = parse_run_config(args.config).with_seed(args.seed)
    if not run.model.uses_code:
        raise ConfigError(
            f"variant {run.model.variant!r} has no attention block to trace"
        )
    seqs = _load_split_file(run, args.split)
    matches = [s for s in seqs if s.id == args.id]
    if not matches:
        raise ConfigError(f"sequence id {args.id!r} not found in split {args.split!r}")
    try:
        store = load_checkpoint(args.checkpoint, run.model)
    except (OSError, ValueError) as e:
        raise ConfigError(f"checkpoint {args.checkpoint}: {e}") from None
    result = forward(matches[0], run.model, store, want_trace=True)
    rows = export_attention_trace(result.trace, args.out)
    print(f"wrote {rows} rows to {args.out}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="marn",
        description="Train and inspect multi-attention recurrent models on "
        "multimodal sequence data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a synthetic dataset")
    p_gen.add_argument("--config", required=True, help="generation config JSON")
    p_gen.add_argument("--out", required=True, help="output directory")
    p_gen.add_argument("--seed", type=int, default=None, help="override config seed")
    p_gen.set_defaults(fn=cmd_gen)

    p_train = sub.add_parser("train", help="train a model from a run config")
    p_train.add_argument("--config", required=True, help="run config JSON")
    p_train.add_argument("--out", default=None, help="override output directory")
    p_train.add_argument("--seed", type=int, default=None, help="override config seed")
    p_train.set_defaults(fn=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint")
    p_eval.add_argument("--config", required=True)
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--split", default="test", choices=("train", "val", "test"))
    p_eval.add_argument("--seed", type=int, default=None)
    p_eval.set_defaults(fn=cmd_eval)

    p_gc = sub.add_parser("gradcheck", help="finite-difference check the gradients")
    p_gc.add_argument("--config", required=True)
    p_gc.add_argument("--seed", type=int, default=None)
    p_gc.set_defaults(fn=cmd_gradcheck)

    p_attn = sub.add_parser("attn", help="export a sequence's attention trace CSV")
    p_attn.add_argument("--config", required=True)
    p_attn.add_argument("--checkpoint", required=True)
    p_attn.add_argument("--id", required=True, help="sequence id to trace")
    p_attn.add_argument("--split", default="test", choices=("train", "val", "test"))
    p_attn.add_argument("--out", required=True, help="output CSV path")
    p_attn.add_argument("--seed", type=int, default=None)
    p_attn.set_defaults(fn=cmd_attn)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, DataError) as e:
        return _fail(str(e))
    except DivergenceError as e:
        return _fail(str(e), EXIT_DIVERGED)


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
