"""Command-line entry point: ``semctrl {gen-corpus,train,eval,grad-check,sweep}``.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

import argparse
import json
import sys
import time
from dataclasses import fields, replace

from .corpus import build_corpus, generate_corpus, generate_texts, load_multiwoz_json, save_jsonl, split
from .experiments import AXES, SweepSpec, UsageError, full_model_grad_check, run_sweep, sweep_base_config
from .objective import LossWeights
from .trainer import TrainConfig, evaluate, load_checkpoint, save_checkpoint, train

GRAD_CHECK_TOLERANCE = 1e-4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def load_config(path):
    """Flat JSON object of TrainConfig fields; loss weights may sit at top level."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise UsageError(f"{path}: config must be a JSON object")
    weight_names = {f.name for f in fields(LossWeights)}
    weights = dict(doc.pop("weights", {}) or {})
    for k in list(doc):
        if k in weight_names:
            weights[k] = doc.pop(k)
    try:
        return TrainConfig.from_dict({**doc, "weights": LossWeights(**weights)})
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _config(args, base=None):
    cfg = load_config(args.config) if args.config else (base or TrainConfig())
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "epochs", None) is not None:
        overrides["epochs"] = args.epochs
    if getattr(args, "d_z", None) is not None:
        overrides["d_z"] = args.d_z
    if getattr(args, "d_s", None) is not None:
        overrides["d_s"] = args.d_s
    if getattr(args, "noise", None) is not None:
        overrides["noise_sigma_eval"] = args.noise
    return replace(cfg, **overrides)


def _corpus(args, seed, vocab=None):
    if args.corpus:
        return load_multiwoz_json(args.corpus, vocab=vocab)
    texts = generate_texts(args.episodes, seed)
    return build_corpus(texts, vocab=vocab)


def cmd_gen_corpus(args):
    corpus = generate_corpus(args.episodes, args.seed)
    save_jsonl(corpus, args.out)
    if args.vocab_out:
        corpus.vocab.save(args.vocab_out)
    print(f"wrote {len(corpus)} episodes ({len(corpus.vocab)} types) to {args.out}")
    return 0


def cmd_train(args):
    cfg = _config(args)
    corpus = _corpus(args, cfg.seed)
    t0 = time.perf_counter()

    def report(rec):
        dev = rec["dev"].total if rec["dev"] is not None else float("nan")
        print(f"epoch {rec['epoch']:3d}  train {rec['train'].total:10.4f}  dev {dev:10.4f}", flush=True)

    params, _ = train(corpus, cfg, callback=report)
    save_checkpoint(params, cfg, args.out, corpus.vocab)
    print(f"saved {args.out} after {time.perf_counter() - t0:.1f}s")
    return 0


def cmd_eval(args):
    params, cfg, vocab = load_checkpoint(args.checkpoint)
    cfg = _config(args, base=cfg)
    corpus = _corpus(args, cfg.seed, vocab=vocab)
    parts = dict(zip(("train", "dev", "test"), split(corpus, seed=cfg.seed)))
    report = evaluate(params, parts[args.split], cfg, corpus.vocab)
    doc = report.as_dict()
    text = json.dumps(doc, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def cmd_grad_check(args):
    err = full_model_grad_check(seed=args.seed if args.seed is not None else 1,
                                d_s=args.d_s, d_p=args.d_p, d_z=args.d_z, d_h=args.d_h,
                                vocab_size=args.vocab)
    ok = err < GRAD_CHECK_TOLERANCE
    print(f"max relative error: {err:.3e} ({'ok' if ok else 'FAIL'}, tolerance {GRAD_CHECK_TOLERANCE:g})")
    return 0 if ok else 2


def cmd_sweep(args):
    base = _config(args, base=sweep_base_config())
    values = None
    if args.values:
        try:
            values = tuple(float(v) for v in args.values.split(","))
        except ValueError as exc:
            raise UsageError(f"--values: {exc}") from exc
    seeds = tuple(int(s) for s in args.seeds.split(",")) if args.seeds else None
    spec = SweepSpec(axis=args.axis, values=values, base=base,
                     n_episodes=args.episodes, workers=args.workers,
                     **({"seeds": seeds} if seeds else {}))
    data, agg = run_sweep(spec, args.out)
    for row in agg:
        print(f"{spec.axis}={row['value']}: bleu {row['bleu']:.4f}  rouge_l {row['rouge_l']:.4f}")
    print(f"wrote {len(data)} runs + {len(agg)} aggregate rows to {args.out}")
    return 0


def build_parser():
    p = _Parser(prog="semctrl", description="Semantic-state controlled dialogue generation.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, episodes=1000):
        sp.add_argument("--config", help="JSON file of TrainConfig fields")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--episodes", type=int, default=episodes)

    sp = sub.add_parser("gen-corpus", help="write a synthetic corpus as JSON lines")
    sp.add_argument("--episodes", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--out", default="corpus.jsonl")
    sp.add_argument("--vocab-out")
    sp.set_defaults(func=cmd_gen_corpus)

    sp = sub.add_parser("train", help="train a model and save a checkpoint")
    common(sp)
    sp.add_argument("--corpus", help="JSON-lines corpus (default: generate one)")
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--d-z", type=int)
    sp.add_argument("--d-s", type=int)
    sp.add_argument("--noise", type=float)
    sp.add_argument("--out", default="model.json")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="score a checkpoint on a corpus split")
    common(sp)
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--corpus")
    sp.add_argument("--split", choices=("train", "dev", "test"), default="test")
    sp.add_argument("--noise", type=float)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("grad-check", help="finite-difference check of the full objective")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--d-s", type=int, default=8)
    sp.add_argument("--d-p", type=int, default=4)
    sp.add_argument("--d-z", type=int, default=4)
    sp.add_argument("--d-h", type=int, default=8)
    sp.add_argument("--vocab", type=int, default=50)
    sp.set_defaults(func=cmd_grad_check)

    sp = sub.add_parser("sweep", help="run a sensitivity sweep and write CSV")
    common(sp, episodes=500)
    sp.add_argument("--axis", required=True, choices=AXES)
    sp.add_argument("--values", help="comma-separated, strictly increasing")
    sp.add_argument("--seeds", help="comma-separated seeds (default 1,2,3,4,5)")
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--d-z", type=int)
    sp.add_argument("--d-s", type=int)
    sp.add_argument("--noise", type=float)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out", default="sweep.csv")
    sp.set_defaults(func=cmd_sweep)
    return p


def cli_main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            print("semctrl: a subcommand is required", file=sys.stderr)
            return 1
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(exc, file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"semctrl: error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(cli_main())
