"""Command-line interface.

Exit codes: 0 success, 2 configuration error (bad flags, bad spec file),
3 input error (missing or unreadable files), 4 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpusio, harness, models, stats, tokenizer, training
from .grammar import GenerationConfig, default_grammar, generate_corpus
from .transforms import TransformKind, transform_file

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_RUNTIME = 4


def _cmd_generate(args) -> int:
    grammar = default_grammar()
    config = GenerationConfig(count=args.count, seed=args.seed,
                              nouns=args.nouns, verbs=args.verbs,
                              modals=args.modals)
    sentences = generate_corpus(grammar, config)
    corpusio.write_corpus(args.out, sentences)
    print(f"wrote {len(sentences)} sentences to {args.out}")
    return EXIT_OK


def _cmd_transform(args) -> int:
    kind = TransformKind(args.kind)
    count = transform_file(kind, args.infile, args.out, chunk_size=args.chunk,
                           normalize=args.normalize)
    print(f"wrote {count} sentences to {args.out}")
    return EXIT_OK


def _train_setup(args):
    sentences = corpusio.read_corpus(args.corpus)
    if not sentences:
        raise harness.InputError(f"corpus is empty: {args.corpus}")
    vocab = tokenizer.build_vocabulary(sentences)
    encoded = [tokenizer.encode(vocab, s) for s in sentences]
    return sentences, vocab, encoded


def _cmd_train(args) -> int:
    _, vocab, encoded = _train_setup(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    longest = max(e.length for e in encoded)
    if args.arch == "transformer":
        config = models.TransformerConfig(vocab=len(vocab), seed=args.seed,
                                          max_seq=max(longest, 16))
    else:
        config = models.LstmConfig(vocab=len(vocab), seed=args.seed)
    params = models.init_model(config)
    train_cfg = training.TrainingConfig(
        total_steps=args.steps, peak_lr=args.peak_lr, batch_size=args.batch_size,
        warmup_fraction=args.warmup_fraction, eval_every=args.eval_every,
        seed=args.seed,
    )
    series, params = training.train(params, encoded, train_cfg)
    series.to_csv(out_dir / "metrics.csv")
    models.save_checkpoint(params, out_dir / "model.ckpt")
    tokenizer.save_vocabulary(vocab, out_dir / "vocab.txt")
    last = series.records[-1]
    print(f"final step {last.step}: loss={last.loss:.4f} "
          f"perplexity={last.perplexity:.4f}")
    print(f"artifacts in {out_dir}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    params = models.load_checkpoint(args.checkpoint)
    vocab = tokenizer.load_vocabulary(args.vocab)
    sentences = corpusio.read_corpus(args.corpus)
    if not sentences:
        raise harness.InputError(f"corpus is empty: {args.corpus}")
    encoded = [tokenizer.encode(vocab, s) for s in sentences]
    result = training.evaluate_perplexity(params, encoded)
    print(f"loss={result.loss:.17g}")
    print(f"perplexity={result.perplexity:.17g}")
    print(f"tokens={result.tokens}")
    return EXIT_OK


def _read_series(path: str) -> training.MetricSeries:
    if not Path(path).is_file():
        raise harness.InputError(f"metrics CSV not found: {path}")
    return training.MetricSeries.from_csv(path)


def _cmd_stats(args) -> int:
    a = stats.stabilized_window(_read_series(args.a), args.start_fraction,
                                args.metric)
    b = stats.stabilized_window(_read_series(args.b), args.start_fraction,
                                args.metric)
    result = stats.welch_t_test(a, b)
    record = result.to_record(f"{args.a} vs {args.b} [{args.metric}]")
    print(json.dumps(record, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_experiment(args) -> int:
    overrides = {
        "out_dir": args.out_dir,
        "arch": args.arch,
        "groups": args.groups,
        "seeds": args.seeds,
        "total_steps": args.steps,
        "corpus_count": args.corpus_count,
        "corpus_file": args.corpus_file,
        "corpus_seed": args.seed,
    }
    if args.spec:
        spec = harness.parse_spec_file(args.spec, overrides)
    else:
        pairs = {k: str(v) for k, v in overrides.items() if v is not None}
        if args.experiment:
            pairs["experiment"] = args.experiment
        spec = harness.build_spec(pairs)
    report = harness.run_experiment(spec)
    print(harness.render_text_report(report))
    print(f"full report in {spec.out_dir}/report.json")
    return EXIT_OK


def _cmd_report(args) -> int:
    report = harness.load_report(args.run_dir)
    if args.format == "json":
        print(json.dumps(report.to_json_dict(), indent=2, sort_keys=True))
    else:
        print(harness.render_text_report(report))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="langlab",
        description="Desk-scale possible vs. impossible language learning lab",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a seeded SVO corpus")
    p.add_argument("--count", type=int, default=10000)
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--nouns", type=int, default=None,
                   help="use only the first N nouns")
    p.add_argument("--verbs", type=int, default=None)
    p.add_argument("--modals", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser(
        "transform",
        help="apply a group transform to a corpus file",
        description="Applies the transform line by line. With --normalize, "
        "raw external text is lowercased and terminal punctuation is "
        "stripped before transforming; generated corpora need no "
        "normalization.",
    )
    p.add_argument("--kind", required=True,
                   choices=[k.value for k in TransformKind])
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--chunk", type=int, default=4096)
    p.add_argument("--normalize", action="store_true")
    p.set_defaults(func=_cmd_transform)

    p = sub.add_parser("train", help="train one model on a corpus file")
    p.add_argument("--corpus", required=True)
    p.add_argument("--arch", choices=("transformer", "lstm"),
                   default="transformer")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--steps", type=int, default=120)
    p.add_argument("--peak-lr", type=float, default=3e-3)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--warmup-fraction", type=float, default=0.14)
    p.add_argument("--eval-every", type=int, default=1)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="held-out perplexity of a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("stats", help="Welch test between two metrics CSVs")
    p.add_argument("--a", required=True, help="metrics CSV, first group")
    p.add_argument("--b", required=True, help="metrics CSV, second group")
    p.add_argument("--metric", choices=("loss", "perplexity"), default="loss")
    p.add_argument("--start-fraction", type=float, default=0.5)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser(
        "experiment",
        help="run a full experiment (generate, transform, train, test, report)",
        description="Configuration comes from a key = value spec file "
        "(see README for the schema); flags override file values.",
    )
    p.add_argument("--spec", help="path to spec file")
    p.add_argument("--experiment", choices=("1", "2", "3", "4", "custom"),
                   help="experiment preset: 1/2 transformer, 3/4 lstm; "
                   "2/4 take an external corpus")
    p.add_argument("--out-dir")
    p.add_argument("--arch", choices=("transformer", "lstm"))
    p.add_argument("--groups", help="comma-separated group list")
    p.add_argument("--seeds", help="comma-separated training seeds")
    p.add_argument("--steps", type=int, help="training steps per run")
    p.add_argument("--corpus-count", type=int)
    p.add_argument("--corpus-file")
    p.add_argument("--seed", type=int, help="corpus generation seed")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("report", help="render a stored experiment report")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except harness.ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except harness.InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FileNotFoundError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
