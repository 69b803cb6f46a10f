"""Command-line interface.

Subcommands cover each pipeline stage (train, mine, filter, complete,
segment) plus the end-to-end recipes (ctt, selftrain, partialcrf) and the
reporting tools (eval, stats, disagree). Every command that writes a file
also writes ``<output>.manifest.json`` recording the exact invocation, so
runs can be reproduced.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import alignment, crf, evaluate, mining, pipeline
from .errors import PausesegError
from .segments import read_gold_corpus, write_gold_corpus

DEFAULTS = {
    "epochs": 10,
    "learning_rate": 0.1,
    "l2": 1e-5,
    "batch_chars": 1000,
    "seed": 0,
    "threshold": 0.5,
    "min_pause_ms": 10.0,
}

_CONFIG_KEYS = ("epochs", "learning_rate", "l2", "batch_chars", "seed", "threshold")


def _resolve_config(args, mode: str) -> tuple[crf.TrainConfig, float]:
    """Merge defaults, an optional JSON config file, and CLI flags (flags win)."""
    cfg = dict(DEFAULTS)
    path = getattr(args, "config", None)
    if path:
        with open(path, encoding="utf-8") as fh:
            loaded = json.load(fh)
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise PausesegError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key in _CONFIG_KEYS + ("min_pause_ms",):
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    train_config = crf.TrainConfig(
        epochs=int(cfg["epochs"]),
        learning_rate=float(cfg["learning_rate"]),
        l2=float(cfg["l2"]),
        batch_chars=int(cfg["batch_chars"]),
        seed=int(cfg["seed"]),
        threshold=float(cfg["threshold"]),
        mode=mode,
        deterministic=bool(getattr(args, "deterministic", False)),
    )
    return train_config, float(cfg["min_pause_ms"])


def _write_manifest(primary_output, command: str, args, config: dict, inputs, outputs):
    manifest = {
        "tool": "pauseseg",
        "format": 1,
        "command": command,
        "argv": [str(a) for a in args._argv],
        "config": config,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
    }
    path = str(primary_output) + ".manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def _load_gold(path, strip: bool):
    sentences = read_gold_corpus(path)
    return pipeline.strip_punctuation(sentences) if strip else sentences


def _load_partial(path, strip: bool):
    partials = mining.read_partial_corpus(path)
    return pipeline.strip_punctuation_partial(partials) if strip else partials


def _read_alignment_files(paths, tier_name: str, frame_offset_ms: float):
    out = []
    for p in paths:
        if str(p).lower().endswith(".textgrid"):
            out.append(alignment.read_textgrid(p, tier_name, frame_offset_ms))
        else:
            out.extend(alignment.read_alignments(p))
    return out


# ---------------------------------------------------------------------------
# Commands


def _cmd_train(args) -> int:
    config, _ = _resolve_config(args, mode="baseline")
    gold = _load_gold(args.gold, args.strip_punct)
    dev = _load_gold(args.dev, args.strip_punct) if args.dev else None
    model = pipeline.train_baseline(gold, config, dev=dev)
    model.save(args.model_out)
    _write_manifest(
        args.model_out, "train", args, dataclasses.asdict(config),
        inputs=[args.gold] + ([args.dev] if args.dev else []),
        outputs=[args.model_out],
    )
    print(f"wrote model to {args.model_out}")
    return 0


def _cmd_segment(args) -> int:
    model = crf.CrfModel.load(args.model)
    with open(args.input, encoding="utf-8") as fh:
        sentences = [line.rstrip("\n") for line in fh if line.strip()]
    segmented = pipeline.segment_corpus(model, sentences)
    write_gold_corpus(args.output, segmented)
    _write_manifest(
        args.output, "segment", args, {},
        inputs=[args.model, args.input], outputs=[args.output],
    )
    print(f"segmented {len(segmented)} sentences to {args.output}")
    return 0


def _cmd_mine(args) -> int:
    config, min_pause_ms = _resolve_config(args, mode="baseline")
    model = crf.CrfModel.load(args.model)
    alignments = _read_alignment_files(
        args.alignments, args.tier_name, args.frame_offset_ms
    )
    records = []
    for a in alignments:
        sentence = a.sentence
        if len(sentence) < 2:
            records.append((a.utterance_id, sentence, []))
            continue
        pauses = alignment.detect_pauses(a, min_pause_ms)
        records.append((a.utterance_id, sentence, mining.score_pauses(model, sentence, pauses)))
    mining.write_scored_pauses(args.output, records)
    _write_manifest(
        args.output, "mine", args,
        {"min_pause_ms": min_pause_ms, "seed": config.seed},
        inputs=[args.model] + list(args.alignments), outputs=[args.output],
    )
    n_pauses = sum(len(p) for _, _, p in records)
    print(f"scored {n_pauses} pauses in {len(records)} utterances to {args.output}")
    return 0


def _cmd_filter(args) -> int:
    config, _ = _resolve_config(args, mode="baseline")
    records = mining.read_scored_pauses(args.scored)
    partials = []
    kept = total = 0
    for _, sentence, pauses in records:
        surviving = mining.filter_pauses(pauses, config.threshold)
        kept += len(surviving)
        total += len(pauses)
        partials.append(mining.pauses_to_partial(sentence, surviving))
    mining.write_partial_corpus(args.output, partials)
    _write_manifest(
        args.output, "filter", args, {"threshold": config.threshold},
        inputs=[args.scored], outputs=[args.output],
    )
    print(f"kept {kept} of {total} pauses at threshold {config.threshold} -> {args.output}")
    return 0


def _cmd_complete(args) -> int:
    model = crf.CrfModel.load(args.model)
    partials = _load_partial(args.partial, args.strip_punct)
    completed = [pipeline.complete_annotation(model, p) for p in partials]
    write_gold_corpus(args.output, completed)
    _write_manifest(
        args.output, "complete", args, {},
        inputs=[args.model, args.partial], outputs=[args.output],
    )
    print(f"completed {len(completed)} sentences to {args.output}")
    return 0


def _run_recipe(args, mode: str) -> int:
    config, _ = _resolve_config(args, mode=mode)
    source = _load_gold(args.source, args.strip_punct)
    target = _load_partial(args.target, args.strip_punct)
    dev = _load_gold(args.dev, args.strip_punct) if args.dev else None
    outputs = [args.model_out]
    if mode == "partial_crf":
        model = pipeline.run_partial_crf(source, target, config, dev=dev)
    else:
        baseline = crf.CrfModel.load(args.baseline) if args.baseline else None
        result = pipeline.run_ctt(source, target, config, dev=dev, baseline=baseline)
        model = result.model
        if args.baseline_out:
            result.baseline.save(args.baseline_out)
            outputs.append(args.baseline_out)
        if args.completed_out:
            write_gold_corpus(args.completed_out, result.completed)
            outputs.append(args.completed_out)
        print(f"completed {result.used} target sentences, skipped {result.skipped}")
    model.save(args.model_out)
    _write_manifest(
        args.model_out, mode, args, dataclasses.asdict(config),
        inputs=[args.source, args.target] + ([args.dev] if args.dev else []),
        outputs=outputs,
    )
    print(f"wrote model to {args.model_out}")
    return 0


def _cmd_ctt(args) -> int:
    return _run_recipe(args, "ctt")


def _cmd_selftrain(args) -> int:
    return _run_recipe(args, "self_training")


def _cmd_partialcrf(args) -> int:
    return _run_recipe(args, "partial_crf")


def _cmd_eval(args) -> int:
    gold = read_gold_corpus(args.gold)
    pred = read_gold_corpus(args.pred)
    score = evaluate.prf(gold, pred)
    print(f"precision {score.precision:.4f}")
    print(f"recall    {score.recall:.4f}")
    print(f"f1        {score.f1:.4f}")
    print(
        f"words: gold {score.gold_words}, predicted {score.pred_words}, "
        f"correct {score.correct_words}"
    )
    print(f"single-char rate {evaluate.single_char_word_rate(pred):.4f}")
    return 0


def _cmd_stats(args) -> int:
    records = mining.read_scored_pauses(args.scored)
    pause_lists = [pauses for _, _, pauses in records]
    gold = read_gold_corpus(args.gold) if args.gold else None
    stats = mining.pause_statistics(pause_lists, gold)
    sys.stdout.write(mining.format_stats_report(stats))
    return 0


def _cmd_disagree(args) -> int:
    pred_a = read_gold_corpus(args.pred_a)
    pred_b = read_gold_corpus(args.pred_b)
    rows = evaluate.build_review_rows(pred_a, pred_b, seed=args.seed or 0)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(evaluate.format_review_tsv(rows))
    _write_manifest(
        args.output, "disagree", args, {"seed": args.seed or 0},
        inputs=[args.pred_a, args.pred_b], outputs=[args.output],
    )
    print(f"wrote {len(rows)} disagreement rows to {args.output}")
    return 0


# ---------------------------------------------------------------------------
# Parser


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with training settings")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", dest="learning_rate", type=float, default=None)
    p.add_argument("--l2", type=float, default=None)
    p.add_argument("--batch-chars", dest="batch_chars", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument(
        "--deterministic", action="store_true",
        help="insist on a reproducible run (fixed-seed training already is)",
    )
    p.add_argument("--strip-punct", dest="strip_punct", action="store_true")
    p.add_argument("--dev", help="gold corpus for best-epoch selection")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pauseseg",
        description="Mine word boundaries from speech pauses and train a segmenter",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a segmenter on a gold corpus")
    p.add_argument("gold")
    p.add_argument("-o", "--model-out", dest="model_out", required=True)
    _add_train_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("segment", help="segment raw sentences with a model")
    p.add_argument("model")
    p.add_argument("input", help="one sentence per line")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("mine", help="detect pauses and score them with a model")
    p.add_argument("model")
    p.add_argument("alignments", nargs="+", help="alignment JSON or .TextGrid files")
    p.add_argument("-o", "--output", required=True, help="scored-pause JSON lines")
    p.add_argument("--min-pause-ms", dest="min_pause_ms", type=float, default=None)
    p.add_argument("--tier-name", default="characters")
    p.add_argument("--frame-offset-ms", dest="frame_offset_ms", type=float, default=10.0)
    p.add_argument("--config")
    p.set_defaults(func=_cmd_mine)

    p = sub.add_parser("filter", help="keep pauses above a boundary probability")
    p.add_argument("scored", help="scored-pause JSON lines")
    p.add_argument("-o", "--output", required=True, help="partial corpus ('|' marks)")
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--config")
    p.set_defaults(func=_cmd_filter)

    p = sub.add_parser("complete", help="fill partial annotations by constrained decoding")
    p.add_argument("model")
    p.add_argument("partial")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--strip-punct", dest="strip_punct", action="store_true")
    p.set_defaults(func=_cmd_complete)

    for name, help_text in (
        ("ctt", "complete-then-train on source gold plus target constraints"),
        ("selftrain", "self-training: complete the target without constraints"),
        ("partialcrf", "single model on gold plus marginalized partial loss"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("source", help="source-domain gold corpus")
        p.add_argument("target", help="target-domain partial corpus")
        p.add_argument("-o", "--model-out", dest="model_out", required=True)
        _add_train_flags(p)
        p.add_argument("--threshold", type=float, default=None)
        if name != "partialcrf":
            p.add_argument("--baseline", help="reuse an already trained baseline model")
            p.add_argument("--baseline-out", dest="baseline_out")
            p.add_argument("--completed-out", dest="completed_out")
        p.set_defaults(
            func={"ctt": _cmd_ctt, "selftrain": _cmd_selftrain, "partialcrf": _cmd_partialcrf}[name]
        )

    p = sub.add_parser("eval", help="score predictions against gold")
    p.add_argument("gold")
    p.add_argument("pred")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("stats", help="tabulate scored pauses by duration and probability")
    p.add_argument("scored")
    p.add_argument("--gold", help="gold corpus to check pauses against")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("disagree", help="blind review sheet for two outputs")
    p.add_argument("pred_a")
    p.add_argument("pred_b")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_disagree)

    return parser


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    args = parser.parse_args(argv)
    args._argv = list(argv)
    try:
        return args.func(args)
    except (PausesegError, OSError) as exc:
        print(f"error[{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
