"""Unified command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence

from . import corpus as C
from . import metrics as ME
from . import subword as S
from .textnorm import detokenize, tokenize_geez, tokenize_latin


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems; the CLI contract reserves 2
    # for data errors.
    def error(self, message):
        raise UsageError(message)


def _open_in(path: Optional[str]):
    return open(path, "r", encoding="utf-8") if path else sys.stdin


def _open_out(path: Optional[str]):
    return open(path, "w", encoding="utf-8") if path else sys.stdout


def _close(handle, path: Optional[str]):
    if path:
        handle.close()


def cmd_tokenize(args) -> int:
    tokenize = tokenize_latin if args.script == "latin" else tokenize_geez
    fin, fout = _open_in(args.infile), _open_out(args.outfile)
    try:
        for line in fin:
            fout.write(" ".join(tokenize(line.rstrip("\n"))) + "\n")
    finally:
        _close(fin, args.infile)
        _close(fout, args.outfile)
    return 0


def cmd_train_bpe(args) -> int:
    with open(args.infile, "r", encoding="utf-8") as fh:
        counts = S.count_words(line.split() for line in fh)
    model = S.train_bpe(counts, args.merges)
    S.save_model(model, args.out)
    return 0


def cmd_apply_bpe(args) -> int:
    model = S.load_model(args.model)
    fin, fout = _open_in(args.infile), _open_out(args.outfile)
    try:
        for line in fin:
            fout.write(" ".join(S.apply_bpe(line.split(), model)) + "\n")
    finally:
        _close(fin, args.infile)
        _close(fout, args.outfile)
    return 0


def cmd_mix(args) -> int:
    specs = C.load_manifest(args.manifest)
    corpora = [C.load_parallel(spec) for spec in specs]
    mixed = C.mix_and_shuffle(corpora, args.seed)
    C.write_corpus(mixed, args.out_src, args.out_tgt)
    print(f"mixed {len(mixed)} pairs from {len(corpora)} datasets")
    return 0


def _load_aligned(src_path: str, tgt_path: str) -> C.ParallelCorpus:
    spec = C.DatasetSpec(
        name=os.path.basename(src_path), language=C.Language.TIGRINYA,
        source_path=src_path, target_path=tgt_path,
    )
    return C.load_parallel(spec)


def cmd_split(args) -> int:
    pool = _load_aligned(args.src, args.tgt)
    train, dev, test = C.split(pool, args.test, args.dev, args.seed)
    for part, name in ((train, "train"), (dev, "dev"), (test, "test")):
        if len(part) or name == "train":
            C.write_corpus(
                part, f"{args.out_prefix}.{name}.src", f"{args.out_prefix}.{name}.tgt"
            )
    print(f"train={len(train)} dev={len(dev)} test={len(test)}")
    return 0


def cmd_filter(args) -> int:
    pool = _load_aligned(args.src, args.tgt)
    if args.language:
        pool = C.filter_by_language(pool, C.Language(args.language))
    kept = C.length_ratio_filter(pool, args.max_len, args.max_ratio)
    C.write_corpus(kept, args.out_src, args.out_tgt)
    print(f"kept {len(kept)} of {len(pool)} pairs")
    return 0


def cmd_train(args) -> int:
    from .pipeline import load_pipeline_config, run_pipeline
    from dataclasses import replace

    config = load_pipeline_config(args.config)
    if args.baseline:
        config = replace(config, baseline_mode=True)
    results = run_pipeline(config)
    _print_report_table([r.report for r in results])
    return 0


def _parse_metric_list(spec: str) -> list[str]:
    names = [m.strip() for m in spec.split(",") if m.strip()]
    valid = {"bleu", "chrf", "meteor"}
    for name in names:
        if name not in valid:
            raise UsageError(f"unknown metric {name!r} (choose from {sorted(valid)})")
    return names


def _print_report_table(reports: Sequence[ME.MetricReport]) -> None:
    width = max([len(r.system_name) for r in reports] + [6])
    print(f"{'system':<{width}}  {'BLEU':>7}  {'ChrF':>7}  {'Meteor':>7}")
    for r in reports:
        print(
            f"{r.system_name:<{width}}  {r.bleu:>7.2f}  {r.chrf:>7.2f}  "
            f"{r.meteor:>7.2f}"
        )


def cmd_evaluate(args) -> int:
    with open(args.hyp, "r", encoding="utf-8") as fh:
        hyps = [line.rstrip("\n").split() for line in fh]
    with open(args.ref, "r", encoding="utf-8") as fh:
        refs = [line.rstrip("\n").split() for line in fh]
    if len(hyps) != len(refs):
        raise C.LineCountMismatch(len(hyps), len(refs))
    pairs = [ME.EvalPair(h, r) for h, r in zip(hyps, refs)]
    wanted = _parse_metric_list(args.metrics)
    scores = {}
    if "bleu" in wanted:
        scores["bleu"] = ME.bleu(pairs)
    if "chrf" in wanted:
        scores["chrf"] = ME.chrf(pairs)
    if "meteor" in wanted:
        scores["meteor_lite"] = ME.meteor_lite(pairs)
    width = max(len(k) for k in scores)
    for name, value in scores.items():
        print(f"{name:<{width}}  {value:8.4f}")
    print()
    for name, value in scores.items():
        print(f"{name}={value:.4f}")
    return 0


def cmd_translate(args) -> int:
    from .serve import TranslationEngine

    engine = TranslationEngine.load(args.model, args.src_bpe, args.tgt_bpe)
    texts = [args.text] if args.text is not None else None
    if texts is None:
        fin = _open_in(args.infile)
        texts = [line.rstrip("\n") for line in fin]
        _close(fin, args.infile)
    for text in texts:
        translation, _ = engine.translate(text, args.max_len)
        print(translation)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .serve import TranslationEngine, build_app, default_static_dir

    model_path = args.model or os.environ.get("TIGMT_MODEL")
    if not model_path:
        raise UsageError("serve needs --model or TIGMT_MODEL")
    port = args.port or int(os.environ.get("TIGMT_PORT", 0)) or 8090
    engine = TranslationEngine.load(
        model_path, args.src_bpe, args.tgt_bpe, args.workers
    )
    app = build_app(engine, args.static_dir or default_static_dir())
    uvicorn.run(app, host=args.host, port=port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tigmt", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("tokenize", help="script-aware sentence tokenization")
    p.add_argument("--script", choices=["latin", "geez"], required=True)
    p.add_argument("--in", dest="infile")
    p.add_argument("--out", dest="outfile")
    p.set_defaults(func=cmd_tokenize)

    p = sub.add_parser("train-bpe", help="learn a BPE merge list")
    p.add_argument("--merges", type=int, required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_bpe)

    p = sub.add_parser("apply-bpe", help="segment tokenized text into subwords")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile")
    p.add_argument("--out", dest="outfile")
    p.set_defaults(func=cmd_apply_bpe)

    p = sub.add_parser("mix", help="mix and shuffle manifest datasets")
    p.add_argument("--manifest", required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out-src", required=True)
    p.add_argument("--out-tgt", required=True)
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("split", help="hold out test/dev sets")
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--test", type=int, default=200)
    p.add_argument("--dev", type=int, default=0)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("filter", help="length/ratio hygiene filter")
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--language", choices=[l.value for l in C.Language])
    p.add_argument("--max-len", type=int, default=200)
    p.add_argument("--max-ratio", type=float, default=9.0)
    p.add_argument("--out-src", required=True)
    p.add_argument("--out-tgt", required=True)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("train", help="run the staged training pipeline")
    p.add_argument("--config", required=True)
    p.add_argument("--baseline", action="store_true",
                   help="skip the first (multilingual) stage")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score hypotheses against references")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--metrics", default="bleu,chrf,meteor")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("translate", help="translate text with a checkpoint")
    p.add_argument("--model", required=True)
    p.add_argument("--src-bpe", required=True)
    p.add_argument("--tgt-bpe", required=True)
    p.add_argument("--text")
    p.add_argument("--in", dest="infile")
    p.add_argument("--max-len", type=int, default=128)
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("serve", help="run the translation demo service")
    p.add_argument("--model")
    p.add_argument("--src-bpe", required=True)
    p.add_argument("--tgt-bpe", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int)
    p.add_argument("--workers", type=int, default=0,
                   help="max concurrent decodes (0 = CPU count)")
    p.add_argument("--static-dir")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            parser.print_help(sys.stderr)
            return 1
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (OSError, C.CorpusError, ME.EmptyCorpus, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pipeline/model errors are data errors here
        if type(exc).__module__.startswith("tigmt."):
            print(f"error: {exc}", file=sys.stderr)
            return 2
        raise


if __name__ == "__main__":
    sys.exit(main())
