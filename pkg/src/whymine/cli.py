"""Command-line pipeline: extract, build, train, generate, evaluate, serve.

Exit codes are a stable contract: 0 success, 1 usage error, 2 data error,
3 numeric failure during training.
"""

from __future__ import annotations

import argparse
import json
import subprocess
import sys
from pathlib import Path

from . import conllu, dataset, extract, metrics, rewrite
from .config import PipelineConfig, load_config
from .nn import (CheckpointError, LanguageModel, NumericFailure, Seq2SeqModel,
                 TrainConfig, beam_decode, greedy_decode, load_checkpoint,
                 save_checkpoint, train)
from .server import ExplainService, create_server

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class DataError(RuntimeError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _read_corpus(paths):
    docs = []
    errors = 0
    for path in paths:
        p = Path(path)
        if not p.is_file():
            raise DataError(f"cannot read corpus file {path}")
        parsed = conllu.parse_conllu(p.read_text(encoding="utf-8"))
        docs.extend(parsed.documents)
        errors += len(parsed.errors)
    return docs, errors


def cmd_extract(args, cfg: PipelineConfig) -> int:
    paths = args.corpus or [cfg.corpus]
    docs, parse_errors = _read_corpus(paths)
    pairs, stats = extract.extract_corpus(docs, cfg.extraction)
    if not pairs:
        print(json.dumps({"error": "no_pairs",
                          "rejected_by_reason": dict(stats.rejected_by_reason)}),
              file=sys.stderr)
        return EXIT_DATA
    out = Path(args.out or cfg.pairs)
    extract.write_pairs(pairs, out)
    report = {"extraction": stats.as_dict(),
              "lengths": extract.corpus_stats(pairs),
              "parse_errors": parse_errors}
    stats_path = Path(args.stats) if args.stats else out.with_suffix(".stats.json")
    stats_path.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {len(pairs)} pairs to {out}")
    return EXIT_OK


def cmd_build(args, cfg: PipelineConfig) -> int:
    pairs_path = args.pairs or cfg.pairs
    if not Path(pairs_path).is_file():
        raise DataError(f"pairs file not found: {pairs_path}")
    pairs = extract.read_pairs(pairs_path)
    task = args.task or cfg.task
    vocab = dataset.build_vocab(pairs, min_freq=args.min_freq or cfg.min_freq,
                                max_size=args.max_vocab or cfg.max_vocab)
    examples, skipped = dataset.make_examples(pairs, vocab, task,
                                              max_src_len=args.max_src_len or cfg.max_src_len)
    seed = cfg.split_seed if args.seed is None else args.seed
    ds = dataset.split(examples, seed=seed)
    out_dir = args.out_dir or cfg.dataset_dir
    dataset.save_split(ds, vocab, out_dir, task, extra_meta={"skipped": skipped})
    print(f"built {task} dataset in {out_dir}: "
          f"train/valid/test = {ds.sizes()}, vocab = {len(vocab)}")
    return EXIT_OK


def _build_model(kind, vocab_size, cfg: PipelineConfig, args):
    common = dict(vocab_size=vocab_size,
                  d_w=args.d_w or cfg.model.d_w,
                  d_h=args.d_h or cfg.model.d_h,
                  layers=args.layers or cfg.model.layers,
                  dropout=cfg.train.dropout,
                  precision=args.precision or cfg.train.precision,
                  seed=cfg.train.seed if args.seed is None else args.seed)
    if kind == "lm":
        return LanguageModel(**common)
    return Seq2SeqModel(shared_embeddings=cfg.model.shared_embeddings, **common)


def _train_config(cfg: PipelineConfig, args) -> TrainConfig:
    base = cfg.train
    return TrainConfig(
        optimizer=args.optimizer or base.optimizer,
        lr=args.lr if args.lr is not None else base.lr,
        weight_decay=base.weight_decay,
        dropout=base.dropout if args.dropout is None else args.dropout,
        warmup_steps=base.warmup_steps,
        batch_size=args.batch_size or base.batch_size,
        epochs=args.epochs or base.epochs,
        seed=base.seed if args.seed is None else args.seed,
        precision=args.precision or base.precision,
        noam_factor=base.noam_factor,
        grad_clip=base.grad_clip,
    )


def cmd_train(args, cfg: PipelineConfig) -> int:
    data_dir = args.data or cfg.dataset_dir
    ds, vocab, meta = dataset.load_split(data_dir)
    tcfg = _train_config(cfg, args)
    kind = args.kind or cfg.model.kind
    start_epoch = 0
    if args.resume:
        model, header = load_checkpoint(args.resume, vocab.digest())
        if model.kind != kind:
            raise DataError(f"checkpoint is a {model.kind}, asked to train {kind}")
        start_epoch = header.get("extra", {}).get("epochs_done", 0)
        model.precision = tcfg.precision
    else:
        model = _build_model(kind, len(vocab), cfg, args)
    marker = vocab.token_to_id.get(dataset.MARKER) if kind == "lm" else None
    log_path = args.log or (Path(args.out or cfg.checkpoint).with_suffix(".log.jsonl"))
    rows = train(model, ds, tcfg, marker_id=marker, log_path=log_path,
                 start_epoch=start_epoch)
    out = args.out or cfg.checkpoint
    save_checkpoint(model, out, vocab.digest(),
                    extra={"task": meta["task"],
                           "epochs_done": rows[-1]["epoch"]})
    final = rows[-1]
    print(f"trained {kind} for {tcfg.epochs} epochs: "
          f"valid_ppl={final['valid_ppl']:.3f} valid_acc={final['valid_acc']:.3f} -> {out}")
    return EXIT_OK


def _load_model_and_vocab(args, cfg: PipelineConfig):
    data_dir = args.data or cfg.dataset_dir
    vocab = dataset.Vocabulary.load(Path(data_dir) / "vocab.json")
    meta_path = Path(data_dir) / "meta.json"
    meta = json.loads(meta_path.read_text(encoding="utf-8")) if meta_path.is_file() else {}
    model, header = load_checkpoint(args.checkpoint or cfg.checkpoint, vocab.digest())
    ckpt_task = header.get("extra", {}).get("task")
    if meta.get("task") and ckpt_task and meta["task"] != ckpt_task:
        raise DataError(f"dataset task {meta['task']} != checkpoint task {ckpt_task}")
    return model, vocab, ckpt_task or meta.get("task") or cfg.task


def _decode_one(model, source, mode, beam_size, max_len, length_norm):
    if mode == "greedy":
        return greedy_decode(model, source, max_len=max_len)
    return beam_decode(model, source, beam_size=beam_size, max_len=max_len,
                       length_norm=length_norm)


def cmd_generate(args, cfg: PipelineConfig) -> int:
    model, vocab, _ = _load_model_and_vocab(args, cfg)
    prompts_path = Path(args.prompts)
    if not prompts_path.is_file():
        raise DataError(f"prompts file not found: {args.prompts}")
    mode = args.mode or cfg.decode.mode
    beam_size = args.beam_size or cfg.decode.beam_size
    max_len = args.max_len or cfg.decode.max_len
    lines = prompts_path.read_text(encoding="utf-8").splitlines()
    out_lines = []
    for line in lines:
        tokens = [t.lower() for t in line.split()]
        if args.adapt != "none":
            tokens = list(dataset.adapt_prompt(args.adapt, tokens))
        if not tokens:
            raise DataError("empty prompt line")
        source = vocab.encode(tokens)
        result = _decode_one(model, source, mode, beam_size, max_len,
                             cfg.decode.length_norm)
        ids = result.candidates[0][0]
        out_lines.append(" ".join(vocab.id_to_token[i] for i in ids
                                  if i != dataset.EOS))
    Path(args.out).write_text("\n".join(out_lines) + "\n", encoding="utf-8")
    print(f"wrote {len(out_lines)} hypotheses to {args.out}")
    return EXIT_OK


def cmd_evaluate(args, cfg: PipelineConfig) -> int:
    hyp_lines = Path(args.hyp).read_text(encoding="utf-8").splitlines()
    ref_lines = Path(args.ref).read_text(encoding="utf-8").splitlines()
    if len(hyp_lines) != len(ref_lines):
        raise DataError(f"line count mismatch: {len(hyp_lines)} hypotheses "
                        f"vs {len(ref_lines)} references")
    report = metrics.evaluate_corpus(hyp_lines, ref_lines, smooth=args.smooth)
    text = json.dumps(report.as_dict(), indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def cmd_rewrite_question(args, cfg: PipelineConfig) -> int:
    if args.text is not None:
        if not cfg.parser_command:
            raise DataError("--text needs parser_command in the config "
                            "(no built-in parser)")
        proc = subprocess.run(cfg.parser_command, shell=True, input=args.text,
                              capture_output=True, text=True)
        if proc.returncode != 0:
            raise DataError(f"parser command failed: {proc.stderr.strip()}")
        block = proc.stdout
    elif args.parse:
        block = Path(args.parse).read_text(encoding="utf-8")
    else:
        block = sys.stdin.read()
    parsed = conllu.parse_conllu(block)
    sentences = [s for doc in parsed for s in doc.sentences]
    if not sentences:
        raise DataError("no parseable sentence in input")
    sent = conllu.normalize_labels(sentences[0], cfg.extraction.label_scheme)
    try:
        result = rewrite.rewrite(sent)
    except rewrite.RewriteError as exc:
        print(json.dumps({"error": exc.reason}))
        return EXIT_DATA
    print(json.dumps({"statement": result.text(),
                      "prompt": " ".join(rewrite.to_prompt(result)),
                      "rule": result.applied_rule}))
    return EXIT_OK


def cmd_serve(args, cfg: PipelineConfig) -> int:
    model, vocab, task = _load_model_and_vocab(args, cfg)
    service = ExplainService(model, vocab, task=task,
                             decode_defaults={"mode": cfg.decode.mode,
                                              "beam_size": cfg.decode.beam_size,
                                              "max_len": cfg.decode.max_len},
                             label_scheme=cfg.extraction.label_scheme)
    port = args.port or cfg.serve_port
    server = create_server(service, port=port, ui_dir=args.ui_dir or cfg.ui_dir)
    print(f"serving on http://127.0.0.1:{server.server_address[1]} "
          f"(model={model.kind}, task={task})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="whymine",
                     description="mine because-pairs and train explanation generators")
    parser.add_argument("--config", help="path to a pipeline config JSON")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="mine S1/S2 pairs from CoNLL-U")
    p.add_argument("--corpus", nargs="+", help="CoNLL-U input file(s)")
    p.add_argument("--out", help="pairs JSONL output path")
    p.add_argument("--stats", help="stats JSON output path")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("build", help="encode pairs into train/valid/test")
    p.add_argument("--pairs")
    p.add_argument("--out-dir")
    p.add_argument("--task", choices=list(dataset.TASKS))
    p.add_argument("--seed", type=int)
    p.add_argument("--min-freq", type=int, dest="min_freq")
    p.add_argument("--max-vocab", type=int, dest="max_vocab")
    p.add_argument("--max-src-len", type=int, dest="max_src_len")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("train", help="train a model on a built dataset")
    p.add_argument("--data", help="dataset directory")
    p.add_argument("--out", help="checkpoint path")
    p.add_argument("--kind", choices=["lm", "seq2seq"])
    p.add_argument("--resume", help="checkpoint to continue from")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--optimizer", choices=["adagrad", "noam_adam"])
    p.add_argument("--lr", type=float)
    p.add_argument("--dropout", type=float)
    p.add_argument("--d-w", type=int, dest="d_w")
    p.add_argument("--d-h", type=int, dest="d_h")
    p.add_argument("--layers", type=int)
    p.add_argument("--precision", choices=["high", "fast"])
    p.add_argument("--seed", type=int)
    p.add_argument("--log", help="training log path (JSONL)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="decode explanations for prompts")
    p.add_argument("--checkpoint")
    p.add_argument("--data", help="dataset directory holding vocab.json")
    p.add_argument("--prompts", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=["greedy", "beam"])
    p.add_argument("--beam-size", type=int, dest="beam_size")
    p.add_argument("--max-len", type=int, dest="max_len")
    p.add_argument("--adapt", choices=["none", "raw", "copa", "winograd"],
                   default="none", help="prompt normalization before encoding")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="score hypotheses against references")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--out")
    p.add_argument("--smooth", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("rewrite-question", help="turn a parsed why-question into a prompt")
    p.add_argument("--parse", help="CoNLL-U file (default: stdin)")
    p.add_argument("--text", help="raw question; needs parser_command configured")
    p.set_defaults(func=cmd_rewrite_question)

    p = sub.add_parser("serve", help="HTTP explanation service")
    p.add_argument("--checkpoint")
    p.add_argument("--data", help="dataset directory holding vocab.json")
    p.add_argument("--port", type=int)
    p.add_argument("--ui-dir", dest="ui_dir", help="static chat UI bundle")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except NumericFailure as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, CheckpointError, dataset.DatasetError,
            metrics.MetricError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
