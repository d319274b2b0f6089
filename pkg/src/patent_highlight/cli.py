"""Command-line entry point: ``patent-highlight <subcommand>``.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import corpus as corpus_mod
from .config import AppConfig, load_config
from .errors import EmptyInput, PatentHighlightError
from .evaluation import cross_validate, evaluate, train_test_split
from .explain import explanation_html, linear_attribution, model_predictor, surrogate_explain
from .features import Vectorizer
from .highlight import highlight_text, render_html, render_json
from .ingest import bulk_files, dump_segments, iter_bulk_grants
from .models import FEATURE_MODE, MODEL_KINDS, LinearModel, fit_text_model, load_model, predict_texts, save_model
from .text import load_stopwords

log = logging.getLogger("patent_highlight")


def _settings(args) -> AppConfig:
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _emit(text: str, output: str | None):
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_build_corpus(args) -> int:
    cfg = _settings(args)
    files = bulk_files(args.input_dir) if Path(args.input_dir).is_dir() else []
    if not files:
        raise PatentHighlightError(f"no bulk files found in {args.input_dir} (expected ipg*.xml or ipg*.zip)")
    errors: list = []
    dump = open(args.segments, "w", encoding="utf-8") if args.segments else None

    def grants():
        for path in files:
            log.info("parsing %s", path.name)
            for g in iter_bulk_grants(path, errors=errors):
                if dump is not None:
                    dump_segments([g], dump)
                yield g

    try:
        built, report = corpus_mod.build_corpus(grants(), cfg.corpus, parse_errors=0)
    finally:
        if dump is not None:
            dump.close()
    report.parse_errors = len(errors)
    for exc in errors:
        print(f"warning: skipped chunk: {exc}", file=sys.stderr)
    corpus_mod.write_corpus(built, args.output)
    stats = corpus_mod.compute_stats(built, load_stopwords(cfg.stopwords))
    if args.stats:
        payload = {"cleaning": report.to_json(), "stats": stats.to_json()}
        Path(args.stats).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(report.render(cfg.corpus))
    return 0


def cmd_stats(args) -> int:
    cfg = _settings(args)
    data = corpus_mod.read_corpus(args.corpus)
    stats = corpus_mod.compute_stats(data, load_stopwords(cfg.stopwords), args.top_k)
    if args.format == "json":
        print(corpus_mod.stats_json(stats))
    else:
        print(stats.render(cfg.corpus))
    return 0


def cmd_train(args) -> int:
    cfg = _settings(args)
    data = corpus_mod.read_corpus(args.corpus)
    split = cfg.split
    if args.stratified:
        split = type(split)(split.test_fraction, split.seed, True)
    train_idx, test_idx = train_test_split(len(data), split, data.labels)
    texts, labels = data.texts, data.labels
    model = fit_text_model(args.kind, [texts[i] for i in train_idx], labels[train_idx], cfg.train, cfg.ngram,
                           load_stopwords(cfg.stopwords), classes=corpus_mod.LABELS)
    save_model(model, args.model)
    pred = predict_texts(model, [texts[i] for i in test_idx])
    report = evaluate(labels[test_idx], pred)
    if args.format == "json":
        print(json.dumps({"kind": args.kind, "train_size": len(train_idx), "test_size": len(test_idx),
                          "vocabulary_size": len(model.vectorizer.vocabulary), "report": report.to_json()},
                         indent=2, sort_keys=True))
    else:
        print(f"kind={args.kind} train={len(train_idx)} test={len(test_idx)} "
              f"vocabulary={len(model.vectorizer.vocabulary)} model={args.model}")
        print(report.render("held-out scores"))
    return 0


def make_trainer(kind: str, cfg: AppConfig, stopwords, shared: Vectorizer | None = None):
    def trainer(texts, labels):
        model = fit_text_model(kind, texts, labels, cfg.train, cfg.ngram, stopwords,
                               classes=corpus_mod.LABELS, vectorizer=shared)
        return lambda test_texts: predict_texts(model, test_texts)

    return trainer


def cmd_eval(args) -> int:
    cfg = _settings(args)
    data = corpus_mod.read_corpus(args.corpus)
    stop = load_stopwords(cfg.stopwords)
    shared = None
    if args.global_features:
        # reproduces the single up-front feature matrix; idf sees held-out folds
        shared = Vectorizer.fit(data.texts, cfg.ngram, stop, FEATURE_MODE[args.kind])
    report = cross_validate(make_trainer(args.kind, cfg, stop, shared), data.texts, data.labels,
                            args.folds, cfg.split.seed)
    if args.format == "json":
        print(json.dumps({"kind": args.kind, "folds": args.folds, "report": report.to_json()}, indent=2, sort_keys=True))
    else:
        print(report.render(f"{args.kind}: average {args.folds}-fold scores"))
    return 0


def _read_input(arg: str) -> str:
    if arg == "-":
        return sys.stdin.read()
    try:
        is_file = Path(arg).is_file()
    except (OSError, ValueError):
        # long literal text or embedded NUL is never a path
        is_file = False
    return Path(arg).read_text(encoding="utf-8") if is_file else arg


def cmd_highlight(args) -> int:
    cfg = _settings(args)
    model = load_model(args.model)
    content = _read_input(args.input)
    if not content.strip():
        raise EmptyInput("highlight input is empty")
    records = highlight_text(model, content, args.sentences)
    out = render_html(records, cfg.corpus, cfg.highlight) if args.format == "html" else render_json(records, model.kind)
    _emit(out, args.output)
    return 0


def cmd_explain(args) -> int:
    cfg = _settings(args)
    model = load_model(args.model)
    text = _read_input(args.text)
    if not text.strip():
        raise EmptyInput("explain input is empty")
    k = cfg.explain.k if args.k is None else args.k
    if args.surrogate or not isinstance(model, LinearModel):
        label = args.label if args.label is not None else int(predict_texts(model, [text])[0])
        exp = surrogate_explain(model_predictor(model), text, label, cfg.explain.n_samples, cfg.explain.kernel_width,
                                k, cfg.explain.seed, cfg.explain.ridge_alpha, model.classes)
    else:
        exp = linear_attribution(model, text, k, args.label)
    out = explanation_html(text, exp) if args.format == "html" else exp.dumps() + "\n"
    _emit(out, args.output)
    return 0


def _positive_k(value: str) -> int:
    k = int(value)
    if k < 2:
        raise argparse.ArgumentTypeError("--folds must be >= 2")
    return k


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI config file; flags override it")
    common.add_argument("--seed", type=int, help="seed for every random step")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="patent-highlight",
                                description="Classify and highlight advantage / problem / solution paragraphs in patents.")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build-corpus", parents=[common], help="USPTO bulk files -> labeled corpus CSV")
    b.add_argument("input_dir")
    b.add_argument("-o", "--output", required=True, help="corpus CSV path")
    b.add_argument("--stats", metavar="PATH", help="write cleaning counts and corpus statistics as JSON")
    b.add_argument("--segments", metavar="PATH", help="dump extracted segments as newline-delimited JSON")
    b.set_defaults(func=cmd_build_corpus)

    s = sub.add_parser("stats", parents=[common], help="descriptive statistics of a corpus CSV")
    s.add_argument("corpus")
    s.add_argument("--top-k", type=int, default=10)
    s.add_argument("--format", choices=("text", "json"), default="text")
    s.set_defaults(func=cmd_stats)

    t = sub.add_parser("train", parents=[common], help="80/20 split, train, save model, report held-out scores")
    t.add_argument("corpus")
    t.add_argument("--kind", choices=MODEL_KINDS, required=True)
    t.add_argument("--model", required=True, metavar="PATH", help="output model file")
    t.add_argument("--stratified", action="store_true")
    t.add_argument("--format", choices=("text", "json"), default="text")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", parents=[common], help="k-fold cross-validation")
    e.add_argument("corpus")
    e.add_argument("--kind", choices=MODEL_KINDS, required=True)
    e.add_argument("--folds", type=_positive_k, default=5)
    e.add_argument("--global-features", action="store_true",
                   help="fit vocabulary and idf once on the whole corpus (leaks held-out folds)")
    e.add_argument("--format", choices=("text", "json"), default="text")
    e.set_defaults(func=cmd_eval)

    h = sub.add_parser("highlight", parents=[common], help="classify each paragraph of a grant XML or text file")
    h.add_argument("input", help="file path, '-' for stdin, or literal text")
    h.add_argument("--model", required=True, metavar="PATH")
    h.add_argument("--format", choices=("json", "html"), default="json")
    h.add_argument("--sentences", action="store_true", help="classify sentences instead of paragraphs")
    h.add_argument("-o", "--output", metavar="PATH")
    h.set_defaults(func=cmd_highlight)

    x = sub.add_parser("explain", parents=[common], help="top-k token contributions for one text")
    x.add_argument("text", help="file path, '-' for stdin, or literal text")
    x.add_argument("--model", required=True, metavar="PATH")
    x.add_argument("--k", type=int)
    x.add_argument("--label", type=int, help="class to explain (default: predicted)")
    x.add_argument("--surrogate", action="store_true", help="perturbation surrogate instead of exact attribution")
    x.add_argument("--format", choices=("json", "html"), default="json")
    x.add_argument("-o", "--output", metavar="PATH")
    x.set_defaults(func=cmd_explain)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if getattr(args, "k", None) is not None and args.k < 0:
        parser.error("--k must be >= 0")
    try:
        return args.func(args)
    except (PatentHighlightError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
