"""Command-line interface.

Subcommands: ingest, split, topics fit|select, tasks build, index build,
retrieve, augment, eval understanding|generation, report, synth. Global
flags --seed, --config (flat key = value file), and --resources are
accepted by every subcommand. Exit codes: 0 success, 1 validation error,
2 resource error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import harness, retrieval, synth, taskgen, topics
from .errors import ResourceError, ValidationError
from .resources import load_resources


class _Parser(argparse.ArgumentParser):
    # Usage errors are validation errors (exit code 1, not argparse's 2).
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit_(1, f"{self.prog}: error: {message}")


class SystemExit_(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code
        self.message = message


def _load_config(path: str) -> dict:
    config_path = Path(path)
    if not config_path.exists():
        raise ResourceError(f"config file not found: {config_path}")
    config: dict = {}
    for lineno, raw in enumerate(config_path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(f"{config_path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        config[key.strip().replace("-", "_")] = _coerce(value.strip())
    return config


def _coerce(value: str):
    lowered = value.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            continue
    return value


def _opt(args, config: dict, name: str, default=None):
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in config:
        return config[name]
    return default


def _write_json(payload, out: str | None):
    text = json.dumps(payload, indent=2, ensure_ascii=False)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    print(text)


def _split_pairs(corpus, splits_path, split_name):
    if splits_path:
        corpus = corpus_mod.Corpus(
            pairs=corpus.pairs, split_of=corpus_mod.load_splits(splits_path)
        )
    if split_name:
        pairs = corpus.subset(split_name)
        if not pairs:
            raise ValidationError(f'split "{split_name}" is empty')
        return corpus, pairs
    return corpus, list(corpus.pairs)


# --- handlers -------------------------------------------------------------

def _cmd_ingest(args, config):
    corpus = corpus_mod.load_corpus(args.input, default_lang=_opt(args, config, "lang", "en"))
    corpus_mod.save_corpus(corpus, args.out)
    stats = corpus_mod.corpus_stats(corpus)
    _write_json(
        {
            "n_examples": stats.n_examples,
            "avg_story_words": stats.avg_story_words,
            "avg_moral_words": stats.avg_moral_words,
            "avg_story_sents": stats.avg_story_sents,
            "avg_moral_sents": stats.avg_moral_sents,
            "story_vocab": stats.story_vocab,
            "moral_vocab": stats.moral_vocab,
        },
        None,
    )
    return 0


def _parse_ratios(text: str) -> tuple[int, int, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValidationError(f'ratios must look like "8:1:1", got "{text}"')
    try:
        return tuple(int(p) for p in parts)  # type: ignore[return-value]
    except ValueError:
        raise ValidationError(f'ratios must be integers, got "{text}"') from None


def _cmd_split(args, config):
    corpus = corpus_mod.load_corpus(args.input)
    seed = int(_opt(args, config, "seed", 0))
    corpus = corpus_mod.split_corpus(corpus, _parse_ratios(args.ratios), seed)
    corpus_mod.save_splits(corpus, args.out)
    sizes = {name: len(corpus.subset(name)) for name in corpus_mod.SPLIT_NAMES}
    _write_json({"sizes": sizes, "seed": seed}, None)
    return 0


def _docs_for_topics(args, config):
    corpus = corpus_mod.load_corpus(args.input)
    _, pairs = _split_pairs(corpus, args.splits, args.split)
    field = args.field
    return [
        pair.moral_tokens if field == "moral" else pair.story_tokens for pair in pairs
    ]


def _cmd_topics_fit(args, config):
    docs = _docs_for_topics(args, config)
    model = topics.fit_lda(
        docs,
        B=args.num_topics,
        alpha=_opt(args, config, "alpha"),
        eta=float(_opt(args, config, "eta", topics.DEFAULT_ETA)),
        iters=int(_opt(args, config, "iters", topics.DEFAULT_ITERS)),
        seed=int(_opt(args, config, "seed", 0)),
    )
    topics.save_topic_model(model, args.out)
    _write_json({"B": model.B, "vocab_size": model.V, "n_docs": len(docs)}, None)
    return 0


def _cmd_topics_select(args, config):
    docs = _docs_for_topics(args, config)
    params = topics.LdaParams(
        alpha=_opt(args, config, "alpha"),
        eta=float(_opt(args, config, "eta", topics.DEFAULT_ETA)),
        iters=int(_opt(args, config, "iters", topics.DEFAULT_ITERS)),
    )
    selection = topics.select_topic_count(
        docs,
        B_min=int(_opt(args, config, "bmin", 2)),
        B_max=int(_opt(args, config, "bmax", 10)),
        k=int(_opt(args, config, "topk", topics.DEFAULT_TOP_K)),
        h=float(_opt(args, config, "threshold", topics.DEFAULT_THRESHOLD)),
        lda_params=params,
        seed=int(_opt(args, config, "seed", 0)),
    )
    topics.save_topic_model(selection.model, args.out)
    report = topics.specificity_report(
        selection.model,
        int(_opt(args, config, "topk", topics.DEFAULT_TOP_K)),
        float(_opt(args, config, "threshold", topics.DEFAULT_THRESHOLD)),
    )
    _write_json(
        {
            "B": selection.B,
            "converged": selection.converged,
            "min_scores": {str(b): s for b, s in selection.min_scores.items()},
            "specificity": list(report.scores),
            "k": report.k,
            "h": report.h,
            "top_words": {
                str(b): topics.top_words(selection.model, b, min(10, selection.model.V))
                for b in range(1, selection.B + 1)
            },
        },
        args.report,
    )
    return 0


def _cmd_tasks_build(args, config):
    corpus = corpus_mod.load_corpus(args.input)
    _, pairs = _split_pairs(corpus, args.splits, args.split)
    seed = int(_opt(args, config, "seed", 0))
    resources_dir = _opt(args, config, "resources")
    lang = _opt(args, config, "lang", "en")
    task = args.task
    if task == "mocpt":
        if not args.model:
            raise ValidationError("tasks build --task mocpt requires --model")
        model = topics.load_topic_model(args.model)
        records = taskgen.build_mocpt(
            pairs, pairs, model, n_neg=int(_opt(args, config, "nneg", 4)), seed=seed
        )
    elif task == "mopref":
        res = load_resources(resources_dir, lang)
        records = taskgen.build_mopref(pairs, res.antonyms, seed=seed)
    elif task == "st2mo":
        records = taskgen.build_st2mo(pairs)
    elif task == "mo2st":
        res = load_resources(resources_dir, lang)
        records = taskgen.build_mo2st(
            pairs,
            res.stopwords,
            max_phrases=int(_opt(args, config, "max_phrases", 8)),
            max_words=int(_opt(args, config, "max_words", 8)),
        )
        n_phrases = [len(r.outline) for r in records]
        print(
            f"avg phrases per outline: {sum(n_phrases) / len(n_phrases):.2f}",
            file=sys.stderr,
        )
    elif task == "faith":
        records = taskgen.build_faithfulness_data(
            pairs, neg_ratio=float(_opt(args, config, "neg_ratio", 1.0)), seed=seed
        )
    else:
        raise ValidationError(f'unknown task "{task}"')
    taskgen.save_records(records, args.out)
    _write_json({"task": task, "records": len(records), "out": str(args.out)}, None)
    return 0


def _build_provider(args, config, fit_pairs):
    if getattr(args, "vectors", None):
        return retrieval.ExternalVectorStore(args.vectors)
    dim = int(_opt(args, config, "dim", retrieval.DEFAULT_DIM))
    return retrieval.HashedBowEmbedding.fit_on_pairs(fit_pairs, dim=dim)


def _cmd_index_build(args, config):
    corpus = corpus_mod.load_corpus(args.input)
    _, pairs = _split_pairs(corpus, args.splits, args.split)
    provider = _build_provider(args, config, pairs)
    index = retrieval.build_index(pairs, provider, args.field)
    retrieval.save_index(index, args.out)
    _write_json({"items": len(index), "dim": index.dim, "provider": index.provider_name}, None)
    return 0


def _cmd_retrieve(args, config):
    index = retrieval.load_index(args.index)
    corpus = corpus_mod.load_corpus(args.input)
    _, fit_pairs = _split_pairs(corpus, args.splits, args.split)
    provider = _build_provider(args, config, fit_pairs)
    pair = corpus.by_id(args.id)
    if provider.mode == "external-file":
        query = provider.embed_id(pair.id)
    else:
        tokens = pair.story_tokens if args.field == "story" else pair.moral_tokens
        query = provider.embed(tokens)
    hits = retrieval.retrieve(
        index,
        query,
        m=int(_opt(args, config, "m", retrieval.DEFAULT_TOP_M)),
        exclude_id=pair.id if args.exclude_self else None,
    )
    _write_json({"query_id": pair.id, "hits": [{"id": i, "score": s} for i, s in hits]}, args.out)
    return 0


def _cmd_augment(args, config):
    corpus = corpus_mod.load_corpus(args.input)
    corpus, index_pairs = _split_pairs(corpus, args.splits, args.index_split)
    target_pairs = corpus.subset(args.split) if args.split else list(corpus.pairs)
    if not target_pairs:
        raise ValidationError(f'split "{args.split}" is empty')
    provider = _build_provider(args, config, index_pairs)
    index = retrieval.build_index(index_pairs, provider, "story")
    res = load_resources(_opt(args, config, "resources"), _opt(args, config, "lang", "en"))
    rresources = retrieval.RetrievalResources.from_pairs(
        index_pairs, res.pos_lexicon, res.lemmatizer, res.stopwords
    )
    m = int(_opt(args, config, "m", retrieval.DEFAULT_TOP_M))
    with Path(args.out).open("w", encoding="utf-8") as fh:
        for pair in target_pairs:
            _, concepts = retrieval.augment_story(pair, index, provider, m, rresources)
            fh.write(
                json.dumps(
                    {
                        "id": pair.id,
                        "concepts": list(concepts.concepts),
                        "sources": {c: list(ids) for c, ids in concepts.sources.items()},
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    print(f"augmented {len(target_pairs)} examples -> {args.out}")
    return 0


def _cmd_eval_understanding(args, config):
    dataset = taskgen.load_choice_records(args.dataset, args.task)
    seed = int(_opt(args, config, "seed", 0))
    if args.predictions:
        rows = taskgen._load_jsonl(args.predictions)
        predictions = {}
        for i, row in enumerate(rows, 1):
            if "id" not in row or "prediction" not in row:
                raise ValidationError(f'prediction {i}: missing "id" or "prediction"')
            predictions[row["id"]] = int(row["prediction"])
        from .metrics import MetricReport, accuracy

        report = MetricReport(
            values={"accuracy": accuracy(predictions, {r.id: r.label for r in dataset})},
            settings={"scorer": "predictions-file"},
            n_items=len(dataset),
        )
    elif args.scorer == "random":
        report = harness.evaluate_understanding(dataset, harness.RandomBaseline(seed))
        report.settings["scorer"] = "random"
    else:
        if not args.input or not args.splits:
            raise ValidationError("embedding scorers need --input and --splits")
        corpus = corpus_mod.load_corpus(args.input)
        corpus, index_pairs = _split_pairs(corpus, args.splits, args.index_split)
        provider = _build_provider(args, config, index_pairs)
        index = retrieval.build_index(index_pairs, provider, "story")
        res = load_resources(_opt(args, config, "resources"), _opt(args, config, "lang", "en"))
        rresources = retrieval.RetrievalResources.from_pairs(
            index_pairs, res.pos_lexicon, res.lemmatizer, res.stopwords
        )
        scorer = harness.CandidateScorer(
            provider=provider,
            use_retrieval=args.scorer == "embed-ra",
            m=int(_opt(args, config, "m", retrieval.DEFAULT_TOP_M)),
            temperature=float(_opt(args, config, "temperature", 1.0)),
        )
        report = harness.evaluate_understanding(dataset, scorer, index=index, resources=rresources)
        report.settings["scorer"] = args.scorer
    payload = report.to_dict()
    if not args.decisions:
        payload["settings"].pop("decisions", None)
    _write_json(payload, args.out)
    return 0


def _cmd_eval_generation(args, config):
    if args.task == "st2mo":
        dataset = taskgen.load_st2mo_records(args.dataset)
    else:
        dataset = taskgen.load_mo2st_records(args.dataset)
    hypotheses = taskgen._load_jsonl(args.hypotheses)
    report = harness.evaluate_generation(args.task, hypotheses, dataset)
    _write_json(report.to_dict(), args.out)
    return 0


def _cmd_report(args, config):
    merged = {}
    for path in args.inputs:
        report_path = Path(path)
        if not report_path.exists():
            raise ValidationError(f"report file not found: {report_path}")
        merged[report_path.name] = json.loads(report_path.read_text(encoding="utf-8"))
    _write_json(merged, args.out)
    return 0


def _cmd_synth(args, config):
    corpus = synth.generate_corpus(
        n_pairs=args.pairs,
        n_groups=int(_opt(args, config, "groups", 4)),
        seed=int(_opt(args, config, "seed", 0)),
        content_morals=args.content_morals,
    )
    corpus_mod.save_corpus(corpus, args.out)
    print(f"wrote {len(corpus)} synthetic pairs -> {args.out}")
    return 0


# --- parser ---------------------------------------------------------------

def build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="global random seed")
    common.add_argument("--config", default=None, help="flat 'key = value' config file")
    common.add_argument("--resources", default=None, help="directory of resource files")
    common.add_argument("--lang", default=None, help="language tag (default en)")

    parser = _Parser(prog="moralbench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="validate and tokenize a corpus")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("split", parents=[common], help="deterministic train/val/test split")
    p.add_argument("--input", required=True)
    p.add_argument("--ratios", default="8:1:1")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("topics", parents=[common], help="topic modeling of morals")
    topics_sub = p.add_subparsers(dest="topics_command", required=True)
    for name in ("fit", "select"):
        tp = topics_sub.add_parser(name, parents=[common])
        tp.add_argument("--input", required=True)
        tp.add_argument("--splits", default=None)
        tp.add_argument("--split", default=None)
        tp.add_argument("--field", choices=("moral", "story"), default="moral")
        tp.add_argument("--alpha", type=float, default=None)
        tp.add_argument("--eta", type=float, default=None)
        tp.add_argument("--iters", type=int, default=None)
        tp.add_argument("--out", required=True)
        if name == "fit":
            tp.add_argument("-B", "--num-topics", type=int, required=True)
            tp.set_defaults(func=_cmd_topics_fit)
        else:
            tp.add_argument("--bmin", type=int, default=None)
            tp.add_argument("--bmax", type=int, default=None)
            tp.add_argument("--topk", type=int, default=None)
            tp.add_argument("--threshold", type=float, default=None)
            tp.add_argument("--report", default=None)
            tp.set_defaults(func=_cmd_topics_select)

    p = sub.add_parser("tasks", parents=[common], help="build task datasets")
    tasks_sub = p.add_subparsers(dest="tasks_command", required=True)
    tp = tasks_sub.add_parser("build", parents=[common])
    tp.add_argument("--task", choices=taskgen.TASK_NAMES, required=True)
    tp.add_argument("--input", required=True)
    tp.add_argument("--splits", default=None)
    tp.add_argument("--split", default=None)
    tp.add_argument("--model", default=None, help="topic model file (mocpt)")
    tp.add_argument("--nneg", type=int, default=None)
    tp.add_argument("--max-phrases", dest="max_phrases", type=int, default=None)
    tp.add_argument("--max-words", dest="max_words", type=int, default=None)
    tp.add_argument("--neg-ratio", dest="neg_ratio", type=float, default=None)
    tp.add_argument("--out", required=True)
    tp.set_defaults(func=_cmd_tasks_build)

    p = sub.add_parser("index", parents=[common], help="dense story index")
    index_sub = p.add_subparsers(dest="index_command", required=True)
    ip = index_sub.add_parser("build", parents=[common])
    ip.add_argument("--input", required=True)
    ip.add_argument("--splits", default=None)
    ip.add_argument("--split", default=None)
    ip.add_argument("--field", choices=retrieval.FIELDS, default="story")
    ip.add_argument("--dim", type=int, default=None)
    ip.add_argument("--vectors", default=None, help="external vector JSONL file")
    ip.add_argument("--out", required=True)
    ip.set_defaults(func=_cmd_index_build)

    p = sub.add_parser("retrieve", parents=[common], help="query the index")
    p.add_argument("--index", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--splits", default=None)
    p.add_argument("--split", default=None, help="split the provider idf is fitted on")
    p.add_argument("--field", choices=retrieval.FIELDS, default="story")
    p.add_argument("--id", required=True)
    p.add_argument("-m", type=int, default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--vectors", default=None)
    p.add_argument("--exclude-self", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_retrieve)

    p = sub.add_parser("augment", parents=[common], help="retrieved concepts per example")
    p.add_argument("--input", required=True)
    p.add_argument("--splits", default=None)
    p.add_argument("--index-split", dest="index_split", default="train")
    p.add_argument("--split", default=None, help="examples to augment (default: all)")
    p.add_argument("-m", type=int, default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--vectors", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("eval", parents=[common], help="evaluate predictions or hypotheses")
    eval_sub = p.add_subparsers(dest="eval_command", required=True)
    ep = eval_sub.add_parser("understanding", parents=[common])
    ep.add_argument("--task", choices=("mocpt", "mopref"), required=True)
    ep.add_argument("--dataset", required=True)
    ep.add_argument("--scorer", choices=("random", "embed", "embed-ra"), default="random")
    ep.add_argument("--predictions", default=None, help="JSONL of {'id','prediction'}")
    ep.add_argument("--input", default=None)
    ep.add_argument("--splits", default=None)
    ep.add_argument("--index-split", dest="index_split", default="train")
    ep.add_argument("--dim", type=int, default=None)
    ep.add_argument("--vectors", default=None)
    ep.add_argument("-m", type=int, default=None)
    ep.add_argument("--temperature", type=float, default=None)
    ep.add_argument("--decisions", action="store_true", help="keep per-record decisions")
    ep.add_argument("--out", default=None)
    ep.set_defaults(func=_cmd_eval_understanding)
    gp = eval_sub.add_parser("generation", parents=[common])
    gp.add_argument("--task", choices=("st2mo", "mo2st"), required=True)
    gp.add_argument("--dataset", required=True)
    gp.add_argument("--hypotheses", required=True)
    gp.add_argument("--out", default=None)
    gp.set_defaults(func=_cmd_eval_generation)

    p = sub.add_parser("report", parents=[common], help="merge metric reports")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic corpus")
    p.add_argument("--pairs", type=int, required=True)
    p.add_argument("--groups", type=int, default=None)
    p.add_argument("--content-morals", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = _load_config(args.config) if args.config else {}
        return args.func(args, config)
    except SystemExit_ as err:
        print(err.message, file=sys.stderr)
        return err.code
    except ValidationError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except ResourceError as err:
        print(f"resource error: {err}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
