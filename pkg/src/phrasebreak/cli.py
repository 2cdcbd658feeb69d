"""Command-line entry point.

Subcommands mirror the experimental workflows: generate / validate / stats /
compare / sweep for annotation work, split / train / eval for the downstream
predictor, serve-review for human evaluation. Every run writes a manifest
(resolved config, input digests, output paths) next to its outputs.

Exit codes: 0 success, 2 usage, 3 validation failure, 4 backend failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

from . import __version__
from .annotation import (
    load_annotation_set,
    load_annotations,
    pass_rate,
    phrasing_stats,
    save_annotations,
)
from .corpus import DatasetSplit, load_corpus, split_dataset
from .errors import BackendError, PhraseBreakError, ValidationError
from .llm_client import BackendConfig, CompletionClient, make_backend
from .metrics import compare as compare_sets
from .metrics import generate_annotations, run_sweep
from .prompting import PromptConfig, load_example_pool, preset_mixes

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_BACKEND = 4


def read_config_file(path) -> dict:
    """Plain key = value lines; '#' starts a comment; values parsed as JSON
    scalars when possible, otherwise kept as strings."""
    config = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        value = value.strip()
        try:
            config[key.strip()] = json.loads(value)
        except json.JSONDecodeError:
            config[key.strip()] = value
    return config


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, command, config, inputs, outputs):
    manifest = {
        "command": command,
        "tool_version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "config": config,
        "input_digests": {str(p): file_digest(p) for p in inputs if Path(p).exists()},
        "outputs": [str(p) for p in outputs],
    }
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, ensure_ascii=False) + "\n")
    return path


def _prompt_config(args, file_config):
    merged = dict(file_config)
    if getattr(args, "model", None):
        merged["model_id"] = args.model
    mix = ()
    if getattr(args, "mix", None):
        mix = tuple(
            (part.split(":")[0], int(part.split(":")[1]))
            for part in args.mix.split(",")
        )
    elif getattr(args, "k", None):
        mix = ((getattr(args, "language", None) or merged.get("language", "en"),
                int(args.k)),)
    persona = merged.get("persona", "multilingual" if len(mix) > 1 else "monolingual")
    return PromptConfig(
        persona=persona,
        language=getattr(args, "language", None) or merged.get("language", "en"),
        model_id=merged.get("model_id", PromptConfig.model_id),
        temperature=float(merged.get("temperature", 0.0)),
        top_p=float(merged.get("top_p", 1.0)),
        mix=mix,
        seed=args.seed,
    )


def _client(args, file_config):
    backend_config = BackendConfig(
        base_url=file_config.get("base_url", BackendConfig.base_url),
        api_key_env_name=file_config.get("api_key_env_name", BackendConfig.api_key_env_name),
        max_retries=int(file_config.get("max_retries", BackendConfig.max_retries)),
        max_concurrent_requests=int(
            file_config.get("max_concurrent_requests", args.parallelism)
        ),
        cache_dir=getattr(args, "cache_dir", None) or file_config.get("cache_dir"),
    )
    backend = make_backend(args.backend, replay_path=getattr(args, "replay", None))
    return CompletionClient(backend, backend_config)


def _pool(args, corpus):
    if not getattr(args, "pool", None):
        return []
    pool_set = load_annotation_set(args.pool, corpus=corpus)
    return load_example_pool(corpus, pool_set)


def cmd_generate(args, file_config):
    corpus = load_corpus(args.corpus)
    config = _prompt_config(args, file_config)
    client = _client(args, file_config)
    pool = _pool(args, corpus)

    generated, report = generate_annotations(
        corpus, config, client, pool=pool, parallelism=args.parallelism
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ann_path = out / "annotations.jsonl"
    report_path = out / "validation_report.json"
    save_annotations(generated, ann_path, corpus=corpus)
    report_path.write_text(
        json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n"
    )
    inputs = [args.corpus] + ([args.pool] if args.pool else [])
    write_manifest(out, "generate", _config_dict(config, args), inputs,
                   [ann_path, report_path])
    _emit(args, report.to_dict(), report.table())
    return EXIT_OK


def _config_dict(config, args):
    return {
        "persona": config.persona,
        "language": config.language,
        "model_id": config.model_id,
        "temperature": config.temperature,
        "top_p": config.top_p,
        "mix": list(config.mix),
        "seed": config.seed,
        "backend": getattr(args, "backend", None),
        "config_digest": config.digest(),
    }


def cmd_validate(args, file_config):
    corpus = load_corpus(args.corpus)
    index = {u.id: u for u in corpus}
    utts, outputs = [], []
    with open(args.outputs, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            utts.append(index[record["utterance_id"]])
            outputs.append(record.get("annotated") or record.get("text", ""))
    report = pass_rate(utts, outputs)
    _emit(args, report.to_dict(), report.table())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "validation_report.json"
        path.write_text(json.dumps(report.to_dict(), indent=2) + "\n")
        write_manifest(out, "validate", {"seed": args.seed},
                       [args.corpus, args.outputs], [path])
    return EXIT_OK


def cmd_stats(args, file_config):
    corpus = load_corpus(args.corpus) if args.corpus else None
    sets = load_annotations(args.annotations, corpus=corpus)
    payload = {}
    lines = []
    for aset in sets:
        stats = phrasing_stats(aset)
        payload[str(aset.annotator)] = stats.to_dict()
        lines.append(f"{aset.annotator}  ({stats.utterance_count} utterances)")
        for label in ("AP", "IP", "SB"):
            m = stats.to_dict()["mean"][label]
            s = stats.to_dict()["std"][label]
            lines.append(f"  {label}  {m:6.2f}% (sd {s:.2f})")
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK


def cmd_compare(args, file_config):
    corpus = load_corpus(args.corpus) if args.corpus else None
    a = load_annotation_set(args.a, corpus=corpus)
    b = load_annotation_set(args.b, corpus=corpus)
    result = compare_sets(a, b)
    table = (
        f"agreement   {result.agreement:.2f}%\n"
        f"alpha       {result.alpha:.4f}\n"
        f"macro F1    {result.macro_f1:.4f}\n"
        f"utterances  {result.compared_utterances}\n"
        f"junctions   {result.compared_junctions}"
    )
    _emit(args, result.to_dict(), table)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "comparison.json"
        path.write_text(json.dumps(result.to_dict(), indent=2) + "\n")
        write_manifest(out, "compare", {"seed": args.seed},
                       [args.a, args.b], [path])
    return EXIT_OK


def cmd_sweep(args, file_config):
    corpus = load_corpus(args.corpus)
    client = _client(args, file_config)
    pool = _pool(args, corpus)
    references = []
    for path in args.ref:
        references.append(load_annotation_set(path, corpus=corpus))

    settings = []
    labels = []
    language = args.language or "en"
    if args.mix_presets:
        source, target = args.mix_presets.split(":")
        for mix in preset_mixes(source, target):
            mix_t = tuple(sorted(mix.items(), key=lambda kv: kv[0] != source))
            settings.append(
                PromptConfig(persona="multilingual", language=target,
                             mix=mix_t, seed=args.seed)
            )
            labels.append(" + ".join(f"{l.capitalize()} {c}" for l, c in mix_t))
    else:
        for k in (int(x) for x in args.k.split(",")):
            settings.append(PromptConfig.monolingual(language, k=k, seed=args.seed))
            labels.append("ZS" if k == 0 else f"FS,k={k}")

    report = run_sweep(corpus, pool, settings, client, references,
                       parallelism=args.parallelism, setting_labels=labels)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    jsonl_path = out / "sweep.jsonl"
    table_path = out / "sweep.tsv"
    report.write_jsonl(jsonl_path)
    table_path.write_text(report.table() + "\n")
    inputs = [args.corpus] + list(args.ref) + ([args.pool] if args.pool else [])
    write_manifest(out, "sweep", {"seed": args.seed}, inputs,
                   [jsonl_path, table_path])
    print(report.table())
    return EXIT_OK


def cmd_split(args, file_config):
    corpus = load_corpus(args.corpus)
    ratios = tuple(float(x) for x in args.ratios.split(":"))
    total = sum(ratios)
    if total > 1.5:  # given as e.g. 85:7.5:7.5 rather than fractions
        ratios = tuple(r / total for r in ratios)
    split = split_dataset(corpus, ratios, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "split.json"
    split.save(path)
    write_manifest(out, "split", {"ratios": list(ratios), "seed": args.seed},
                   [args.corpus], [path])
    print(f"train {len(split.train_ids)}  valid {len(split.valid_ids)}  "
          f"test {len(split.test_ids)}")
    return EXIT_OK


def _subset(annotation_set, ids):
    from .annotation import AnnotationSet

    subset = AnnotationSet(annotation_set.annotator)
    for uid in ids:
        if uid in annotation_set.entries:
            subset.add(uid, annotation_set.entries[uid])
    return subset


def cmd_train(args, file_config):
    from .predictor import Hyperparams, train, evaluate

    corpus = load_corpus(args.corpus)
    annotations = load_annotation_set(args.annotations, corpus=corpus)
    split = DatasetSplit.load(args.split)
    hyper = Hyperparams(
        learning_rate=float(file_config.get("learning_rate", 0.1)),
        epochs=int(file_config.get("epochs", 30)),
        l2=float(file_config.get("l2", 1e-4)),
        seed=args.seed,
    )
    model, report = train(
        _subset(annotations, split.train_ids),
        _subset(annotations, split.valid_ids),
        corpus,
        hyper,
    )
    model.annotation_source = str(annotations.annotator)
    model.split_digest = file_digest(args.split)

    if split.test_ids:
        per_label, macro = evaluate(model, _subset(annotations, split.test_ids), corpus)
        report.test_macro_f1 = macro
        report.test_per_label_f1 = per_label

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model_path = out / "model.npz"
    report_path = out / "train_report.json"
    model.save(model_path)
    report_path.write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    write_manifest(out, "train", {**hyper.to_dict(), "seed": args.seed},
                   [args.corpus, args.annotations, args.split],
                   [model_path, report_path])
    print(f"selected epoch {report.selected_epoch}  "
          f"valid F1 {max(report.epoch_valid_macro_f1):.4f}"
          + (f"  test F1 {report.test_macro_f1:.4f}"
             if report.test_macro_f1 is not None else ""))
    return EXIT_OK


def cmd_eval(args, file_config):
    from .predictor import Model, evaluate

    corpus = load_corpus(args.corpus)
    annotations = load_annotation_set(args.annotations, corpus=corpus)
    model = Model.load(args.model)
    if args.split:
        split = DatasetSplit.load(args.split)
        annotations = _subset(annotations, split.test_ids)
    per_label, macro = evaluate(model, annotations, corpus)
    payload = {
        "macro_f1": macro,
        "per_label_f1": {str(k): v for k, v in per_label.items()},
    }
    table = "\n".join(
        [f"macro F1  {macro:.4f}"]
        + [f"  {label}  {score:.4f}" for label, score in payload["per_label_f1"].items()]
    )
    _emit(args, payload, table)
    return EXIT_OK


def cmd_serve_review(args, file_config):
    import uvicorn

    from .review_service import ReviewStore, create_app, make_pairs

    corpus = load_corpus(args.corpus)
    sets = []
    for path in args.annotations:
        sets.extend(load_annotations(path, corpus=corpus))
    store = ReviewStore(args.state_dir, pair_source=make_pairs(corpus, sets))
    app = create_app(store, ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def _emit(args, payload, table):
    if args.json:
        print(json.dumps(payload, ensure_ascii=False, indent=2))
    else:
        print(table)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="phrasebreak",
        description="Phrase-break annotation toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=False):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config", default=None, help="key = value config file")
        p.add_argument("--out", required=out_required, default=None,
                       help="output directory")
        p.add_argument("--json", action="store_true",
                       help="machine-readable output")

    def backendish(p):
        p.add_argument("--backend", default="mock",
                       choices=["mock", "http", "replay"])
        p.add_argument("--replay", default=None, help="replay file for --backend replay")
        p.add_argument("--cache-dir", default=None)
        p.add_argument("--parallelism", type=int, default=1)
        p.add_argument("--pool", default=None,
                       help="annotation file supplying few-shot examples")
        p.add_argument("--language", default=None)

    p = sub.add_parser("generate", help="generate annotations via a backend")
    p.add_argument("--corpus", required=True)
    backendish(p)
    p.add_argument("--k", default=None, help="few-shot example count")
    p.add_argument("--mix", default=None, help="lang:count,... example mix")
    p.add_argument("--model", default=None)
    common(p, out_required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("validate", help="validate raw outputs against a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--outputs", required=True,
                   help="JSONL of utterance_id + annotated records")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stats", help="phrasing distribution statistics")
    p.add_argument("--annotations", required=True)
    p.add_argument("--corpus", default=None)
    common(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("compare", help="agreement / alpha / macro-F1 of two sets")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--corpus", default=None)
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="run a k or mix sweep and score it")
    p.add_argument("--corpus", required=True)
    backendish(p)
    p.add_argument("--k", default="0,2,4", help="comma-separated k values")
    p.add_argument("--mix-presets", default=None,
                   help="source:target, runs the five cross-lingual presets")
    p.add_argument("--ref", action="append", default=[], required=True,
                   help="reference annotation file (repeatable)")
    common(p, out_required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("split", help="deterministic train/valid/test split")
    p.add_argument("--corpus", required=True)
    p.add_argument("--ratios", default="0.85:0.075:0.075")
    common(p, out_required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train the phrase-break predictor")
    p.add_argument("--corpus", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--split", required=True)
    common(p, out_required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a trained predictor")
    p.add_argument("--corpus", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--split", default=None, help="restrict to the split's test ids")
    common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve-review", help="run the human-review service")
    p.add_argument("--corpus", required=True)
    p.add_argument("--annotations", action="append", required=True)
    p.add_argument("--state-dir", required=True)
    p.add_argument("--ui-dir", default=None, help="built review UI bundle")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8321)
    common(p)
    p.set_defaults(func=cmd_serve_review)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    file_config = read_config_file(args.config) if args.config else {}
    try:
        return args.func(args, file_config)
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except PhraseBreakError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
