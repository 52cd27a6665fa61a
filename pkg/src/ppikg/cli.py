"""Command-line entry point wiring every pipeline stage into subcommands.

Each run resolves its settings (flags > config file > defaults), executes one
stage, and writes a ``<subcommand>.manifest.json`` with input digests, the
resolved config, and timing, so any output can be traced back to exactly what
produced it. Environment variables are never consulted.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__, config as config_mod, corpus, embed, figures, kg, lpeval, ner, relex
from .ioutils import ParseReport, load_tsv_map, sha256_file
from .manifest import RunManifest
from .vectors import WordVectors

log = logging.getLogger(__name__)


def _load_vectors(path: str | None) -> WordVectors | None:
    return WordVectors.load(path) if path else None


def _load_alias(path: str | None) -> dict[str, str] | None:
    return load_tsv_map(path) if path else None


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _resolved(args, defaults: dict) -> dict:
    file_values = config_mod.load_config(args.config) if getattr(args, "config", None) else None
    flags = {key: getattr(args, key.replace("-", "_"), None) for key in defaults}
    return config_mod.resolve(defaults, file_values, flags)


def _report_errors(report: ParseReport) -> None:
    if not report.ok:
        print(report.summary(), file=sys.stderr)
        for err in report.errors:
            print(f"  {err}", file=sys.stderr)


def _parse_ratios(raw: str) -> kg.SplitSpec:
    parts = [float(x) for x in raw.split(",")]
    if len(parts) != 3:
        raise ValueError(f"--ratios expects three comma-separated floats, got {raw!r}")
    return kg.SplitSpec(train=parts[0], valid=parts[1], test=parts[2])


# ---------------------------------------------------------------------------
# tagging
# ---------------------------------------------------------------------------


def cmd_ner_train(args) -> int:
    out = _out_dir(args)
    cfg = _resolved(args, {"epochs": 5, "seed": 13})
    manifest = RunManifest.start("ner-train", cfg, seed=cfg["seed"])
    manifest.add_input(args.train)
    if args.vectors:
        manifest.add_input(args.vectors)
    vectors = _load_vectors(args.vectors)
    train_set = ner.load_annotations(args.train)
    model = ner.train_ner(train_set, epochs=cfg["epochs"], seed=cfg["seed"], vectors=vectors)
    model_path = Path(args.out) if args.out else out / "ner_model.json"
    ner.save_ner_model(model, model_path)
    manifest.add_output(model_path)
    manifest.write(out / "ner-train.manifest.json")
    print(f"trained tagger on {len(train_set)} sentences -> {model_path}")
    return 0


def cmd_ner_eval(args) -> int:
    out = _out_dir(args)
    manifest = RunManifest.start("ner-eval", {})
    manifest.add_input(args.model)
    manifest.add_input(args.test)
    vectors = _load_vectors(args.vectors)
    model = ner.load_ner_model(args.model, vectors=vectors)
    report = ner.eval_ner(model, ner.load_annotations(args.test))
    report_path = out / "ner_eval.json"
    report_path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    manifest.add_output(report_path)
    manifest.write(out / "ner-eval.manifest.json")
    print(
        f"P {report.precision:.2f}  R {report.recall:.2f}  F1 {report.f1:.2f}"
        f"  (tp={report.tp} fp={report.fp} fn={report.fn})"
    )
    return 0


def cmd_ner_tag(args) -> int:
    out = _out_dir(args)
    manifest = RunManifest.start("ner-tag", {"format": args.format})
    manifest.add_input(args.model)
    manifest.add_input(args.corpus)
    vectors = _load_vectors(args.vectors)
    alias = _load_alias(args.alias)
    model = ner.load_ner_model(args.model, vectors=vectors)
    report = ParseReport(source=args.corpus)
    mentions_path = out / "mentions.tsv"
    n = 0
    with open(mentions_path, "w", encoding="utf-8") as fh:
        fh.write("doc_id\tsentence_index\ttoken_start\ttoken_end\tsurface\tentity_id\n")
        for abstract in corpus.parse_corpus(args.corpus, fmt=args.format, report=report):
            text = abstract.text
            for sentence in corpus.sentence_split(abstract):
                start, end = sentence.char_span
                tokens = corpus.tokenize(text[start:end])
                for m in ner.tag(
                    model, tokens, alias_map=alias, doc_id=abstract.doc_id, sentence_index=sentence.index
                ):
                    fh.write(
                        f"{m.doc_id}\t{m.sentence_index}\t{m.start}\t{m.end}"
                        f"\t{m.surface}\t{m.entity_id}\n"
                    )
                    n += 1
    _report_errors(report)
    manifest.add_output(mentions_path)
    manifest.write(out / "ner-tag.manifest.json")
    print(f"wrote {n} mentions -> {mentions_path}")
    return 0 if report.ok else 1


# ---------------------------------------------------------------------------
# relation extraction
# ---------------------------------------------------------------------------


def cmd_re_train(args) -> int:
    out = _out_dir(args)
    cfg = _resolved(
        args,
        {
            "l2": 1e-4,
            "epochs": 50,
            "lr": 0.5,
            "seed": 13,
            "batch_size": 32,
            "masking": False,
            "buckets": 1 << 16,
        },
    )
    manifest = RunManifest.start("re-train", cfg, seed=cfg["seed"])
    manifest.add_input(args.train)
    if args.vectors:
        manifest.add_input(args.vectors)
    if args.valid:
        manifest.add_input(args.valid)
    vectors = _load_vectors(args.vectors)
    feature_config = relex.FeatureConfig(
        masking=bool(cfg["masking"]),
        n_buckets=int(cfg["buckets"]),
        dim=vectors.dim if vectors else 0,
    )
    hyper = relex.ReTrainConfig(
        l2=cfg["l2"], epochs=cfg["epochs"], lr=cfg["lr"], seed=cfg["seed"], batch_size=cfg["batch_size"]
    )
    train_set = relex.load_labeled_candidates(args.train)
    valid_set = relex.load_labeled_candidates(args.valid) if args.valid else None
    model = relex.train_re(train_set, feature_config, hyper, vectors=vectors, valid=valid_set)
    model_path = Path(args.out) if args.out else out / "re_model.npz"
    relex.save_re_model(model, model_path)
    manifest.add_output(model_path)
    manifest.write(out / "re-train.manifest.json")
    print(
        f"trained classifier on {len(train_set)} candidates"
        f" (threshold {model.threshold:.3f}) -> {model_path}"
    )
    return 0


def cmd_re_eval(args) -> int:
    out = _out_dir(args)
    manifest = RunManifest.start("re-eval", {})
    manifest.add_input(args.model)
    manifest.add_input(args.test)
    vectors = _load_vectors(args.vectors)
    model = relex.load_re_model(args.model, vectors=vectors)
    report = relex.eval_re(model, relex.load_labeled_candidates(args.test))
    report_path = out / "re_eval.json"
    payload = report.to_dict() | {"threshold": model.threshold}
    report_path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    manifest.add_output(report_path)
    manifest.write(out / "re-eval.manifest.json")
    print(
        f"P {report.precision:.2f}  R {report.recall:.2f}  F1 {report.f1:.2f}"
        f"  @ threshold {model.threshold:.3f}"
    )
    return 0


def cmd_extract(args) -> int:
    out = _out_dir(args)
    cfg = _resolved(args, {"threshold": 0.5, "source": "ie"})
    manifest = RunManifest.start("extract", cfg)
    for path in (args.corpus, args.ner_model, args.re_model):
        manifest.add_input(path)
    vectors = _load_vectors(args.vectors)
    alias = _load_alias(args.alias)
    gazetteer = corpus.load_gazetteer(args.gazetteer) if args.gazetteer else None
    ner_model = ner.load_ner_model(args.ner_model, vectors=vectors)
    re_model = relex.load_re_model(args.re_model, vectors=vectors)
    report = ParseReport(source=args.corpus)
    rows = list(
        kg.iter_extractions(
            args.corpus,
            ner_model,
            re_model,
            threshold=cfg["threshold"],
            fmt=args.format,
            gazetteer=gazetteer,
            filter_species=not args.no_species_filter,
            alias_map=alias,
            report=report,
        )
    )
    extractions_path = out / "extractions.tsv"
    kg.write_extraction_tsv(rows, extractions_path)
    graph = kg.graph_from_extractions(rows, source=cfg["source"])
    graph_path = out / "extracted_graph.tsv"
    kg.save_graph(graph, graph_path)
    _report_errors(report)
    manifest.add_output(extractions_path)
    manifest.add_output(graph_path)
    manifest.write(out / "extract.manifest.json")
    print(f"extracted {len(rows)} interaction rows ({len(graph)} unique edges)")
    return 0 if report.ok else 1


# ---------------------------------------------------------------------------
# graph assembly
# ---------------------------------------------------------------------------


def cmd_kg_load(args) -> int:
    out = _out_dir(args)
    cfg = {"schema": args.schema, "min_score": args.min_score, "source": args.source}
    manifest = RunManifest.start("kg-load", cfg)
    manifest.add_input(args.input)
    alias = _load_alias(args.alias)
    report = ParseReport(source=args.input)
    graph = kg.load_edges(
        args.input,
        schema=args.schema,
        min_score=args.min_score,
        source=args.source,
        alias=alias,
        report=report,
    )
    graph_path = Path(args.out) if args.out else out / "graph.tsv"
    kg.save_graph(graph, graph_path)
    _report_errors(report)
    manifest.add_output(graph_path)
    manifest.write(out / "kg-load.manifest.json")
    print(f"loaded {len(graph)} triples -> {graph_path}")
    return 0 if report.ok else 1


def cmd_kg_merge(args) -> int:
    out = _out_dir(args)
    manifest = RunManifest.start("kg-merge", {})
    graphs = []
    for path in args.inputs:
        manifest.add_input(path)
        graphs.append(kg.load_graph(path))
    merged = kg.merge(graphs)
    graph_path = Path(args.out) if args.out else out / "merged.tsv"
    kg.save_graph(merged, graph_path)
    manifest.add_output(graph_path)
    manifest.write(out / "kg-merge.manifest.json")
    print(f"merged {len(graphs)} graphs into {len(merged)} triples -> {graph_path}")
    return 0


def cmd_kg_split(args) -> int:
    out = _out_dir(args)
    cfg = _resolved(args, {"ratios": "0.8,0.1,0.1", "seed": 0, "relation": kg.GENE_DISEASE})
    manifest = RunManifest.start("kg-split", cfg, seed=cfg["seed"])
    manifest.add_input(args.input)
    spec = _parse_ratios(cfg["ratios"])
    spec = kg.SplitSpec(train=spec.train, valid=spec.valid, test=spec.test, seed=cfg["seed"])
    graph = kg.load_graph(args.input)
    result = kg.split(graph, spec, relation=cfg["relation"])
    counts = {}
    for name, part in (("train", result.train), ("valid", result.valid), ("test", result.test)):
        path = out / f"{name}.tsv"
        kg.save_graph(part, path)
        manifest.add_output(path)
        counts[name] = len(part)
    counts["reassigned_to_train"] = result.n_reassigned
    summary_path = out / "split.json"
    summary_path.write_text(json.dumps(counts, indent=2) + "\n", encoding="utf-8")
    manifest.add_output(summary_path)
    manifest.write(out / "kg-split.manifest.json")
    print(
        f"split {len(graph)} triples: train {counts['train']}, valid {counts['valid']},"
        f" test {counts['test']} ({result.n_reassigned} reassigned)"
    )
    return 0


def cmd_kg_overlap(args) -> int:
    out = _out_dir(args)
    manifest = RunManifest.start("kg-overlap", {})
    manifest.add_input(args.reference)
    reference = kg.load_graph(args.reference)
    rows: list[tuple[str, kg.OverlapReport]] = []
    for path in args.extracted:
        manifest.add_input(path)
        name = Path(path).stem
        rows.append((name, kg.overlap_stats(kg.load_graph(path), reference)))

    tsv_path = out / "overlap.tsv"
    with open(tsv_path, "w", encoding="utf-8") as fh:
        fh.write("name\tn_extracted\tn_reference\tn_shared\tpct_extracted_in_reference\n")
        for name, rep in rows:
            fh.write(
                f"{name}\t{rep.n_extracted}\t{rep.n_reference}\t{rep.n_shared}"
                f"\t{rep.pct_extracted_in_reference:.2f}\n"
            )
    json_path = out / "overlap.json"
    json_path.write_text(
        json.dumps({name: rep.to_dict() for name, rep in rows}, indent=2) + "\n",
        encoding="utf-8",
    )
    figure_path = out / "overlap.png"
    figures.save_overlap_figure(rows, figure_path)
    for path in (tsv_path, json_path, figure_path):
        manifest.add_output(path)
    manifest.write(out / "kg-overlap.manifest.json")
    for name, rep in rows:
        print(f"{name}: {rep.n_shared}/{rep.n_extracted} in reference ({rep.pct_extracted_in_reference:.2f}%)")
    return 0


# ---------------------------------------------------------------------------
# embeddings and evaluation
# ---------------------------------------------------------------------------

_EMBED_DEFAULTS = {
    "dim": 64,
    "gamma": 12.0,
    "learning_rate": 0.05,
    "batch_size": 128,
    "negatives": 16,
    "adversarial_temperature": 1.0,
    "epochs": 100,
    "seed": 0,
}


def _train_config(cfg: dict) -> embed.TrainConfig:
    return embed.TrainConfig(
        dim=int(cfg["dim"]),
        gamma=float(cfg["gamma"]),
        learning_rate=float(cfg["learning_rate"]),
        batch_size=int(cfg["batch_size"]),
        negatives=int(cfg["negatives"]),
        adversarial_temperature=float(cfg["adversarial_temperature"]),
        epochs=int(cfg["epochs"]),
        seed=int(cfg["seed"]),
    )


def _write_loss_outputs(model: embed.EmbeddingModel, out: Path, manifest: RunManifest) -> None:
    loss_path = out / "loss.tsv"
    with open(loss_path, "w", encoding="utf-8") as fh:
        fh.write("epoch\tloss\n")
        for i, value in enumerate(model.loss_history, 1):
            fh.write(f"{i}\t{value:.6f}\n")
    figure_path = out / "loss.png"
    figures.save_loss_figure(model.loss_history, figure_path)
    manifest.add_output(loss_path)
    manifest.add_output(figure_path)


def cmd_embed_train(args) -> int:
    out = _out_dir(args)
    cfg = _resolved(args, dict(_EMBED_DEFAULTS))
    manifest = RunManifest.start("embed-train", cfg, seed=cfg["seed"])
    manifest.add_input(args.graph)
    graph = kg.load_graph(args.graph)
    config = _train_config(cfg)
    model = embed.train(graph, config)
    model_path = Path(args.out) if args.out else out / "embeddings.bin"
    embed.save_model(model, model_path, config=config)
    manifest.add_output(model_path)
    _write_loss_outputs(model, out, manifest)
    manifest.write(out / "embed-train.manifest.json")
    print(
        f"trained {model.n_entities}x{model.dim} embeddings over {len(graph)} triples"
        f" (final loss {model.loss_history[-1]:.4f}) -> {model_path}"
    )
    return 0


def cmd_tune(args) -> int:
    out = _out_dir(args)
    cfg = _resolved(
        args,
        {
            "trials": 10,
            "seed": 0,
            "relation": kg.GENE_DISEASE,
            "dims": [64, 128, 256],
            "gammas": [6.0, 12.0, 24.0],
            "lr_min": 1e-4,
            "lr_max": 1e-1,
            "negatives_choices": [16, 64, 128],
            "alphas": [0.0, 0.5, 1.0],
            "epochs": 100,
            "batch_size": 128,
        },
    )
    manifest = RunManifest.start("tune", cfg, seed=cfg["seed"])
    manifest.add_input(args.train)
    manifest.add_input(args.valid)
    train_graph = kg.load_graph(args.train)
    valid_graph = kg.load_graph(args.valid)
    valid_triples = sorted(valid_graph.by_relation(cfg["relation"]))
    space = embed.SearchSpace(
        dims=tuple(int(d) for d in cfg["dims"]),
        gammas=tuple(float(g) for g in cfg["gammas"]),
        lr_range=(float(cfg["lr_min"]), float(cfg["lr_max"])),
        negatives=tuple(int(k) for k in cfg["negatives_choices"]),
        alphas=tuple(float(a) for a in cfg["alphas"]),
        epochs=int(cfg["epochs"]),
        batch_size=int(cfg["batch_size"]),
    )
    trials_path = out / "trials.jsonl"
    best, trials = embed.tune(
        train_graph,
        valid_triples,
        space,
        n_trials=int(cfg["trials"]),
        seed=int(cfg["seed"]),
        relation=cfg["relation"],
        log_path=trials_path,
    )
    best_path = out / "best_config.json"
    best_path.write_text(json.dumps(best.to_dict(), indent=2) + "\n", encoding="utf-8")
    manifest.add_output(trials_path)
    manifest.add_output(best_path)
    manifest.write(out / "tune.manifest.json")
    best_trial = max(trials, key=lambda t: (t.hit30, -t.mr, -t.index))
    print(
        f"best of {len(trials)} trials: hit@30 {best_trial.hit30:.2f}, MR {best_trial.mr:.2f}"
        f" (dim={best.dim}, gamma={best.gamma}, lr={best.learning_rate:.2e})"
    )
    return 0


def cmd_lp_eval(args) -> int:
    out = _out_dir(args)
    cfg = {"relation": args.relation, "raw": args.raw}
    manifest = RunManifest.start("lp-eval", cfg)
    manifest.add_input(args.model)
    manifest.add_input(args.test)
    model = embed.load_model(args.model)
    test_graph = kg.load_graph(args.test)
    test_triples = sorted(test_graph.by_relation(args.relation))
    if not test_triples:
        raise SystemExit(f"no {args.relation!r} triples in {args.test}")
    known = set(test_triples)
    for path in args.known or []:
        manifest.add_input(path)
        known |= kg.load_graph(path).triples
    if args.candidates:
        manifest.add_input(args.candidates)
        pool = [line.strip() for line in open(args.candidates, encoding="utf-8") if line.strip()]
    else:
        pool = sorted(
            {t.head for t in known if t.relation == args.relation}
            | {t.head for t in test_triples}
        )
    queries = lpeval.rank_queries(
        model, test_triples, pool, known, relation=args.relation, filtered=not args.raw
    )
    report = lpeval.summarize(queries)
    report_path = out / "lp_report.json"
    lpeval.write_report_json(report, report_path)
    ranks_path = out / "ranks.tsv"
    lpeval.write_ranks_tsv(queries, ranks_path)
    manifest.add_output(report_path)
    manifest.add_output(ranks_path)
    manifest.write(out / "lp-eval.manifest.json")
    print(
        f"MR {report.mr:.3f}  MP {report.mp:.3f}  hit@30 {report.hit30:.3f}"
        f"  hit@3 {report.hit3:.3f}  hit@1 {report.hit1:.3f}  (n={report.n_queries})"
    )
    return 0


def cmd_experiment(args) -> int:
    out = _out_dir(args)
    cfg = _resolved(args, dict(_EMBED_DEFAULTS) | {"ratios": "0.8,0.1,0.1", "split_seed": 0})
    manifest = RunManifest.start("experiment", cfg, seed=cfg["seed"])
    manifest.add_input(args.disgenet)
    manifest.add_input(args.string)
    for path in args.ie or []:
        manifest.add_input(path)

    disgenet = kg.load_edges(args.disgenet, schema="disgenet_gd")
    string_graph = kg.load_edges(args.string, schema="string_ppi")
    ie_graphs = []
    for i, path in enumerate(args.ie or [], 1):
        name = Path(path).stem
        ie_graphs.append((name, kg.load_edges(path, schema="ie_tsv", source=name)))

    ratios = _parse_ratios(cfg["ratios"])
    spec = kg.SplitSpec(
        train=ratios.train, valid=ratios.valid, test=ratios.test, seed=int(cfg["split_seed"])
    )
    result = kg.split(disgenet, spec, relation=kg.GENE_DISEASE)

    # One shared split for every arm, persisted once and digest-recorded.
    split_dir = out / "split"
    split_dir.mkdir(exist_ok=True)
    for name, part in (("train", result.train), ("valid", result.valid), ("test", result.test)):
        path = split_dir / f"{name}.tsv"
        kg.save_graph(part, path)
        manifest.add_output(path)
    split_digests = {
        name: sha256_file(split_dir / f"{name}.tsv") for name in ("train", "valid", "test")
    }

    test_triples = sorted(result.test.by_relation(kg.GENE_DISEASE))
    valid_triples = sorted(result.valid.by_relation(kg.GENE_DISEASE))
    known = disgenet.by_relation(kg.GENE_DISEASE)
    pool = sorted({t.head for t in known})

    arms: list[tuple[str, list[kg.KnowledgeGraph]]] = [
        ("disgenet", []),
        ("string+disgenet", [string_graph]),
    ]
    for name, graph in ie_graphs:
        arms.append((f"{name}+string+disgenet", [string_graph, graph]))

    config = _train_config(cfg)
    reports: list[tuple[str, lpeval.EvalReport]] = []
    arm_records = []
    for arm_name, extras in arms:
        arm_dir = out / "arms" / arm_name
        arm_dir.mkdir(parents=True, exist_ok=True)
        train_graph = kg.merge([result.train, *extras])
        model = embed.train(train_graph, config)
        model_path = arm_dir / "embeddings.bin"
        embed.save_model(model, model_path, config=config)
        queries = lpeval.rank_queries(model, test_triples, pool, known)
        report = lpeval.summarize(queries)
        lpeval.write_report_json(report, arm_dir / "report.json")
        lpeval.write_ranks_tsv(queries, arm_dir / "ranks.tsv")
        reports.append((arm_name, report))
        arm_records.append(
            {
                "arm": arm_name,
                "n_train_triples": len(train_graph),
                "split_digests": split_digests,
                "report": report.to_dict(),
            }
        )
        manifest.add_output(model_path)
        print(
            f"[{arm_name}] {len(train_graph)} train triples:"
            f" MR {report.mr:.3f}  MP {report.mp:.3f}  hit@30 {report.hit30:.3f}"
        )

    baseline_name = "string+disgenet"
    baseline = dict(reports)[baseline_name]
    table_path = out / "experiment_report.tsv"
    with open(table_path, "w", encoding="utf-8") as fh:
        fh.write(
            "arm\tmr\tmp\thit30\thit3\thit1\tmr_reduction_vs_baseline"
            "\tmp_lift_vs_baseline\thit30_lift_vs_baseline\thit3_lift_vs_baseline"
            "\thit1_lift_vs_baseline\n"
        )
        for arm_name, report in reports:
            change = lpeval.relative_change(baseline, report)

            def fmt(value: float | None) -> str:
                return "n/a" if value is None else f"{value:.2f}"

            fh.write(
                f"{arm_name}\t{report.mr:.3f}\t{report.mp:.3f}\t{report.hit30:.3f}"
                f"\t{report.hit3:.3f}\t{report.hit1:.3f}\t{fmt(change.mr_reduction)}"
                f"\t{fmt(change.mp_lift)}\t{fmt(change.hit30_lift)}\t{fmt(change.hit3_lift)}"
                f"\t{fmt(change.hit1_lift)}\n"
            )
    json_path = out / "experiment_report.json"
    json_path.write_text(
        json.dumps(
            {
                "baseline": baseline_name,
                "split": {"counts": {k: len(v) for k, v in
                          (("train", result.train), ("valid", result.valid), ("test", result.test))},
                          "reassigned_to_train": result.n_reassigned,
                          "digests": split_digests,
                          "n_valid_queries": len(valid_triples)},
                "arms": arm_records,
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    figure_path = out / "experiment_metrics.png"
    figures.save_experiment_figure(reports, figure_path)
    for path in (table_path, json_path, figure_path):
        manifest.add_output(path)
    manifest.write(out / "experiment.manifest.json")
    print(f"experiment table -> {table_path}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--out-dir", default=".", help="directory for outputs and the run manifest")
    sub.add_argument("--config", default=None, help="flat key = value config file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ppikg",
        description="Protein interaction text mining and disease-gene link prediction.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("ner-train", help="train the protein tagger")
    p.add_argument("--train", required=True, help="annotation JSONL")
    p.add_argument("--vectors", default=None, help="word vector text file")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="model output path")
    _add_common(p)
    p.set_defaults(func=cmd_ner_train)

    p = subs.add_parser("ner-eval", help="evaluate the tagger with exact-span matching")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True, help="annotation JSONL")
    p.add_argument("--vectors", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_ner_eval)

    p = subs.add_parser("ner-tag", help="tag a corpus and write a mention table")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=("jsonl", "tsv"), default="jsonl")
    p.add_argument("--vectors", default=None)
    p.add_argument("--alias", default=None, help="alias -> canonical id TSV")
    _add_common(p)
    p.set_defaults(func=cmd_ner_tag)

    p = subs.add_parser("re-train", help="train the interaction classifier")
    p.add_argument("--train", required=True, help="labeled candidate JSONL")
    p.add_argument("--valid", default=None, help="validation JSONL for threshold tuning")
    p.add_argument("--vectors", default=None)
    p.add_argument("--masking", action="store_const", const=True, default=None,
                   help="mask entity mentions before featurizing")
    p.add_argument("--buckets", type=int, default=None, help="hashed feature space size")
    p.add_argument("--l2", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--out", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_re_train)

    p = subs.add_parser("re-eval", help="evaluate the interaction classifier")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--vectors", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_re_eval)

    p = subs.add_parser("extract", help="run the full text pipeline over a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=("jsonl", "tsv"), default="jsonl")
    p.add_argument("--ner-model", required=True)
    p.add_argument("--re-model", required=True)
    p.add_argument("--vectors", default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--gazetteer", default=None, help="species term file")
    p.add_argument("--no-species-filter", action="store_true")
    p.add_argument("--alias", default=None)
    p.add_argument("--source", default=None, help="provenance tag for extracted edges")
    _add_common(p)
    p.set_defaults(func=cmd_extract)

    p = subs.add_parser("kg-load", help="load an edge TSV into the graph format")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--schema", choices=kg.SCHEMAS, required=True)
    p.add_argument("--min-score", type=float, default=None)
    p.add_argument("--source", default=None)
    p.add_argument("--alias", default=None)
    p.add_argument("--out", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_kg_load)

    p = subs.add_parser("kg-merge", help="union graphs (provenance unioned, confidence maxed)")
    p.add_argument("--in", dest="inputs", nargs="+", required=True)
    p.add_argument("--out", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_kg_merge)

    p = subs.add_parser("kg-split", help="random train/valid/test split of one relation")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--ratios", default=None, help="train,valid,test (default 0.8,0.1,0.1)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--relation", default=None, choices=sorted(kg.RELATIONS))
    _add_common(p)
    p.set_defaults(func=cmd_kg_split)

    p = subs.add_parser("kg-overlap", help="overlap of extracted graphs against a reference")
    p.add_argument("--extracted", nargs="+", required=True)
    p.add_argument("--reference", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_kg_overlap)

    p = subs.add_parser("embed-train", help="train rotation embeddings on a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--negatives", type=int, default=None)
    p.add_argument("--adversarial-temperature", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_embed_train)

    p = subs.add_parser("tune", help="random hyperparameter search with a trial log")
    p.add_argument("--train", required=True, help="train graph TSV")
    p.add_argument("--valid", required=True, help="validation graph TSV")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--relation", default=None, choices=sorted(kg.RELATIONS))
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_tune)

    p = subs.add_parser("lp-eval", help="filtered link-prediction evaluation")
    p.add_argument("--model", required=True, help="embedding checkpoint")
    p.add_argument("--test", required=True, help="test graph TSV")
    p.add_argument("--known", nargs="*", default=None, help="graph TSVs used for filtering")
    p.add_argument("--relation", default=kg.GENE_DISEASE, choices=sorted(kg.RELATIONS))
    p.add_argument("--candidates", default=None, help="file with one candidate id per line")
    p.add_argument("--raw", action="store_true", help="disable filtered ranking")
    _add_common(p)
    p.set_defaults(func=cmd_lp_eval)

    p = subs.add_parser("experiment", help="five-arm graph comparison with a shared split")
    p.add_argument("--disgenet", required=True, help="gene-disease TSV")
    p.add_argument("--string", required=True, help="structured interaction TSV")
    p.add_argument("--ie", nargs="*", default=None, help="extraction TSVs (one arm each)")
    p.add_argument("--ratios", default=None)
    p.add_argument("--split-seed", type=int, default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--negatives", type=int, default=None)
    p.add_argument("--adversarial-temperature", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, config_mod.ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        try:
            out = Path(args.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            manifest = RunManifest.start(args.command, {})
            manifest.fail(str(exc))
            manifest.write(out / f"{args.command}.manifest.json")
        except Exception:  # manifest writing must never mask the real error
            pass
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
