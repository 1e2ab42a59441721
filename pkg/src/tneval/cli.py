"""tn-eval command line: generate, evaluate, score, agreement, correlate,
report, serve."""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import autoeval, notegen, scoring, stats
from .clients import (JudgeConfig, LlmClient, ResponseCache, ScorerClient,
                      ScriptedScorer, ScriptedTransport, http_scorer_transport,
                      http_transport)
from .config import AppConfig, ConfigError, load_config
from .corpus import (CorpusError, read_annomi_csv, read_notes_jsonl,
                     read_transcripts_jsonl, segment_sentences,
                     write_notes_jsonl)
from .rubric import RubricError, default_rubric, load_rubric
from .scoring import ScoringError
from .stats import StatsError
from .store import StoreError, TaskDimension, assign_tasks

_KNOWN_ERRORS = (CorpusError, RubricError, ScoringError, StatsError,
                 StoreError, ConfigError, ValueError, OSError, RuntimeError)


def _fail(exc: Exception) -> int:
    sys.stderr.write(json.dumps({"error": str(exc),
                                 "type": type(exc).__name__}) + "\n")
    return 1


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n",
                    encoding="utf-8")


def _load_rubric(spec: str):
    """A rubric path, or one of the built-in variants: 'default',
    'default-split' (the two original interventions items instead of the
    merged one), 'default-scoreable-general'."""
    if not spec or spec == "default":
        return default_rubric()
    if spec == "default-split":
        return default_rubric(split_interventions=True)
    if spec == "default-scoreable-general":
        return default_rubric(scoreable_general=True)
    return load_rubric(spec)


def _load_transcripts(path: str):
    if path.endswith(".csv"):
        return read_annomi_csv(path)
    return read_transcripts_jsonl(path)


def _load_app_config(path: str | None) -> AppConfig:
    if path:
        return load_config(path)
    return AppConfig()


def _shared_cache(args, config: AppConfig) -> ResponseCache | None:
    cache_dir = getattr(args, "cache_dir", None) or (
        config.judge.cache_dir if config.judge else None)
    if not cache_dir:
        return None
    return ResponseCache(config.resolve(cache_dir))


def _build_llm_client(args, config: AppConfig,
                      cache: ResponseCache | None) -> LlmClient:
    judge = config.judge
    if getattr(args, "mock_client", None):
        transport = ScriptedTransport.from_jsonl(args.mock_client)
        if judge is None:
            judge = JudgeConfig(model_id="mock")
    else:
        if judge is None or not judge.endpoint:
            raise ConfigError("an LLM endpoint is required: provide a "
                              "config with a judge block, or --mock-client")
        transport = http_transport
    if getattr(args, "max_in_flight", None):
        judge = JudgeConfig(**{**judge.__dict__,
                               "max_in_flight": args.max_in_flight})
    return LlmClient(judge, transport=transport, cache=cache)


def _build_scorer(args, config: AppConfig,
                  cache: ResponseCache | None) -> ScorerClient | None:
    if getattr(args, "mock_scorer", None):
        return ScorerClient(scorer_id="mock-scorer",
                            transport=ScriptedScorer.from_jsonl(
                                args.mock_scorer),
                            cache=cache)
    scorer_cfg = config.scorer
    if scorer_cfg is None or not scorer_cfg.endpoint:
        return None
    return ScorerClient(scorer_id=scorer_cfg.scorer_id,
                        transport=http_scorer_transport(scorer_cfg.endpoint),
                        cache=cache)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_generate(args) -> int:
    config = _load_app_config(args.config)
    client = _build_llm_client(args, config, _shared_cache(args, config))
    transcripts = _load_transcripts(args.transcripts)
    source = args.source_label or client.model_id

    def one(transcript):
        return notegen.generate_note(client, transcript, source_label=source)

    with ThreadPoolExecutor(max_workers=client.config.max_in_flight) as pool:
        notes = list(pool.map(one, transcripts))
    write_notes_jsonl(notes, args.out)
    print(f"wrote {len(notes)} notes to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    config = _load_app_config(args.config)
    rubric = _load_rubric(args.rubric)
    notes = read_notes_jsonl(args.notes)
    transcripts = {t.id: t for t in _load_transcripts(args.transcripts)}
    protocol = autoeval.Protocol(args.protocol)
    cache = _shared_cache(args, config)
    clients = autoeval.EvalClients(
        llm=_build_llm_client(args, config, cache),
        scorer=_build_scorer(args, config, cache),
    )

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    reports = []
    judgments: list = []
    for note in notes:
        transcript = transcripts.get(note.transcript_id)
        if transcript is None:
            raise CorpusError(f"note {note.id!r} references unknown "
                              f"transcript {note.transcript_id!r}")
        result = autoeval.evaluate_note(clients, rubric, note, transcript,
                                        protocol)
        reports.append(result.report)
        judgments.extend(result.judgments)
        judgments.extend(result.alignment_scores)

    _write_json(out_dir / "report.json", {
        "protocol": protocol.value,
        "notes": [scoring.report_to_dict(r) for r in reports],
        "summary": scoring.corpus_summary(reports, rubric),
    })
    scoring.write_judgments_jsonl(judgments, out_dir / "judgments.jsonl")
    (out_dir / "scores.csv").write_text(scoring.reports_to_csv(reports),
                                        encoding="utf-8")
    partial = sum(1 for r in reports if r.partial)
    print(f"evaluated {len(reports)} notes ({partial} partial) -> {out_dir}")
    if partial:
        sys.stderr.write(json.dumps({
            "error": f"{partial} of {len(reports)} notes evaluated "
                     "partially",
            "type": "PartialEvaluation",
            "notes": [r.note_id for r in reports if r.partial],
        }) + "\n")
        return 1
    return 0


def _reports_from_judgments(judgment_path: str, notes, rubric):
    """One ScoreReport per (note, judge) over whatever dimensions its
    judgments cover."""
    notes_by_id = {n.id: n for n in notes}
    sentences = {n.id: segment_sentences(n) for n in notes}
    records = scoring.read_judgments_jsonl(judgment_path)

    grouped: dict[tuple[str, str], dict[str, list]] = {}
    for record in records:
        judge = getattr(record, "judge", None) or getattr(
            record, "scorer_id", "")
        key = (record.note_id, judge)
        grouped.setdefault(key, {}).setdefault(
            type(record).__name__, []).append(record)

    reports = []
    for (note_id, judge) in sorted(grouped):
        if note_id not in notes_by_id:
            raise ScoringError(f"judgments reference unknown note "
                               f"{note_id!r}")
        kinds = grouped[(note_id, judge)]
        completeness = conciseness = faithfulness = None
        likert: tuple = ()
        if "CompletenessJudgment" in kinds:
            completeness = scoring.completeness_scores(
                kinds["CompletenessJudgment"], rubric, note_id)
        if "ConcisenessJudgment" in kinds:
            conciseness = scoring.conciseness_scores(
                kinds["ConcisenessJudgment"], sentences[note_id], note_id)
        if "AlignmentScore" in kinds:
            faithfulness = scoring.faithfulness_scores_align(
                kinds["AlignmentScore"], sentences[note_id], note_id)
        elif "FaithfulnessJudgment" in kinds:
            faithfulness = scoring.faithfulness_scores_human(
                kinds["FaithfulnessJudgment"], sentences[note_id], note_id)
        if "LikertJudgment" in kinds:
            likert = scoring.likert_scores(kinds["LikertJudgment"], note_id)
        reports.append(scoring.ScoreReport(
            note_id=note_id, source=notes_by_id[note_id].source, judge=judge,
            completeness=completeness, conciseness=conciseness,
            faithfulness=faithfulness, likert=likert))
    return reports


def cmd_score(args) -> int:
    rubric = _load_rubric(args.rubric)
    notes = read_notes_jsonl(args.notes)
    reports = _reports_from_judgments(args.judgments, notes, rubric)
    doc = {
        "notes": [scoring.report_to_dict(r) for r in reports],
        "summary": scoring.corpus_summary(reports, rubric),
    }
    if args.out:
        _write_json(Path(args.out), doc)
        print(f"wrote report for {len(reports)} (note, judge) pairs to "
              f"{args.out}")
    else:
        print(json.dumps(doc, indent=2, ensure_ascii=False))
    return 0


def _read_pairs(path: str, level: stats.Level) -> stats.PairedRatings:
    units = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            try:
                a, b = record["a"], record["b"]
            except KeyError as exc:
                raise StatsError(f"{path}:{line_no}: pair record missing "
                                 f"{exc.args[0]!r}") from None
            if level is stats.Level.INTERVAL:
                a, b = float(a), float(b)
            units.append((record.get("unit", line_no), a, b))
    pairs = stats.PairedRatings(tuple(units), level)
    pairs.validate()
    return pairs


def cmd_agreement(args) -> int:
    level = stats.Level(args.level)
    pairs = _read_pairs(args.pairs, level)
    alpha = stats.krippendorff_alpha(pairs)
    block: dict = {
        "level": level.value,
        "n_units": len(pairs.units),
        "alpha": round(alpha, 4) if alpha is not None else None,
        "alpha_degenerate": alpha is None,
    }
    if level is stats.Level.NOMINAL:
        block["raw_agreement"] = round(stats.raw_agreement(pairs), 1)
    else:
        block["mse"] = round(stats.mse(pairs), 4)
    if args.out:
        _write_json(Path(args.out), block)
    print(json.dumps(block, indent=2))
    return 0


def _note_scores(report_doc: dict) -> dict[str, dict[str, float]]:
    """{stream: {note_id: note-level score}} out of a report file."""
    streams: dict[str, dict[str, float]] = {}
    for entry in report_doc.get("notes", []):
        note_id = entry["note_id"]
        for dim in ("completeness", "conciseness", "faithfulness"):
            block = entry.get(dim)
            if block and block.get("note"):
                streams.setdefault(dim, {})[note_id] = \
                    block["note"]["percent"]
        for dim, block in (entry.get("likert") or {}).items():
            if block.get("note") is not None:
                streams.setdefault(f"likert_{dim}", {})[note_id] = \
                    block["note"]
    return streams


def cmd_correlate(args) -> int:
    with open(args.x, encoding="utf-8") as fh:
        x_doc = json.load(fh)
    with open(args.y, encoding="utf-8") as fh:
        y_doc = json.load(fh)
    x_streams = _note_scores(x_doc)
    y_streams = _note_scores(y_doc)

    if args.x_stream or args.y_stream:
        if not (args.x_stream and args.y_stream):
            raise StatsError("--x-stream and --y-stream go together")
        pairs_to_run = [(args.x_stream, args.y_stream)]
    else:
        pairs_to_run = [(s, s) for s in x_streams if s in y_streams]

    table = {}
    for xs, ys in pairs_to_run:
        if xs not in x_streams:
            raise StatsError(f"stream {xs!r} not present in {args.x}")
        if ys not in y_streams:
            raise StatsError(f"stream {ys!r} not present in {args.y}")
        shared = sorted(set(x_streams[xs]) & set(y_streams[ys]))
        if len(shared) < 3:
            table[f"{xs}~{ys}"] = {"n": len(shared), "coefficient": None,
                                   "reason": "fewer than 3 shared notes"}
            continue
        xv = [x_streams[xs][n] for n in shared]
        yv = [y_streams[ys][n] for n in shared]
        try:
            coefficient = stats.correlation(xv, yv, args.method)
            table[f"{xs}~{ys}"] = {"n": len(shared),
                                   "coefficient": round(coefficient, 4)}
        except StatsError as exc:
            table[f"{xs}~{ys}"] = {"n": len(shared), "coefficient": None,
                                   "reason": str(exc)}
    doc = {"method": args.method, "correlations": table}
    if args.out:
        _write_json(Path(args.out), doc)
    print(json.dumps(doc, indent=2))
    return 0


def cmd_report(args) -> int:
    rubric = _load_rubric(args.rubric)
    notes = read_notes_jsonl(args.notes)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    summary: dict = {
        "n_notes": len(notes),
        "note_lengths": _lengths_by_source(notes),
    }
    if args.judgments:
        reports = _reports_from_judgments(args.judgments, notes, rubric)
        summary["scores"] = scoring.corpus_summary(reports, rubric)
        (out_dir / "scores.csv").write_text(
            scoring.reports_to_csv(reports), encoding="utf-8")
    _write_json(out_dir / "summary.json", summary)
    print(f"wrote corpus summary for {len(notes)} notes -> {out_dir}")
    return 0


def _lengths_by_source(notes) -> dict:
    by_source: dict[str, list] = {}
    for note in notes:
        by_source.setdefault(note.source, []).append(note)
    return {source: notegen.note_length_stats(group)
            for source, group in sorted(by_source.items())}


def cmd_serve(args) -> int:
    import uvicorn

    from .server import ServerState, create_app
    from .store import JudgmentStore

    config = _load_app_config(args.config)
    if config.server is None:
        raise ConfigError("config has no server block")
    srv = config.server
    builtin = srv.rubric.startswith("default")
    rubric = _load_rubric(srv.rubric if builtin
                          else config.resolve(srv.rubric))
    notes = {n.id: n for n in read_notes_jsonl(config.resolve(srv.notes))}
    transcripts = {t.id: t
                   for t in _load_transcripts(config.resolve(srv.transcripts))}
    store = JudgmentStore.open(config.resolve(srv.log))
    if not store.tasks and srv.annotators:
        dimensions = [TaskDimension(d) for d in srv.dimensions]
        ordered_notes = [notes[k] for k in sorted(notes)]
        store.add_tasks(assign_tasks(ordered_notes, list(srv.annotators),
                                     dimensions))
    auto_judgments: list = []
    for path in srv.auto_judgments:
        auto_judgments.extend(
            scoring.read_judgments_jsonl(config.resolve(path)))
    state = ServerState(store=store, rubric=rubric, notes=notes,
                        transcripts=transcripts,
                        blind_source=srv.blind_source,
                        auto_judgments=auto_judgments)
    app = create_app(state, ui_dir=config.resolve(srv.ui_dir))
    uvicorn.run(app, host=srv.host, port=srv.port)
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tn-eval",
        description="Rubric-based SOAP note evaluation toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate notes from transcripts")
    p.add_argument("--transcripts", required=True,
                   help="transcripts JSONL (or AnnoMI-style CSV)")
    p.add_argument("--out", required=True, help="output notes JSONL")
    p.add_argument("--config", help="config JSON with a judge block")
    p.add_argument("--mock-client", help="scripted replies JSONL")
    p.add_argument("--source-label", help="note source label "
                                          "(default: model id)")
    p.add_argument("--max-in-flight", type=int)
    p.add_argument("--cache-dir")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="run automatic evaluation over notes")
    p.add_argument("--notes", required=True)
    p.add_argument("--transcripts", required=True)
    p.add_argument("--rubric", default="default")
    p.add_argument("--config")
    p.add_argument("--protocol", choices=["tna", "likert", "both"],
                   default="both")
    p.add_argument("--mock-client", help="scripted replies JSONL")
    p.add_argument("--mock-scorer", help="scripted alignment scores JSONL")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--max-in-flight", type=int)
    p.add_argument("--cache-dir")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("score", help="score judgment records")
    p.add_argument("--judgments", required=True)
    p.add_argument("--notes", required=True)
    p.add_argument("--rubric", default="default")
    p.add_argument("--out")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("agreement", help="inter-annotator agreement block")
    p.add_argument("--pairs", required=True,
                   help="JSONL of {unit, a, b} records")
    p.add_argument("--level", choices=["nominal", "interval"],
                   default="nominal")
    p.add_argument("--out")
    p.set_defaults(func=cmd_agreement)

    p = sub.add_parser("correlate", help="correlate two report files")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--method", choices=["pearson", "spearman"],
                   default="pearson")
    p.add_argument("--x-stream", help="score stream in --x, e.g. "
                                      "completeness or likert_completeness")
    p.add_argument("--y-stream")
    p.add_argument("--out")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("report", help="corpus summaries (CSV/JSON)")
    p.add_argument("--notes", required=True)
    p.add_argument("--judgments")
    p.add_argument("--rubric", default="default")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="start the annotation server")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _KNOWN_ERRORS as exc:
        return _fail(exc)


if __name__ == "__main__":
    sys.exit(main())
