"""HTTP annotation service: task hand-out, judgment intake, reports, export."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles

from . import scoring
from .corpus import Sentence, SoapNote, Transcript, segment_sentences
from .rubric import Rubric, rubric_to_dict
from .scoring import (EvalDimension, ScoringError, UNNECESSARY,
                      completeness_scores, conciseness_scores,
                      faithfulness_scores_align, faithfulness_scores_human,
                      format_mean_std, judgment_from_record, likert_scores,
                      mean_std)
from .stats import Level, PairedRatings, krippendorff_alpha, mse, raw_agreement
from .store import (JudgmentStore, StaleRevisionError, StoreError,
                    TaskDimension, TaskStatus)


@dataclass
class ServerState:
    store: JudgmentStore
    rubric: Rubric
    notes: dict[str, SoapNote]
    transcripts: dict[str, Transcript]
    blind_source: bool = False
    auto_judgments: list = field(default_factory=list)
    sentences: dict[str, list[Sentence]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for note_id, note in self.notes.items():
            self.sentences.setdefault(note_id, segment_sentences(note))

    def note_payload(self, note: SoapNote) -> dict:
        payload = {
            "id": note.id,
            "transcript_id": note.transcript_id,
            "sections": {s.value: text for s, text in note.sections.items()},
        }
        if not self.blind_source:
            payload["source"] = note.source
        return payload


def _sentence_payload(sentence: Sentence) -> dict:
    return {
        "section": sentence.section.value,
        "index": sentence.index,
        "text": sentence.text,
        "span": list(sentence.span),
    }


_TASK_KINDS = {
    TaskDimension.COMPLETENESS: "completeness",
    TaskDimension.CONCISENESS: "conciseness",
    TaskDimension.FAITHFULNESS: "faithfulness",
    TaskDimension.LIKERT_BASELINE: "likert",
}


def validate_submission(state: ServerState, task, payload: Sequence[Mapping]):
    """Parse and validate a task's full judgment payload; returns the parsed
    judgments. Raises ScoringError with a field-precise message."""
    if not payload:
        raise ScoringError("empty payload")
    expected_kind = _TASK_KINDS[task.dimension]
    judgments = []
    for i, record in enumerate(payload):
        kind = record.get("kind")
        if kind != expected_kind:
            raise ScoringError(f"payload[{i}]: kind {kind!r} does not match "
                               f"task dimension {task.dimension.value!r}")
        judgment = judgment_from_record(record)
        if judgment.note_id != task.note_id:
            raise ScoringError(f"payload[{i}]: note {judgment.note_id!r} "
                               f"does not match task note {task.note_id!r}")
        if getattr(judgment, "judge", None) != task.annotator_id:
            raise ScoringError(f"payload[{i}]: judge must be the task "
                               f"annotator {task.annotator_id!r}")
        judgments.append(judgment)

    note = state.notes[task.note_id]
    sentences = state.sentences[task.note_id]
    if task.dimension is TaskDimension.COMPLETENESS:
        scoring.validate_completeness_set(judgments, state.rubric, note.id)
    elif task.dimension is TaskDimension.CONCISENESS:
        scoring.validate_conciseness_set(judgments, sentences, note.id,
                                         state.rubric)
    elif task.dimension is TaskDimension.FAITHFULNESS:
        transcript = state.transcripts.get(note.transcript_id)
        scoring.validate_faithfulness_set(judgments, sentences, note.id,
                                          transcript)
    else:
        scoring.validate_likert_set(judgments, note.id)
    return judgments


# ---------------------------------------------------------------------------
# Report assembly
# ---------------------------------------------------------------------------

def _percent_block(by_judge: dict[str, float]) -> dict:
    merged = sum(by_judge.values()) / len(by_judge)
    return {
        "by_judge": {j: round(v, 1) for j, v in sorted(by_judge.items())},
        "merged": round(merged, 1),
    }


def _aggregate(values: Sequence[float], decimals: int = 1) -> dict:
    mean, std = mean_std(values)
    return {"mean": round(mean, decimals),
            "std": round(std, decimals) if std is not None else None,
            "n": len(values),
            "formatted": format_mean_std(mean, std, decimals)}


def _alpha_or_none(units: list[tuple], level: Level) -> float | None:
    if len(units) < 2:
        return None
    value = krippendorff_alpha(PairedRatings(tuple(units), level))
    return round(value, 4) if value is not None else None


def _grouped_submissions(state: ServerState, dimensions):
    """{(note_id, dimension): {annotator: [judgments]}} over submitted tasks."""
    grouped: dict[tuple, dict[str, list]] = {}
    for task, payload in state.store.submitted_payloads():
        if task.dimension not in dimensions:
            continue
        judgments = [judgment_from_record(r) for r in payload]
        grouped.setdefault((task.note_id, task.dimension), {})[
            task.annotator_id] = judgments
    return grouped


def _tnh_report(state: ServerState) -> dict:
    dims = (TaskDimension.COMPLETENESS, TaskDimension.CONCISENESS,
            TaskDimension.FAITHFULNESS)
    grouped = _grouped_submissions(state, dims)
    if not grouped:
        raise ScoringError("no submitted rubric annotations in scope")

    notes_out: dict[str, dict] = {}
    summary_values: dict[str, dict[str, list[float]]] = {}
    iaa_units: dict[str, list[tuple]] = {d.value: [] for d in dims}

    for (note_id, dimension), by_annotator in sorted(
            grouped.items(), key=lambda kv: (kv[0][0], kv[0][1].value)):
        sentences = state.sentences[note_id]
        fragments = {}
        for annotator, judgments in sorted(by_annotator.items()):
            if dimension is TaskDimension.COMPLETENESS:
                fragment = completeness_scores(judgments, state.rubric,
                                               note_id)
            elif dimension is TaskDimension.CONCISENESS:
                fragment = conciseness_scores(judgments, sentences, note_id)
            else:
                fragment = faithfulness_scores_human(judgments, sentences,
                                                     note_id)
            fragments[annotator] = fragment

        entry = notes_out.setdefault(note_id, {"note_id": note_id})
        if not state.blind_source:
            entry["source"] = state.notes[note_id].source
        note_block: dict = {}
        by_judge = {a: f.note.percent for a, f in fragments.items()
                    if f.note is not None}
        if by_judge:
            note_block["note"] = _percent_block(by_judge)
            merged = sum(by_judge.values()) / len(by_judge)
            summary_values.setdefault(dimension.value, {}).setdefault(
                "note", []).append(merged)
        for section, _ in next(iter(fragments.values())).sections:
            per_judge = {a: dict(f.sections)[section].percent
                         for a, f in fragments.items()
                         if section in dict(f.sections)}
            if per_judge:
                note_block[section.value] = _percent_block(per_judge)
                merged = sum(per_judge.values()) / len(per_judge)
                summary_values.setdefault(dimension.value, {}).setdefault(
                    section.value, []).append(merged)
        entry[dimension.value] = note_block

        if len(by_annotator) == 2:
            (a1, j1), (a2, j2) = sorted(by_annotator.items())
            iaa_units[dimension.value].extend(
                _iaa_pairs(note_id, dimension, j1, j2))

    summary = {
        dim: {scope: _aggregate(values) for scope, values in scopes.items()}
        for dim, scopes in summary_values.items()
    }
    iaa = {}
    for dim, units in iaa_units.items():
        if not units:
            continue
        pairs = PairedRatings(tuple(units), Level.NOMINAL)
        iaa[dim] = {
            "raw_agreement": round(raw_agreement(pairs), 1),
            "alpha": _alpha_or_none(units, Level.NOMINAL),
            "n_units": len(units),
        }
    return {
        "protocol": "tnh",
        "notes": [notes_out[k] for k in sorted(notes_out)],
        "summary": summary,
        "iaa": iaa,
    }


def _iaa_pairs(note_id: str, dimension: TaskDimension,
               j1: Sequence, j2: Sequence) -> list[tuple]:
    if dimension is TaskDimension.COMPLETENESS:
        a = {j.item_id: j.covered for j in j1}
        b = {j.item_id: j.covered for j in j2}
        return [((note_id, item), a[item], b[item])
                for item in sorted(a) if item in b]
    if dimension is TaskDimension.CONCISENESS:
        a = {(j.section.value, j.sentence_index): j.label != UNNECESSARY
             for j in j1}
        b = {(j.section.value, j.sentence_index): j.label != UNNECESSARY
             for j in j2}
    else:
        a = {(j.section.value, j.sentence_index): j.category.value
             for j in j1}
        b = {(j.section.value, j.sentence_index): j.category.value
             for j in j2}
    return [((note_id,) + key, a[key], b[key])
            for key in sorted(a) if key in b]


def _likert_report(state: ServerState) -> dict:
    grouped = _grouped_submissions(state, (TaskDimension.LIKERT_BASELINE,))
    if not grouped:
        raise ScoringError("no submitted likert annotations in scope")

    notes_out: dict[str, dict] = {}
    summary_values: dict[str, dict[str, list[float]]] = {}
    units: dict[str, list[tuple]] = {}

    for (note_id, _), by_annotator in sorted(grouped.items()):
        reports = {a: dict(likert_scores(js, note_id))
                   for a, js in sorted(by_annotator.items())}
        entry = notes_out.setdefault(note_id, {"note_id": note_id})
        if not state.blind_source:
            entry["source"] = state.notes[note_id].source
        for dimension in (EvalDimension.COMPLETENESS,
                          EvalDimension.CONCISENESS,
                          EvalDimension.FAITHFULNESS,
                          EvalDimension.ACCEPTANCE):
            per_judge_note = {}
            per_judge_sections: dict[str, dict[str, float]] = {}
            for annotator, rep in reports.items():
                likert = rep.get(dimension)
                if likert is None:
                    continue
                if likert.note is not None:
                    per_judge_note[annotator] = likert.note
                for section, score in likert.sections:
                    per_judge_sections.setdefault(
                        section.value, {})[annotator] = float(score)
            if not per_judge_note and not per_judge_sections:
                continue
            block: dict = {}
            if per_judge_note:
                merged = sum(per_judge_note.values()) / len(per_judge_note)
                block["note"] = {
                    "by_judge": {a: round(v, 2)
                                 for a, v in sorted(per_judge_note.items())},
                    "merged": round(merged, 2),
                }
                summary_values.setdefault(dimension.value, {}).setdefault(
                    "note", []).append(merged)
            for section, per_judge in sorted(per_judge_sections.items()):
                merged = sum(per_judge.values()) / len(per_judge)
                block[section] = {
                    "by_judge": {a: v for a, v in sorted(per_judge.items())},
                    "merged": round(merged, 2),
                }
                summary_values.setdefault(dimension.value, {}).setdefault(
                    section, []).append(merged)
            entry[dimension.value] = block

            if len(reports) == 2:
                (a1, r1), (a2, r2) = sorted(reports.items())
                l1, l2 = r1.get(dimension), r2.get(dimension)
                if l1 is None or l2 is None:
                    continue
                s1, s2 = dict(l1.sections), dict(l2.sections)
                for section in s1:
                    if section in s2:
                        units.setdefault(dimension.value, []).append(
                            ((note_id, section.value),
                             float(s1[section]), float(s2[section])))
                if (dimension is EvalDimension.ACCEPTANCE
                        and l1.note is not None and l2.note is not None):
                    units.setdefault(dimension.value, []).append(
                        ((note_id, "whole_note"), l1.note, l2.note))

    summary = {
        dim: {scope: _aggregate(values, 2)
              for scope, values in scopes.items()}
        for dim, scopes in summary_values.items()
    }
    iaa = {}
    for dim, dim_units in units.items():
        pairs = PairedRatings(tuple(dim_units), Level.INTERVAL)
        iaa[dim] = {
            "mse": round(mse(pairs), 4),
            "alpha": _alpha_or_none(dim_units, Level.INTERVAL),
            "n_units": len(dim_units),
        }
    return {
        "protocol": "likert",
        "notes": [notes_out[k] for k in sorted(notes_out)],
        "summary": summary,
        "iaa": iaa,
    }


def _tna_report(state: ServerState) -> dict:
    """Per-note automatic-channel reports over ingested judgments."""
    by_note: dict[str, dict[str, list]] = {}
    for judgment in state.auto_judgments:
        kind = type(judgment).__name__
        by_note.setdefault(judgment.note_id, {}).setdefault(
            kind, []).append(judgment)
    if not by_note:
        raise ScoringError("no automatic judgments in scope")

    reports = []
    for note_id in sorted(by_note):
        if note_id not in state.notes:
            raise ScoringError(f"automatic judgments reference unknown "
                               f"note {note_id!r}")
        sentences = state.sentences[note_id]
        kinds = by_note[note_id]
        completeness = conciseness = faithfulness = None
        likert: tuple = ()
        if "CompletenessJudgment" in kinds:
            completeness = completeness_scores(
                kinds["CompletenessJudgment"], state.rubric, note_id)
        if "ConcisenessJudgment" in kinds:
            conciseness = conciseness_scores(
                kinds["ConcisenessJudgment"], sentences, note_id)
        if "AlignmentScore" in kinds:
            faithfulness = faithfulness_scores_align(
                kinds["AlignmentScore"], sentences, note_id)
        elif "FaithfulnessJudgment" in kinds:
            faithfulness = faithfulness_scores_human(
                kinds["FaithfulnessJudgment"], sentences, note_id)
        if "LikertJudgment" in kinds:
            likert = likert_scores(kinds["LikertJudgment"], note_id)
        reports.append(scoring.ScoreReport(
            note_id=note_id,
            source="" if state.blind_source
            else state.notes[note_id].source,
            completeness=completeness, conciseness=conciseness,
            faithfulness=faithfulness, likert=likert))

    summary = scoring.corpus_summary(reports, state.rubric)
    if state.blind_source:
        summary.pop("item_coverage", None)
    return {
        "protocol": "tna",
        "notes": [scoring.report_to_dict(r) for r in reports],
        "summary": summary,
    }


def corpus_report(state: ServerState, protocol: str) -> dict:
    if protocol == "tnh":
        return _tnh_report(state)
    if protocol == "likert":
        return _likert_report(state)
    if protocol == "tna":
        return _tna_report(state)
    raise ScoringError(f"unknown protocol {protocol!r} "
                       "(expected tnh, likert, or tna)")


# ---------------------------------------------------------------------------
# FastAPI wiring
# ---------------------------------------------------------------------------

def create_app(state: ServerState, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="tn-eval annotation server")

    @app.exception_handler(ScoringError)
    async def _scoring_error(request: Request, exc: ScoringError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.get("/api/tasks/next")
    def next_task(annotator: str):
        task = state.store.next_open_task(annotator)
        if task is None:
            raise HTTPException(404, detail="no open tasks for this "
                                            "annotator")
        note = state.notes[task.note_id]
        payload = {
            "task": {
                "task_id": task.task_id,
                "annotator_id": task.annotator_id,
                "note_id": task.note_id,
                "dimension": task.dimension.value,
                "status": task.status.value,
                "revision": task.revision,
            },
            "note": state.note_payload(note),
            "sentences": [_sentence_payload(s)
                          for s in state.sentences[task.note_id]],
            "rubric": rubric_to_dict(state.rubric),
        }
        if task.dimension is TaskDimension.FAITHFULNESS:
            transcript = state.transcripts.get(note.transcript_id)
            if transcript is not None:
                payload["transcript"] = {
                    "id": transcript.id,
                    "turns": [{"speaker": t.speaker.value, "text": t.text}
                              for t in transcript.turns],
                }
        return payload

    @app.post("/api/judgments")
    async def submit_judgments(request: Request):
        body = await request.json()
        task_id = body.get("task_id")
        idempotency_key = body.get("idempotency_key")
        if not task_id or not idempotency_key:
            raise HTTPException(400, detail="task_id and idempotency_key "
                                            "are required")
        task = state.store.tasks.get(task_id)
        if task is None:
            raise HTTPException(404, detail=f"unknown task {task_id!r}")
        duplicate = state.store.is_duplicate(idempotency_key)
        if not duplicate and task.status is TaskStatus.SUBMITTED:
            raise HTTPException(409, detail=f"task {task_id!r} is already "
                                            "submitted")
        payload = body.get("payload")
        if not isinstance(payload, list):
            raise HTTPException(400, detail="payload must be a list of "
                                            "judgment records")
        if not duplicate:
            try:
                validate_submission(state, task, payload)
            except ScoringError as exc:
                raise HTTPException(400, detail=str(exc)) from None
        try:
            return state.store.submit(task_id, payload, idempotency_key,
                                      revision=body.get("revision"))
        except StaleRevisionError as exc:
            raise HTTPException(409, detail=str(exc)) from None
        except StoreError as exc:
            raise HTTPException(400, detail=str(exc)) from None

    @app.get("/api/notes/{note_id}")
    def get_note(note_id: str):
        note = state.notes.get(note_id)
        if note is None:
            raise HTTPException(404, detail=f"unknown note {note_id!r}")
        payload = state.note_payload(note)
        payload["sentences"] = [_sentence_payload(s)
                                for s in state.sentences[note_id]]
        return payload

    @app.get("/api/transcripts/{transcript_id}")
    def get_transcript(transcript_id: str):
        transcript = state.transcripts.get(transcript_id)
        if transcript is None:
            raise HTTPException(404, detail=f"unknown transcript "
                                            f"{transcript_id!r}")
        return {
            "id": transcript.id,
            "turns": [{"speaker": t.speaker.value, "text": t.text}
                      for t in transcript.turns],
        }

    @app.get("/api/reports/corpus")
    def reports(protocol: str = "tnh"):
        try:
            return corpus_report(state, protocol)
        except ScoringError as exc:
            raise HTTPException(400, detail=str(exc)) from None

    @app.get("/api/export")
    def export():
        def stream():
            for line in state.store.export_lines():
                yield line + "\n"
        return StreamingResponse(stream(), media_type="application/jsonl")

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True),
                  name="ui")
    else:
        @app.get("/")
        def index():
            return {"service": "tn-eval annotation server",
                    "api": ["/api/tasks/next", "/api/judgments",
                            "/api/notes/{id}", "/api/transcripts/{id}",
                            "/api/reports/corpus", "/api/export"]}

    return app
