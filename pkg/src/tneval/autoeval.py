"""The automatic evaluation protocols: rubric-based judging, Likert-style
judging, and the external faithfulness scorer."""

from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

from .clients import LlmClient, ScorerClient
from .corpus import (Sentence, SoapNote, Transcript, conversation_text,
                     segment_sentences)
from .prompts import TemplateId, render_prompt
from .rubric import SOAP_SECTIONS, Rubric, RubricItem, Section
from .scoring import (AlignmentScore, Channel, CompletenessJudgment,
                      ConcisenessJudgment, DimensionReport, EvalDimension,
                      LikertJudgment, NECESSARY, ScoreReport, UNNECESSARY,
                      completeness_scores, conciseness_scores,
                      faithfulness_scores_align, likert_scores)

# re-exported: the scorer produces these alongside the judgments
__all__ = [
    "AlignmentScore", "EvalClients", "JudgeError", "NoteEvaluation",
    "Protocol", "evaluate_note", "faithfulness_align", "format_rubric_item",
    "format_rubric_items", "judge_item_coverage", "judge_likert",
    "judge_sentence_necessity", "parse_likert", "parse_yes_no",
]


class JudgeError(RuntimeError):
    """A judgment could not be obtained (transport or parse failure)."""


class Protocol(str, Enum):
    TN_A = "tna"
    LIKERT = "likert"
    BOTH = "both"


def parse_yes_no(reply: str) -> bool | None:
    """Strict yes/no: first alphanumeric token decides, anything else is a
    parse failure (None)."""
    tokens = re.findall(r"[a-z0-9]+", reply.lower())
    if not tokens:
        return None
    if tokens[0] == "yes":
        return True
    if tokens[0] == "no":
        return False
    return None


def parse_likert(reply: str) -> int | None:
    """First standalone integer; must be in 1..5."""
    match = re.search(r"\d+", reply)
    if not match:
        return None
    value = int(match.group(0))
    return value if 1 <= value <= 5 else None


def format_rubric_item(item: RubricItem) -> str:
    return f"{item.name}: {item.description}"


def format_rubric_items(items: Sequence[RubricItem]) -> str:
    return "\n".join(f"- {format_rubric_item(item)}" for item in items)


def _query(client: LlmClient, record, parse: Callable[[str], object]):
    """Complete + parse with retries. Cached replies are never re-queried:
    a cached parse failure replays deterministically as a failure."""
    completion = client.complete(record)
    value = parse(completion.reply)
    retries = 0
    while (value is None and not completion.from_cache
           and retries < client.config.max_retries):
        completion = client.complete(record, bypass_cache=True)
        value = parse(completion.reply)
        retries += 1
    if value is None:
        raise JudgeError(f"{record.template_id.value}: unparseable reply "
                         f"{completion.reply[:80]!r}")
    return value


def judge_item_coverage(client: LlmClient, section_text: str,
                        rubric_item: RubricItem) -> bool:
    """Ask whether one rubric item appears in a note section."""
    if not rubric_item.description:
        raise ValueError(f"rubric item {rubric_item.id!r} has no description")
    record = render_prompt(
        TemplateId.COMPLETENESS_ITEM,
        {"note_segment": section_text,
         "rubric_item": format_rubric_item(rubric_item)},
        client.model_id,
    )
    return bool(_query(client, record, parse_yes_no))


def judge_sentence_necessity(client: LlmClient, sentence_text: str,
                             section_items: Sequence[RubricItem]) -> bool:
    """Ask whether a sentence serves any of the section's rubric items."""
    if not section_items:
        raise ValueError("conciseness judging needs at least one rubric item")
    record = render_prompt(
        TemplateId.CONCISENESS_SENTENCE,
        {"note_sentence": sentence_text,
         "rubrics": format_rubric_items(section_items)},
        client.model_id,
    )
    return bool(_query(client, record, parse_yes_no))


_LIKERT_TEMPLATES = {
    EvalDimension.COMPLETENESS: TemplateId.LIKERT_COMPLETENESS,
    EvalDimension.CONCISENESS: TemplateId.LIKERT_CONCISENESS,
    EvalDimension.FAITHFULNESS: TemplateId.LIKERT_FAITHFULNESS,
}


def judge_likert(client: LlmClient, transcript: Transcript,
                 section_text: str, dimension: EvalDimension,
                 rubric_items: Sequence[RubricItem] = ()) -> int:
    """1-5 rating of a note section given the whole conversation. The
    faithfulness template takes no rubric listing."""
    if dimension not in _LIKERT_TEMPLATES:
        raise ValueError(f"no likert template for {dimension!r}")
    bindings = {"conversation": conversation_text(transcript),
                "note_segment": section_text}
    if dimension is not EvalDimension.FAITHFULNESS:
        bindings["rubrics"] = format_rubric_items(rubric_items)
    record = render_prompt(_LIKERT_TEMPLATES[dimension], bindings,
                           client.model_id)
    return int(_query(client, record, parse_likert))


def faithfulness_align(scorer: ScorerClient, note: SoapNote,
                       transcript: Transcript,
                       sentences: Sequence[Sentence] | None = None,
                       ) -> tuple[list[AlignmentScore], DimensionReport]:
    """Score every note sentence against the full transcript text; section
    score is the mean sentence score, note level micro-averages."""
    if sentences is None:
        sentences = segment_sentences(note)
    context = conversation_text(transcript)
    scores = []
    for sentence in sentences:
        value = scorer.score(sentence.text, context)
        scores.append(AlignmentScore(
            note_id=note.id, section=sentence.section,
            sentence_index=sentence.index, score=value,
            scorer_id=scorer.scorer_id))
    report = faithfulness_scores_align(scores, sentences, note.id)
    return scores, report


@dataclass
class EvalClients:
    llm: LlmClient | None = None
    scorer: ScorerClient | None = None


@dataclass
class NoteEvaluation:
    report: ScoreReport
    judgments: list = field(default_factory=list)
    alignment_scores: list[AlignmentScore] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)


def evaluate_note(clients: EvalClients, rubric: Rubric, note: SoapNote,
                  transcript: Transcript,
                  protocol: Protocol = Protocol.BOTH) -> NoteEvaluation:
    """Run the configured protocols over one note.

    Work items are keyed by (note, section, item-or-sentence index) and
    dispatched concurrently up to max_in_flight; results are assembled in
    key order, so the output never depends on completion order. A note with
    any failed judgment is marked partial and keeps the error messages.
    """
    sentences = segment_sentences(note)
    llm = clients.llm
    run_rubric = protocol in (Protocol.TN_A, Protocol.BOTH)
    run_likert = protocol in (Protocol.LIKERT, Protocol.BOTH)
    if (run_rubric or run_likert) and llm is None:
        raise ValueError(f"protocol {protocol.value!r} needs an LLM client")

    work: list[tuple[tuple, Callable[[], object]]] = []
    if run_rubric:
        for section in SOAP_SECTIONS:
            text = note.sections[section]
            for item in rubric.items_for(section, scoreable_only=True):
                work.append((("completeness", section.value, item.id),
                             lambda t=text, i=item:
                             judge_item_coverage(llm, t, i)))
        for sentence in sentences:
            items = rubric.items_for(sentence.section, scoreable_only=True)
            work.append((("conciseness", sentence.section.value,
                          sentence.index),
                         lambda s=sentence, it=items:
                         judge_sentence_necessity(llm, s.text, it)))
    if run_likert:
        for section in SOAP_SECTIONS:
            text = note.sections[section]
            items = rubric.items_for(section, scoreable_only=True)
            for dimension in (EvalDimension.COMPLETENESS,
                              EvalDimension.CONCISENESS,
                              EvalDimension.FAITHFULNESS):
                work.append((("likert", section.value, dimension.value),
                             lambda t=text, d=dimension, it=items:
                             judge_likert(llm, transcript, t, d, it)))

    results: dict[tuple, object] = {}
    errors: list[str] = []
    max_in_flight = llm.config.max_in_flight if llm else 1
    if work:
        with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
            futures = {key: pool.submit(fn) for key, fn in work}
        for key, _ in work:
            try:
                results[key] = futures[key].result()
            except Exception as exc:  # noqa: BLE001 - tally every failure
                errors.append(f"{'/'.join(str(k) for k in key)}: {exc}")

    judge = llm.model_id if llm else ""
    judgments: list = []
    completeness = conciseness = None
    if run_rubric:
        comp = []
        for section in SOAP_SECTIONS:
            for item in rubric.items_for(section, scoreable_only=True):
                key = ("completeness", section.value, item.id)
                if key in results:
                    comp.append(CompletenessJudgment(
                        note_id=note.id, item_id=item.id,
                        covered=bool(results[key]), judge=judge,
                        channel=Channel.AUTO))
        judgments.extend(comp)
        if len(comp) == len(rubric.scoreable_items()):
            completeness = completeness_scores(comp, rubric, note.id)

        conc = []
        for sentence in sentences:
            key = ("conciseness", sentence.section.value, sentence.index)
            if key in results:
                label = NECESSARY if results[key] else UNNECESSARY
                conc.append(ConcisenessJudgment(
                    note_id=note.id, section=sentence.section,
                    sentence_index=sentence.index,
                    label=label, judge=judge, channel=Channel.AUTO))
        judgments.extend(conc)
        if len(conc) == len(sentences):
            conciseness = conciseness_scores(conc, sentences, note.id)

    likert_reports: tuple = ()
    if run_likert:
        lik = []
        for section in SOAP_SECTIONS:
            for dimension in (EvalDimension.COMPLETENESS,
                              EvalDimension.CONCISENESS,
                              EvalDimension.FAITHFULNESS):
                key = ("likert", section.value, dimension.value)
                if key in results:
                    lik.append(LikertJudgment(
                        note_id=note.id, scope=section.value,
                        dimension=dimension, score=int(results[key]),
                        judge=judge, channel=Channel.AUTO))
        judgments.extend(lik)
        if lik:
            likert_reports = likert_scores(lik, note.id)

    alignment_scores: list[AlignmentScore] = []
    faithfulness = None
    if run_rubric and clients.scorer is not None:
        try:
            alignment_scores, faithfulness = faithfulness_align(
                clients.scorer, note, transcript, sentences)
        except Exception as exc:  # noqa: BLE001
            errors.append(f"faithfulness/alignment: {exc}")

    report = ScoreReport(
        note_id=note.id,
        source=note.source,
        completeness=completeness,
        conciseness=conciseness,
        faithfulness=faithfulness,
        likert=likert_reports,
        partial=bool(errors),
        errors=tuple(errors),
    )
    return NoteEvaluation(report=report, judgments=judgments,
                          alignment_scores=alignment_scores, errors=errors)
