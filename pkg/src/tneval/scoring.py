"""Dimension scores from judgment records, for human and automatic channels alike."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Sentence, Transcript
from .rubric import SOAP_SECTIONS, Rubric, Section


class ScoringError(ValueError):
    """Raised when a judgment set violates the scoring contracts."""


class Channel(str, Enum):
    HUMAN = "human"
    AUTO = "auto"


class EvalDimension(str, Enum):
    COMPLETENESS = "completeness"
    CONCISENESS = "conciseness"
    FAITHFULNESS = "faithfulness"
    ACCEPTANCE = "acceptance"


class FaithfulnessCategory(str, Enum):
    OUT_OF_NOWHERE = "out_of_nowhere"
    MISINTERPRETED = "misinterpreted"
    NO_ERROR = "no_error"


# Conciseness label for sentences serving no rubric item.
UNNECESSARY = "unnecessary"
# Conciseness label for the automatic channel, whose yes/no query confirms
# a sentence serves some rubric item without naming which one.
NECESSARY = "necessary"
# Likert scope for whole-note ratings (the only scope Acceptance allows).
WHOLE_NOTE = "whole_note"


@dataclass(frozen=True)
class CompletenessJudgment:
    note_id: str
    item_id: str
    covered: bool
    judge: str
    channel: Channel


@dataclass(frozen=True)
class ConcisenessJudgment:
    note_id: str
    section: Section
    sentence_index: int
    label: str  # rubric item id, or UNNECESSARY
    judge: str
    channel: Channel


@dataclass(frozen=True)
class FaithfulnessJudgment:
    note_id: str
    section: Section
    sentence_index: int
    category: FaithfulnessCategory
    supporting_spans: tuple[tuple[int, int, int], ...]  # (turn, start, end)
    judge: str
    channel: Channel


@dataclass(frozen=True)
class LikertJudgment:
    note_id: str
    scope: str  # a Section value, or WHOLE_NOTE
    dimension: EvalDimension
    score: int
    judge: str
    channel: Channel

    def validate(self) -> None:
        if self.score not in range(1, 6):
            raise ScoringError(f"likert score {self.score} outside 1..5")
        if self.scope != WHOLE_NOTE:
            Section(self.scope)  # raises on bad scope
        if (self.dimension is EvalDimension.ACCEPTANCE
                and self.scope != WHOLE_NOTE):
            raise ScoringError("acceptance ratings are whole-note only")


@dataclass(frozen=True)
class AlignmentScore:
    note_id: str
    section: Section
    sentence_index: int
    score: float
    scorer_id: str

    def validate(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ScoringError(f"alignment score {self.score} outside [0, 1]")


Judgment = (CompletenessJudgment | ConcisenessJudgment
            | FaithfulnessJudgment | LikertJudgment)


# ---------------------------------------------------------------------------
# Score fragments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Ratio:
    value: float
    count: int

    @property
    def percent(self) -> float:
        return 100.0 * self.value / self.count


@dataclass(frozen=True)
class DimensionReport:
    """Per-section and note-level ratios for one dimension of one note.

    Sections without a defined score (e.g. zero sentences) are absent."""
    sections: tuple[tuple[Section, Ratio], ...]
    note: Ratio | None
    covered_items: tuple[str, ...] = ()


@dataclass(frozen=True)
class LikertReport:
    sections: tuple[tuple[Section, int], ...]
    note: float | None


@dataclass(frozen=True)
class ScoreReport:
    note_id: str
    source: str = ""
    judge: str = ""
    completeness: DimensionReport | None = None
    conciseness: DimensionReport | None = None
    faithfulness: DimensionReport | None = None
    likert: tuple[tuple[EvalDimension, LikertReport], ...] = ()
    partial: bool = False
    errors: tuple[str, ...] = ()


def completeness_scores(judgments: Iterable[CompletenessJudgment],
                        rubric: Rubric, note_id: str) -> DimensionReport:
    """Covered-item ratio per section; note level micro-averages over all
    scoreable items. Expects exactly one judgment per scoreable item."""
    scoreable = {item.id: item for item in rubric.scoreable_items()}
    covered: dict[str, bool] = {}
    for j in judgments:
        if j.note_id != note_id:
            raise ScoringError(f"judgment for note {j.note_id!r}, expected "
                               f"{note_id!r}")
        if j.item_id not in scoreable:
            raise ScoringError(f"judgment for non-scoreable or unknown item "
                               f"{j.item_id!r}")
        if j.item_id in covered:
            raise ScoringError(f"duplicate judgment for item {j.item_id!r}")
        covered[j.item_id] = j.covered
    missing = [item_id for item_id in scoreable if item_id not in covered]
    if missing:
        raise ScoringError("missing judgment for item(s): "
                           + ", ".join(missing))

    sections = []
    for section in SOAP_SECTIONS:
        items = rubric.items_for(section, scoreable_only=True)
        hits = sum(1 for item in items if covered[item.id])
        sections.append((section, Ratio(float(hits), len(items))))
    note = Ratio(sum(r.value for _, r in sections),
                 sum(r.count for _, r in sections))
    covered_ids = tuple(item_id for item_id in scoreable if covered[item_id])
    return DimensionReport(tuple(sections), note, covered_ids)


def _sentence_flag_report(flags: Mapping[tuple[Section, int], bool],
                          sentences: Sequence[Sentence]) -> DimensionReport:
    sections = []
    total_good = 0
    total = 0
    for section in SOAP_SECTIONS:
        keys = [(s.section, s.index) for s in sentences
                if s.section == section]
        if not keys:
            continue
        good = sum(1 for k in keys if flags[k])
        sections.append((section, Ratio(float(good), len(keys))))
        total_good += good
        total += len(keys)
    note = Ratio(float(total_good), total) if total else None
    return DimensionReport(tuple(sections), note)


def _collect_sentence_judgments(judgments, sentences, note_id):
    domain = {(s.section, s.index) for s in sentences}
    seen: dict[tuple[Section, int], object] = {}
    for j in judgments:
        if j.note_id != note_id:
            raise ScoringError(f"judgment for note {j.note_id!r}, expected "
                               f"{note_id!r}")
        key = (j.section, j.sentence_index)
        if key not in domain:
            raise ScoringError(f"judgment for nonexistent sentence "
                               f"{j.section.value}[{j.sentence_index}]")
        if key in seen:
            raise ScoringError(f"duplicate judgment for sentence "
                               f"{j.section.value}[{j.sentence_index}]")
        seen[key] = j
    missing = sorted(domain - seen.keys(),
                     key=lambda k: (SOAP_SECTIONS.index(k[0]), k[1]))
    if missing:
        names = ", ".join(f"{s.value}[{i}]" for s, i in missing)
        raise ScoringError(f"missing judgment for sentence(s): {names}")
    return seen


def conciseness_scores(judgments: Iterable[ConcisenessJudgment],
                       sentences: Sequence[Sentence],
                       note_id: str) -> DimensionReport:
    """Share of sentences labeled with some rubric item (not UNNECESSARY)."""
    seen = _collect_sentence_judgments(judgments, sentences, note_id)
    flags = {k: j.label != UNNECESSARY for k, j in seen.items()}
    return _sentence_flag_report(flags, sentences)


def faithfulness_scores_human(judgments: Iterable[FaithfulnessJudgment],
                              sentences: Sequence[Sentence],
                              note_id: str) -> DimensionReport:
    """Share of sentences judged free of hallucination."""
    seen = _collect_sentence_judgments(judgments, sentences, note_id)
    flags = {k: j.category is FaithfulnessCategory.NO_ERROR
             for k, j in seen.items()}
    return _sentence_flag_report(flags, sentences)


def faithfulness_scores_align(scores: Iterable[AlignmentScore],
                              sentences: Sequence[Sentence],
                              note_id: str) -> DimensionReport:
    """Mean alignment score per section (x100); note level micro-averages
    over sentences."""
    domain = {(s.section, s.index) for s in sentences}
    seen: dict[tuple[Section, int], float] = {}
    for s in scores:
        if s.note_id != note_id:
            raise ScoringError(f"alignment score for note {s.note_id!r}, "
                               f"expected {note_id!r}")
        s.validate()
        key = (s.section, s.sentence_index)
        if key not in domain:
            raise ScoringError(f"alignment score for nonexistent sentence "
                               f"{s.section.value}[{s.sentence_index}]")
        if key in seen:
            raise ScoringError(f"duplicate alignment score for sentence "
                               f"{s.section.value}[{s.sentence_index}]")
        seen[key] = s.score
    missing = domain - seen.keys()
    if missing:
        raise ScoringError(f"missing alignment score for {len(missing)} "
                           "sentence(s)")

    sections = []
    total_sum = 0.0
    total = 0
    for section in SOAP_SECTIONS:
        keys = [(s.section, s.index) for s in sentences
                if s.section == section]
        if not keys:
            continue
        section_sum = sum(seen[k] for k in keys)
        sections.append((section, Ratio(section_sum, len(keys))))
        total_sum += section_sum
        total += len(keys)
    note = Ratio(total_sum, total) if total else None
    return DimensionReport(tuple(sections), note)


_LIKERT_DIMENSIONS = (EvalDimension.COMPLETENESS, EvalDimension.CONCISENESS,
                      EvalDimension.FAITHFULNESS, EvalDimension.ACCEPTANCE)


def likert_scores(judgments: Iterable[LikertJudgment],
                  note_id: str) -> tuple[tuple[EvalDimension, LikertReport], ...]:
    """Section ratings per dimension; note level is the unweighted mean of
    the section ratings (acceptance is its single whole-note rating)."""
    by_dim: dict[EvalDimension, dict[str, int]] = {}
    for j in judgments:
        if j.note_id != note_id:
            raise ScoringError(f"judgment for note {j.note_id!r}, expected "
                               f"{note_id!r}")
        j.validate()
        scopes = by_dim.setdefault(j.dimension, {})
        if j.scope in scopes:
            raise ScoringError(f"duplicate likert rating for "
                               f"{j.dimension.value}/{j.scope}")
        if (j.scope == WHOLE_NOTE
                and j.dimension is not EvalDimension.ACCEPTANCE):
            raise ScoringError(f"{j.dimension.value} rating must be "
                               "per-section")
        scopes[j.scope] = j.score

    reports = []
    for dimension in _LIKERT_DIMENSIONS:
        scopes = by_dim.get(dimension)
        if not scopes:
            continue
        if dimension is EvalDimension.ACCEPTANCE:
            reports.append((dimension,
                            LikertReport((), float(scopes[WHOLE_NOTE]))))
            continue
        sections = tuple((s, scopes[s.value]) for s in SOAP_SECTIONS
                         if s.value in scopes)
        note = (sum(v for _, v in sections) / len(sections)
                if sections else None)
        reports.append((dimension, LikertReport(sections, note)))
    return tuple(reports)


# ---------------------------------------------------------------------------
# Payload validators (shared by the server and the annotation UI conformance
# fixtures): they enforce everything a task submission must satisfy.
# ---------------------------------------------------------------------------

def validate_completeness_set(judgments: Sequence[CompletenessJudgment],
                              rubric: Rubric, note_id: str) -> None:
    completeness_scores(judgments, rubric, note_id)


def validate_conciseness_set(judgments: Sequence[ConcisenessJudgment],
                             sentences: Sequence[Sentence], note_id: str,
                             rubric: Rubric | None = None) -> None:
    seen = _collect_sentence_judgments(judgments, sentences, note_id)
    if rubric is not None:
        by_section = {s: {i.id for i in rubric.items_for(s, True)}
                      for s in SOAP_SECTIONS}
        for (section, index), j in seen.items():
            if j.label != UNNECESSARY and j.label not in by_section[section]:
                raise ScoringError(
                    f"sentence {section.value}[{index}] labeled with "
                    f"{j.label!r}, not a scoreable {section.value} item")


def validate_faithfulness_set(judgments: Sequence[FaithfulnessJudgment],
                              sentences: Sequence[Sentence], note_id: str,
                              transcript: Transcript | None = None) -> None:
    seen = _collect_sentence_judgments(judgments, sentences, note_id)
    for (section, index), j in seen.items():
        if (j.category is FaithfulnessCategory.NO_ERROR
                and j.channel is Channel.HUMAN and not j.supporting_spans):
            raise ScoringError(
                f"sentence {section.value}[{index}]: no-error judgments "
                "require at least one supporting span")
        if transcript is not None:
            for (turn, start, end) in j.supporting_spans:
                if not 0 <= turn < len(transcript.turns):
                    raise ScoringError(
                        f"sentence {section.value}[{index}]: span turn "
                        f"{turn} out of range")
                if not 0 <= start < end <= len(transcript.turns[turn].text):
                    raise ScoringError(
                        f"sentence {section.value}[{index}]: span "
                        f"({turn}, {start}, {end}) outside the turn text")


def validate_likert_set(judgments: Sequence[LikertJudgment],
                        note_id: str) -> None:
    """A full Likert baseline: 4 sections x 3 dimensions + 1 acceptance."""
    reports = dict(likert_scores(judgments, note_id))
    for dimension in (EvalDimension.COMPLETENESS, EvalDimension.CONCISENESS,
                      EvalDimension.FAITHFULNESS):
        report = reports.get(dimension)
        got = len(report.sections) if report else 0
        if got != len(SOAP_SECTIONS):
            raise ScoringError(f"{dimension.value}: expected ratings for "
                               f"all {len(SOAP_SECTIONS)} sections, got {got}")
    if EvalDimension.ACCEPTANCE not in reports:
        raise ScoringError("missing whole-note acceptance rating")
    if len(judgments) != 13:
        raise ScoringError(f"expected 13 likert judgments, got "
                           f"{len(judgments)}")


# ---------------------------------------------------------------------------
# JSONL codec
# ---------------------------------------------------------------------------

def judgment_to_record(j: Judgment | AlignmentScore) -> dict:
    if isinstance(j, CompletenessJudgment):
        return {"kind": "completeness", "note_id": j.note_id,
                "item_id": j.item_id, "covered": j.covered,
                "judge": j.judge, "channel": j.channel.value}
    if isinstance(j, ConcisenessJudgment):
        return {"kind": "conciseness", "note_id": j.note_id,
                "section": j.section.value,
                "sentence_index": j.sentence_index, "label": j.label,
                "judge": j.judge, "channel": j.channel.value}
    if isinstance(j, FaithfulnessJudgment):
        return {"kind": "faithfulness", "note_id": j.note_id,
                "section": j.section.value,
                "sentence_index": j.sentence_index,
                "category": j.category.value,
                "supporting_spans": [list(s) for s in j.supporting_spans],
                "judge": j.judge, "channel": j.channel.value}
    if isinstance(j, LikertJudgment):
        return {"kind": "likert", "note_id": j.note_id, "scope": j.scope,
                "dimension": j.dimension.value, "score": j.score,
                "judge": j.judge, "channel": j.channel.value}
    if isinstance(j, AlignmentScore):
        return {"kind": "alignment", "note_id": j.note_id,
                "section": j.section.value,
                "sentence_index": j.sentence_index, "score": j.score,
                "scorer_id": j.scorer_id}
    raise TypeError(f"not a judgment: {j!r}")


def judgment_from_record(record: Mapping) -> Judgment | AlignmentScore:
    kind = record.get("kind")
    try:
        if kind == "completeness":
            return CompletenessJudgment(
                note_id=record["note_id"], item_id=record["item_id"],
                covered=bool(record["covered"]), judge=record["judge"],
                channel=Channel(record["channel"]))
        if kind == "conciseness":
            return ConcisenessJudgment(
                note_id=record["note_id"],
                section=Section(record["section"]),
                sentence_index=int(record["sentence_index"]),
                label=record["label"], judge=record["judge"],
                channel=Channel(record["channel"]))
        if kind == "faithfulness":
            return FaithfulnessJudgment(
                note_id=record["note_id"],
                section=Section(record["section"]),
                sentence_index=int(record["sentence_index"]),
                category=FaithfulnessCategory(record["category"]),
                supporting_spans=tuple(
                    (int(t), int(a), int(b))
                    for t, a, b in record.get("supporting_spans", [])),
                judge=record["judge"], channel=Channel(record["channel"]))
        if kind == "likert":
            j = LikertJudgment(
                note_id=record["note_id"], scope=record["scope"],
                dimension=EvalDimension(record["dimension"]),
                score=int(record["score"]), judge=record["judge"],
                channel=Channel(record["channel"]))
            j.validate()
            return j
        if kind == "alignment":
            s = AlignmentScore(
                note_id=record["note_id"],
                section=Section(record["section"]),
                sentence_index=int(record["sentence_index"]),
                score=float(record["score"]),
                scorer_id=record.get("scorer_id", ""))
            s.validate()
            return s
    except KeyError as exc:
        raise ScoringError(f"judgment record missing field "
                           f"{exc.args[0]!r}") from None
    except ValueError as exc:
        raise ScoringError(f"bad judgment record: {exc}") from None
    raise ScoringError(f"unknown judgment kind {kind!r}")


def read_judgments_jsonl(path: str | Path) -> list[Judgment | AlignmentScore]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(judgment_from_record(json.loads(line)))
            except (json.JSONDecodeError, ScoringError) as exc:
                raise ScoringError(f"{path}:{line_no}: {exc}") from None
    return out


def write_judgments_jsonl(judgments: Iterable[Judgment | AlignmentScore],
                          path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for j in judgments:
            fh.write(json.dumps(judgment_to_record(j), ensure_ascii=False)
                     + "\n")


# ---------------------------------------------------------------------------
# Report serialization and corpus aggregation
# ---------------------------------------------------------------------------

def _num(value: float) -> float | int:
    return int(value) if value == int(value) else value


def _ratio_dict(r: Ratio) -> dict:
    return {"value": _num(r.value), "count": r.count,
            "percent": round(r.percent, 1)}


def _dimension_dict(d: DimensionReport, with_items: bool = False) -> dict:
    out: dict = {
        "sections": {s.value: _ratio_dict(r) for s, r in d.sections},
        "note": _ratio_dict(d.note) if d.note else None,
    }
    if with_items:
        out["covered_items"] = list(d.covered_items)
    return out


def report_to_dict(report: ScoreReport) -> dict:
    out: dict = {"note_id": report.note_id, "source": report.source}
    if report.judge:
        out["judge"] = report.judge
    if report.completeness:
        out["completeness"] = _dimension_dict(report.completeness,
                                              with_items=True)
    if report.conciseness:
        out["conciseness"] = _dimension_dict(report.conciseness)
    if report.faithfulness:
        out["faithfulness"] = _dimension_dict(report.faithfulness)
    if report.likert:
        out["likert"] = {
            dim.value: {
                "sections": {s.value: score for s, score in rep.sections},
                "note": round(rep.note, 2) if rep.note is not None else None,
            }
            for dim, rep in report.likert
        }
    if report.partial:
        out["partial"] = True
        out["errors"] = list(report.errors)
    return out


def mean_std(values: Sequence[float]) -> tuple[float, float | None]:
    """Mean and sample (n-1) standard deviation; std is None when n < 2."""
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, None
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, var ** 0.5


def format_mean_std(mean: float, std: float | None, decimals: int = 1) -> str:
    if std is None:
        return f"{mean:.{decimals}f}"
    return f"{mean:.{decimals}f} (±{std:.{decimals}f})"


_RUBRIC_DIMENSIONS = ("completeness", "conciseness", "faithfulness")


def corpus_summary(reports: Sequence[ScoreReport],
                   rubric: Rubric | None = None) -> dict:
    """Mean (+-std) per dimension per scope, plus a per-item coverage table.

    Scopes are the note level and each SOAP section; entries appear only
    when at least one report defines the score."""
    if not reports:
        raise ScoringError("corpus summary needs at least one report")

    def aggregate(values: list[float], decimals: int = 1) -> dict:
        mean, std = mean_std(values)
        return {"mean": round(mean, decimals),
                "std": round(std, decimals) if std is not None else None,
                "n": len(values),
                "formatted": format_mean_std(mean, std, decimals)}

    summary: dict = {"n_notes": len(reports), "dimensions": {}}
    for name in _RUBRIC_DIMENSIONS:
        fragments = [(r, getattr(r, name)) for r in reports
                     if getattr(r, name) is not None]
        if not fragments:
            continue
        entry: dict = {}
        notes = [f.note.percent for _, f in fragments if f.note]
        if notes:
            entry["note"] = aggregate(notes)
        for section in SOAP_SECTIONS:
            values = [dict(f.sections)[section].percent
                      for _, f in fragments if section in dict(f.sections)]
            if values:
                entry[section.value] = aggregate(values)
        summary["dimensions"][name] = entry

    likert: dict = {}
    for dimension in _LIKERT_DIMENSIONS:
        per_scope: dict[str, list[float]] = {}
        for report in reports:
            rep = dict(report.likert).get(dimension)
            if rep is None:
                continue
            if rep.note is not None:
                per_scope.setdefault("note", []).append(rep.note)
            for section, score in rep.sections:
                per_scope.setdefault(section.value, []).append(float(score))
        if per_scope:
            entry = {}
            if "note" in per_scope:
                entry["note"] = aggregate(per_scope["note"], 2)
            for section in SOAP_SECTIONS:
                if section.value in per_scope:
                    entry[section.value] = aggregate(
                        per_scope[section.value], 2)
            likert[dimension.value] = entry
    if likert:
        summary["likert"] = likert

    coverage = item_coverage(reports, rubric)
    if coverage:
        summary["item_coverage"] = coverage
    return summary


def item_coverage(reports: Sequence[ScoreReport],
                  rubric: Rubric | None = None) -> list[dict]:
    """Per-rubric-item coverage rate, grouped by note source."""
    with_completeness = [r for r in reports if r.completeness is not None]
    if not with_completeness:
        return []
    sources = sorted({r.source for r in with_completeness})
    if rubric is not None:
        item_ids = [item.id for item in rubric.scoreable_items()]
    else:
        item_ids = sorted({i for r in with_completeness
                           for i in r.completeness.covered_items})
    rows = []
    for item_id in item_ids:
        by_source = {}
        for source in sources:
            group = [r for r in with_completeness if r.source == source]
            covered = sum(1 for r in group
                          if item_id in r.completeness.covered_items)
            by_source[source] = {
                "covered": covered,
                "total": len(group),
                "percent": round(100.0 * covered / len(group), 1),
            }
        rows.append({"item": item_id, "by_source": by_source})
    return rows


def reports_to_csv(reports: Sequence[ScoreReport]) -> str:
    """One row per note x dimension x scope, for distribution plots."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["note_id", "source", "protocol", "dimension", "scope",
                     "score"])
    for report in reports:
        for name in _RUBRIC_DIMENSIONS:
            fragment = getattr(report, name)
            if fragment is None:
                continue
            if fragment.note:
                writer.writerow([report.note_id, report.source, "rubric",
                                 name, "note", round(fragment.note.percent, 4)])
            for section, ratio in fragment.sections:
                writer.writerow([report.note_id, report.source, "rubric",
                                 name, section.value,
                                 round(ratio.percent, 4)])
        for dimension, rep in report.likert:
            if rep.note is not None:
                writer.writerow([report.note_id, report.source, "likert",
                                 dimension.value, "note",
                                 round(rep.note, 4)])
            for section, score in rep.sections:
                writer.writerow([report.note_id, report.source, "likert",
                                 dimension.value, section.value, score])
    return buf.getvalue()
