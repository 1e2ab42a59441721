"""Transcript/note ingestion and the sentence segmentation judgments refer to."""

from __future__ import annotations

import csv
import json
import re
import unicodedata
from dataclasses import dataclass
from enum import Enum
from json import JSONDecoder
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .rubric import SOAP_SECTIONS, Section


class CorpusError(ValueError):
    """Raised for malformed transcripts or notes."""


class Speaker(str, Enum):
    THERAPIST = "therapist"
    CLIENT = "client"


def _nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


@dataclass(frozen=True)
class Turn:
    speaker: Speaker
    text: str


@dataclass(frozen=True)
class Transcript:
    id: str
    turns: tuple[Turn, ...]

    def validate(self) -> None:
        if not self.turns:
            raise CorpusError(f"transcript {self.id!r} has no turns")
        for i, turn in enumerate(self.turns):
            if not turn.text:
                raise CorpusError(f"transcript {self.id!r} turn {i} is empty")


@dataclass(frozen=True)
class SoapNote:
    id: str
    transcript_id: str
    source: str
    sections: Mapping[Section, str]

    def validate(self) -> None:
        missing = [s.value for s in SOAP_SECTIONS if s not in self.sections]
        if missing:
            raise CorpusError(f"note {self.id!r} is missing sections: "
                              f"{', '.join(missing)}")


@dataclass(frozen=True)
class Sentence:
    note_id: str
    section: Section
    index: int
    text: str
    span: tuple[int, int]


def parse_transcript(record: Mapping) -> Transcript:
    """Build a Transcript from one JSONL record."""
    turns = record.get("turns")
    if not turns:
        raise CorpusError(f"transcript {record.get('id')!r} has no turns")
    parsed = []
    for i, raw in enumerate(turns):
        label = str(raw.get("speaker", "")).strip().lower()
        try:
            speaker = Speaker(label)
        except ValueError:
            raise CorpusError(f"transcript {record.get('id')!r} turn {i}: "
                              f"unknown speaker {raw.get('speaker')!r}") from None
        text = _nfc(str(raw.get("text", "")).strip())
        if not text:
            raise CorpusError(f"transcript {record.get('id')!r} turn {i} "
                              "is empty")
        parsed.append(Turn(speaker, text))
    transcript = Transcript(id=str(record.get("id", "")), turns=tuple(parsed))
    transcript.validate()
    return transcript


def transcript_to_record(transcript: Transcript) -> dict:
    return {
        "id": transcript.id,
        "turns": [{"speaker": t.speaker.value, "text": t.text}
                  for t in transcript.turns],
    }


def read_transcripts_jsonl(path: str | Path) -> list[Transcript]:
    transcripts = []
    for line_no, record in _iter_jsonl(path):
        try:
            transcripts.append(parse_transcript(record))
        except CorpusError as exc:
            raise CorpusError(f"{path}:{line_no}: {exc}") from None
    return transcripts


def read_annomi_csv(path: str | Path) -> list[Transcript]:
    """Adapter for AnnoMI-style CSVs with transcript_id / interlocutor /
    utterance_text columns; rows grouped by transcript in file order."""
    grouped: dict[str, list[Turn]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for i, row in enumerate(csv.DictReader(fh)):
            try:
                tid = str(row["transcript_id"])
                label = row["interlocutor"].strip().lower()
                text = _nfc(row["utterance_text"].strip())
            except KeyError as exc:
                raise CorpusError(f"{path}: row {i} missing column "
                                  f"{exc.args[0]!r}") from None
            if not text:
                continue
            try:
                speaker = Speaker(label)
            except ValueError:
                raise CorpusError(f"{path}: row {i}: unknown interlocutor "
                                  f"{row['interlocutor']!r}") from None
            grouped.setdefault(tid, []).append(Turn(speaker, text))
    transcripts = [Transcript(id=tid, turns=tuple(turns))
                   for tid, turns in grouped.items()]
    for t in transcripts:
        t.validate()
    return transcripts


_SECTION_KEYS = {s.value: s for s in SOAP_SECTIONS}


def _match_section_keys(obj: object) -> dict[Section, str] | None:
    """Map a dict's keys onto the four sections, case-insensitively.
    Returns None when any section key is absent."""
    if not isinstance(obj, dict):
        return None
    found: dict[Section, object] = {}
    for key, value in obj.items():
        section = _SECTION_KEYS.get(str(key).strip().lower())
        if section is not None and section not in found:
            found[section] = value
    if len(found) != len(SOAP_SECTIONS):
        return None
    return found  # type: ignore[return-value]


def _candidate_objects(raw_text: str) -> Iterator[object]:
    decoder = JSONDecoder()
    for match in re.finditer(r"\{", raw_text):
        try:
            obj, _ = decoder.raw_decode(raw_text, match.start())
        except json.JSONDecodeError:
            continue
        yield obj


def parse_note(raw_text: str, transcript_id: str, source: str,
               note_id: str | None = None) -> SoapNote:
    """Extract a SOAP note from model output.

    Accepts the bare output-dictionary shape, or the same object wrapped in
    code fences / surrounding prose; section keys match case-insensitively.
    """
    best_partial: dict | None = None
    for obj in _candidate_objects(raw_text):
        sections = _match_section_keys(obj)
        if sections is None:
            if isinstance(obj, dict) and best_partial is None:
                if any(_SECTION_KEYS.get(str(k).strip().lower())
                       for k in obj):
                    best_partial = obj
            continue
        for section, value in sections.items():
            if not isinstance(value, str):
                raise CorpusError(f"section {section.title!r} is not a "
                                  "string")
        note = SoapNote(
            id=note_id or f"{source}:{transcript_id}",
            transcript_id=transcript_id,
            source=source,
            # normalize after JSON decoding so \u-escapes are covered too
            sections={s: _nfc(sections[s].strip()) for s in SOAP_SECTIONS},
        )
        note.validate()
        return note
    if best_partial is not None:
        present = {str(k).strip().lower() for k in best_partial}
        missing = [s.title for s in SOAP_SECTIONS if s.value not in present]
        raise CorpusError("note object is missing sections: "
                          + ", ".join(missing))
    raise CorpusError("no JSON object with the four note sections found")


def note_from_record(record: Mapping) -> SoapNote:
    raw_sections = record.get("sections")
    if not isinstance(raw_sections, Mapping):
        raise CorpusError(f"note {record.get('id')!r} has no sections object")
    sections: dict[Section, str] = {}
    for section in SOAP_SECTIONS:
        value = None
        for key, v in raw_sections.items():
            if str(key).strip().lower() == section.value:
                value = v
                break
        if value is None:
            raise CorpusError(f"note {record.get('id')!r} is missing "
                              f"section {section.title!r}")
        if not isinstance(value, str):
            raise CorpusError(f"note {record.get('id')!r} section "
                              f"{section.title!r} is not a string")
        sections[section] = _nfc(value.strip())
    note = SoapNote(
        id=str(record.get("id", "")),
        transcript_id=str(record.get("transcript_id", "")),
        source=str(record.get("source", "")),
        sections=sections,
    )
    note.validate()
    return note


def note_to_record(note: SoapNote) -> dict:
    return {
        "id": note.id,
        "transcript_id": note.transcript_id,
        "source": note.source,
        "sections": {s.value: note.sections[s] for s in SOAP_SECTIONS},
    }


def note_to_template_json(note: SoapNote) -> str:
    """Serialize a note in the output-dictionary shape models are asked for."""
    return json.dumps({s.title: note.sections[s] for s in SOAP_SECTIONS},
                      indent=0, ensure_ascii=False)


def read_notes_jsonl(path: str | Path) -> list[SoapNote]:
    notes = []
    seen: set[str] = set()
    for line_no, record in _iter_jsonl(path):
        try:
            note = note_from_record(record)
        except CorpusError as exc:
            raise CorpusError(f"{path}:{line_no}: {exc}") from None
        if note.id in seen:
            raise CorpusError(f"{path}:{line_no}: duplicate note id "
                              f"{note.id!r}")
        seen.add(note.id)
        notes.append(note)
    return notes


def write_notes_jsonl(notes: Iterable[SoapNote], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for note in notes:
            fh.write(json.dumps(note_to_record(note), ensure_ascii=False)
                     + "\n")


def _iter_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield line_no, json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{line_no}: not valid JSON "
                                  f"({exc})") from None


# ---------------------------------------------------------------------------
# Sentence segmentation
# ---------------------------------------------------------------------------

# Terminal period is not a boundary after these tokens (case-insensitive).
DEFAULT_ABBREVIATIONS = ("Dr", "Mr", "Mrs", "Ms", "e.g", "i.e", "etc", "vs",
                         "approx")

_TERMINATORS = ".?!"


def _token_before(text: str, index: int) -> str:
    j = index
    while j > 0 and not text[j - 1].isspace():
        j -= 1
    return text[j:index].lstrip("([{\"'").lower()


def split_spans(text: str,
                abbreviations: Iterable[str] = DEFAULT_ABBREVIATIONS,
                ) -> list[tuple[int, int]]:
    """Sentence spans: boundaries at ./?/! followed by whitespace or end of
    text (unless the period closes an abbreviation token), and at newlines.
    Spans are non-overlapping and separated by whitespace only."""
    abbrevs = {a.lower() for a in abbreviations}
    spans: list[tuple[int, int]] = []
    n = len(text)
    start = -1  # -1: no open sentence
    i = 0

    def close(start: int, end: int) -> None:
        while end > start and text[end - 1].isspace():
            end -= 1
        if end > start:
            spans.append((start, end))

    while i < n:
        ch = text[i]
        if start < 0:
            if ch.isspace():
                i += 1
                continue
            start = i
        if ch == "\n":
            close(start, i)
            start = -1
            i += 1
            continue
        if ch in _TERMINATORS:
            nxt = text[i + 1] if i + 1 < n else None
            if nxt is None or nxt.isspace():
                if not (ch == "." and _token_before(text, i) in abbrevs):
                    close(start, i + 1)
                    start = -1
        i += 1
    if start >= 0:
        close(start, n)
    return spans


def segment_sentences(note: SoapNote,
                      abbreviations: Iterable[str] = DEFAULT_ABBREVIATIONS,
                      ) -> list[Sentence]:
    """Deterministic sentence list over all four sections, in note order."""
    sentences = []
    for section in SOAP_SECTIONS:
        text = note.sections[section]
        for index, (a, b) in enumerate(split_spans(text, abbreviations)):
            sentences.append(Sentence(
                note_id=note.id,
                section=section,
                index=index,
                text=text[a:b],
                span=(a, b),
            ))
    return sentences


def sentences_for_section(sentences: Iterable[Sentence],
                          section: Section) -> list[Sentence]:
    return [s for s in sentences if s.section == section]


def conversation_text(transcript: Transcript) -> str:
    """One 'Speaker: text' line per turn, in session order."""
    return "\n".join(f"{turn.speaker.value.capitalize()}: {turn.text}"
                     for turn in transcript.turns)
