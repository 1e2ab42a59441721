"""SOAP note generation from transcripts, plus note-length statistics."""

from __future__ import annotations

from typing import Sequence

from .clients import LlmClient
from .corpus import CorpusError, SoapNote, Transcript, conversation_text, parse_note
from .prompts import TemplateId, render_prompt
from .rubric import SOAP_SECTIONS
from .scoring import format_mean_std, mean_std


class GenerationError(RuntimeError):
    """The model never produced a parseable note."""


def generate_note(client: LlmClient, transcript: Transcript,
                  source_label: str | None = None,
                  note_id: str | None = None) -> SoapNote:
    """Prompt for a note over the conversation and parse the reply.

    Returns a fully-formed note or raises; unparseable replies are retried
    (fresh calls only - a cached bad reply replays as a failure)."""
    if not transcript.turns:
        raise ValueError("cannot generate a note for an empty transcript")
    source = source_label or client.model_id
    record = render_prompt(
        TemplateId.NOTE_GENERATION,
        {"Conversation": conversation_text(transcript)},
        client.model_id,
    )
    completion = client.complete(record)
    retries = 0
    while True:
        try:
            return parse_note(completion.reply, transcript.id, source,
                              note_id=note_id)
        except CorpusError as exc:
            if completion.from_cache or retries >= client.config.max_retries:
                raise GenerationError(
                    f"transcript {transcript.id!r}: reply not parseable as "
                    f"a note ({exc})") from None
            completion = client.complete(record, bypass_cache=True)
            retries += 1


def note_length_stats(notes: Sequence[SoapNote]) -> dict:
    """Per-section word counts (whitespace tokens): mean, sample std, and a
    'M (+-SD)' rendering."""
    if not notes:
        raise ValueError("note length stats need at least one note")
    out = {}
    for section in SOAP_SECTIONS:
        counts = [float(len(note.sections[section].split()))
                  for note in notes]
        mean, std = mean_std(counts)
        out[section.value] = {
            "mean": round(mean, 1),
            "std": round(std, 1) if std is not None else None,
            "n": len(counts),
            "formatted": format_mean_std(mean, std, 0),
        }
    return out
