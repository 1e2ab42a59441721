"""Prompt templates and rendering for the LLM judge and note generation.

Templates ship as data files and are loaded verbatim: the judge prompts end
with constrained-answer instructions the response parsers rely on, and some
lines carry significant trailing whitespace, so the text lives outside
Python source where editors cannot touch it. Golden-file tests pin the
bytes.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from typing import Mapping


class PromptError(ValueError):
    """Raised for unknown templates or incomplete bindings."""


class TemplateId(str, Enum):
    COMPLETENESS_ITEM = "CompletenessItem"
    CONCISENESS_SENTENCE = "ConcisenessSentence"
    LIKERT_COMPLETENESS = "LikertCompleteness"
    LIKERT_CONCISENESS = "LikertConciseness"
    LIKERT_FAITHFULNESS = "LikertFaithfulness"
    NOTE_GENERATION = "NoteGeneration"


def _load_template(template_id: TemplateId) -> str:
    ref = resources.files("tneval.data").joinpath(
        f"templates/{template_id.value}.txt")
    return ref.read_text(encoding="utf-8")


TEMPLATES: dict[TemplateId, str] = {tid: _load_template(tid)
                                    for tid in TemplateId}

# Declared placeholders per template.  Substitution is restricted to these
# exact tokens: the note-generation template contains literal braces that
# must survive rendering untouched.
PLACEHOLDERS: dict[TemplateId, tuple[str, ...]] = {
    TemplateId.COMPLETENESS_ITEM: ("note_segment", "rubric_item"),
    TemplateId.CONCISENESS_SENTENCE: ("note_sentence", "rubrics"),
    TemplateId.LIKERT_COMPLETENESS: ("conversation", "note_segment",
                                     "rubrics"),
    TemplateId.LIKERT_CONCISENESS: ("conversation", "note_segment",
                                    "rubrics"),
    TemplateId.LIKERT_FAITHFULNESS: ("conversation", "note_segment"),
    TemplateId.NOTE_GENERATION: ("Conversation",),
}


@dataclass(frozen=True)
class PromptRecord:
    template_id: TemplateId
    rendered_text: str
    bindings: tuple[tuple[str, str], ...]
    cache_key: str


def cache_key_for(template_id: TemplateId, rendered_text: str,
                  model_id: str) -> str:
    digest = hashlib.sha256()
    for part in (template_id.value, model_id, rendered_text):
        digest.update(part.encode("utf-8"))
        digest.update(b"\x00")
    return digest.hexdigest()


def prompt_sha256(rendered_text: str) -> str:
    """Hash scripted mock clients key their replies by."""
    return hashlib.sha256(rendered_text.encode("utf-8")).hexdigest()


def render_prompt(template_id: TemplateId, bindings: Mapping[str, str],
                  model_id: str = "") -> PromptRecord:
    """Instantiate a template; every declared placeholder must be bound."""
    try:
        template = TEMPLATES[template_id]
    except KeyError:
        raise PromptError(f"unknown template {template_id!r}") from None
    declared = PLACEHOLDERS[template_id]
    missing = [name for name in declared if name not in bindings]
    if missing:
        raise PromptError(f"{template_id.value}: missing placeholder "
                          f"binding(s): {', '.join(missing)}")
    unknown = [name for name in bindings if name not in declared]
    if unknown:
        raise PromptError(f"{template_id.value}: unknown binding(s): "
                          f"{', '.join(unknown)}")
    # Single-pass substitution: binding values are never re-scanned, so a
    # value containing "{rubrics}" cannot inject into another placeholder.
    pattern = re.compile("|".join(r"\{" + re.escape(name) + r"\}"
                                  for name in declared))
    text = pattern.sub(lambda m: str(bindings[m.group(0)[1:-1]]), template)
    return PromptRecord(
        template_id=template_id,
        rendered_text=text,
        bindings=tuple(sorted((k, str(v)) for k, v in bindings.items())),
        cache_key=cache_key_for(template_id, text, model_id),
    )
