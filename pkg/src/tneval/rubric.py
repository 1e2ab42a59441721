"""SOAP note rubric: types, loading/validation, and majority-vote consolidation."""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence


class RubricError(ValueError):
    """Raised for malformed rubric documents or inconsistent annotations."""


class Section(str, Enum):
    SUBJECTIVE = "subjective"
    OBJECTIVE = "objective"
    ASSESSMENT = "assessment"
    PLAN = "plan"
    GENERAL = "general"

    @property
    def title(self) -> str:
        return self.value.capitalize()


# The four sections a note is scored on, in canonical order.
SOAP_SECTIONS = (
    Section.SUBJECTIVE,
    Section.OBJECTIVE,
    Section.ASSESSMENT,
    Section.PLAN,
)


class Importance(str, Enum):
    MANDATORY = "mandatory"
    MANDATORY_CONDITIONAL = "mandatory_conditional"
    HIGHLY_RECOMMENDED = "highly_recommended"
    GOOD_TO_HAVE = "good_to_have"
    OPTIONAL = "optional"


# Most strict first; majority-vote ties resolve toward the LATER entry.
IMPORTANCE_STRICTNESS = (
    Importance.MANDATORY,
    Importance.MANDATORY_CONDITIONAL,
    Importance.HIGHLY_RECOMMENDED,
    Importance.GOOD_TO_HAVE,
    Importance.OPTIONAL,
)

_ID_RE = re.compile(r"^[a-z]+\.[a-z0-9]+(?:-[a-z0-9]+)*$")


def _normalize_token(value: str) -> str:
    return re.sub(r"[^a-z0-9]+", "", value.lower())


_IMPORTANCE_ALIASES = {
    "mandatory": Importance.MANDATORY,
    "mandatoryconditional": Importance.MANDATORY_CONDITIONAL,
    "mandatoryincertaincircumstances": Importance.MANDATORY_CONDITIONAL,
    "highlyrecommended": Importance.HIGHLY_RECOMMENDED,
    "goodtohave": Importance.GOOD_TO_HAVE,
    "optional": Importance.OPTIONAL,
}


def parse_importance(value: str, where: str = "") -> Importance:
    key = _normalize_token(str(value))
    if key not in _IMPORTANCE_ALIASES:
        raise RubricError(f"{where}: unknown importance level {value!r}")
    return _IMPORTANCE_ALIASES[key]


def parse_section(value: str, where: str = "") -> Section:
    key = _normalize_token(str(value))
    for section in Section:
        if section.value == key:
            return section
    raise RubricError(f"{where}: unknown section {value!r}")


@dataclass(frozen=True)
class RubricItem:
    id: str
    section: Section
    name: str
    description: str
    importance: Importance
    scoreable: bool

    def validate(self, where: str = "") -> None:
        if not _ID_RE.match(self.id):
            raise RubricError(f"{where}: id {self.id!r} must be lowercase "
                              "'<section>.<slug>'")
        prefix = self.id.split(".", 1)[0]
        if prefix != self.section.value:
            raise RubricError(f"{where}: id {self.id!r} does not match "
                              f"section {self.section.value!r}")
        if not self.description:
            raise RubricError(f"{where}: item {self.id!r} has an empty "
                              "description")


@dataclass(frozen=True)
class Rubric:
    version: str
    items: tuple[RubricItem, ...]
    provenance: str = ""

    def validate(self) -> None:
        seen: set[str] = set()
        for i, item in enumerate(self.items):
            where = f"items[{i}]"
            item.validate(where)
            if item.id in seen:
                raise RubricError(f"{where}: duplicate id {item.id!r}")
            seen.add(item.id)
        for section in SOAP_SECTIONS:
            if not self.items_for(section, scoreable_only=True):
                raise RubricError(f"section {section.value!r} has no "
                                  "scoreable items")

    def items_for(self, section: Section,
                  scoreable_only: bool = False) -> tuple[RubricItem, ...]:
        return tuple(item for item in self.items
                     if item.section == section
                     and (item.scoreable or not scoreable_only))

    def scoreable_items(self) -> tuple[RubricItem, ...]:
        return tuple(item for section in SOAP_SECTIONS
                     for item in self.items_for(section, scoreable_only=True))

    def item(self, item_id: str) -> RubricItem:
        for item in self.items:
            if item.id == item_id:
                return item
        raise RubricError(f"unknown rubric item {item_id!r}")


@dataclass(frozen=True)
class ImportanceAnnotation:
    annotator: str
    item_id: str
    section_vote: Section
    importance_vote: Importance


def rubric_from_dict(doc: Mapping) -> Rubric:
    if not isinstance(doc, Mapping) or "items" not in doc:
        raise RubricError("rubric document must be an object with an "
                          "'items' list")
    items = []
    for i, raw in enumerate(doc["items"]):
        where = f"items[{i}]"
        try:
            section = parse_section(raw["section"], where)
            scoreable = raw.get("scoreable",
                                section is not Section.GENERAL)
            items.append(RubricItem(
                id=str(raw["id"]),
                section=section,
                name=str(raw.get("name", "")),
                description=str(raw["description"]),
                importance=parse_importance(raw["importance"], where),
                scoreable=bool(scoreable),
            ))
        except KeyError as exc:
            raise RubricError(f"{where}: missing field {exc.args[0]!r}") from None
    rubric = Rubric(
        version=str(doc.get("version", "")),
        items=tuple(items),
        provenance=str(doc.get("provenance", "")),
    )
    rubric.validate()
    return rubric


def rubric_to_dict(rubric: Rubric) -> dict:
    return {
        "version": rubric.version,
        "provenance": rubric.provenance,
        "items": [
            {
                "id": item.id,
                "section": item.section.value,
                "name": item.name,
                "description": item.description,
                "importance": item.importance.value,
                "scoreable": item.scoreable,
            }
            for item in rubric.items
        ],
    }


def load_rubric(path: str | Path) -> Rubric:
    """Load and validate a rubric JSON file."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise RubricError(f"{path}: not valid JSON ({exc})") from None
    return rubric_from_dict(doc)


def save_rubric(rubric: Rubric, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(rubric_to_dict(rubric), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


# Interventions ships as one merged item; these restore the original split.
_SPLIT_INTERVENTIONS = (
    RubricItem(
        id="objective.interventions-applied",
        section=Section.OBJECTIVE,
        name="Interventions (applied)",
        description="Applied interventions and treatment plans (MI, "
                    "Cognitive Restructuring, DBT, etc.).",
        importance=Importance.HIGHLY_RECOMMENDED,
        scoreable=True,
    ),
    RubricItem(
        id="objective.interventions-active",
        section=Section.OBJECTIVE,
        name="Interventions (active focus)",
        description="Focus on describing active interventions provided "
                    "rather than passive ones.",
        importance=Importance.HIGHLY_RECOMMENDED,
        scoreable=True,
    ),
)


def default_rubric(split_interventions: bool = False,
                   scoreable_general: bool = False) -> Rubric:
    """The rubric shipped with the package (23 scoreable items).

    split_interventions replaces the merged objective interventions item
    with its two original halves; scoreable_general makes the three
    section-agnostic items count toward completeness denominators.
    """
    with resources.files("tneval.data").joinpath("default_rubric.json").open(
            "r", encoding="utf-8") as fh:
        rubric = rubric_from_dict(json.load(fh))
    if split_interventions:
        items = []
        for item in rubric.items:
            if item.id == "objective.interventions":
                items.extend(_SPLIT_INTERVENTIONS)
            else:
                items.append(item)
        rubric = replace(rubric, items=tuple(items))
    if scoreable_general:
        items = tuple(replace(item, scoreable=True)
                      if item.section is Section.GENERAL else item
                      for item in rubric.items)
        rubric = replace(rubric, items=items)
    rubric.validate()
    return rubric


def _majority(votes: Sequence, tie_order: Sequence) -> object:
    """Highest vote count; ties resolve toward the later entry of tie_order."""
    counts = Counter(votes)
    best = max(counts.values())
    tied = [v for v, c in counts.items() if c == best]
    return max(tied, key=lambda v: tie_order.index(v))


def consolidate_rubric(annotations: Iterable[ImportanceAnnotation],
                       draft: Rubric) -> Rubric:
    """Majority-vote section and importance per item across annotators.

    Importance ties break toward the less strict level.  Section ties keep
    the draft's section (no strictness order exists for sections).
    """
    votes: dict[str, list[ImportanceAnnotation]] = {}
    seen: set[tuple[str, str]] = set()
    ids = {item.id for item in draft.items}
    annotators: set[str] = set()
    for ann in annotations:
        if ann.item_id not in ids:
            raise RubricError(f"annotation for unknown item {ann.item_id!r}")
        key = (ann.annotator, ann.item_id)
        if key in seen:
            raise RubricError(f"annotator {ann.annotator!r} voted twice on "
                              f"item {ann.item_id!r}")
        seen.add(key)
        annotators.add(ann.annotator)
        votes.setdefault(ann.item_id, []).append(ann)
    if not annotators:
        raise RubricError("consolidation requires at least one annotator")

    items = []
    for item in draft.items:
        item_votes = votes.get(item.id)
        if not item_votes:
            items.append(item)
            continue
        importance = _majority(
            sorted(ann.importance_vote for ann in item_votes),
            IMPORTANCE_STRICTNESS,
        )
        section_counts = Counter(ann.section_vote for ann in item_votes)
        best = max(section_counts.values())
        tied = [s for s, c in section_counts.items() if c == best]
        section = tied[0] if len(tied) == 1 else item.section
        if section != item.section:
            # keep the id invariant: re-slug under the voted section
            slug = item.id.split(".", 1)[1]
            item = replace(item, id=f"{section.value}.{slug}")
        items.append(replace(item, section=section, importance=importance))

    note = f"consolidated by majority vote over {len(annotators)} annotators"
    provenance = f"{draft.provenance}; {note}" if draft.provenance else note
    consolidated = Rubric(version=draft.version, items=tuple(items),
                          provenance=provenance)
    consolidated.validate()
    return consolidated
