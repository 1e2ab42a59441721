"""Task assignment and the append-only judgment log behind the server.

Every mutation is one JSON line appended to the log; state is an in-memory
index rebuilt by replaying the log, so any prefix of the file is a valid
store and every submitted task carries its complete payload.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .corpus import SoapNote


class StoreError(ValueError):
    """Raised for invalid task operations."""


class StaleRevisionError(StoreError):
    """The submission raced a newer revision of the task."""


class TaskDimension(str, Enum):
    COMPLETENESS = "completeness"
    CONCISENESS = "conciseness"
    FAITHFULNESS = "faithfulness"
    LIKERT_BASELINE = "likert_baseline"


class TaskStatus(str, Enum):
    OPEN = "open"
    SUBMITTED = "submitted"


ANNOTATORS_PER_NOTE = 2


@dataclass(frozen=True)
class AnnotationTask:
    task_id: str
    annotator_id: str
    note_id: str
    dimension: TaskDimension
    status: TaskStatus = TaskStatus.OPEN
    created_at: float = 0.0
    submitted_at: float | None = None
    revision: int = 1


def task_to_dict(task: AnnotationTask) -> dict:
    return {
        "task_id": task.task_id,
        "annotator_id": task.annotator_id,
        "note_id": task.note_id,
        "dimension": task.dimension.value,
        "status": task.status.value,
        "created_at": task.created_at,
        "submitted_at": task.submitted_at,
        "revision": task.revision,
    }


def task_from_dict(doc: Mapping) -> AnnotationTask:
    return AnnotationTask(
        task_id=doc["task_id"],
        annotator_id=doc["annotator_id"],
        note_id=doc["note_id"],
        dimension=TaskDimension(doc["dimension"]),
        status=TaskStatus(doc.get("status", "open")),
        created_at=float(doc.get("created_at", 0.0)),
        submitted_at=doc.get("submitted_at"),
        revision=int(doc.get("revision", 1)),
    )


def assign_tasks(notes: Sequence[SoapNote], annotators: Sequence[str],
                 dimensions: Sequence[TaskDimension],
                 now: float | None = None) -> list[AnnotationTask]:
    """Two distinct annotators per note per dimension, rotating through the
    annotator ring by current load (ties broken by ring position), never
    assigning an annotator a note they authored."""
    if len(annotators) < ANNOTATORS_PER_NOTE:
        raise StoreError(f"need at least {ANNOTATORS_PER_NOTE} annotators")
    if len(set(annotators)) != len(annotators):
        raise StoreError("duplicate annotator ids")
    created = time.time() if now is None else now
    load = {a: 0 for a in annotators}
    ring = {a: i for i, a in enumerate(annotators)}
    tasks = []
    for dimension in dimensions:
        for note in notes:
            eligible = [a for a in annotators if a != note.source]
            if len(eligible) < ANNOTATORS_PER_NOTE:
                raise StoreError(
                    f"note {note.id!r}: fewer than {ANNOTATORS_PER_NOTE} "
                    "eligible annotators (author excluded)")
            eligible.sort(key=lambda a: (load[a], ring[a]))
            for annotator in eligible[:ANNOTATORS_PER_NOTE]:
                load[annotator] += 1
                tasks.append(AnnotationTask(
                    task_id=f"{dimension.value}/{note.id}/{annotator}",
                    annotator_id=annotator,
                    note_id=note.id,
                    dimension=dimension,
                    created_at=created,
                ))
    return tasks


class JudgmentStore:
    """Append-only JSONL log with an in-memory index.

    Writers are serialized behind one lock; readers work on plain dict
    lookups of immutable values.  A trailing partial line (torn write at
    crash) is ignored on replay."""

    def __init__(self, log_path: str | Path | None = None) -> None:
        self.log_path = Path(log_path) if log_path else None
        if self.log_path is not None:
            self.log_path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self.tasks: dict[str, AnnotationTask] = {}
        self.payloads: dict[str, list[dict]] = {}
        self._idempotency: dict[str, str] = {}  # key -> task_id

    @classmethod
    def open(cls, log_path: str | Path) -> "JudgmentStore":
        store = cls(log_path)
        path = Path(log_path)
        if path.exists():
            lines = path.read_text(encoding="utf-8").split("\n")
            for i, line in enumerate(lines):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError:
                    if i == len(lines) - 1:
                        break  # torn final line from a crash
                    raise StoreError(f"{path}: corrupt log line {i + 1}")
                store._apply(record)
        return store

    def _append(self, record: dict) -> None:
        if self.log_path is None:
            return
        with open(self.log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
            fh.flush()

    def _apply(self, record: Mapping) -> None:
        kind = record.get("kind")
        if kind == "task":
            task = task_from_dict(record["task"])
            self.tasks[task.task_id] = task
        elif kind == "submission":
            task = self.tasks.get(record["task_id"])
            if task is None:
                raise StoreError(f"submission for unknown task "
                                 f"{record['task_id']!r}")
            self.tasks[task.task_id] = replace(
                task,
                status=TaskStatus.SUBMITTED,
                submitted_at=record.get("submitted_at"),
                revision=task.revision + 1,
            )
            self.payloads[task.task_id] = list(record["payload"])
            key = record.get("idempotency_key")
            if key:
                self._idempotency[key] = task.task_id
        else:
            raise StoreError(f"unknown log record kind {kind!r}")

    # -- task lifecycle ----------------------------------------------------

    def add_tasks(self, tasks: Iterable[AnnotationTask]) -> None:
        with self._lock:
            for task in tasks:
                if task.task_id in self.tasks:
                    raise StoreError(f"duplicate task id {task.task_id!r}")
                self.tasks[task.task_id] = task
                self._append({"kind": "task", "task": task_to_dict(task)})

    def next_open_task(self, annotator_id: str) -> AnnotationTask | None:
        candidates = [t for t in self.tasks.values()
                      if t.annotator_id == annotator_id
                      and t.status is TaskStatus.OPEN]
        if not candidates:
            return None
        return min(candidates, key=lambda t: t.task_id)

    def submit(self, task_id: str, payload: Sequence[Mapping],
               idempotency_key: str, revision: int | None = None,
               now: float | None = None) -> dict:
        """Atomically mark a task submitted with its full payload.

        Resubmission with a known idempotency key is acknowledged without
        touching the store; anything else against a submitted task, or a
        stale revision, is rejected."""
        with self._lock:
            known = self._idempotency.get(idempotency_key)
            if known is not None:
                task = self.tasks[known]
                return {"task_id": task.task_id,
                        "status": task.status.value,
                        "revision": task.revision,
                        "duplicate": True}
            task = self.tasks.get(task_id)
            if task is None:
                raise StoreError(f"unknown task {task_id!r}")
            if revision is not None and revision != task.revision:
                raise StaleRevisionError(
                    f"task {task_id!r} is at revision {task.revision}, "
                    f"submission expected {revision}")
            if task.status is TaskStatus.SUBMITTED:
                raise StoreError(f"task {task_id!r} is already submitted")
            record = {
                "kind": "submission",
                "task_id": task_id,
                "idempotency_key": idempotency_key,
                "submitted_at": time.time() if now is None else now,
                "payload": list(payload),
            }
            self._apply(record)
            self._append(record)
            task = self.tasks[task_id]
            return {"task_id": task.task_id,
                    "status": task.status.value,
                    "revision": task.revision,
                    "duplicate": False}

    def is_duplicate(self, idempotency_key: str) -> bool:
        return idempotency_key in self._idempotency

    # -- reads ---------------------------------------------------------

    def submitted_payloads(self) -> Iterator[tuple[AnnotationTask, list[dict]]]:
        for task_id in sorted(self.payloads):
            yield self.tasks[task_id], self.payloads[task_id]

    def export_lines(self) -> Iterator[str]:
        if self.log_path is None or not self.log_path.exists():
            return
        with open(self.log_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if line.strip():
                    yield line
