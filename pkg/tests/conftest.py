from __future__ import annotations

import socket
from pathlib import Path

import pytest

from tneval.corpus import SoapNote, Transcript, Turn, Speaker
from tneval.rubric import Section, default_rubric

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def rubric():
    return default_rubric()


def make_note(note_id="n1", transcript_id="c1", source="therapist-pool",
              subjective="Client reports anxiety. Client denies SI.",
              objective="Client appeared calm.",
              assessment="Client is in the contemplation stage.",
              plan="Follow up next week."):
    return SoapNote(
        id=note_id, transcript_id=transcript_id, source=source,
        sections={
            Section.SUBJECTIVE: subjective,
            Section.OBJECTIVE: objective,
            Section.ASSESSMENT: assessment,
            Section.PLAN: plan,
        },
    )


def make_transcript(transcript_id="c1", n_turns=4):
    turns = []
    for i in range(n_turns):
        speaker = Speaker.THERAPIST if i % 2 == 0 else Speaker.CLIENT
        turns.append(Turn(speaker, f"Turn {i} text for {transcript_id}."))
    return Transcript(id=transcript_id, turns=tuple(turns))


@pytest.fixture
def note():
    return make_note()


@pytest.fixture
def transcript():
    return make_transcript()


@pytest.fixture
def no_network(monkeypatch):
    """Any socket use inside the test fails loudly."""
    def guard(*args, **kwargs):
        raise AssertionError("network access attempted during offline test")
    monkeypatch.setattr(socket, "socket", guard)
    monkeypatch.setattr(socket, "create_connection", guard)
