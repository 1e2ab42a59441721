"""Regenerate the offline fixture corpus and its frozen expected outputs.

Run from the repository root:

    python tests/make_fixtures.py

The scripted replies are a deterministic function of each prompt's hash, so
the fixture set stays stable as long as the prompt templates, the default
rubric, and the segmentation rule do not change. Expected outputs under
tests/data/expected/ are produced by the real CLI and frozen; the
acceptance suite replays the CLI and compares bytes.
"""

from __future__ import annotations

import json
import shutil
import sys
from pathlib import Path

DATA = Path(__file__).parent / "data"

from tneval.autoeval import format_rubric_item, format_rubric_items
from tneval.clients import claim_context_sha256
from tneval.corpus import (conversation_text, note_from_record,
                           parse_transcript, segment_sentences)
from tneval.prompts import TemplateId, prompt_sha256, render_prompt
from tneval.rubric import SOAP_SECTIONS, default_rubric
from tneval.scoring import EvalDimension

TRANSCRIPTS = [
    {"id": "c01", "turns": [
        {"speaker": "therapist", "text": "What brings you in today?"},
        {"speaker": "client", "text": "Work has been overwhelming and I "
                                      "cannot sleep."},
        {"speaker": "therapist", "text": "How long has the sleep trouble "
                                         "lasted?"},
        {"speaker": "client", "text": "About three months, since the new "
                                      "project started."},
    ]},
    {"id": "c02", "turns": [
        {"speaker": "therapist", "text": "Last time we talked about the "
                                         "breathing exercises."},
        {"speaker": "client", "text": "I tried them twice and they helped a "
                                      "little."},
        {"speaker": "therapist", "text": "That is a good start. What got in "
                                         "the way?"},
        {"speaker": "client", "text": "Evenings are chaotic with the kids "
                                      "at home."},
    ]},
    {"id": "c03", "turns": [
        {"speaker": "therapist", "text": "You mentioned wanting to cut back "
                                         "on drinking."},
        {"speaker": "client", "text": "Yes, my partner keeps bringing it "
                                      "up and we argue."},
        {"speaker": "therapist", "text": "What would cutting back look like "
                                         "for you?"},
        {"speaker": "client", "text": "Maybe only weekends, nothing during "
                                      "the week."},
    ]},
    {"id": "c04", "turns": [
        {"speaker": "therapist", "text": "How did the job interview go?"},
        {"speaker": "client", "text": "I froze up again and left before it "
                                      "finished."},
        {"speaker": "therapist", "text": "That sounds really hard. What was "
                                         "happening in your body?"},
        {"speaker": "client", "text": "My chest got tight and my thoughts "
                                      "raced."},
    ]},
    {"id": "c05", "turns": [
        {"speaker": "therapist", "text": "You said mornings are the hardest "
                                         "part of the day."},
        {"speaker": "client", "text": "Getting out of bed feels pointless "
                                      "some days."},
        {"speaker": "therapist", "text": "Are there mornings that feel "
                                         "easier?"},
        {"speaker": "client", "text": "When my sister calls, I usually get "
                                      "up and make coffee."},
    ]},
]

NOTES = [
    {"id": "n01", "transcript_id": "c01", "source": "writer-pool",
     "sections": {
         "subjective": "Client reports work stress and poor sleep for "
                       "three months. Client denies SI.",
         "objective": "Client appeared tired. Speech was slowed.",
         "assessment": "Insomnia appears linked to occupational stress.",
         "plan": "Begin sleep hygiene routine. Follow up next week.",
     }},
    {"id": "n02", "transcript_id": "c02", "source": "writer-pool",
     "sections": {
         "subjective": "Client tried breathing exercises twice with some "
                       "relief. Evenings remain chaotic.",
         "objective": "Client was engaged and open.",
         "assessment": "Partial adherence to homework. Progress is steady.",
         "plan": "Met with Dr. Smith to review referrals. Continue "
                 "breathing practice.",
     }},
    {"id": "n03", "transcript_id": "c03", "source": "model-x",
     "sections": {
         "subjective": "Client wants to reduce drinking to weekends only. "
                       "Partner conflict is a recurring stressor. Client "
                       "describes arguments at home.",
         "objective": "Client maintained eye contact. Affect was "
                      "constricted. No intoxication observed.",
         "assessment": "Client is in the contemplation stage of change. "
                       "Motivation is externally driven.",
         "plan": "Short-term goal is weekend-only drinking. Long-term goal "
                 "is sustained reduction. Schedule follow-up in two weeks.",
     }},
    {"id": "n04", "transcript_id": "c04", "source": "model-y",
     "sections": {
         "subjective": "Client froze during a job interview and left "
                       "early. Client reports racing thoughts (e.g. worry "
                       "about judgment).",
         "objective": "Client demonstrated visible tension. Posture was "
                      "guarded.",
         "assessment": "Panic symptoms triggered by evaluative settings. "
                       "Pattern is consistent with prior episodes.",
         "plan": "Practice grounding before interviews. Review exposure "
                 "ladder next session.",
     }},
    {"id": "n05", "transcript_id": "c05", "source": "writer-pool",
     "sections": {
         "subjective": "Client reports low motivation in the mornings. "
                       "Calls from sister help.",
         "objective": "",
         "assessment": "Depressive symptoms most pronounced in the "
                       "morning.",
         "plan": "Schedule morning activation tasks. Follow up in one "
                 "week.",
     }},
]


def scripted_reply(prompt: str) -> str:
    """Deterministic pseudo-judgment from the prompt hash."""
    digest = int(prompt_sha256(prompt), 16)
    if "Rating Codebook" in prompt:
        return str(1 + digest % 5)
    return "Yes" if digest % 3 else "No"


def scripted_score(claim: str, context: str) -> float:
    return (int(claim_context_sha256(claim, context), 16) % 1000) / 1000.0


def write_corpus() -> None:
    DATA.mkdir(exist_ok=True)
    with open(DATA / "transcripts.jsonl", "w", encoding="utf-8") as fh:
        for record in TRANSCRIPTS:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    with open(DATA / "notes.jsonl", "w", encoding="utf-8") as fh:
        for record in NOTES:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def enumerate_eval_prompts():
    """Every prompt the BOTH-protocol evaluation renders over the corpus."""
    rubric = default_rubric()
    transcripts = {t.id: t for t in map(parse_transcript, TRANSCRIPTS)}
    prompts = []
    claims = []
    for record in NOTES:
        note = note_from_record(record)
        transcript = transcripts[note.transcript_id]
        conversation = conversation_text(transcript)
        sentences = segment_sentences(note)
        for section in SOAP_SECTIONS:
            text = note.sections[section]
            items = rubric.items_for(section, scoreable_only=True)
            for item in items:
                prompts.append(render_prompt(
                    TemplateId.COMPLETENESS_ITEM,
                    {"note_segment": text,
                     "rubric_item": format_rubric_item(item)}))
            for dimension, template in (
                    (EvalDimension.COMPLETENESS,
                     TemplateId.LIKERT_COMPLETENESS),
                    (EvalDimension.CONCISENESS,
                     TemplateId.LIKERT_CONCISENESS),
                    (EvalDimension.FAITHFULNESS,
                     TemplateId.LIKERT_FAITHFULNESS)):
                bindings = {"conversation": conversation,
                            "note_segment": text}
                if dimension is not EvalDimension.FAITHFULNESS:
                    bindings["rubrics"] = format_rubric_items(items)
                prompts.append(render_prompt(template, bindings))
        for sentence in sentences:
            items = rubric.items_for(sentence.section, scoreable_only=True)
            prompts.append(render_prompt(
                TemplateId.CONCISENESS_SENTENCE,
                {"note_sentence": sentence.text,
                 "rubrics": format_rubric_items(items)}))
            claims.append((sentence.text, conversation))
    return prompts, claims


def write_scripted_files() -> None:
    prompts, claims = enumerate_eval_prompts()
    seen = set()
    with open(DATA / "replies.jsonl", "w", encoding="utf-8") as fh:
        for record in prompts:
            key = prompt_sha256(record.rendered_text)
            if key in seen:
                continue
            seen.add(key)
            fh.write(json.dumps({
                "prompt_sha256": key,
                "reply": scripted_reply(record.rendered_text),
            }) + "\n")
    seen = set()
    with open(DATA / "scores.jsonl", "w", encoding="utf-8") as fh:
        for claim, context in claims:
            key = claim_context_sha256(claim, context)
            if key in seen:
                continue
            seen.add(key)
            fh.write(json.dumps({
                "claim_sha256": key,
                "score": scripted_score(claim, context),
            }) + "\n")

    # generation replies: one template-shaped note per transcript
    with open(DATA / "gen_replies.jsonl", "w", encoding="utf-8") as fh:
        for record in TRANSCRIPTS:
            transcript = parse_transcript(record)
            prompt = render_prompt(
                TemplateId.NOTE_GENERATION,
                {"Conversation": conversation_text(transcript)})
            reply = json.dumps({
                "Subjective": f"Summary of what the client shared in "
                              f"{transcript.id}.",
                "Objective": "Observed presentation during the session.",
                "Assessment": "Working clinical impression.",
                "Plan": "Agreed next steps and follow-up.",
            })
            fh.write(json.dumps({
                "prompt_sha256": prompt_sha256(prompt.rendered_text),
                "reply": reply,
            }) + "\n")


def write_expected_outputs() -> None:
    from tneval.cli import main
    expected = DATA / "expected"
    if expected.exists():
        shutil.rmtree(expected)
    expected.mkdir()
    status = main([
        "evaluate",
        "--notes", str(DATA / "notes.jsonl"),
        "--transcripts", str(DATA / "transcripts.jsonl"),
        "--protocol", "both",
        "--mock-client", str(DATA / "replies.jsonl"),
        "--mock-scorer", str(DATA / "scores.jsonl"),
        "--out", str(expected),
    ])
    if status != 0:
        raise SystemExit(f"fixture evaluation failed with status {status}")


if __name__ == "__main__":
    write_corpus()
    write_scripted_files()
    write_expected_outputs()
    print("fixtures regenerated under", DATA)
