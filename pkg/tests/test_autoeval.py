from __future__ import annotations

import threading

import pytest

from conftest import make_note, make_transcript
from tneval.autoeval import (EvalClients, JudgeError, Protocol, evaluate_note,
                             faithfulness_align, format_rubric_items,
                             judge_item_coverage, judge_likert,
                             judge_sentence_necessity, parse_likert,
                             parse_yes_no)
from tneval.clients import (Completion, JudgeConfig, LlmClient,
                            ResponseCache, ScorerClient, ScriptedScorer,
                            ScriptedTransport, StaticTransport,
                            TransportError, claim_context_sha256)
from tneval.corpus import segment_sentences
from tneval.prompts import TemplateId, prompt_sha256, render_prompt
from tneval.rubric import Section
from tneval.scoring import EvalDimension, UNNECESSARY


def make_client(reply="Yes", cache=None, model_id="mock", max_retries=2,
                transport=None):
    config = JudgeConfig(model_id=model_id, max_retries=max_retries)
    return LlmClient(config, transport or StaticTransport(reply),
                     cache=cache)


class SequenceTransport:
    """Replies from a list, then repeats the last one."""

    def __init__(self, replies):
        self.replies = list(replies)
        self.calls = 0

    def __call__(self, prompt, config):
        reply = self.replies[min(self.calls, len(self.replies) - 1)]
        self.calls += 1
        if isinstance(reply, Exception):
            raise reply
        return reply


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("reply,expected", [
    ("Yes", True), ("yes", True), ("YES.", True), ("**Yes**", True),
    ("no.", False), ("No", False), (" no\n", False),
    ("I believe it does.", None), ("", None), ("maybe", None),
    ("yesterday", None), ("Yes, it does", True),
])
def test_parse_yes_no(reply, expected):
    assert parse_yes_no(reply) is expected


def test_parse_yes_no_total_on_fuzz():
    import random
    rng = random.Random(79)
    alphabet = "aby esnoYESNO.!?[]{}()\n\t1234567890"
    for _ in range(2000):
        reply = "".join(rng.choice(alphabet)
                        for _ in range(rng.randint(0, 30)))
        assert parse_yes_no(reply) in (True, False, None)


@pytest.mark.parametrize("reply,expected", [
    ("4", 4), ("Rating: 5", 5), ("1 out of 5", 1), ("  3\n", 3),
    ("6", None), ("0", None), ("no rating", None), ("", None),
    ("10", None),
])
def test_parse_likert(reply, expected):
    assert parse_likert(reply) == expected


# ---------------------------------------------------------------------------
# judge operations
# ---------------------------------------------------------------------------

def test_judge_item_coverage_yes_no(rubric):
    item = rubric.item("subjective.chief-complaint")
    assert judge_item_coverage(make_client("Yes"), "text", item) is True
    assert judge_item_coverage(make_client("no."), "text", item) is False


def test_judge_item_coverage_unparseable_raises(rubric):
    item = rubric.item("subjective.chief-complaint")
    client = make_client("I believe it does.")
    with pytest.raises(JudgeError, match="unparseable"):
        judge_item_coverage(client, "text", item)
    # initial call + max_retries fresh attempts
    assert client.calls == 3


def test_judge_sentence_necessity(rubric):
    items = rubric.items_for(Section.PLAN, scoreable_only=True)
    assert judge_sentence_necessity(make_client("Yes"), "s", items) is True
    assert judge_sentence_necessity(make_client("No"), "s", items) is False
    with pytest.raises(ValueError, match="at least one rubric item"):
        judge_sentence_necessity(make_client("Yes"), "s", [])


def test_judge_likert(rubric, transcript):
    items = rubric.items_for(Section.PLAN, scoreable_only=True)
    assert judge_likert(make_client("4"), transcript, "text",
                        EvalDimension.COMPLETENESS, items) == 4
    with pytest.raises(JudgeError):
        judge_likert(make_client("6"), transcript, "text",
                     EvalDimension.FAITHFULNESS)


def test_retry_recovers_then_succeeds(rubric):
    item = rubric.item("plan.follow-up")
    transport = SequenceTransport(["hmm", "Yes"])
    client = make_client(transport=transport)
    assert judge_item_coverage(client, "text", item) is True
    assert transport.calls == 2


def test_transport_errors_retried():
    transport = SequenceTransport([
        TransportError("down"), TransportError("down"), "Yes"])
    client = make_client(transport=transport, max_retries=2)
    record = render_prompt(TemplateId.COMPLETENESS_ITEM,
                           {"note_segment": "x", "rubric_item": "y"},
                           "mock")
    completion = client.complete(record)
    assert completion.reply == "Yes"
    assert transport.calls == 3


def test_transport_failure_exhausts_retries():
    transport = SequenceTransport([TransportError("down")] * 5)
    client = make_client(transport=transport, max_retries=1)
    record = render_prompt(TemplateId.COMPLETENESS_ITEM,
                           {"note_segment": "x", "rubric_item": "y"},
                           "mock")
    with pytest.raises(TransportError):
        client.complete(record)
    assert transport.calls == 2


# ---------------------------------------------------------------------------
# caching
# ---------------------------------------------------------------------------

def test_cache_round_trip(tmp_path, rubric):
    cache = ResponseCache(tmp_path / "cache")
    item = rubric.item("plan.follow-up")
    client = make_client("Yes", cache=cache)
    assert judge_item_coverage(client, "text", item) is True
    assert client.calls == 1
    again = make_client("No", cache=cache)  # would flip without the cache
    assert judge_item_coverage(again, "text", item) is True
    assert again.calls == 0


def test_cached_parse_failure_replays_as_failure(tmp_path, rubric):
    cache = ResponseCache(tmp_path / "cache")
    item = rubric.item("plan.follow-up")
    bad = make_client("unclear", cache=cache, max_retries=0)
    with pytest.raises(JudgeError):
        judge_item_coverage(bad, "text", item)
    replay = make_client("Yes", cache=cache)
    with pytest.raises(JudgeError):
        judge_item_coverage(replay, "text", item)
    assert replay.calls == 0


def test_cache_keys_isolate_models(tmp_path, rubric):
    cache = ResponseCache(tmp_path / "cache")
    item = rubric.item("plan.follow-up")
    a = make_client("Yes", cache=cache, model_id="model-a")
    b = make_client("No", cache=cache, model_id="model-b")
    assert judge_item_coverage(a, "text", item) is True
    assert judge_item_coverage(b, "text", item) is False


def test_cache_concurrent_writers(tmp_path):
    cache = ResponseCache(tmp_path / "cache")
    errors = []

    def writer(i):
        try:
            for j in range(50):
                cache.put(f"key-{j % 5}", f"value-{i}-{j}")
        except Exception as exc:  # noqa: BLE001
            errors.append(exc)

    threads = [threading.Thread(target=writer, args=(i,)) for i in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    for j in range(5):
        assert cache.get(f"key-{j}").startswith("value-")


# ---------------------------------------------------------------------------
# scripted transports
# ---------------------------------------------------------------------------

def test_scripted_transport_lookup(tmp_path):
    record = render_prompt(TemplateId.COMPLETENESS_ITEM,
                           {"note_segment": "x", "rubric_item": "y"})
    path = tmp_path / "replies.jsonl"
    path.write_text(
        '{"prompt_sha256": "%s", "reply": "Yes"}\n'
        % prompt_sha256(record.rendered_text), encoding="utf-8")
    transport = ScriptedTransport.from_jsonl(path)
    assert transport(record.rendered_text, JudgeConfig("mock")) == "Yes"
    with pytest.raises(TransportError, match="no scripted reply"):
        transport("unknown prompt", JudgeConfig("mock"))


def test_scripted_scorer(tmp_path):
    path = tmp_path / "scores.jsonl"
    path.write_text(
        '{"claim_sha256": "%s", "score": 0.75}\n'
        % claim_context_sha256("claim", "ctx"), encoding="utf-8")
    scorer = ScriptedScorer.from_jsonl(path)
    assert scorer("claim", "ctx") == 0.75


def test_scorer_client_rejects_out_of_range():
    scorer = ScorerClient(scorer_id="s", transport=lambda c, ctx: 1.5,
                          max_retries=0)
    with pytest.raises(Exception, match="outside"):
        scorer.score("c", "ctx")


# ---------------------------------------------------------------------------
# faithfulness_align + evaluate_note
# ---------------------------------------------------------------------------

def test_faithfulness_align_aggregation(note, transcript):
    sentences = segment_sentences(note)
    values = {s.text: 0.8 if s.index == 0 else 0.6 for s in sentences}
    scorer = ScorerClient(scorer_id="mock-scorer",
                          transport=lambda claim, ctx: values[claim])
    scores, report = faithfulness_align(scorer, note, transcript, sentences)
    assert len(scores) == len(sentences)
    subj = dict(report.sections)[Section.SUBJECTIVE]
    assert subj.percent == pytest.approx(70.0)


def test_evaluate_note_all_yes(rubric, note, transcript):
    clients = EvalClients(llm=make_client("Yes"))
    result = evaluate_note(clients, rubric, note, transcript, Protocol.TN_A)
    assert result.report.completeness.note.percent == 100.0
    assert result.report.conciseness.note.percent == 100.0
    assert not result.report.partial


def test_evaluate_note_scripted_counts(rubric, transcript):
    """8/23 items covered and 6/10 sentences necessary -> 34.8 / 60.0."""
    note = make_note(
        subjective=" ".join(f"S{i} done." for i in range(4)),
        objective=" ".join(f"O{i} done." for i in range(3)),
        assessment=" ".join(f"A{i} done." for i in range(2)),
        plan="P0 done.",
    )
    sentences = segment_sentences(note)
    assert len(sentences) == 10

    cover = {f"{s.value}.{slug}" for s, slug in [
        (Section.SUBJECTIVE, "chief-complaint"),
        (Section.SUBJECTIVE, "symptoms"),
        (Section.OBJECTIVE, "observed-behavior"),
        (Section.ASSESSMENT, "diagnosis"),
        (Section.ASSESSMENT, "triggers"),
        (Section.ASSESSMENT, "progress"),
        (Section.PLAN, "future-interventions"),
        (Section.PLAN, "follow-up"),
    ]}
    necessary_texts = {s.text for s in sentences[:6]}

    def transport(prompt, config):
        if "Does the note segment contain the rubric item?" in prompt:
            name = prompt.split("note segment)\n", 1)[1].split(":", 1)[0]
            covered = any(rubric.item(i).name == name for i in cover)
            return "Yes" if covered else "No"
        sentence = prompt.split("## Note Sentence\n", 1)[1].split("\n", 1)[0]
        return "Yes" if sentence in necessary_texts else "No"

    clients = EvalClients(llm=make_client(transport=transport))
    result = evaluate_note(clients, rubric, note, transcript, Protocol.TN_A)
    assert round(result.report.completeness.note.percent, 1) == 34.8
    assert result.report.conciseness.note.percent == pytest.approx(60.0)
    labels = {j.label for j in result.judgments
              if type(j).__name__ == "ConcisenessJudgment"}
    assert UNNECESSARY in labels


def test_evaluate_note_likert_constant(rubric, note, transcript):
    clients = EvalClients(llm=make_client("3"))
    result = evaluate_note(clients, rubric, note, transcript,
                           Protocol.LIKERT)
    likert = dict(result.report.likert)
    completeness = likert[EvalDimension.COMPLETENESS]
    assert completeness.note == pytest.approx(3.0)
    assert all(score == 3 for _, score in completeness.sections)
    assert len(result.judgments) == 12
    assert result.report.completeness is None


def test_evaluate_note_deterministic_across_concurrency(rubric, note,
                                                        transcript):
    def run(max_in_flight):
        config = JudgeConfig(model_id="mock", max_in_flight=max_in_flight)
        client = LlmClient(config, StaticTransport("Yes"))
        clients = EvalClients(llm=client)
        return evaluate_note(clients, rubric, note, transcript,
                             Protocol.BOTH)

    # likert template parses "3"-free reply "Yes"? no - give numeric reply
    def run_both(max_in_flight):
        def transport(prompt, config):
            return "3" if "Rating Codebook" in prompt else "Yes"
        config = JudgeConfig(model_id="mock", max_in_flight=max_in_flight)
        clients = EvalClients(llm=LlmClient(config, transport))
        return evaluate_note(clients, rubric, note, transcript,
                             Protocol.BOTH)

    first = run_both(1)
    for parallel in (2, 8):
        other = run_both(parallel)
        assert other.report == first.report
        assert other.judgments == first.judgments


def test_evaluate_note_partial_on_failures(rubric, note, transcript):
    def transport(prompt, config):
        if ("Does the note segment contain the rubric item?" in prompt
                and "Follow-Up:" in prompt):
            raise TransportError("flaky endpoint")
        return "Yes"

    config = JudgeConfig(model_id="mock", max_retries=0)
    clients = EvalClients(llm=LlmClient(config, transport))
    result = evaluate_note(clients, rubric, note, transcript, Protocol.TN_A)
    assert result.report.partial
    assert result.report.completeness is None  # incomplete item set
    assert result.report.conciseness is not None
    assert any("follow-up" in e for e in result.errors)


def test_evaluate_note_cache_replay_identical(tmp_path, rubric, note,
                                              transcript):
    def transport(prompt, config):
        return "4" if "Rating Codebook" in prompt else "Yes"

    def run():
        cache = ResponseCache(tmp_path / "cache")
        config = JudgeConfig(model_id="mock")
        client = LlmClient(config, transport, cache=cache)
        scorer = ScorerClient(scorer_id="s", transport=lambda c, x: 0.5,
                              cache=cache)
        clients = EvalClients(llm=client, scorer=scorer)
        result = evaluate_note(clients, rubric, note, transcript,
                               Protocol.BOTH)
        return result, client.calls, scorer.calls

    first, llm_calls_1, scorer_calls_1 = run()
    second, llm_calls_2, scorer_calls_2 = run()
    assert llm_calls_1 > 0 and scorer_calls_1 > 0
    assert llm_calls_2 == 0 and scorer_calls_2 == 0
    assert second.report == first.report
    assert second.judgments == first.judgments
    assert second.alignment_scores == first.alignment_scores
