import { describe, expect, it } from "vitest";

import { AnnotationApi, StaleRevisionError } from "../src/api.js";
import {
  closeSession,
  openSession,
  saveSessionDraft,
  shouldDefer,
  submitPayload,
} from "../src/app.js";
import { Drafts, MemoryStore } from "../src/drafts.js";
import * as completeness from "../src/screens/completeness.js";
import {
  JudgmentEnvelope,
  JudgmentRecord,
  SECTIONS,
  SubmitAck,
  TaskBundle,
} from "../src/types.js";
import { loadConformance, makeBundle } from "./fixtures.js";

const doc = loadConformance();

function fullPayload(bundle: TaskBundle): JudgmentRecord[] {
  const state = completeness.createCompleteness(bundle);
  for (let i = 0; i < SECTIONS.length; i++) {
    completeness.goToSection(state, i);
  }
  return completeness.buildCompletenessPayload(state);
}

class FakeApi implements AnnotationApi {
  submissions: JudgmentEnvelope[] = [];
  staleUntilRevision: number | null = null;
  currentRevision = 1;

  constructor(private readonly bundle: TaskBundle) {}

  async nextTask(): Promise<TaskBundle> {
    return {
      ...this.bundle,
      task: { ...this.bundle.task, revision: this.currentRevision },
    };
  }

  async submit(envelope: JudgmentEnvelope): Promise<SubmitAck> {
    if (this.staleUntilRevision !== null &&
        envelope.revision !== this.staleUntilRevision) {
      throw new StaleRevisionError(409, "stale revision");
    }
    this.submissions.push(envelope);
    this.currentRevision += 1;
    return {
      task_id: envelope.task_id,
      status: "submitted",
      revision: this.currentRevision,
      duplicate: false,
    };
  }

  async getNote(): Promise<never> {
    throw new Error("unused");
  }

  async getTranscript(): Promise<never> {
    throw new Error("unused");
  }
}

describe("submission flow", () => {
  it("submits a valid payload once", async () => {
    const bundle = makeBundle(doc, "n01", "completeness");
    const api = new FakeApi(bundle);
    const outcome = await submitPayload(
      api, bundle, fullPayload(bundle), "key-1", () => api.nextTask());
    expect(outcome.retriedStaleRevision).toBe(false);
    expect(api.submissions.length).toBe(1);
    expect(api.submissions[0].idempotency_key).toBe("key-1");
  });

  it("refuses to submit an invalid payload", async () => {
    const bundle = makeBundle(doc, "n01", "completeness");
    const api = new FakeApi(bundle);
    const payload = fullPayload(bundle).slice(1); // one item missing
    await expect(
      submitPayload(api, bundle, payload, "key-1", () => api.nextTask()),
    ).rejects.toThrow(/invalid payload/);
    expect(api.submissions.length).toBe(0);
  });

  it("replays the draft against a fresh revision on 409", async () => {
    const bundle = makeBundle(doc, "n01", "completeness");
    const api = new FakeApi(bundle);
    api.currentRevision = 3;
    api.staleUntilRevision = 3; // only revision 3 is accepted
    const outcome = await submitPayload(
      api, bundle, fullPayload(bundle), "key-1", () => api.nextTask());
    expect(outcome.retriedStaleRevision).toBe(true);
    expect(api.submissions.length).toBe(1);
    expect(api.submissions[0].revision).toBe(3);
    expect(api.submissions[0].idempotency_key).toBe("key-1");
  });
});

describe("protocol separation", () => {
  it("defers conciseness right after completeness on the same note", () => {
    const bundle = makeBundle(doc, "n01", "conciseness");
    expect(shouldDefer(bundle, [
      { noteId: "n01", dimension: "completeness" },
    ])).toBe(true);
    expect(shouldDefer(bundle, [
      { noteId: "n02", dimension: "completeness" },
    ])).toBe(false);
    expect(shouldDefer(bundle, [
      { noteId: "n01", dimension: "faithfulness" },
    ])).toBe(false);
  });

  it("never defers faithfulness or likert", () => {
    const done = [
      { noteId: "n01", dimension: "completeness" as const },
      { noteId: "n01", dimension: "conciseness" as const },
    ];
    expect(shouldDefer(makeBundle(doc, "n01", "faithfulness"), done))
      .toBe(false);
    expect(shouldDefer(makeBundle(doc, "n01", "likert_baseline"), done))
      .toBe(false);
  });
});

describe("draft lifecycle", () => {
  it("saves, restores, and clears drafts keyed by task", () => {
    const drafts = new Drafts(new MemoryStore());
    const bundle = makeBundle(doc, "n01", "completeness");

    const session = openSession<completeness.CompletenessDraft>(
      drafts, bundle);
    expect(session.draft).toBeNull();

    const state = completeness.createCompleteness(bundle);
    completeness.toggleItem(state, "subjective.history");
    saveSessionDraft(drafts, session, completeness.toDraft(state));

    const resumed = openSession<completeness.CompletenessDraft>(
      drafts, bundle);
    expect(resumed.draft).not.toBeNull();
    expect(resumed.idempotencyKey).toBe(session.idempotencyKey);
    const revived = completeness.fromDraft(bundle, resumed.draft!);
    expect(revived.checked["subjective.history"]).toBe(true);

    closeSession(drafts, resumed);
    const fresh = openSession<completeness.CompletenessDraft>(
      drafts, bundle);
    expect(fresh.draft).toBeNull();
    expect(fresh.idempotencyKey).not.toBe(session.idempotencyKey);
  });
});
