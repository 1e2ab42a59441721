import { describe, expect, it } from "vitest";

import * as completeness from "../src/screens/completeness.js";
import * as conciseness from "../src/screens/conciseness.js";
import * as faithfulness from "../src/screens/faithfulness.js";
import * as likert from "../src/screens/likert.js";
import { SECTIONS, UNNECESSARY, WHOLE_NOTE } from "../src/types.js";
import { validatePayload } from "../src/validate.js";
import { loadConformance, makeBundle } from "./fixtures.js";

const doc = loadConformance();

function contextOf(bundle: ReturnType<typeof makeBundle>) {
  return {
    task: bundle.task,
    rubric: bundle.rubric,
    sentences: bundle.sentences,
    transcript: bundle.transcript,
  };
}

describe("completeness screen", () => {
  it("requires visiting every section before submit", () => {
    const bundle = makeBundle(doc, "n01", "completeness");
    const state = completeness.createCompleteness(bundle);
    expect(completeness.canSubmit(state)).toBe(false);
    completeness.toggleItem(state, "subjective.chief-complaint");
    for (let i = 1; i < SECTIONS.length - 1; i++) {
      completeness.goToSection(state, i);
    }
    expect(completeness.canSubmit(state)).toBe(false);
    const progress = completeness.sectionProgress(state);
    expect(progress.filter((p) => p.visited).length).toBe(3);
    completeness.goToSection(state, 3);
    expect(completeness.canSubmit(state)).toBe(true);
  });

  it("emits one judgment per scoreable item and validates", () => {
    const bundle = makeBundle(doc, "n02", "completeness");
    const state = completeness.createCompleteness(bundle);
    for (let i = 0; i < SECTIONS.length; i++) {
      completeness.goToSection(state, i);
    }
    completeness.toggleItem(state, "plan.homework");
    const payload = completeness.buildCompletenessPayload(state);
    expect(payload.length).toBe(23);
    expect(payload.filter((r) => r.covered).length).toBe(1);
    expect(validatePayload(contextOf(bundle), payload).ok).toBe(true);
  });

  it("round-trips drafts", () => {
    const bundle = makeBundle(doc, "n01", "completeness");
    const state = completeness.createCompleteness(bundle);
    completeness.toggleItem(state, "subjective.history");
    completeness.goToSection(state, 2);
    const revived = completeness.fromDraft(bundle,
      completeness.toDraft(state));
    expect(completeness.buildCompletenessPayload(revived)).toEqual(
      completeness.buildCompletenessPayload(state));
    expect(revived.sectionIndex).toBe(2);
  });
});

describe("conciseness screen", () => {
  it("disables submit until every sentence is labeled", () => {
    const bundle = makeBundle(doc, "n01", "conciseness");
    const state = conciseness.createConciseness(bundle);
    expect(conciseness.canSubmit(state)).toBe(false);
    const sentences = bundle.sentences;
    for (const s of sentences.slice(0, -1)) {
      conciseness.setLabel(state, s.section, s.index, UNNECESSARY);
    }
    expect(conciseness.canSubmit(state)).toBe(false);
    const last = sentences[sentences.length - 1];
    conciseness.setLabel(state, last.section, last.index, UNNECESSARY);
    expect(conciseness.canSubmit(state)).toBe(true);
  });

  it("keyboard-only pass produces the same payload as the pointer flow",
    () => {
      const bundle = makeBundle(doc, "n03", "conciseness");

      const pointer = conciseness.createConciseness(bundle);
      for (const s of bundle.sentences) {
        const options = conciseness.labelOptions(pointer, s.section);
        pointer.focusIndex = 0;
        conciseness.setLabel(pointer, s.section, s.index,
          options[0].value);
      }

      const keyboard = conciseness.createConciseness(bundle);
      for (let i = 0; i < bundle.sentences.length; i++) {
        conciseness.labelFocusedByShortcut(keyboard, 1);
      }

      expect(conciseness.buildConcisenessPayload(keyboard)).toEqual(
        conciseness.buildConcisenessPayload(pointer));
      expect(validatePayload(contextOf(bundle),
        conciseness.buildConcisenessPayload(keyboard)).ok).toBe(true);
    });

  it("rejects labels from another section", () => {
    const bundle = makeBundle(doc, "n01", "conciseness");
    const state = conciseness.createConciseness(bundle);
    const subj = bundle.sentences.find((s) => s.section === "subjective")!;
    expect(() =>
      conciseness.setLabel(state, subj.section, subj.index,
        "objective.mental-status"),
    ).toThrow(/not available/);
  });

  it("unnecessary is always shortcut 0", () => {
    const bundle = makeBundle(doc, "n01", "conciseness");
    const state = conciseness.createConciseness(bundle);
    for (const section of SECTIONS) {
      const zero = conciseness.labelOptions(state, section).find(
        (o) => o.shortcut === 0);
      expect(zero?.value).toBe(UNNECESSARY);
    }
  });
});

describe("faithfulness screen", () => {
  it("gates advancement on category and evidence", () => {
    const bundle = makeBundle(doc, "n01", "faithfulness");
    const state = faithfulness.createFaithfulness(bundle);
    expect(faithfulness.canAdvance(state)).toBe(false);
    faithfulness.selectCategory(state, "no_error");
    expect(faithfulness.canAdvance(state)).toBe(false); // no span yet
    faithfulness.addSelection(state, {
      startTurn: 0, startOffset: 0, endTurn: 0, endOffset: 5,
    });
    expect(faithfulness.canAdvance(state)).toBe(true);
  });

  it("out-of-nowhere needs no span", () => {
    const bundle = makeBundle(doc, "n01", "faithfulness");
    const state = faithfulness.createFaithfulness(bundle);
    faithfulness.selectCategory(state, "out_of_nowhere");
    expect(faithfulness.canAdvance(state)).toBe(true);
  });

  it("splits multi-turn selections into per-turn spans", () => {
    const bundle = makeBundle(doc, "n01", "faithfulness");
    const turns = bundle.transcript!.turns;
    const spans = faithfulness.splitSelection(turns, {
      startTurn: 0, startOffset: 3, endTurn: 2, endOffset: 4,
    });
    expect(spans).toEqual([
      [0, 3, turns[0].text.length],
      [1, 0, turns[1].text.length],
      [2, 0, 4],
    ]);
  });

  it("rejects selections outside a turn", () => {
    const bundle = makeBundle(doc, "n01", "faithfulness");
    const turns = bundle.transcript!.turns;
    expect(() => faithfulness.splitSelection(turns, {
      startTurn: 0, startOffset: 0, endTurn: 0,
      endOffset: turns[0].text.length + 50,
    })).toThrow(/outside/);
    expect(() => faithfulness.splitSelection(turns, {
      startTurn: 5_000, startOffset: 0, endTurn: 5_000, endOffset: 2,
    })).toThrow(/outside/);
    expect(() => faithfulness.splitSelection(turns, {
      startTurn: 1, startOffset: 4, endTurn: 1, endOffset: 4,
    })).toThrow(/empty/);
  });

  it("builds a payload the validator accepts", () => {
    const bundle = makeBundle(doc, "n02", "faithfulness");
    const state = faithfulness.createFaithfulness(bundle);
    for (let i = 0; i < bundle.sentences.length; i++) {
      faithfulness.selectCategory(state, "no_error");
      faithfulness.addSelection(state, {
        startTurn: 0, startOffset: 0, endTurn: 0, endOffset: 8,
      });
      faithfulness.advance(state);
    }
    expect(faithfulness.canSubmit(state)).toBe(true);
    const payload = faithfulness.buildFaithfulnessPayload(state);
    expect(validatePayload(contextOf(bundle), payload).ok).toBe(true);
  });
});

describe("likert screen", () => {
  it("emits exactly 13 judgments once complete", () => {
    const bundle = makeBundle(doc, "n01", "likert_baseline");
    const state = likert.createLikert(bundle);
    expect(likert.canSubmit(state)).toBe(false);
    for (const dimension of likert.SECTION_DIMENSIONS) {
      for (const section of SECTIONS) {
        likert.rate(state, dimension, section, 4);
      }
    }
    expect(likert.canSubmit(state)).toBe(false); // acceptance missing
    likert.rate(state, "acceptance", WHOLE_NOTE, 3);
    expect(likert.canSubmit(state)).toBe(true);
    const payload = likert.buildLikertPayload(state);
    expect(payload.length).toBe(13);
    expect(payload.filter((r) => r.dimension === "acceptance").length)
      .toBe(1);
    expect(validatePayload(contextOf(bundle), payload).ok).toBe(true);
  });

  it("rejects out-of-range and misplaced ratings", () => {
    const bundle = makeBundle(doc, "n01", "likert_baseline");
    const state = likert.createLikert(bundle);
    expect(() => likert.rate(state, "completeness", "subjective", 6))
      .toThrow(/outside/);
    expect(() => likert.rate(state, "completeness", "subjective", 0))
      .toThrow(/outside/);
    expect(() => likert.rate(state, "acceptance", "subjective", 3))
      .toThrow(/whole note/);
    expect(() => likert.rate(state, "conciseness", WHOLE_NOTE, 3))
      .toThrow(/per section/);
  });

  it("renders the source line, hidden when blind", () => {
    expect(likert.sourceLine({ id: "n", transcript_id: "c",
      source: "writer-pool", sections: {} as never }))
      .toBe("Source: writer-pool");
    expect(likert.sourceLine({ id: "n", transcript_id: "c",
      sections: {} as never }))
      .toBe("Source: hidden");
  });
});
