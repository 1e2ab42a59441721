import { describe, expect, it } from "vitest";

import { validatePayload } from "../src/validate.js";
import { loadConformance, makeBundle } from "./fixtures.js";

const doc = loadConformance();

describe("client validator agrees with the shared conformance cases", () => {
  for (const testCase of doc.cases) {
    it(testCase.name, () => {
      const bundle = makeBundle(doc, testCase.note_id, testCase.dimension);
      const verdict = validatePayload(
        {
          task: bundle.task,
          rubric: bundle.rubric,
          sentences: bundle.sentences,
          transcript: bundle.transcript,
        },
        testCase.payload,
      );
      expect(verdict.ok, verdict.ok ? "" : verdict.error).toBe(
        testCase.valid,
      );
    });
  }
});

describe("named invalid fixtures are blocked client-side", () => {
  const byName = new Map(doc.cases.map((c) => [c.name, c]));
  for (const name of [
    "missing item",
    "no_error without span",
    "likert score out of range",
  ]) {
    it(`blocks: ${name}`, () => {
      const testCase = byName.get(name);
      expect(testCase).toBeDefined();
      expect(testCase!.valid).toBe(false);
      const bundle = makeBundle(doc, testCase!.note_id,
        testCase!.dimension);
      const verdict = validatePayload(
        {
          task: bundle.task,
          rubric: bundle.rubric,
          sentences: bundle.sentences,
          transcript: bundle.transcript,
        },
        testCase!.payload,
      );
      expect(verdict.ok).toBe(false);
    });
  }
});
