/** Client-side payload validation, mirroring the server's rules exactly.
 *
 * The conformance suite replays shared fixtures through this validator and
 * the server's; they must agree on every case, so any rule added on one
 * side belongs on the other too.
 */

import {
  JudgmentRecord,
  RubricInfo,
  SECTIONS,
  SentenceInfo,
  Task,
  TranscriptPayload,
  UNNECESSARY,
  WHOLE_NOTE,
  allScoreableItems,
  scoreableItems,
  sentenceKey,
} from "./types.js";

export type ValidationResult =
  | { ok: true }
  | { ok: false; error: string };

function fail(error: string): ValidationResult {
  return { ok: false, error };
}

const TASK_KINDS: Record<Task["dimension"], string> = {
  completeness: "completeness",
  conciseness: "conciseness",
  faithfulness: "faithfulness",
  likert_baseline: "likert",
};

export interface ValidationContext {
  task: Task;
  rubric: RubricInfo;
  sentences: SentenceInfo[];
  transcript?: TranscriptPayload;
}

export function validatePayload(
  context: ValidationContext,
  payload: JudgmentRecord[],
): ValidationResult {
  const { task } = context;
  if (payload.length === 0) {
    return fail("empty payload");
  }
  const expectedKind = TASK_KINDS[task.dimension];
  for (let i = 0; i < payload.length; i++) {
    const record = payload[i];
    if (record.kind !== expectedKind) {
      return fail(
        `payload[${i}]: kind ${record.kind} does not match task ` +
          `dimension ${task.dimension}`,
      );
    }
    if (record.note_id !== task.note_id) {
      return fail(
        `payload[${i}]: note ${record.note_id} does not match task note ` +
          task.note_id,
      );
    }
    if (record.judge !== task.annotator_id) {
      return fail(
        `payload[${i}]: judge must be the task annotator ` +
          task.annotator_id,
      );
    }
  }
  switch (task.dimension) {
    case "completeness":
      return validateCompleteness(context, payload);
    case "conciseness":
      return validateConciseness(context, payload);
    case "faithfulness":
      return validateFaithfulness(context, payload);
    case "likert_baseline":
      return validateLikert(payload);
  }
}

function validateCompleteness(
  context: ValidationContext,
  payload: JudgmentRecord[],
): ValidationResult {
  const scoreable = new Set(
    allScoreableItems(context.rubric).map((item) => item.id),
  );
  const seen = new Set<string>();
  for (const record of payload) {
    if (record.kind !== "completeness") continue;
    if (!scoreable.has(record.item_id)) {
      return fail(
        `judgment for non-scoreable or unknown item ${record.item_id}`,
      );
    }
    if (seen.has(record.item_id)) {
      return fail(`duplicate judgment for item ${record.item_id}`);
    }
    seen.add(record.item_id);
  }
  const missing = [...scoreable].filter((id) => !seen.has(id));
  if (missing.length > 0) {
    return fail(`missing judgment for item(s): ${missing.join(", ")}`);
  }
  return { ok: true };
}

function collectSentenceKeys(
  context: ValidationContext,
  payload: JudgmentRecord[],
): ValidationResult | Set<string> {
  const domain = new Set(
    context.sentences.map((s) => sentenceKey(s.section, s.index)),
  );
  const seen = new Set<string>();
  for (const record of payload) {
    if (record.kind !== "conciseness" && record.kind !== "faithfulness") {
      continue;
    }
    const key = sentenceKey(record.section, record.sentence_index);
    if (!domain.has(key)) {
      return fail(
        `judgment for nonexistent sentence ` +
          `${record.section}[${record.sentence_index}]`,
      );
    }
    if (seen.has(key)) {
      return fail(
        `duplicate judgment for sentence ` +
          `${record.section}[${record.sentence_index}]`,
      );
    }
    seen.add(key);
  }
  const missing = [...domain].filter((key) => !seen.has(key));
  if (missing.length > 0) {
    return fail(`missing judgment for sentence(s): ${missing.join(", ")}`);
  }
  return seen;
}

function validateConciseness(
  context: ValidationContext,
  payload: JudgmentRecord[],
): ValidationResult {
  const keys = collectSentenceKeys(context, payload);
  if (!(keys instanceof Set)) return keys;
  for (const record of payload) {
    if (record.kind !== "conciseness") continue;
    if (record.label === UNNECESSARY) continue;
    const options = scoreableItems(context.rubric, record.section).map(
      (item) => item.id,
    );
    if (!options.includes(record.label)) {
      return fail(
        `sentence ${record.section}[${record.sentence_index}] labeled ` +
          `with ${record.label}, not a scoreable ${record.section} item`,
      );
    }
  }
  return { ok: true };
}

const CATEGORIES = new Set(["out_of_nowhere", "misinterpreted", "no_error"]);

function validateFaithfulness(
  context: ValidationContext,
  payload: JudgmentRecord[],
): ValidationResult {
  const keys = collectSentenceKeys(context, payload);
  if (!(keys instanceof Set)) return keys;
  for (const record of payload) {
    if (record.kind !== "faithfulness") continue;
    if (!CATEGORIES.has(record.category)) {
      return fail(`unknown category ${record.category}`);
    }
    const where = `sentence ${record.section}[${record.sentence_index}]`;
    if (record.category === "no_error" &&
        record.supporting_spans.length === 0) {
      return fail(
        `${where}: no-error judgments require at least one supporting span`,
      );
    }
    if (context.transcript) {
      for (const [turn, start, end] of record.supporting_spans) {
        if (turn < 0 || turn >= context.transcript.turns.length) {
          return fail(`${where}: span turn ${turn} out of range`);
        }
        const length = context.transcript.turns[turn].text.length;
        if (start < 0 || end <= start || end > length) {
          return fail(
            `${where}: span (${turn}, ${start}, ${end}) outside the turn ` +
              `text`,
          );
        }
      }
    }
  }
  return { ok: true };
}

const LIKERT_SECTION_DIMENSIONS = [
  "completeness",
  "conciseness",
  "faithfulness",
] as const;

function validateLikert(payload: JudgmentRecord[]): ValidationResult {
  const seen = new Set<string>();
  for (const record of payload) {
    if (record.kind !== "likert") continue;
    if (!Number.isInteger(record.score) ||
        record.score < 1 || record.score > 5) {
      return fail(`likert score ${record.score} outside 1..5`);
    }
    if (record.dimension === "acceptance" && record.scope !== WHOLE_NOTE) {
      return fail("acceptance ratings are whole-note only");
    }
    if (record.dimension !== "acceptance" && record.scope === WHOLE_NOTE) {
      return fail(`${record.dimension} rating must be per-section`);
    }
    const key = `${record.dimension}:${record.scope}`;
    if (seen.has(key)) {
      return fail(`duplicate likert rating for ${key}`);
    }
    seen.add(key);
  }
  for (const dimension of LIKERT_SECTION_DIMENSIONS) {
    for (const section of SECTIONS) {
      if (!seen.has(`${dimension}:${section}`)) {
        return fail(
          `${dimension}: expected ratings for all ${SECTIONS.length} ` +
            `sections`,
        );
      }
    }
  }
  if (!seen.has(`acceptance:${WHOLE_NOTE}`)) {
    return fail("missing whole-note acceptance rating");
  }
  if (payload.length !== 13) {
    return fail(`expected 13 likert judgments, got ${payload.length}`);
  }
  return { ok: true };
}
