/** Conventional 1-5 baseline: each section rated on the three dimensions,
 * plus a single whole-note acceptance rating - exactly 13 judgments. */

import {
  LikertDimension,
  LikertRecord,
  NotePayload,
  SECTIONS,
  SectionName,
  TaskBundle,
  WHOLE_NOTE,
} from "../types.js";

export const SECTION_DIMENSIONS: LikertDimension[] = [
  "completeness",
  "conciseness",
  "faithfulness",
];

export interface LikertState {
  bundle: TaskBundle;
  ratings: Record<string, number>;
}

export interface LikertDraft {
  ratings: Record<string, number>;
}

export function createLikert(bundle: TaskBundle): LikertState {
  return { bundle, ratings: {} };
}

function slotKey(dimension: LikertDimension, scope: string): string {
  return `${dimension}:${scope}`;
}

export function rate(
  state: LikertState,
  dimension: LikertDimension,
  scope: SectionName | typeof WHOLE_NOTE,
  score: number,
): void {
  if (!Number.isInteger(score) || score < 1 || score > 5) {
    throw new Error(`score ${score} outside 1..5`);
  }
  if (dimension === "acceptance" && scope !== WHOLE_NOTE) {
    throw new Error("acceptance is rated on the whole note");
  }
  if (dimension !== "acceptance" && scope === WHOLE_NOTE) {
    throw new Error(`${dimension} is rated per section`);
  }
  state.ratings[slotKey(dimension, scope)] = score;
}

export function ratedCount(state: LikertState): number {
  return Object.keys(state.ratings).length;
}

export function canSubmit(state: LikertState): boolean {
  for (const dimension of SECTION_DIMENSIONS) {
    for (const section of SECTIONS) {
      if (!(slotKey(dimension, section) in state.ratings)) return false;
    }
  }
  return slotKey("acceptance", WHOLE_NOTE) in state.ratings;
}

/** Always 13 records: 4 sections x 3 dimensions + whole-note acceptance. */
export function buildLikertPayload(state: LikertState): LikertRecord[] {
  const { task } = state.bundle;
  const records: LikertRecord[] = [];
  for (const dimension of SECTION_DIMENSIONS) {
    for (const section of SECTIONS) {
      records.push({
        kind: "likert",
        note_id: task.note_id,
        scope: section,
        dimension,
        score: state.ratings[slotKey(dimension, section)],
        judge: task.annotator_id,
        channel: "human",
      });
    }
  }
  records.push({
    kind: "likert",
    note_id: task.note_id,
    scope: WHOLE_NOTE,
    dimension: "acceptance",
    score: state.ratings[slotKey("acceptance", WHOLE_NOTE)],
    judge: task.annotator_id,
    channel: "human",
  });
  return records;
}

/** Header line for the note being rated; the server omits the source field
 * in blind mode. */
export function sourceLine(note: NotePayload): string {
  return `Source: ${note.source ?? "hidden"}`;
}

export function toDraft(state: LikertState): LikertDraft {
  return { ratings: { ...state.ratings } };
}

export function fromDraft(bundle: TaskBundle, draft: LikertDraft): LikertState {
  return { bundle, ratings: { ...draft.ratings } };
}
