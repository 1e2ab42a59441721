/** Sentence-labeling screen: every sentence gets a rubric item from its
 * section, or the distinguished "unnecessary" label. Completeness answers
 * for the same note are never shown here (protocol separation). Fully
 * keyboard-drivable: focus moves sentence to sentence and number keys pick
 * a label; both input paths go through the same action. */

import {
  ConcisenessRecord,
  RubricItemInfo,
  TaskBundle,
  SectionName,
  UNNECESSARY,
  scoreableItems,
  sentenceKey,
} from "../types.js";

export interface ConcisenessState {
  bundle: TaskBundle;
  focusIndex: number;
  labels: Record<string, string>;
}

export interface ConcisenessDraft {
  focusIndex: number;
  labels: Record<string, string>;
}

export function createConciseness(bundle: TaskBundle): ConcisenessState {
  return { bundle, focusIndex: 0, labels: {} };
}

export interface LabelOption {
  value: string;
  name: string;
  /** 1-based keyboard shortcut; "unnecessary" is always 0. */
  shortcut: number;
}

export function labelOptions(
  state: ConcisenessState,
  section: SectionName,
): LabelOption[] {
  const items = scoreableItems(state.bundle.rubric, section);
  const options = items.map((item: RubricItemInfo, i: number) => ({
    value: item.id,
    name: item.name,
    shortcut: i + 1,
  }));
  options.push({ value: UNNECESSARY, name: "Unnecessary", shortcut: 0 });
  return options;
}

export function setLabel(
  state: ConcisenessState,
  section: SectionName,
  index: number,
  label: string,
): void {
  const exists = state.bundle.sentences.some(
    (s) => s.section === section && s.index === index,
  );
  if (!exists) {
    throw new Error(`no sentence ${section}[${index}]`);
  }
  const options = labelOptions(state, section).map((o) => o.value);
  if (!options.includes(label)) {
    throw new Error(`label ${label} is not available for ${section}`);
  }
  state.labels[sentenceKey(section, index)] = label;
}

export function focusNext(state: ConcisenessState): void {
  if (state.focusIndex < state.bundle.sentences.length - 1) {
    state.focusIndex += 1;
  }
}

export function focusPrev(state: ConcisenessState): void {
  if (state.focusIndex > 0) state.focusIndex -= 1;
}

/** Keyboard path: label the focused sentence by shortcut number and
 * advance. Produces exactly the same state as the pointer path. */
export function labelFocusedByShortcut(
  state: ConcisenessState,
  shortcut: number,
): void {
  const sentence = state.bundle.sentences[state.focusIndex];
  if (!sentence) return;
  const option = labelOptions(state, sentence.section).find(
    (o) => o.shortcut === shortcut,
  );
  if (!option) return;
  setLabel(state, sentence.section, sentence.index, option.value);
  focusNext(state);
}

export function labeledCount(state: ConcisenessState): number {
  return Object.keys(state.labels).length;
}

export function canSubmit(state: ConcisenessState): boolean {
  return state.bundle.sentences.every(
    (s) => sentenceKey(s.section, s.index) in state.labels,
  );
}

export function buildConcisenessPayload(
  state: ConcisenessState,
): ConcisenessRecord[] {
  const { task } = state.bundle;
  return state.bundle.sentences.map((s) => ({
    kind: "conciseness",
    note_id: task.note_id,
    section: s.section,
    sentence_index: s.index,
    label: state.labels[sentenceKey(s.section, s.index)],
    judge: task.annotator_id,
    channel: "human",
  }));
}

export function toDraft(state: ConcisenessState): ConcisenessDraft {
  return { focusIndex: state.focusIndex, labels: { ...state.labels } };
}

export function fromDraft(
  bundle: TaskBundle,
  draft: ConcisenessDraft,
): ConcisenessState {
  return {
    bundle,
    focusIndex: draft.focusIndex,
    labels: { ...draft.labels },
  };
}
