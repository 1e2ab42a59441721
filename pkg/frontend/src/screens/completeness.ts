/** Rubric-checklist screen: one note section at a time, checkboxes for the
 * section's scoreable items. The transcript is never shown here; coverage
 * is judged against the rubric alone. */

import {
  CompletenessRecord,
  SECTIONS,
  SectionName,
  TaskBundle,
  allScoreableItems,
  scoreableItems,
} from "../types.js";

export interface CompletenessState {
  bundle: TaskBundle;
  sectionIndex: number;
  checked: Record<string, boolean>;
  visited: Record<SectionName, boolean>;
}

export interface CompletenessDraft {
  sectionIndex: number;
  checked: Record<string, boolean>;
  visited: Record<SectionName, boolean>;
}

export function createCompleteness(bundle: TaskBundle): CompletenessState {
  const checked: Record<string, boolean> = {};
  for (const item of allScoreableItems(bundle.rubric)) {
    checked[item.id] = false;
  }
  return {
    bundle,
    sectionIndex: 0,
    checked,
    visited: {
      subjective: true,
      objective: false,
      assessment: false,
      plan: false,
    },
  };
}

export function currentSection(state: CompletenessState): SectionName {
  return SECTIONS[state.sectionIndex];
}

export function toggleItem(state: CompletenessState, itemId: string): void {
  if (!(itemId in state.checked)) {
    throw new Error(`unknown rubric item ${itemId}`);
  }
  state.checked[itemId] = !state.checked[itemId];
}

export function goToSection(state: CompletenessState, index: number): void {
  if (index < 0 || index >= SECTIONS.length) return;
  state.sectionIndex = index;
  state.visited[SECTIONS[index]] = true;
}

export function nextSection(state: CompletenessState): void {
  goToSection(state, state.sectionIndex + 1);
}

export function sectionProgress(
  state: CompletenessState,
): { section: SectionName; visited: boolean; checkedCount: number }[] {
  return SECTIONS.map((section) => ({
    section,
    visited: state.visited[section],
    checkedCount: scoreableItems(state.bundle.rubric, section).filter(
      (item) => state.checked[item.id],
    ).length,
  }));
}

/** Submission unlocks only once every section screen has been visited. */
export function canSubmit(state: CompletenessState): boolean {
  return SECTIONS.every((section) => state.visited[section]);
}

export function buildCompletenessPayload(
  state: CompletenessState,
): CompletenessRecord[] {
  const { task } = state.bundle;
  return allScoreableItems(state.bundle.rubric).map((item) => ({
    kind: "completeness",
    note_id: task.note_id,
    item_id: item.id,
    covered: state.checked[item.id],
    judge: task.annotator_id,
    channel: "human",
  }));
}

export function toDraft(state: CompletenessState): CompletenessDraft {
  return {
    sectionIndex: state.sectionIndex,
    checked: { ...state.checked },
    visited: { ...state.visited },
  };
}

export function fromDraft(
  bundle: TaskBundle,
  draft: CompletenessDraft,
): CompletenessState {
  const state = createCompleteness(bundle);
  state.sectionIndex = draft.sectionIndex;
  for (const id of Object.keys(state.checked)) {
    if (id in draft.checked) state.checked[id] = draft.checked[id];
  }
  state.visited = { ...state.visited, ...draft.visited };
  return state;
}
