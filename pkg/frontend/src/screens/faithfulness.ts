/** Split-view screen: one note sentence in focus, the transcript beside it
 * with text selection. The annotator highlights supporting spans and picks
 * a hallucination category; a no-error verdict needs at least one span
 * before the next sentence unlocks. */

import {
  FaithfulnessCategory,
  FaithfulnessRecord,
  SupportingSpan,
  TaskBundle,
  TranscriptTurn,
  sentenceKey,
} from "../types.js";

export interface SentenceVerdict {
  category: FaithfulnessCategory | null;
  spans: SupportingSpan[];
}

export interface FaithfulnessState {
  bundle: TaskBundle;
  current: number;
  verdicts: Record<string, SentenceVerdict>;
}

export interface FaithfulnessDraft {
  current: number;
  verdicts: Record<string, SentenceVerdict>;
}

export function createFaithfulness(bundle: TaskBundle): FaithfulnessState {
  if (!bundle.transcript) {
    throw new Error("faithfulness tasks need the transcript");
  }
  const verdicts: Record<string, SentenceVerdict> = {};
  for (const s of bundle.sentences) {
    verdicts[sentenceKey(s.section, s.index)] = {
      category: null,
      spans: [],
    };
  }
  return { bundle, current: 0, verdicts };
}

function currentVerdict(state: FaithfulnessState): SentenceVerdict {
  const sentence = state.bundle.sentences[state.current];
  return state.verdicts[sentenceKey(sentence.section, sentence.index)];
}

export function selectCategory(
  state: FaithfulnessState,
  category: FaithfulnessCategory,
): void {
  currentVerdict(state).category = category;
}

/** A raw browser selection across the rendered transcript, expressed as
 * turn-relative offsets. */
export interface TurnSelection {
  startTurn: number;
  startOffset: number;
  endTurn: number;
  endOffset: number;
}

/** Split a (possibly multi-turn) selection into per-turn spans. Spans that
 * fall outside a turn's text are rejected. */
export function splitSelection(
  turns: TranscriptTurn[],
  selection: TurnSelection,
): SupportingSpan[] {
  const { startTurn, startOffset, endTurn, endOffset } = selection;
  if (startTurn > endTurn ||
      (startTurn === endTurn && startOffset >= endOffset)) {
    throw new Error("selection is empty or reversed");
  }
  if (startTurn < 0 || endTurn >= turns.length) {
    throw new Error("selection is outside the transcript");
  }
  const spans: SupportingSpan[] = [];
  for (let turn = startTurn; turn <= endTurn; turn++) {
    const length = turns[turn].text.length;
    const start = turn === startTurn ? startOffset : 0;
    const end = turn === endTurn ? endOffset : length;
    if (start < 0 || end > length) {
      throw new Error(`selection is outside turn ${turn}`);
    }
    if (start < end) {
      spans.push([turn, start, end]);
    }
  }
  if (spans.length === 0) {
    throw new Error("selection contains no text");
  }
  return spans;
}

export function addSelection(
  state: FaithfulnessState,
  selection: TurnSelection,
): SupportingSpan[] {
  const transcript = state.bundle.transcript;
  if (!transcript) throw new Error("no transcript loaded");
  const spans = splitSelection(transcript.turns, selection);
  currentVerdict(state).spans.push(...spans);
  return spans;
}

export function clearSpans(state: FaithfulnessState): void {
  currentVerdict(state).spans = [];
}

/** The next sentence unlocks only when the current one has a category, and
 * a no-error verdict carries at least one supporting span. */
export function canAdvance(state: FaithfulnessState): boolean {
  const verdict = currentVerdict(state);
  if (verdict.category === null) return false;
  if (verdict.category === "no_error" && verdict.spans.length === 0) {
    return false;
  }
  return true;
}

export function advance(state: FaithfulnessState): boolean {
  if (!canAdvance(state)) return false;
  if (state.current < state.bundle.sentences.length - 1) {
    state.current += 1;
  }
  return true;
}

export function canSubmit(state: FaithfulnessState): boolean {
  return state.bundle.sentences.every((s) => {
    const verdict = state.verdicts[sentenceKey(s.section, s.index)];
    if (verdict.category === null) return false;
    return verdict.category !== "no_error" || verdict.spans.length > 0;
  });
}

export function buildFaithfulnessPayload(
  state: FaithfulnessState,
): FaithfulnessRecord[] {
  const { task } = state.bundle;
  return state.bundle.sentences.map((s) => {
    const verdict = state.verdicts[sentenceKey(s.section, s.index)];
    return {
      kind: "faithfulness",
      note_id: task.note_id,
      section: s.section,
      sentence_index: s.index,
      category: verdict.category as FaithfulnessCategory,
      supporting_spans: verdict.spans,
      judge: task.annotator_id,
      channel: "human",
    };
  });
}

export function toDraft(state: FaithfulnessState): FaithfulnessDraft {
  return {
    current: state.current,
    verdicts: JSON.parse(JSON.stringify(state.verdicts)),
  };
}

export function fromDraft(
  bundle: TaskBundle,
  draft: FaithfulnessDraft,
): FaithfulnessState {
  const state = createFaithfulness(bundle);
  state.current = draft.current;
  for (const key of Object.keys(state.verdicts)) {
    if (key in draft.verdicts) {
      state.verdicts[key] = {
        category: draft.verdicts[key].category,
        spans: draft.verdicts[key].spans.map(
          (s) => [...s] as SupportingSpan,
        ),
      };
    }
  }
  return state;
}
