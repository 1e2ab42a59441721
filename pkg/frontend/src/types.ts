/** Wire types mirroring the annotation server's REST API. */

export type SectionName = "subjective" | "objective" | "assessment" | "plan";

export const SECTIONS: SectionName[] = [
  "subjective",
  "objective",
  "assessment",
  "plan",
];

export type TaskDimension =
  | "completeness"
  | "conciseness"
  | "faithfulness"
  | "likert_baseline";

export type LikertDimension =
  | "completeness"
  | "conciseness"
  | "faithfulness"
  | "acceptance";

export const UNNECESSARY = "unnecessary";
export const WHOLE_NOTE = "whole_note";

export interface Task {
  task_id: string;
  annotator_id: string;
  note_id: string;
  dimension: TaskDimension;
  status: "open" | "submitted";
  revision: number;
}

export interface NotePayload {
  id: string;
  transcript_id: string;
  /** Absent when the server runs in blind-source mode. */
  source?: string;
  sections: Record<SectionName, string>;
}

export interface SentenceInfo {
  section: SectionName;
  index: number;
  text: string;
  span: [number, number];
}

export interface RubricItemInfo {
  id: string;
  section: string;
  name: string;
  description: string;
  importance: string;
  scoreable: boolean;
}

export interface RubricInfo {
  version: string;
  items: RubricItemInfo[];
}

export interface TranscriptTurn {
  speaker: "therapist" | "client";
  text: string;
}

export interface TranscriptPayload {
  id: string;
  turns: TranscriptTurn[];
}

export interface TaskBundle {
  task: Task;
  note: NotePayload;
  sentences: SentenceInfo[];
  rubric: RubricInfo;
  transcript?: TranscriptPayload;
}

export interface CompletenessRecord {
  kind: "completeness";
  note_id: string;
  item_id: string;
  covered: boolean;
  judge: string;
  channel: "human";
}

export interface ConcisenessRecord {
  kind: "conciseness";
  note_id: string;
  section: SectionName;
  sentence_index: number;
  /** A rubric item id, or UNNECESSARY. */
  label: string;
  judge: string;
  channel: "human";
}

export type FaithfulnessCategory =
  | "out_of_nowhere"
  | "misinterpreted"
  | "no_error";

/** (turn index, start offset, end offset) within one transcript turn. */
export type SupportingSpan = [number, number, number];

export interface FaithfulnessRecord {
  kind: "faithfulness";
  note_id: string;
  section: SectionName;
  sentence_index: number;
  category: FaithfulnessCategory;
  supporting_spans: SupportingSpan[];
  judge: string;
  channel: "human";
}

export interface LikertRecord {
  kind: "likert";
  note_id: string;
  scope: SectionName | typeof WHOLE_NOTE;
  dimension: LikertDimension;
  score: number;
  judge: string;
  channel: "human";
}

export type JudgmentRecord =
  | CompletenessRecord
  | ConcisenessRecord
  | FaithfulnessRecord
  | LikertRecord;

export interface JudgmentEnvelope {
  task_id: string;
  idempotency_key: string;
  revision?: number;
  payload: JudgmentRecord[];
}

export interface SubmitAck {
  task_id: string;
  status: string;
  revision: number;
  duplicate: boolean;
}

export function scoreableItems(
  rubric: RubricInfo,
  section: SectionName,
): RubricItemInfo[] {
  return rubric.items.filter(
    (item) => item.section === section && item.scoreable,
  );
}

export function allScoreableItems(rubric: RubricInfo): RubricItemInfo[] {
  return SECTIONS.flatMap((section) => scoreableItems(rubric, section));
}

export function sentenceKey(section: SectionName, index: number): string {
  return `${section}:${index}`;
}
