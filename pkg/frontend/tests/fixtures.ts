import { readFileSync } from "node:fs";

import {
  JudgmentRecord,
  RubricInfo,
  SentenceInfo,
  TaskBundle,
  TaskDimension,
  TranscriptPayload,
} from "../src/types.js";

export interface ConformanceCase {
  name: string;
  note_id: string;
  dimension: TaskDimension;
  valid: boolean;
  payload: JudgmentRecord[];
}

export interface ConformanceDoc {
  context: {
    annotator: string;
    rubric: RubricInfo;
    notes: Record<string, TaskBundle["note"]>;
    sentences: Record<string, SentenceInfo[]>;
    transcripts: Record<string, TranscriptPayload>;
  };
  cases: ConformanceCase[];
}

const casesUrl = new URL("../conformance/cases.json", import.meta.url);

export function loadConformance(): ConformanceDoc {
  return JSON.parse(readFileSync(casesUrl, "utf-8")) as ConformanceDoc;
}

export function makeBundle(
  doc: ConformanceDoc,
  noteId: string,
  dimension: TaskDimension,
  annotator?: string,
): TaskBundle {
  const context = doc.context;
  const note = context.notes[noteId];
  const who = annotator ?? context.annotator;
  const bundle: TaskBundle = {
    task: {
      task_id: `${dimension}/${noteId}/${who}`,
      annotator_id: who,
      note_id: noteId,
      dimension,
      status: "open",
      revision: 1,
    },
    note,
    sentences: context.sentences[noteId],
    rubric: context.rubric,
  };
  if (dimension === "faithfulness") {
    bundle.transcript = context.transcripts[note.transcript_id];
  }
  return bundle;
}
