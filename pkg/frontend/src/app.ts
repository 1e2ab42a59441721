/** Task flow orchestration: fetch, protocol separation, validate, submit
 * with stale-revision replay, and draft lifecycle. Pure of DOM concerns so
 * the whole flow is unit-testable. */

import { AnnotationApi, StaleRevisionError } from "./api.js";
import { DraftEnvelope, Drafts, newIdempotencyKey } from "./drafts.js";
import {
  JudgmentRecord,
  SubmitAck,
  TaskBundle,
  TaskDimension,
} from "./types.js";
import { ValidationContext, validatePayload } from "./validate.js";

/** The rubric protocol keeps coverage assessment unbiased: an annotator
 * never sees the completeness and conciseness screens for the same note in
 * one sitting. */
export function shouldDefer(
  bundle: TaskBundle,
  completedThisSitting: { noteId: string; dimension: TaskDimension }[],
): boolean {
  const paired: Record<string, TaskDimension> = {
    completeness: "conciseness",
    conciseness: "completeness",
  };
  const other = paired[bundle.task.dimension];
  if (!other) return false;
  return completedThisSitting.some(
    (done) => done.noteId === bundle.task.note_id &&
      done.dimension === other,
  );
}

export interface SubmitOutcome {
  ack: SubmitAck;
  retriedStaleRevision: boolean;
}

/** Validate locally, then submit; on a stale revision, refetch the task
 * and replay the same draft payload against the fresh revision. The
 * idempotency key is minted once per draft, so replays are no-ops
 * server-side. */
export async function submitPayload(
  api: AnnotationApi,
  bundle: TaskBundle,
  payload: JudgmentRecord[],
  idempotencyKey: string,
  refetch: () => Promise<TaskBundle>,
): Promise<SubmitOutcome> {
  const context: ValidationContext = {
    task: bundle.task,
    rubric: bundle.rubric,
    sentences: bundle.sentences,
    transcript: bundle.transcript,
  };
  const verdict = validatePayload(context, payload);
  if (!verdict.ok) {
    throw new Error(`refusing to submit an invalid payload: ${verdict.error}`);
  }
  try {
    const ack = await api.submit({
      task_id: bundle.task.task_id,
      idempotency_key: idempotencyKey,
      revision: bundle.task.revision,
      payload,
    });
    return { ack, retriedStaleRevision: false };
  } catch (error) {
    if (!(error instanceof StaleRevisionError)) throw error;
    const fresh = await refetch();
    const ack = await api.submit({
      task_id: fresh.task.task_id,
      idempotency_key: idempotencyKey,
      revision: fresh.task.revision,
      payload,
    });
    return { ack, retriedStaleRevision: true };
  }
}

export interface TaskSession<TDraft> {
  bundle: TaskBundle;
  idempotencyKey: string;
  draft: TDraft | null;
}

/** Load a task together with any saved draft for it. */
export function openSession<TDraft>(
  drafts: Drafts,
  bundle: TaskBundle,
): TaskSession<TDraft> {
  const saved = drafts.load<TDraft>(bundle.task.task_id);
  if (saved !== null) {
    return {
      bundle,
      idempotencyKey: saved.idempotencyKey,
      draft: saved.data,
    };
  }
  return { bundle, idempotencyKey: newIdempotencyKey(), draft: null };
}

export function saveSessionDraft<TDraft>(
  drafts: Drafts,
  session: TaskSession<TDraft>,
  data: TDraft,
): void {
  const envelope: DraftEnvelope<TDraft> = {
    taskId: session.bundle.task.task_id,
    revision: session.bundle.task.revision,
    idempotencyKey: session.idempotencyKey,
    data,
  };
  drafts.save(envelope);
}

export function closeSession<TDraft>(
  drafts: Drafts,
  session: TaskSession<TDraft>,
): void {
  drafts.clear(session.bundle.task.task_id);
}
