/** REST client for the annotation server. */

import {
  JudgmentEnvelope,
  NotePayload,
  SubmitAck,
  TaskBundle,
  TranscriptPayload,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`${status}: ${detail}`);
  }
}

export class StaleRevisionError extends ApiError {}

export class NoOpenTasks extends Error {}

export interface AnnotationApi {
  nextTask(annotator: string): Promise<TaskBundle>;
  submit(envelope: JudgmentEnvelope): Promise<SubmitAck>;
  getNote(noteId: string): Promise<NotePayload>;
  getTranscript(transcriptId: string): Promise<TranscriptPayload>;
}

async function detailOf(response: Response): Promise<string> {
  try {
    const body = await response.json();
    return body.detail ?? body.error ?? response.statusText;
  } catch {
    return response.statusText;
  }
}

export class HttpApi implements AnnotationApi {
  constructor(private readonly base: string = "") {}

  async nextTask(annotator: string): Promise<TaskBundle> {
    const response = await fetch(
      `${this.base}/api/tasks/next?annotator=${encodeURIComponent(annotator)}`,
    );
    if (response.status === 404) {
      throw new NoOpenTasks(await detailOf(response));
    }
    if (!response.ok) {
      throw new ApiError(response.status, await detailOf(response));
    }
    return (await response.json()) as TaskBundle;
  }

  async submit(envelope: JudgmentEnvelope): Promise<SubmitAck> {
    const response = await fetch(`${this.base}/api/judgments`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(envelope),
    });
    if (response.status === 409) {
      throw new StaleRevisionError(409, await detailOf(response));
    }
    if (!response.ok) {
      throw new ApiError(response.status, await detailOf(response));
    }
    return (await response.json()) as SubmitAck;
  }

  async getNote(noteId: string): Promise<NotePayload> {
    const response = await fetch(
      `${this.base}/api/notes/${encodeURIComponent(noteId)}`,
    );
    if (!response.ok) {
      throw new ApiError(response.status, await detailOf(response));
    }
    return (await response.json()) as NotePayload;
  }

  async getTranscript(transcriptId: string): Promise<TranscriptPayload> {
    const response = await fetch(
      `${this.base}/api/transcripts/${encodeURIComponent(transcriptId)}`,
    );
    if (!response.ok) {
      throw new ApiError(response.status, await detailOf(response));
    }
    return (await response.json()) as TranscriptPayload;
  }
}
