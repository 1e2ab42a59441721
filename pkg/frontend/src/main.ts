/** Entry point: annotator task loop against the live server. */

import { HttpApi, NoOpenTasks } from "./api.js";
import {
  closeSession,
  openSession,
  saveSessionDraft,
  shouldDefer,
  submitPayload,
} from "./app.js";
import { Drafts } from "./drafts.js";
import { clear, el, button } from "./dom.js";
import * as completeness from "./screens/completeness.js";
import * as conciseness from "./screens/conciseness.js";
import * as faithfulness from "./screens/faithfulness.js";
import * as likert from "./screens/likert.js";
import {
  renderCompleteness,
  renderConciseness,
  renderFaithfulness,
  renderLikert,
} from "./render.js";
import { JudgmentRecord, TaskBundle, TaskDimension } from "./types.js";

const api = new HttpApi("");
const drafts = new Drafts(window.localStorage);
const completedThisSitting: { noteId: string; dimension: TaskDimension }[] =
  [];

function root(): HTMLElement {
  return document.getElementById("app") as HTMLElement;
}

function showMessage(text: string, retry?: () => void): void {
  const node = root();
  clear(node);
  const children: (Node | string)[] = [el("p", { class: "message" }, [text])];
  node.append(el("div", { class: "message-box" }, children));
  if (retry) {
    node.append(button("Continue", retry, { class: "submit" }));
  }
}

async function runTask(bundle: TaskBundle): Promise<void> {
  if (shouldDefer(bundle, completedThisSitting)) {
    showMessage(
      "The paired coverage task for this note was just completed. Take a " +
        "break before labeling it again; fetching the next task instead.",
      loop,
    );
    return;
  }

  const dimension = bundle.task.dimension;
  const node = root();

  const submit = async (payload: JudgmentRecord[], session: {
    idempotencyKey: string;
  }): Promise<void> => {
    try {
      const outcome = await submitPayload(
        api, bundle, payload, session.idempotencyKey,
        () => api.nextTask(bundle.task.annotator_id),
      );
      drafts.clear(bundle.task.task_id);
      completedThisSitting.push({
        noteId: bundle.task.note_id,
        dimension,
      });
      showMessage(
        `Submitted (revision ${outcome.ack.revision}).`, loop);
    } catch (error) {
      showMessage(`Submission rejected: ${(error as Error).message}`, loop);
    }
  };

  if (dimension === "completeness") {
    const session = openSession<completeness.CompletenessDraft>(
      drafts, bundle);
    const state = session.draft !== null
      ? completeness.fromDraft(bundle, session.draft)
      : completeness.createCompleteness(bundle);
    renderCompleteness(node, state, {
      onDraftChanged: (data) => saveSessionDraft(
        drafts, session, data as completeness.CompletenessDraft),
      onSubmit: (payload) => {
        void submit(payload as JudgmentRecord[], session);
        closeSession(drafts, session);
      },
    });
  } else if (dimension === "conciseness") {
    const session = openSession<conciseness.ConcisenessDraft>(
      drafts, bundle);
    const state = session.draft !== null
      ? conciseness.fromDraft(bundle, session.draft)
      : conciseness.createConciseness(bundle);
    renderConciseness(node, state, {
      onDraftChanged: (data) => saveSessionDraft(
        drafts, session, data as conciseness.ConcisenessDraft),
      onSubmit: (payload) => {
        void submit(payload as JudgmentRecord[], session);
        closeSession(drafts, session);
      },
    });
  } else if (dimension === "faithfulness") {
    const session = openSession<faithfulness.FaithfulnessDraft>(
      drafts, bundle);
    const state = session.draft !== null
      ? faithfulness.fromDraft(bundle, session.draft)
      : faithfulness.createFaithfulness(bundle);
    renderFaithfulness(node, state, {
      onDraftChanged: (data) => saveSessionDraft(
        drafts, session, data as faithfulness.FaithfulnessDraft),
      onSubmit: (payload) => {
        void submit(payload as JudgmentRecord[], session);
        closeSession(drafts, session);
      },
    });
  } else {
    const session = openSession<likert.LikertDraft>(drafts, bundle);
    const state = session.draft !== null
      ? likert.fromDraft(bundle, session.draft)
      : likert.createLikert(bundle);
    renderLikert(node, state, {
      onDraftChanged: (data) => saveSessionDraft(
        drafts, session, data as likert.LikertDraft),
      onSubmit: (payload) => {
        void submit(payload as JudgmentRecord[], session);
        closeSession(drafts, session);
      },
    });
  }
}

function annotatorId(): string {
  const params = new URLSearchParams(window.location.search);
  const fromUrl = params.get("annotator");
  if (fromUrl) return fromUrl;
  const stored = window.localStorage.getItem("tn-eval.annotator");
  if (stored) return stored;
  const typed = window.prompt("Annotator id:") ?? "";
  window.localStorage.setItem("tn-eval.annotator", typed);
  return typed;
}

async function loop(): Promise<void> {
  try {
    const bundle = await api.nextTask(annotatorId());
    await runTask(bundle);
  } catch (error) {
    if (error instanceof NoOpenTasks) {
      showMessage("No open tasks. You are all caught up.");
    } else {
      showMessage(`Could not load a task: ${(error as Error).message}`,
        loop);
    }
  }
}

window.addEventListener("DOMContentLoaded", () => {
  void loop();
});
