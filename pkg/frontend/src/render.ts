/** Screen rendering: builds DOM from screen state and routes events back
 * into the state modules. All decision logic lives in the state modules;
 * this file only draws and forwards. */

import { button, clear, el } from "./dom.js";
import * as completeness from "./screens/completeness.js";
import * as conciseness from "./screens/conciseness.js";
import * as faithfulness from "./screens/faithfulness.js";
import * as likert from "./screens/likert.js";
import {
  FaithfulnessCategory,
  SECTIONS,
  SectionName,
  TaskBundle,
  WHOLE_NOTE,
  scoreableItems,
  sentenceKey,
} from "./types.js";

export interface ScreenHooks {
  onDraftChanged(data: unknown): void;
  onSubmit(payload: unknown[]): void;
}

function sectionHeading(name: SectionName): string {
  return name.charAt(0).toUpperCase() + name.slice(1);
}

function taskHeader(bundle: TaskBundle): HTMLElement {
  return el("header", { class: "task-header" }, [
    el("h2", {}, [`${bundle.task.dimension} · note ${bundle.note.id}`]),
    el("p", { class: "source-line" }, [likert.sourceLine(bundle.note)]),
  ]);
}

// ---------------------------------------------------------------------------
// completeness
// ---------------------------------------------------------------------------

export function renderCompleteness(
  root: HTMLElement,
  state: completeness.CompletenessState,
  hooks: ScreenHooks,
): void {
  const redraw = () => renderCompleteness(root, state, hooks);
  clear(root);
  root.append(taskHeader(state.bundle));

  const progress = el("nav", { class: "section-progress" });
  for (const entry of completeness.sectionProgress(state)) {
    const index = SECTIONS.indexOf(entry.section);
    const marker = entry.visited ? "✓" : "·";
    progress.append(button(
      `${marker} ${sectionHeading(entry.section)} (${entry.checkedCount})`,
      () => {
        completeness.goToSection(state, index);
        hooks.onDraftChanged(completeness.toDraft(state));
        redraw();
      },
      {
        class: index === state.sectionIndex
          ? "section-tab active"
          : "section-tab",
      },
    ));
  }
  root.append(progress);

  const section = completeness.currentSection(state);
  root.append(el("article", { class: "note-section" }, [
    el("h3", {}, [sectionHeading(section)]),
    el("p", { class: "note-text" }, [
      state.bundle.note.sections[section] || "(empty section)",
    ]),
  ]));

  const list = el("ul", { class: "rubric-checklist" });
  for (const item of scoreableItems(state.bundle.rubric, section)) {
    const checkbox = el("input", {
      type: "checkbox",
      id: `check-${item.id}`,
    }) as HTMLInputElement;
    checkbox.checked = state.checked[item.id];
    checkbox.addEventListener("change", () => {
      completeness.toggleItem(state, item.id);
      hooks.onDraftChanged(completeness.toDraft(state));
      redraw();
    });
    list.append(el("li", {}, [
      checkbox,
      el("label", { for: `check-${item.id}` }, [
        el("strong", {}, [item.name]),
        ` — ${item.description}`,
      ]),
    ]));
  }
  root.append(list);

  const submit = button("Submit coverage judgments", () => {
    hooks.onSubmit(completeness.buildCompletenessPayload(state));
  }, { class: "submit" });
  submit.disabled = !completeness.canSubmit(state);
  root.append(el("footer", {}, [
    submit,
    el("span", { class: "hint" }, [
      completeness.canSubmit(state)
        ? "All sections reviewed."
        : "Visit every section before submitting.",
    ]),
  ]));
}

// ---------------------------------------------------------------------------
// conciseness
// ---------------------------------------------------------------------------

export function renderConciseness(
  root: HTMLElement,
  state: conciseness.ConcisenessState,
  hooks: ScreenHooks,
): void {
  const redraw = () => renderConciseness(root, state, hooks);
  clear(root);
  root.append(taskHeader(state.bundle));
  root.append(el("p", { class: "hint" }, [
    "Label each sentence with the rubric item it serves, or mark it " +
      "Unnecessary. Keys 1–9 pick an item for the focused sentence; 0 " +
      "marks it unnecessary.",
  ]));

  const list = el("ol", { class: "sentence-list" });
  state.bundle.sentences.forEach((sentence, i) => {
    const key = sentenceKey(sentence.section, sentence.index);
    const select = el("select", {}) as HTMLSelectElement;
    select.append(el("option", { value: "" }, ["— choose —"]));
    for (const option of conciseness.labelOptions(state, sentence.section)) {
      select.append(el("option", { value: option.value }, [
        `${option.shortcut}. ${option.name}`,
      ]));
    }
    select.value = state.labels[key] ?? "";
    select.addEventListener("change", () => {
      if (select.value) {
        conciseness.setLabel(state, sentence.section, sentence.index,
          select.value);
        hooks.onDraftChanged(conciseness.toDraft(state));
        redraw();
      }
    });
    list.append(el("li", {
      class: i === state.focusIndex ? "sentence focused" : "sentence",
    }, [
      el("span", { class: "section-tag" }, [sentence.section]),
      el("span", { class: "sentence-text" }, [sentence.text]),
      select,
    ]));
  });
  root.append(list);

  const submit = button("Submit sentence labels", () => {
    hooks.onSubmit(conciseness.buildConcisenessPayload(state));
  }, { class: "submit" });
  submit.disabled = !conciseness.canSubmit(state);
  root.append(el("footer", {}, [
    submit,
    el("span", { class: "hint" }, [
      `${conciseness.labeledCount(state)} / ` +
      `${state.bundle.sentences.length} sentences labeled`,
    ]),
  ]));

  root.onkeydown = (event: KeyboardEvent) => {
    if (event.key === "ArrowDown" || event.key === "j") {
      conciseness.focusNext(state);
      redraw();
    } else if (event.key === "ArrowUp" || event.key === "k") {
      conciseness.focusPrev(state);
      redraw();
    } else if (/^[0-9]$/.test(event.key)) {
      conciseness.labelFocusedByShortcut(state, Number(event.key));
      hooks.onDraftChanged(conciseness.toDraft(state));
      redraw();
    }
  };
}

// ---------------------------------------------------------------------------
// faithfulness
// ---------------------------------------------------------------------------

function selectionFromWindow(
  transcriptRoot: HTMLElement,
): faithfulness.TurnSelection | null {
  const selection = window.getSelection();
  if (!selection || selection.isCollapsed || selection.rangeCount === 0) {
    return null;
  }
  const range = selection.getRangeAt(0);
  const turnOf = (node: Node | null): number => {
    let cursor: Node | null = node;
    while (cursor && cursor !== transcriptRoot) {
      if (cursor instanceof HTMLElement && cursor.dataset.turn) {
        return Number(cursor.dataset.turn);
      }
      cursor = cursor.parentNode;
    }
    return -1;
  };
  const startTurn = turnOf(range.startContainer);
  const endTurn = turnOf(range.endContainer);
  if (startTurn < 0 || endTurn < 0) return null;
  return {
    startTurn,
    startOffset: range.startOffset,
    endTurn,
    endOffset: range.endOffset,
  };
}

export function renderFaithfulness(
  root: HTMLElement,
  state: faithfulness.FaithfulnessState,
  hooks: ScreenHooks,
): void {
  const redraw = () => renderFaithfulness(root, state, hooks);
  clear(root);
  root.append(taskHeader(state.bundle));

  const sentence = state.bundle.sentences[state.current];
  const verdictKey = sentenceKey(sentence.section, sentence.index);
  const verdict = state.verdicts[verdictKey];

  const pane = el("div", { class: "split-view" });

  const left = el("section", { class: "sentence-pane" }, [
    el("h3", {}, [
      `Sentence ${state.current + 1} of ` +
      `${state.bundle.sentences.length} (${sentence.section})`,
    ]),
    el("blockquote", { class: "sentence-focus" }, [sentence.text]),
  ]);
  const categories: [FaithfulnessCategory, string][] = [
    ["no_error", "No error (highlight supporting evidence)"],
    ["out_of_nowhere", "Out of nowhere"],
    ["misinterpreted", "Misinterpreted information"],
  ];
  const choices = el("div", { class: "category-choices" });
  for (const [value, label] of categories) {
    const radio = el("input", {
      type: "radio",
      name: "category",
      id: `cat-${value}`,
    }) as HTMLInputElement;
    radio.checked = verdict.category === value;
    radio.addEventListener("change", () => {
      faithfulness.selectCategory(state, value);
      hooks.onDraftChanged(faithfulness.toDraft(state));
      redraw();
    });
    choices.append(el("div", {}, [
      radio, el("label", { for: `cat-${value}` }, [label]),
    ]));
  }
  left.append(choices);
  left.append(el("p", { class: "hint" }, [
    `${verdict.spans.length} supporting span(s) recorded`,
  ]));
  left.append(button("Clear spans", () => {
    faithfulness.clearSpans(state);
    hooks.onDraftChanged(faithfulness.toDraft(state));
    redraw();
  }));

  const transcriptPane = el("section", {
    class: "transcript-pane",
  });
  transcriptPane.append(el("h3", {}, ["Session transcript"]));
  const turns = el("div", { class: "turns" });
  state.bundle.transcript?.turns.forEach((turn, i) => {
    turns.append(el("p", { "data-turn": String(i), class: "turn" }, [
      el("strong", {}, [`${turn.speaker}: `]),
      turn.text,
    ]));
  });
  turns.addEventListener("mouseup", () => {
    const selection = selectionFromWindow(turns);
    if (!selection) return;
    try {
      faithfulness.addSelection(state, selection);
      hooks.onDraftChanged(faithfulness.toDraft(state));
      redraw();
    } catch {
      // selection fell outside the turn text; ignore it client-side
    }
  });
  transcriptPane.append(turns);

  pane.append(left, transcriptPane);
  root.append(pane);

  const next = button("Next sentence", () => {
    if (faithfulness.advance(state)) {
      hooks.onDraftChanged(faithfulness.toDraft(state));
      redraw();
    }
  });
  next.disabled = !faithfulness.canAdvance(state);
  const submit = button("Submit faithfulness judgments", () => {
    hooks.onSubmit(faithfulness.buildFaithfulnessPayload(state));
  }, { class: "submit" });
  submit.disabled = !faithfulness.canSubmit(state);
  root.append(el("footer", {}, [
    next,
    submit,
    el("span", { class: "hint" }, [
      faithfulness.canAdvance(state)
        ? ""
        : "Pick a category; no-error verdicts need highlighted evidence.",
    ]),
  ]));
}

// ---------------------------------------------------------------------------
// likert
// ---------------------------------------------------------------------------

export function renderLikert(
  root: HTMLElement,
  state: likert.LikertState,
  hooks: ScreenHooks,
): void {
  const redraw = () => renderLikert(root, state, hooks);
  clear(root);
  root.append(taskHeader(state.bundle));

  for (const section of SECTIONS) {
    const block = el("article", { class: "note-section" }, [
      el("h3", {}, [sectionHeading(section)]),
      el("p", { class: "note-text" }, [
        state.bundle.note.sections[section] || "(empty section)",
      ]),
    ]);
    for (const dimension of likert.SECTION_DIMENSIONS) {
      const row = el("div", { class: "rating-row" }, [
        el("span", { class: "rating-label" }, [dimension]),
      ]);
      for (let score = 1; score <= 5; score++) {
        const chosen = state.ratings[`${dimension}:${section}`] === score;
        row.append(button(String(score), () => {
          likert.rate(state, dimension, section, score);
          hooks.onDraftChanged(likert.toDraft(state));
          redraw();
        }, { class: chosen ? "score chosen" : "score" }));
      }
      block.append(row);
    }
    root.append(block);
  }

  const acceptanceRow = el("div", { class: "rating-row" }, [
    el("span", { class: "rating-label" }, ["overall acceptance"]),
  ]);
  for (let score = 1; score <= 5; score++) {
    const chosen = state.ratings[`acceptance:${WHOLE_NOTE}`] === score;
    acceptanceRow.append(button(String(score), () => {
      likert.rate(state, "acceptance", WHOLE_NOTE, score);
      hooks.onDraftChanged(likert.toDraft(state));
      redraw();
    }, { class: chosen ? "score chosen" : "score" }));
  }
  root.append(el("article", { class: "note-section" }, [
    el("h3", {}, ["Whole note"]),
    acceptanceRow,
  ]));

  const submit = button("Submit ratings", () => {
    hooks.onSubmit(likert.buildLikertPayload(state));
  }, { class: "submit" });
  submit.disabled = !likert.canSubmit(state);
  root.append(el("footer", {}, [
    submit,
    el("span", { class: "hint" }, [
      `${likert.ratedCount(state)} / 13 ratings given`,
    ]),
  ]));
}
