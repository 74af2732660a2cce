/** DOM renderer. Render is a pure function of the session: every mutation
 * triggers a full re-render (the views are small). Targets are labelled by
 * display side only; system identities never reach the client. */

import {
  CATEGORY_TREE,
  DocumentContext,
  FORCED_MAJOR,
  RR_LABELS,
  RR_OPTIONS,
  SOURCE_SIDE,
  SeverityId,
} from "./model.js";
import { TaskSession } from "./state.js";
import { scalarToUtf16 } from "./text.js";

export interface RenderHandlers {
  onSubmit: () => void;
}

const SETTING_TITLES: Record<string, string> = {
  mqm: "Error annotation",
  sxs_mqm: "Side-by-side error annotation",
  sxs_rr: "Side-by-side ranking",
};

export function renderTask(
  root: HTMLElement,
  session: TaskSession,
  handlers: RenderHandlers,
  context?: DocumentContext
): void {
  const doc = root.ownerDocument;
  root.textContent = "";

  const rerender = () => renderTask(root, session, handlers, context);

  const header = doc.createElement("header");
  const title = doc.createElement("h2");
  title.textContent = SETTING_TITLES[session.setting] ?? session.setting;
  header.appendChild(title);
  const where = doc.createElement("p");
  where.className = "task-meta";
  where.textContent = `Document ${session.task.doc_id}, segment ${session.task.seg_id}`;
  header.appendChild(where);
  root.appendChild(header);

  if (context) {
    root.appendChild(renderContext(doc, context));
  }

  const source = doc.createElement("section");
  source.className = "source";
  source.dataset.testid = "source-text";
  const sourceLabel = doc.createElement("h3");
  sourceLabel.textContent = "Source";
  source.appendChild(sourceLabel);
  const sourceText = doc.createElement("p");
  sourceText.textContent = session.task.source ?? "";
  source.appendChild(sourceText);
  root.appendChild(source);

  const panels = doc.createElement("div");
  panels.className = "panels";
  const targets = session.task.targets ?? [];
  targets.forEach((_, panel) => {
    panels.appendChild(
      session.isRanking
        ? renderRankingPanel(doc, session, panel)
        : renderErrorPanel(doc, session, panel, rerender)
    );
  });
  root.appendChild(panels);

  if (session.isRanking) {
    root.appendChild(renderPreferenceControl(doc, session, rerender));
  }

  if (session.lastError) {
    const warning = doc.createElement("p");
    warning.className = "warning";
    warning.dataset.testid = "warning";
    warning.textContent = session.lastError;
    root.appendChild(warning);
  }

  const submit = doc.createElement("button");
  submit.dataset.testid = "submit-btn";
  submit.textContent = "Submit";
  submit.disabled = !session.canSubmit();
  submit.addEventListener("click", () => {
    if (session.canSubmit()) handlers.onSubmit();
  });
  root.appendChild(submit);
}

function renderContext(doc: Document, context: DocumentContext): HTMLElement {
  const section = doc.createElement("section");
  section.className = "context";
  section.dataset.testid = "context";
  const label = doc.createElement("h3");
  label.textContent = `Document ${context.doc_id}`;
  section.appendChild(label);
  for (const segment of context.segments) {
    const row = doc.createElement("div");
    row.className = segment.active ? "context-segment active" : "context-segment";
    row.dataset.segId = segment.seg_id;
    const src = doc.createElement("p");
    src.textContent = segment.source;
    row.appendChild(src);
    for (const target of segment.targets ?? []) {
      const t = doc.createElement("p");
      t.className = "context-target";
      t.textContent = target;
      row.appendChild(t);
    }
    section.appendChild(row);
  }
  return section;
}

function panelName(session: TaskSession, panel: number): string {
  if ((session.task.targets ?? []).length === 1) return "Translation";
  return panel === 0 ? "Translation (left)" : "Translation (right)";
}

function renderRankingPanel(
  doc: Document,
  session: TaskSession,
  panel: number
): HTMLElement {
  const section = doc.createElement("section");
  section.className = "panel ranking";
  const label = doc.createElement("h3");
  label.textContent = panelName(session, panel);
  section.appendChild(label);
  const text = doc.createElement("p");
  text.dataset.testid = `target-${panel}`;
  text.textContent = session.target(panel);
  section.appendChild(text);
  return section;
}

function renderPreferenceControl(
  doc: Document,
  session: TaskSession,
  rerender: () => void
): HTMLElement {
  const control = doc.createElement("fieldset");
  control.dataset.testid = "preference-control";
  const legend = doc.createElement("legend");
  legend.textContent = "Which translation is better?";
  control.appendChild(legend);
  for (const option of RR_OPTIONS) {
    const wrap = doc.createElement("label");
    const radio = doc.createElement("input");
    radio.type = "radio";
    radio.name = "preference";
    radio.value = option;
    radio.dataset.testid = `pref-${option}`;
    radio.checked = session.preference === option;
    radio.addEventListener("change", () => {
      session.setPreference(option);
      rerender();
    });
    wrap.appendChild(radio);
    wrap.appendChild(doc.createTextNode(" " + RR_LABELS[option]));
    control.appendChild(wrap);
  }
  return control;
}

function renderErrorPanel(
  doc: Document,
  session: TaskSession,
  panel: number,
  rerender: () => void
): HTMLElement {
  const section = doc.createElement("section");
  section.className = "panel";
  const label = doc.createElement("h3");
  label.textContent = panelName(session, panel);
  section.appendChild(label);

  const text = doc.createElement("p");
  text.className = "target-text";
  text.dataset.testid = `target-${panel}`;
  text.textContent = session.target(panel);
  text.addEventListener("mouseup", () => {
    const range = domSelectionIn(doc, text);
    if (range) {
      session.setSelectionUtf16(panel, range[0], range[1]);
      rerender();
    }
  });
  section.appendChild(text);

  if (session.selection && session.selection.panel === panel) {
    const target = session.target(panel);
    const lo = scalarToUtf16(target, session.selection.start);
    const hi = scalarToUtf16(target, session.selection.end);
    const preview = doc.createElement("p");
    preview.className = "selection-preview";
    preview.dataset.testid = `selection-${panel}`;
    preview.textContent =
      `Selected: “${target.slice(lo, hi)}”` +
      ` [${session.selection.start}, ${session.selection.end})`;
    section.appendChild(preview);
  }

  section.appendChild(renderErrorForm(doc, session, panel, rerender));
  section.appendChild(renderStagedList(doc, session, panel, rerender));

  const confirmWrap = doc.createElement("label");
  confirmWrap.className = "no-errors";
  const confirm = doc.createElement("input");
  confirm.type = "checkbox";
  confirm.dataset.testid = `no-errors-${panel}`;
  confirm.checked = session.noErrorsConfirmed[panel];
  confirm.disabled = session.staged[panel].length > 0;
  confirm.addEventListener("change", () => {
    session.confirmNoErrors(panel, confirm.checked);
    rerender();
  });
  confirmWrap.appendChild(confirm);
  confirmWrap.appendChild(
    doc.createTextNode(" This translation has no errors")
  );
  section.appendChild(confirmWrap);
  return section;
}

function renderErrorForm(
  doc: Document,
  session: TaskSession,
  panel: number,
  rerender: () => void
): HTMLElement {
  const form = doc.createElement("div");
  form.className = "error-form";

  const categorySelect = doc.createElement("select");
  categorySelect.dataset.testid = `category-${panel}`;
  for (const entry of CATEGORY_TREE) {
    const option = doc.createElement("option");
    option.value = entry.name;
    option.textContent = entry.name;
    categorySelect.appendChild(option);
  }

  const subSelect = doc.createElement("select");
  subSelect.dataset.testid = `subcategory-${panel}`;

  const severityWrap = doc.createElement("span");
  severityWrap.className = "severity";
  const severityInputs: HTMLInputElement[] = [];
  for (const severity of ["major", "minor"] as SeverityId[]) {
    const label = doc.createElement("label");
    const radio = doc.createElement("input");
    radio.type = "radio";
    radio.name = `severity-${panel}`;
    radio.value = severity;
    radio.dataset.testid = `severity-${severity}-${panel}`;
    radio.checked = severity === "major";
    severityInputs.push(radio);
    label.appendChild(radio);
    label.appendChild(doc.createTextNode(" " + severity));
    severityWrap.appendChild(label);
  }

  const syncCategory = () => {
    const subs = CATEGORY_TREE.find((c) => c.name === categorySelect.value)?.subs ?? [];
    subSelect.textContent = "";
    if (subs.length === 0) {
      const none = doc.createElement("option");
      none.value = "";
      none.textContent = "—";
      subSelect.appendChild(none);
      subSelect.disabled = true;
    } else {
      subSelect.disabled = false;
      for (const sub of subs) {
        const option = doc.createElement("option");
        option.value = sub;
        option.textContent = sub;
        subSelect.appendChild(option);
      }
    }
    // severity locks to major for always-major categories
    const forced = FORCED_MAJOR.has(categorySelect.value);
    for (const input of severityInputs) {
      if (forced) {
        input.checked = input.value === "major";
        input.disabled = true;
      } else {
        input.disabled = false;
      }
    }
  };
  categorySelect.addEventListener("change", syncCategory);
  syncCategory();

  const wholeWrap = doc.createElement("label");
  const whole = doc.createElement("input");
  whole.type = "checkbox";
  whole.dataset.testid = `whole-segment-${panel}`;
  wholeWrap.appendChild(whole);
  wholeWrap.appendChild(doc.createTextNode(" whole segment (no span)"));

  const add = doc.createElement("button");
  add.dataset.testid = `add-error-${panel}`;
  add.textContent = "Add error";
  add.addEventListener("click", () => {
    const severity = (severityInputs.find((i) => i.checked)?.value ??
      "major") as SeverityId;
    session.stageError({
      panel,
      category: categorySelect.value,
      subcategory: subSelect.disabled ? null : subSelect.value,
      severity,
      wholeSegment: whole.checked || SOURCE_SIDE.has(categorySelect.value),
    });
    rerender();
  });

  form.appendChild(categorySelect);
  form.appendChild(subSelect);
  form.appendChild(severityWrap);
  form.appendChild(wholeWrap);
  form.appendChild(add);
  return form;
}

function renderStagedList(
  doc: Document,
  session: TaskSession,
  panel: number,
  rerender: () => void
): HTMLElement {
  const list = doc.createElement("ul");
  list.className = "staged";
  list.dataset.testid = `staged-${panel}`;
  session.staged[panel].forEach((draft, index) => {
    const item = doc.createElement("li");
    const target = session.target(panel);
    const excerpt = draft.unspecified_span
      ? "(whole segment)"
      : `“${target.slice(
          scalarToUtf16(target, draft.start),
          scalarToUtf16(target, draft.end)
        )}”`;
    const path = draft.subcategory
      ? `${draft.category}/${draft.subcategory}`
      : draft.category;
    item.textContent = `${path} · ${draft.severity} · ${excerpt} `;
    const remove = doc.createElement("button");
    remove.textContent = "remove";
    remove.dataset.testid = `remove-${panel}-${index}`;
    remove.addEventListener("click", () => {
      session.removeError(panel, index);
      rerender();
    });
    item.appendChild(remove);
    list.appendChild(item);
  });
  return list;
}

/** Read the browser selection as UTF-16 offsets within the panel's text
 * node; null when the selection is empty or lies elsewhere. */
function domSelectionIn(
  doc: Document,
  container: HTMLElement
): [number, number] | null {
  const view = doc.defaultView;
  const selection = view?.getSelection?.();
  if (!selection || selection.rangeCount === 0 || selection.isCollapsed) {
    return null;
  }
  const range = selection.getRangeAt(0);
  const node = container.firstChild;
  if (!node || range.startContainer !== node || range.endContainer !== node) {
    return null;
  }
  return [range.startOffset, range.endOffset];
}
