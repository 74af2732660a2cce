/** Deterministic task-driving logic shared by the scripted session and the
 * mock-server tests: plans per panel, DOM interactions, rule checks. */

import { JSDOM } from "jsdom";

import { CampaignApi } from "./api.js";
import { SeverityId, TaskPayload } from "./model.js";
import { renderTask } from "./render.js";
import { TaskSession } from "./state.js";
import { tokenRanges16 } from "./text.js";

export interface PanelPlan {
  kind: "span" | "none" | "whole";
  word?: number;
  category?: string;
  subcategory?: string | null;
  severity?: SeverityId;
}

export const PLANS: PanelPlan[] = [
  { kind: "span", word: 0, category: "Accuracy", subcategory: "Mistranslation", severity: "major" },
  { kind: "span", word: 1, category: "Fluency", subcategory: "Punctuation", severity: "minor" },
  // severity minor must be overridden by the UI: Non-Translation is always major
  { kind: "span", word: 0, category: "Non-Translation", subcategory: null, severity: "minor" },
  { kind: "none" },
  { kind: "whole", category: "Source Issue", subcategory: null, severity: "minor" },
  { kind: "span", word: 2, category: "Style", subcategory: "Unnatural or Awkward", severity: "minor" },
];

export const RR_CYCLE = [
  "left_much_better",
  "same",
  "right_better",
  "left_better",
  "right_much_better",
];

export interface SubmissionRecord {
  task_id: string;
  setting: string;
  doc_id: string;
  seg_id: string;
  body: unknown;
  panels: Array<{ panel: number; kind: string; word?: number }>;
}

export interface Checks {
  rr_tasks: number;
  rr_option_counts: number[];
  rr_span_tool_counts: number[];
  forced_major_observed: number;
  system_ids_leaked: number;
}

export function segIndex(task: TaskPayload): number {
  const match = /(\d+)\s*$/.exec(task.seg_id ?? "");
  return match ? parseInt(match[1], 10) : 0;
}

function query<T extends Element>(root: Element, testid: string): T {
  const found = root.querySelector(`[data-testid="${testid}"]`);
  if (!found) throw new Error(`missing element ${testid}`);
  return found as T;
}

function setSelect(root: Element, testid: string, value: string, win: Window): void {
  const select = query<HTMLSelectElement>(root, testid);
  select.value = value;
  select.dispatchEvent(new (win as any).Event("change", { bubbles: true }));
}

function driveErrorTask(
  dom: JSDOM,
  root: HTMLElement,
  session: TaskSession,
  record: SubmissionRecord,
  checks: Checks
): void {
  const win = dom.window as unknown as Window;
  const panels = session.task.targets?.length ?? 0;
  for (let panel = 0; panel < panels; panel++) {
    const plan = PLANS[(segIndex(session.task) * 2 + panel) % PLANS.length];
    record.panels.push({ panel, kind: plan.kind, word: plan.word });
    if (plan.kind === "none") {
      query<HTMLInputElement>(root, `no-errors-${panel}`).click();
      continue;
    }
    setSelect(root, `category-${panel}`, plan.category!, win);
    if (plan.subcategory) {
      setSelect(root, `subcategory-${panel}`, plan.subcategory, win);
    }
    if (plan.category === "Non-Translation") {
      // the minor toggle must be locked to major
      const minor = query<HTMLInputElement>(root, `severity-minor-${panel}`);
      const major = query<HTMLInputElement>(root, `severity-major-${panel}`);
      minor.click();
      if (minor.disabled && major.checked && !minor.checked) {
        checks.forced_major_observed += 1;
      } else {
        throw new Error("Non-Translation did not lock severity to major");
      }
    } else if (plan.severity === "minor") {
      query<HTMLInputElement>(root, `severity-minor-${panel}`).click();
    }
    if (plan.kind === "whole") {
      const whole = query<HTMLInputElement>(root, `whole-segment-${panel}`);
      if (!whole.checked) whole.click();
    } else {
      const target = session.target(panel);
      const tokens = tokenRanges16(target);
      const [start16, end16] = tokens[plan.word! % tokens.length];
      // browser-only piece (mouseup -> window.getSelection) is bypassed;
      // the snapping/offset conversion below is the code under test
      session.setSelectionUtf16(panel, start16, end16);
    }
    query<HTMLButtonElement>(root, `add-error-${panel}`).click();
  }
}

function driveRankingTask(
  root: HTMLElement,
  session: TaskSession,
  checks: Checks
): void {
  const options = root.querySelectorAll('[data-testid^="pref-"]');
  const spanTools = root.querySelectorAll(
    '[data-testid^="add-error-"], [data-testid^="category-"],' +
      ' [data-testid^="severity-"], [data-testid^="no-errors-"]'
  );
  checks.rr_tasks += 1;
  checks.rr_option_counts.push(options.length);
  checks.rr_span_tool_counts.push(spanTools.length);
  const choice = RR_CYCLE[segIndex(session.task) % RR_CYCLE.length];
  query<HTMLInputElement>(root, `pref-${choice}`).click();
}

export async function driveOne(
  api: CampaignApi,
  task: TaskPayload,
  checks: Checks
): Promise<SubmissionRecord> {
  const dom = new JSDOM(`<!doctype html><body><div id="app"></div></body>`);
  const root = dom.window.document.getElementById("app") as HTMLElement;
  const session = new TaskSession(task);
  const record: SubmissionRecord = {
    task_id: task.task_id!,
    setting: task.setting!,
    doc_id: task.doc_id!,
    seg_id: task.seg_id!,
    body: null,
    panels: [],
  };

  let resolveSubmit!: () => void;
  let rejectSubmit!: (error: unknown) => void;
  const submitted = new Promise<void>((resolve, reject) => {
    resolveSubmit = resolve;
    rejectSubmit = reject;
  });
  renderTask(root, session, {
    onSubmit: () => {
      const body = session.submissionBody();
      record.body = body;
      api.submit(body).then(resolveSubmit, rejectSubmit);
    },
  });

  const html = root.innerHTML;
  if (/sys[A-Z]/.test(html)) {
    checks.system_ids_leaked += 1;
  }

  if (session.isRanking) {
    driveRankingTask(root, session, checks);
  } else {
    driveErrorTask(dom, root, session, record, checks);
  }
  const submit = query<HTMLButtonElement>(root, "submit-btn");
  if (submit.disabled) {
    throw new Error(`submit blocked for ${task.task_id}`);
  }
  submit.click();
  await submitted;
  return record;
}

export function newChecks(): Checks {
  return {
    rr_tasks: 0,
    rr_option_counts: [],
    rr_span_tool_counts: [],
    forced_major_observed: 0,
    system_ids_leaked: 0,
  };
}
