/** View state for one task: staged errors, the active selection, the
 * relative-ranking choice, and the submission gate. */

import {
  ErrorDraft,
  FORCED_MAJOR,
  RR_OPTIONS,
  SOURCE_SIDE,
  SettingId,
  SeverityId,
  SubmissionBody,
  TaskPayload,
  WireError,
  categoryPath,
  subcategoriesOf,
} from "./model.js";
import { scalarLength, snapRange, utf16ToScalar } from "./text.js";

export interface Selection {
  panel: number;
  start: number; // scalar offsets, already snapped
  end: number;
}

export interface StageRequest {
  panel: number;
  category: string;
  subcategory: string | null;
  severity: SeverityId;
  wholeSegment: boolean;
}

export class TaskSession {
  readonly task: TaskPayload;
  readonly staged: ErrorDraft[][];
  readonly noErrorsConfirmed: boolean[];
  selection: Selection | null = null;
  preference: string | null = null;
  lastError: string | null = null;

  constructor(task: TaskPayload) {
    if (task.done || !task.task_id) {
      throw new Error("cannot open a session on a finished queue");
    }
    this.task = task;
    const panels = task.targets?.length ?? 0;
    this.staged = Array.from({ length: panels }, () => []);
    this.noErrorsConfirmed = Array.from({ length: panels }, () => false);
  }

  get setting(): SettingId {
    return this.task.setting as SettingId;
  }

  get isRanking(): boolean {
    return this.setting === "sxs_rr";
  }

  target(panel: number): string {
    const targets = this.task.targets ?? [];
    if (panel < 0 || panel >= targets.length) {
      throw new Error(`no panel ${panel}`);
    }
    return targets[panel];
  }

  /** Record a selection from UTF-16 offsets (as delivered by the DOM),
   * snapping outward to grapheme boundaries. */
  setSelectionUtf16(panel: number, start16: number, end16: number): void {
    if (this.isRanking) {
      this.lastError = "ranking tasks take no span selections";
      return;
    }
    const text = this.target(panel);
    const [lo16, hi16] = snapRange(
      text,
      Math.max(0, Math.min(start16, end16)),
      Math.min(text.length, Math.max(start16, end16))
    );
    this.selection = {
      panel,
      start: utf16ToScalar(text, lo16),
      end: utf16ToScalar(text, hi16),
    };
    this.lastError = null;
  }

  clearSelection(): void {
    this.selection = null;
  }

  /** Effective severity for a category (Non-Translation is always major). */
  severityFor(category: string, requested: SeverityId): SeverityId {
    return FORCED_MAJOR.has(category) ? "major" : requested;
  }

  stageError(request: StageRequest): boolean {
    if (this.isRanking) {
      this.lastError = "ranking tasks take no error annotations";
      return false;
    }
    const subs = subcategoriesOf(request.category);
    if (request.subcategory !== null && !subs.includes(request.subcategory)) {
      this.lastError = `${request.subcategory} is not a ${request.category} subcategory`;
      return false;
    }
    if (subs.length > 0 && request.subcategory === null) {
      this.lastError = `${request.category} needs a subcategory`;
      return false;
    }
    const severity = this.severityFor(request.category, request.severity);
    const sourceSide = SOURCE_SIDE.has(request.category);
    let draft: ErrorDraft;
    if (request.wholeSegment || sourceSide) {
      // no identifiable span: recorded against the whole segment
      draft = {
        side: sourceSide ? "source" : "target",
        start: 0,
        end: 0,
        category: request.category,
        subcategory: request.subcategory,
        severity,
        unspecified_span: true,
      };
    } else {
      const selection = this.selection;
      if (selection === null || selection.panel !== request.panel) {
        this.lastError = "select a span in this panel first";
        return false;
      }
      if (selection.start >= selection.end) {
        this.lastError = "selection is empty";
        return false;
      }
      const limit = scalarLength(this.target(request.panel));
      if (selection.start < 0 || selection.end > limit) {
        this.lastError = "selection is out of bounds";
        return false;
      }
      draft = {
        side: "target",
        start: selection.start,
        end: selection.end,
        category: request.category,
        subcategory: request.subcategory,
        severity,
        unspecified_span: false,
      };
    }
    this.staged[request.panel].push(draft);
    this.noErrorsConfirmed[request.panel] = false;
    this.selection = null;
    this.lastError = null;
    return true;
  }

  removeError(panel: number, index: number): void {
    this.staged[panel].splice(index, 1);
  }

  confirmNoErrors(panel: number, confirmed: boolean): void {
    if (this.staged[panel].length > 0 && confirmed) {
      this.lastError = "errors are staged; remove them before confirming";
      return;
    }
    this.noErrorsConfirmed[panel] = confirmed;
    this.lastError = null;
  }

  setPreference(option: string): boolean {
    if (!this.isRanking) {
      this.lastError = "only ranking tasks take a preference";
      return false;
    }
    if (!(RR_OPTIONS as readonly string[]).includes(option)) {
      this.lastError = `unknown option ${option}`;
      return false;
    }
    this.preference = option;
    this.lastError = null;
    return true;
  }

  canSubmit(): boolean {
    if (this.isRanking) {
      return this.preference !== null;
    }
    return this.staged.every(
      (drafts, panel) => drafts.length > 0 || this.noErrorsConfirmed[panel]
    );
  }

  submissionBody(): SubmissionBody {
    if (!this.canSubmit()) {
      throw new Error("submission blocked: " + (this.isRanking
        ? "choose one of the five options"
        : "mark errors or confirm the segment is error-free"));
    }
    const body: SubmissionBody = {
      task_id: this.task.task_id!,
      annotator: this.task.annotator!,
      client_ts: new Date().toISOString(),
    };
    if (this.isRanking) {
      body.preference = this.preference!;
      return body;
    }
    const wires = this.staged.map((drafts) => drafts.map(toWire));
    if (this.setting === "mqm") {
      body.errors = wires[0];
    } else {
      body.left_errors = wires[0];
      body.right_errors = wires[1];
    }
    return body;
  }
}

function toWire(draft: ErrorDraft): WireError {
  return {
    category: categoryPath(draft.category, draft.subcategory),
    severity: draft.severity,
    start: draft.start,
    end: draft.end,
    unspecified_span: draft.unspecified_span,
  };
}
