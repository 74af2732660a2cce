/** Shared types for the annotation workbench. The UI is blind: payloads
 * carry texts and display sides only, never system identities. */

export type SettingId = "mqm" | "sxs_mqm" | "sxs_rr";
export type SeverityId = "major" | "minor";
export type SideId = "source" | "target";

export interface TaskPayload {
  done: boolean;
  task_id?: string;
  annotator?: string;
  setting?: SettingId;
  doc_id?: string;
  seg_id?: string;
  source?: string;
  targets?: string[];
  options?: string[];
}

export interface ContextSegment {
  seg_id: string;
  source: string;
  targets?: string[];
  active?: boolean;
}

export interface DocumentContext {
  doc_id: string;
  segments: ContextSegment[];
}

export interface ErrorDraft {
  side: SideId;
  start: number; // Unicode scalar offsets on the clean text
  end: number;
  category: string; // top-level name
  subcategory: string | null;
  severity: SeverityId;
  unspecified_span: boolean;
}

export interface SubmissionBody {
  task_id: string;
  annotator: string;
  client_ts: string;
  errors?: WireError[];
  left_errors?: WireError[];
  right_errors?: WireError[];
  preference?: string;
}

export interface WireError {
  category: string; // full path, e.g. "Accuracy/Mistranslation"
  severity: SeverityId;
  start: number;
  end: number;
  unspecified_span: boolean;
}

export interface Ack {
  task_id: string;
  seq: number;
  revision: number;
  is_revision: boolean;
}

/** Two-level error hierarchy offered by the category tree. */
export const CATEGORY_TREE: ReadonlyArray<{
  name: string;
  subs: readonly string[];
}> = [
  {
    name: "Accuracy",
    subs: [
      "Reinterpretation",
      "Mistranslation",
      "Gender Mismatch",
      "Untranslated",
      "Addition",
      "Omission",
    ],
  },
  {
    name: "Fluency",
    subs: [
      "Inconsistency",
      "Grammar",
      "Register",
      "Spelling",
      "Text-Breaking",
      "Punctuation",
      "Character Encoding",
    ],
  },
  {
    name: "Style",
    subs: [
      "Unnatural or Awkward",
      "Bad Sentence Structure",
      "Archaic or Obscure Word Choice",
    ],
  },
  {
    name: "Terminology",
    subs: ["Inappropriate for Context", "Inconsistent"],
  },
  {
    name: "Locale Convention",
    subs: [
      "Address Format",
      "Date Format",
      "Currency Format",
      "Telephone Format",
      "Time Format",
      "Name Format",
    ],
  },
  { name: "Non-Translation", subs: [] },
  { name: "Other", subs: [] },
  { name: "Source Issue", subs: [] },
];

/** Categories whose severity is locked to major. */
export const FORCED_MAJOR: ReadonlySet<string> = new Set(["Non-Translation"]);

/** Categories that live on the source text; the UI stages them only as
 * whole-segment errors because span selection works on targets. */
export const SOURCE_SIDE: ReadonlySet<string> = new Set(["Source Issue"]);

export const RR_OPTIONS = [
  "left_much_better",
  "left_better",
  "same",
  "right_better",
  "right_much_better",
] as const;

export const RR_LABELS: Record<string, string> = {
  left_much_better: "Much better (left)",
  left_better: "Better (left)",
  same: "About the same",
  right_better: "Better (right)",
  right_much_better: "Much better (right)",
};

export function subcategoriesOf(category: string): readonly string[] {
  const entry = CATEGORY_TREE.find((c) => c.name === category);
  return entry ? entry.subs : [];
}

export function categoryPath(category: string, subcategory: string | null): string {
  return subcategory ? `${category}/${subcategory}` : category;
}
