/** Typed client for the campaign HTTP API. */

import { Ack, DocumentContext, SubmissionBody, TaskPayload } from "./model.js";

export class ApiError extends Error {
  readonly code: string;
  readonly detail: unknown;

  constructor(code: string, message: string, detail: unknown) {
    super(`${code}: ${message}`);
    this.code = code;
    this.detail = detail;
  }
}

async function unwrap<T>(response: Response): Promise<T> {
  if (response.ok) {
    return (await response.json()) as T;
  }
  let body: { code?: string; message?: string; detail?: unknown } = {};
  try {
    body = await response.json();
  } catch {
    // non-JSON failure body
  }
  throw new ApiError(
    body.code ?? `HTTP_${response.status}`,
    body.message ?? response.statusText,
    body.detail ?? null
  );
}

export interface CampaignApi {
  nextTask(annotator: string): Promise<TaskPayload>;
  submit(body: SubmissionBody): Promise<Ack>;
  context(docId: string, taskId?: string): Promise<DocumentContext>;
  exportCampaign(): Promise<unknown>;
}

export class ApiClient implements CampaignApi {
  constructor(private readonly base: string) {}

  private url(path: string): string {
    return this.base.replace(/\/$/, "") + path;
  }

  async nextTask(annotator: string): Promise<TaskPayload> {
    const response = await fetch(
      this.url(`/api/tasks/next?annotator=${encodeURIComponent(annotator)}`)
    );
    return unwrap<TaskPayload>(response);
  }

  async submit(body: SubmissionBody): Promise<Ack> {
    const response = await fetch(this.url("/api/submissions"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    return unwrap<Ack>(response);
  }

  async context(docId: string, taskId?: string): Promise<DocumentContext> {
    const query = taskId ? `?task=${encodeURIComponent(taskId)}` : "";
    const response = await fetch(
      this.url(`/api/context/${encodeURIComponent(docId)}${query}`)
    );
    return unwrap<DocumentContext>(response);
  }

  async progress(): Promise<unknown> {
    return unwrap(await fetch(this.url("/api/progress")));
  }

  async exportCampaign(): Promise<unknown> {
    return unwrap(await fetch(this.url("/api/export"), { method: "POST" }));
  }
}
