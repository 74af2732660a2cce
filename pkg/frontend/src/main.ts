/** Browser bootstrap: read ?annotator= (and optional ?api=), then walk the
 * task queue until the server says done. */

import { ApiClient, ApiError } from "./api.js";
import { DocumentContext } from "./model.js";
import { renderTask } from "./render.js";
import { TaskSession } from "./state.js";

async function run(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const annotator = params.get("annotator");
  const base = params.get("api") ?? "";
  const root = document.getElementById("app");
  if (!root) return;
  if (!annotator) {
    root.textContent = "Add ?annotator=YOUR_ID to the URL to begin.";
    return;
  }
  const api = new ApiClient(base);

  const show = (session: TaskSession, context?: DocumentContext): void => {
    renderTask(root, session, {
      onSubmit: () => {
        api
          .submit(session.submissionBody())
          .then(() => advance())
          .catch((error) => {
            session.lastError =
              error instanceof ApiError ? error.message : String(error);
            show(session, context);
          });
      },
    }, context);
  };

  const advance = async (): Promise<void> => {
    let task;
    try {
      task = await api.nextTask(annotator);
    } catch (error) {
      root.textContent =
        error instanceof ApiError ? error.message : String(error);
      return;
    }
    if (task.done) {
      root.textContent = "All assigned tasks are complete. Thank you!";
      return;
    }
    const session = new TaskSession(task);
    let context: DocumentContext | undefined;
    try {
      context = await api.context(task.doc_id!, task.task_id);
    } catch {
      context = undefined; // context is display-only; the task still works
    }
    show(session, context);
  };

  await advance();
}

run();
