/** Scripted browser session: walks every annotator's queue against a live
 * campaign server, driving the real rendered DOM (clicks, change events,
 * selections) under jsdom, then exports the campaign. Prints a JSON record
 * of every submission plus the UI-rule checks so an external harness can
 * verify the round trip through the store.
 *
 * Usage: node dist/scripted_session.js <api-base> <annotator,annotator,...>
 */

import { ApiClient } from "./api.js";
import { SubmissionRecord, driveOne, newChecks } from "./drive.js";

async function main(): Promise<void> {
  const [base, annotatorArg] = process.argv.slice(2);
  if (!base || !annotatorArg) {
    console.error("usage: scripted_session <api-base> <annotator,annotator,...>");
    process.exit(2);
  }
  const api = new ApiClient(base);
  const checks = newChecks();
  const submissions: SubmissionRecord[] = [];
  for (const annotator of annotatorArg.split(",")) {
    for (;;) {
      const task = await api.nextTask(annotator);
      if (task.done) break;
      submissions.push(await driveOne(api, task, checks));
    }
  }
  const exported = await api.exportCampaign();
  process.stdout.write(
    JSON.stringify({ submissions, checks, exported }, null, 1) + "\n"
  );
}

main().catch((error) => {
  console.error(error);
  process.exit(1);
});
