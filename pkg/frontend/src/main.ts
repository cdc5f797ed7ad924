// Browser entry point. The service base URL comes from the ?service= query
// parameter and defaults to the page origin.

import { SessionApi } from "./api.js";
import { SolveApp } from "./app.js";

function serviceBaseUrl(): string {
  const params = new URLSearchParams(window.location.search);
  const override = params.get("service");
  if (override) {
    return override.replace(/\/$/, "");
  }
  return window.location.origin;
}

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app mount point");
}
const app = new SolveApp({
  document,
  root,
  api: new SessionApi(serviceBaseUrl()),
});
void app.showTasks();
