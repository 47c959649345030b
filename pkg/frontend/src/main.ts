/** Browser entry point: reads the target from the form or the query
 * string (the invitation link carries ?target=...) and starts a session. */

import { ApiClient } from "./api.js";
import { startSession } from "./app.js";

function parseLength(value: string | null): number | undefined {
  if (value === null) {
    return undefined;
  }
  const parsed = Number.parseInt(value, 10);
  return Number.isInteger(parsed) && parsed > 0 ? parsed : undefined;
}

function boot(): void {
  const form = document.getElementById("start-form") as HTMLFormElement | null;
  const view = document.getElementById("view");
  if (form === null || view === null) {
    return;
  }
  const api = new ApiClient("");
  const params = new URLSearchParams(window.location.search);
  const length = parseLength(params.get("n"));

  const begin = (target: string): void => {
    form.hidden = true;
    void startSession(view, api, { target, n: length }).then((handle) => {
      if (handle === null) {
        form.hidden = false;
      }
    });
  };

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const input = form.querySelector<HTMLInputElement>("input[name=target]");
    const target = input?.value.trim() ?? "";
    if (target !== "") {
      begin(target);
    }
  });

  const preset = params.get("target");
  if (preset !== null && preset.trim() !== "") {
    begin(preset.trim());
  }
}

if (document.readyState === "loading") {
  document.addEventListener("DOMContentLoaded", boot);
} else {
  boot();
}
