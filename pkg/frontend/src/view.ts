/** DOM rendering for the participant page.
 *
 * Rows are rendered strictly in payload order — the server's merged
 * order is the experiment variable, so the client never reorders — and
 * the markup carries nothing beyond rank and user reference.
 */

import type { SessionItem, SessionPayload } from "./types.js";

/** Raised when a session payload does not match the wire contract. */
export class PayloadFormatError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "PayloadFormatError";
  }
}

const USERREF_PATTERN = /^[A-Za-z0-9][A-Za-z0-9._-]*@[A-Za-z0-9][A-Za-z0-9.-]*$/;

/** Checks a create-session response and returns it typed.
 *
 * Enforces the payload invariants this page relies on: contiguous
 * display ranks starting at 1, well-formed unique user references, and
 * an item count matching `n`.
 */
export function validateSession(payload: unknown): SessionPayload {
  if (typeof payload !== "object" || payload === null) {
    throw new PayloadFormatError("session payload is not an object");
  }
  const raw = payload as Record<string, unknown>;
  if (typeof raw.session_id !== "string" || raw.session_id === "") {
    throw new PayloadFormatError("session payload lacks a session_id");
  }
  if (!Array.isArray(raw.items)) {
    throw new PayloadFormatError("session payload lacks an items array");
  }
  if (typeof raw.n !== "number" || raw.n !== raw.items.length) {
    throw new PayloadFormatError("session payload n does not match its items");
  }
  const seen = new Set<string>();
  const items: SessionItem[] = raw.items.map((entry: unknown, index: number) => {
    if (typeof entry !== "object" || entry === null) {
      throw new PayloadFormatError(`item ${index} is not an object`);
    }
    const item = entry as Record<string, unknown>;
    if (typeof item.userref !== "string" || !USERREF_PATTERN.test(item.userref)) {
      throw new PayloadFormatError(`item ${index} has a malformed userref`);
    }
    if (item.display_rank !== index + 1) {
      throw new PayloadFormatError(`item ${index} breaks the display_rank order`);
    }
    if (seen.has(item.userref)) {
      throw new PayloadFormatError(`item ${index} repeats ${item.userref}`);
    }
    seen.add(item.userref);
    return { userref: item.userref, display_rank: index + 1 };
  });
  return { session_id: raw.session_id, n: items.length, items };
}

/** Page of `userref` on its home instance, per the usual federated
 * remote-profile URL shape: https://<instance>/@<username>. */
export function remoteFollowUrl(userref: string): string {
  const at = userref.indexOf("@");
  const username = userref.slice(0, at);
  const instance = userref.slice(at + 1);
  return `https://${instance}/@${username}`;
}

export interface SessionHandlers {
  onFollow: (userref: string, button: HTMLButtonElement) => void;
  onDone: () => void;
}

export function renderSession(
  root: HTMLElement,
  payload: SessionPayload,
  handlers: SessionHandlers,
): void {
  root.replaceChildren();
  if (payload.items.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty";
    empty.textContent =
      "No follow ideas for this account right now — try again once it has been active for a while.";
    root.append(empty, doneButton(handlers));
    return;
  }
  const intro = document.createElement("p");
  intro.className = "intro";
  intro.textContent = "Accounts you might enjoy. Follow opens their page on their home instance.";
  const list = document.createElement("ol");
  list.className = "recs";
  for (const item of payload.items) {
    list.append(renderRow(item, handlers));
  }
  root.append(intro, list, doneButton(handlers));
}

function renderRow(item: SessionItem, handlers: SessionHandlers): HTMLLIElement {
  const row = document.createElement("li");
  row.dataset.userref = item.userref;
  const link = document.createElement("a");
  link.className = "profile";
  link.href = remoteFollowUrl(item.userref);
  link.target = "_blank";
  link.rel = "noopener noreferrer";
  link.textContent = item.userref;
  const button = document.createElement("button");
  button.type = "button";
  button.className = "follow";
  button.textContent = "Follow";
  button.setAttribute("aria-label", `Follow ${item.userref}`);
  button.addEventListener("click", () => handlers.onFollow(item.userref, button));
  row.append(link, button);
  return row;
}

function doneButton(handlers: SessionHandlers): HTMLButtonElement {
  const done = document.createElement("button");
  done.type = "button";
  done.className = "done";
  done.textContent = "I'm done";
  done.addEventListener("click", () => handlers.onDone());
  return done;
}

export function renderError(root: HTMLElement, message: string): void {
  root.replaceChildren();
  const alert = document.createElement("p");
  alert.className = "error";
  alert.setAttribute("role", "alert");
  alert.textContent = message;
  root.append(alert);
}

export function renderFinished(root: HTMLElement): void {
  root.replaceChildren();
  const note = document.createElement("p");
  note.className = "finished";
  note.setAttribute("role", "status");
  note.textContent = "All set — thanks for taking part. You can close this page now.";
  root.append(note);
}

/** Transient status line; replaced by the next toast. */
export function showToast(root: HTMLElement, message: string): void {
  root.querySelector(".toast")?.remove();
  const toast = document.createElement("p");
  toast.className = "toast";
  toast.setAttribute("role", "status");
  toast.textContent = message;
  root.append(toast);
}

export function disableFollowButtons(root: HTMLElement): void {
  for (const button of root.querySelectorAll<HTMLButtonElement>("button.follow")) {
    button.disabled = true;
  }
}
