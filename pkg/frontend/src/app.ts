/** Session lifecycle wiring: one open session per page, optimistic UI,
 * at-most-once click delivery to the API. */

import { ApiClient, ApiError } from "./api.js";
import type { SessionPayload } from "./types.js";
import {
  PayloadFormatError,
  disableFollowButtons,
  remoteFollowUrl,
  renderError,
  renderFinished,
  renderSession,
  showToast,
  validateSession,
} from "./view.js";

const SESSION_OVER = "This round has already ended; follows can no longer be saved here.";
const CLICK_FAILED = "Could not save that follow — please press the button again.";

export interface StartOptions {
  target: string;
  n?: number;
  /** Opens the remote profile after a follow is saved; defaults to window.open. */
  openWindow?: (url: string) => void;
  /** Fire-and-forget close used on page unload; null turns the beacon off. */
  sendBeacon?: ((url: string) => boolean) | null;
}

export class SessionHandle {
  readonly payload: SessionPayload;
  private readonly root: HTMLElement;
  private readonly api: ApiClient;
  private readonly openWindow: (url: string) => void;
  private readonly beacon: ((url: string) => boolean) | null;
  private readonly saved = new Set<string>();
  private readonly pending = new Set<string>();
  private closed = false;

  constructor(
    root: HTMLElement,
    api: ApiClient,
    payload: SessionPayload,
    openWindow: (url: string) => void,
    beacon: ((url: string) => boolean) | null,
  ) {
    this.root = root;
    this.api = api;
    this.payload = payload;
    this.openWindow = openWindow;
    this.beacon = beacon;
  }

  /** Records one follow click. The button is latched off before the
   * request leaves, so repeat clicks (double taps included) send
   * nothing; only a failed request re-enables it. */
  async follow(userref: string, button: HTMLButtonElement): Promise<void> {
    if (this.closed) {
      showToast(this.root, SESSION_OVER);
      return;
    }
    if (this.saved.has(userref) || this.pending.has(userref)) {
      return;
    }
    this.pending.add(userref);
    button.disabled = true;
    try {
      await this.api.recordClick(this.payload.session_id, userref);
    } catch (err) {
      this.pending.delete(userref);
      if (err instanceof ApiError && err.status === 409) {
        this.closed = true;
        disableFollowButtons(this.root);
        showToast(this.root, SESSION_OVER);
      } else {
        button.disabled = false;
        showToast(this.root, CLICK_FAILED);
      }
      return;
    }
    this.pending.delete(userref);
    this.saved.add(userref);
    button.textContent = "Following";
    button.classList.add("followed");
    this.openWindow(remoteFollowUrl(userref));
  }

  /** Explicit end of the session ("done" action). */
  async finish(): Promise<void> {
    if (this.closed) {
      return;
    }
    this.closed = true;
    disableFollowButtons(this.root);
    try {
      await this.api.closeSession(this.payload.session_id);
    } catch {
      // the session is over either way; the thanks page still applies
    }
    renderFinished(this.root);
  }

  /** Page-unload path: a beacon closes the session if still open. */
  handlePageHide(): void {
    if (this.closed || this.beacon === null) {
      return;
    }
    this.closed = true;
    this.beacon(this.api.sessionCloseUrl(this.payload.session_id));
  }
}

/** Creates a session for `target` and renders it into `root`.
 * Returns null (with an error view rendered) when no session could be
 * started. */
export async function startSession(
  root: HTMLElement,
  api: ApiClient,
  options: StartOptions,
): Promise<SessionHandle | null> {
  let payload: SessionPayload;
  try {
    payload = validateSession(await api.createSession(options.target, options.n));
  } catch (err) {
    renderError(root, startFailureMessage(err));
    return null;
  }
  const openWindow =
    options.openWindow ??
    ((url: string) => {
      window.open(url, "_blank", "noopener");
    });
  const beacon = options.sendBeacon !== undefined ? options.sendBeacon : defaultBeacon();
  const handle = new SessionHandle(root, api, payload, openWindow, beacon);
  renderSession(root, payload, {
    onFollow: (userref, button) => {
      void handle.follow(userref, button);
    },
    onDone: () => {
      void handle.finish();
    },
  });
  window.addEventListener("pagehide", () => handle.handlePageHide());
  return handle;
}

function defaultBeacon(): ((url: string) => boolean) | null {
  if (typeof navigator !== "undefined" && typeof navigator.sendBeacon === "function") {
    return (url: string) => navigator.sendBeacon(url);
  }
  return null;
}

function startFailureMessage(err: unknown): string {
  if (err instanceof PayloadFormatError) {
    return "The server sent a reply this page could not read. Please try again later.";
  }
  if (err instanceof ApiError) {
    if (err.status === 400) {
      return "That does not look like a fediverse address — expected name@instance.";
    }
    if (err.status === 502) {
      return "That address could not be found in the federation. Check the spelling and try again.";
    }
    return "The experiment server turned the request down. Please try again later.";
  }
  return "Could not reach the experiment server. Check your connection and try again.";
}
