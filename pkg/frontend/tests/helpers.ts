import { ApiClient } from "../src/api.js";
import { SessionHandle, startSession, type StartOptions } from "../src/app.js";
import type { SessionPayload } from "../src/types.js";
import { FakeServer } from "./fakeServer.js";

/** Deterministic marker-free user references. */
export function refs(count: number, stem = "friend"): string[] {
  return Array.from(
    { length: count },
    (_, i) => `${stem}${String(i + 1).padStart(2, "0")}@north.test`,
  );
}

export function payloadOf(userrefs: string[]): SessionPayload {
  return {
    session_id: "s-fixed",
    n: userrefs.length,
    items: userrefs.map((userref, index) => ({ userref, display_rank: index + 1 })),
  };
}

/** Fresh root element attached to the document body. */
export function mount(): HTMLElement {
  document.body.innerHTML = "";
  const root = document.createElement("section");
  document.body.append(root);
  return root;
}

export interface Harness {
  server: FakeServer;
  api: ApiClient;
  root: HTMLElement;
  handle: SessionHandle;
  opened: string[];
  beacons: string[];
}

/** Starts a session against a fresh fake server and rendered root. */
export async function begin(
  userrefs: string[],
  overrides: Partial<StartOptions> = {},
): Promise<Harness> {
  const server = new FakeServer();
  server.queueItems(userrefs);
  const api = new ApiClient("", server.fetch);
  const root = mount();
  const opened: string[] = [];
  const beacons: string[] = [];
  const handle = await startSession(root, api, {
    target: "me@home.test",
    openWindow: (url) => {
      opened.push(url);
    },
    sendBeacon: (url) => {
      beacons.push(url);
      return true;
    },
    ...overrides,
  });
  if (handle === null) {
    throw new Error("session unexpectedly failed to start");
  }
  return { server, api, root, handle, opened, beacons };
}

export function followButtons(root: HTMLElement): HTMLButtonElement[] {
  return [...root.querySelectorAll<HTMLButtonElement>("button.follow")];
}

export function rowRefs(root: HTMLElement): (string | undefined)[] {
  return [...root.querySelectorAll<HTMLElement>("ol.recs li")].map(
    (row) => row.dataset.userref,
  );
}

/** Lets queued promise callbacks and microtasks run to completion. */
export async function settle(): Promise<void> {
  for (let i = 0; i < 4; i += 1) {
    await new Promise((resolve) => {
      setTimeout(resolve, 0);
    });
  }
}
