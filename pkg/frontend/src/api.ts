/** Thin typed client for the participant endpoints of the experiment API. */

import type { SessionPayload } from "./types.js";

/** HTTP-level failure carrying the status and the server's detail text. */
export class ApiError extends Error {
  readonly status: number;

  constructor(status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
    this.status = status;
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(base = "", fetchFn?: FetchLike) {
    this.base = base.replace(/\/+$/, "");
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  /** URL of the close endpoint; also used by the page-unload beacon. */
  sessionCloseUrl(sessionId: string): string {
    return `${this.base}/api/sessions/${encodeURIComponent(sessionId)}/close`;
  }

  async createSession(target: string, n?: number): Promise<unknown> {
    const body: Record<string, unknown> = { target };
    if (n !== undefined) {
      body.n = n;
    }
    return this.request("POST", `${this.base}/api/sessions`, body);
  }

  async recordClick(sessionId: string, item: string): Promise<void> {
    const url = `${this.base}/api/sessions/${encodeURIComponent(sessionId)}/clicks`;
    await this.request("POST", url, { item });
  }

  /** Closes the session. The response body names an outcome meant for the
   * experimenter; the participant page must stay blind, so it is dropped
   * without being parsed. */
  async closeSession(sessionId: string): Promise<void> {
    await this.request("POST", this.sessionCloseUrl(sessionId), undefined, false);
  }

  private async request(
    method: string,
    url: string,
    body?: unknown,
    parse = true,
  ): Promise<unknown> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchFn(url, init);
    if (!resp.ok) {
      throw new ApiError(resp.status, await readDetail(resp));
    }
    if (!parse || resp.status === 204) {
      return undefined;
    }
    return resp.json();
  }
}

async function readDetail(resp: Response): Promise<string> {
  try {
    const data: unknown = await resp.json();
    if (
      typeof data === "object" &&
      data !== null &&
      typeof (data as { detail?: unknown }).detail === "string"
    ) {
      return (data as { detail: string }).detail;
    }
  } catch {
    // non-JSON body; fall through to the generic message
  }
  return `request failed with status ${resp.status}`;
}
