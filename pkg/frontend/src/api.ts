/** Thin typed client for the annotation service API.
 *
 * The UI never computes labels or metrics itself; these four calls are the
 * only requests it makes. fetchFn is injectable so tests can run against a
 * scripted transport.
 */

import type { LabelAck, QueryItemDoc, RoundDoc, SessionDoc } from "./types.js";

export type FetchFn = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function parseDetail(res: Response): Promise<string> {
  try {
    const body = await res.json();
    if (body && typeof body.detail === "string") return body.detail;
    return JSON.stringify(body);
  } catch {
    return res.statusText || "request failed";
  }
}

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchFn = (url, init) => fetch(url, init),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const res = await this.fetchFn(this.base + path);
    if (!res.ok) throw new ApiError(res.status, await parseDetail(res));
    return (await res.json()) as T;
  }

  getSession(): Promise<SessionDoc> {
    return this.getJson<SessionDoc>("/api/session");
  }

  getQueries(): Promise<QueryItemDoc[]> {
    return this.getJson<QueryItemDoc[]>("/api/queries");
  }

  getMetrics(): Promise<RoundDoc[]> {
    return this.getJson<RoundDoc[]>("/api/metrics");
  }

  async postLabel(id: number, label: number): Promise<LabelAck> {
    const res = await this.fetchFn(this.base + "/api/labels", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ id, label }),
    });
    if (!res.ok) throw new ApiError(res.status, await parseDetail(res));
    return (await res.json()) as LabelAck;
  }
}
