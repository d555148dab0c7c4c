// Typed client for the monitoring service.

import type {
  CompareReport,
  DesignPayload,
  ProgressEvent,
  SessionSummary,
} from "./types.js";
import type { IndexedPair } from "./viewmodel.js";

export class HttpError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function jsonOrThrow(resp: Response): Promise<unknown> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = (await resp.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // keep the status text
    }
    throw new HttpError(resp.status, detail);
  }
  return resp.json();
}

export class ApiClient {
  constructor(private base: string = "") {}

  private async post(path: string, body: unknown): Promise<unknown> {
    const resp = await fetch(this.base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return jsonOrThrow(resp);
  }

  async design(body: {
    p_treatment: number;
    p_control: number;
    alpha: number;
  }): Promise<DesignPayload> {
    return (await this.post("/design", body)) as DesignPayload;
  }

  async createSession(body: {
    session_id?: string;
    design: { p_treatment: number; p_control: number; alpha?: number };
    futility?: { delta_min: number; alpha_f?: number };
  }): Promise<SessionSummary> {
    return (await this.post("/sessions", body)) as SessionSummary;
  }

  async sendBatch(sessionId: string, pairs: IndexedPair[]): Promise<SessionSummary> {
    return (await this.post(
      `/sessions/${encodeURIComponent(sessionId)}/batch`,
      { pairs },
    )) as SessionSummary;
  }

  async getSession(sessionId: string): Promise<SessionSummary> {
    const resp = await fetch(`${this.base}/sessions/${encodeURIComponent(sessionId)}`);
    return (await jsonOrThrow(resp)) as SessionSummary;
  }

  async compare(config: Record<string, unknown>, seed: number): Promise<CompareReport> {
    return (await this.post("/compare", { config, seed })) as CompareReport;
  }

  /** Streamed comparison: JSON-lines progress events, resolved with the
   * final report embedded in the last event. */
  async compareStream(
    config: Record<string, unknown>,
    seed: number,
    onProgress: (ev: ProgressEvent) => void,
  ): Promise<CompareReport> {
    const resp = await fetch(`${this.base}/compare`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ config, seed, stream: true }),
    });
    if (!resp.ok || resp.body === null) {
      await jsonOrThrow(resp);
      throw new HttpError(resp.status, "no stream body");
    }
    const reader = resp.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    let report: CompareReport | null = null;
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let nl;
      while ((nl = buffer.indexOf("\n")) >= 0) {
        const line = buffer.slice(0, nl).trim();
        buffer = buffer.slice(nl + 1);
        if (!line) continue;
        const ev = JSON.parse(line) as ProgressEvent;
        onProgress(ev);
        if (ev.report) report = ev.report;
      }
    }
    if (report === null) throw new HttpError(502, "stream ended without a report");
    return report;
  }
}
