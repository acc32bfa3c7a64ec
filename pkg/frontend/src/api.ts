/** Thin typed client for the triage service. */

import type { CardViewRecord, DecisionRecord, TicketRecord } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export interface DecisionResult {
  decision: DecisionRecord;
  ticket: TicketRecord | null;
}

export class ApiClient {
  constructor(
    public base: string,
    private fetchFn: typeof fetch = fetch,
  ) {
    this.base = base.replace(/\/+$/, "");
  }

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const resp = await this.fetchFn(`${this.base}${path}`, init);
    let body: unknown = null;
    try {
      body = await resp.json();
    } catch {
      // non-JSON error bodies fall through to the status check
    }
    if (!resp.ok) {
      const detail =
        body && typeof body === "object" && "detail" in body
          ? String((body as { detail: unknown }).detail)
          : resp.statusText;
      throw new ApiError(resp.status, detail);
    }
    return body;
  }

  private post(path: string, payload: unknown): Promise<unknown> {
    return this.request(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  getCard(alertId: string): Promise<CardViewRecord> {
    return this.request(
      `/cards/${encodeURIComponent(alertId)}`,
    ) as Promise<CardViewRecord>;
  }

  postAlert(record: Record<string, unknown>): Promise<unknown> {
    return this.post("/alerts", record);
  }

  postDecision(
    alertId: string,
    verdict: "approve" | "dismiss",
  ): Promise<DecisionResult> {
    return this.post("/decisions", {
      alert_id: alertId,
      verdict,
    }) as Promise<DecisionResult>;
  }

  postFeedback(
    alertId: string,
    rating: number,
    comment: string,
  ): Promise<unknown> {
    return this.post("/feedback", { alert_id: alertId, rating, comment });
  }

  getReport(): Promise<Record<string, number | boolean>> {
    return this.request("/report") as Promise<Record<string, number | boolean>>;
  }
}
