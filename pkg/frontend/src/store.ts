/** Client-side card state.
 *
 * The store is rebuilt from the server alone: cards arrive through the
 * event stream, decision/ticket/feedback state is hydrated from
 * GET /cards/{id}. Decisions are applied optimistically and rolled back
 * if the request fails; a 409 means someone else decided first, so the
 * server state is fetched and wins.
 */

import type { ApiClient } from "./api.js";
import { ApiError } from "./api.js";
import type { CardEntry, CardRecord, CardViewRecord, FeedEvent } from "./types.js";

export type StoreListener = (alertId: string | null) => void;

export function validRating(rating: number): boolean {
  return Number.isInteger(rating) && rating >= 1 && rating <= 5;
}

export class CardStore {
  order: string[] = [];
  entries = new Map<string, CardEntry>();
  private listeners: StoreListener[] = [];
  // serializes decision/feedback/hydrate requests per card
  private chains = new Map<string, Promise<void>>();

  constructor(private api: ApiClient) {}

  onChange(listener: StoreListener): void {
    this.listeners.push(listener);
  }

  private notify(alertId: string | null): void {
    for (const fn of this.listeners) fn(alertId);
  }

  private chain(alertId: string, task: () => Promise<void>): Promise<void> {
    const tail = this.chains.get(alertId) ?? Promise.resolve();
    const next = tail.then(task, task);
    this.chains.set(alertId, next);
    return next;
  }

  get(alertId: string): CardEntry | undefined {
    return this.entries.get(alertId);
  }

  cards(): CardEntry[] {
    return this.order.map((id) => this.entries.get(id)!);
  }

  /** Drop everything; the feed is about to replay history from zero. */
  clear(): void {
    this.order = [];
    this.entries.clear();
    this.notify(null);
  }

  applyEvent(ev: FeedEvent): void {
    if (ev.stage === "CardReady") {
      if (!this.entries.has(ev.alert_id)) {
        this.order.push(ev.alert_id);
        this.entries.set(ev.alert_id, {
          card: ev.payload as unknown as CardRecord,
          state: "Pending",
          ticketId: null,
          feedback: [],
          busy: false,
          feedbackNote: null,
          feedbackError: false,
          decisionError: null,
        });
        this.notify(ev.alert_id);
        // pick up any decision made before we connected
        void this.hydrate(ev.alert_id);
      }
    } else if (ev.stage === "TicketCreated") {
      const entry = this.entries.get(ev.alert_id);
      if (entry) {
        entry.state = "Approved";
        entry.ticketId = String(ev.payload.ticket_id ?? "");
        this.notify(ev.alert_id);
      }
    } else if (ev.stage === "FeedbackRecorded") {
      void this.hydrate(ev.alert_id);
    }
  }

  /** Refresh one card from the server; server state always wins. */
  hydrate(alertId: string): Promise<void> {
    return this.chain(alertId, () => this.hydrateNow(alertId));
  }

  decide(alertId: string, verdict: "approve" | "dismiss"): Promise<void> {
    const entry = this.entries.get(alertId);
    if (!entry || entry.state !== "Pending" || entry.busy) {
      return Promise.resolve();
    }
    // optimistic: flip the card now, roll back if the server disagrees
    entry.state = verdict === "approve" ? "Approved" : "Dismissed";
    entry.busy = true;
    entry.decisionError = null;
    this.notify(alertId);
    return this.chain(alertId, async () => {
      try {
        const result = await this.api.postDecision(alertId, verdict);
        entry.ticketId = result.ticket ? result.ticket.ticket_id : null;
        entry.state =
          result.decision.verdict === "Approve" ? "Approved" : "Dismissed";
      } catch (err) {
        if (err instanceof ApiError && err.status === 409) {
          // decided elsewhere; fetch what the server settled on
          entry.busy = false;
          this.notify(alertId);
          await this.hydrateNow(alertId);
          return;
        }
        entry.state = "Pending";
        entry.decisionError =
          err instanceof ApiError ? err.detail : "request failed";
      } finally {
        entry.busy = false;
      }
      this.notify(alertId);
    });
  }

  // hydrate() queues behind the chain; this variant runs inline because the
  // caller already owns the chain slot
  private async hydrateNow(alertId: string): Promise<void> {
    let view: CardViewRecord;
    try {
      view = await this.api.getCard(alertId);
    } catch {
      return; // transient; the next event retries
    }
    const entry = this.entries.get(alertId);
    if (!entry) return;
    entry.card = view.card;
    entry.feedback = view.feedback;
    // a decision request may be in flight; its own response (or 409
    // reconciliation) settles the state, a stale snapshot must not
    if (!entry.busy) {
      entry.ticketId = view.ticket ? view.ticket.ticket_id : null;
      entry.state = view.decision
        ? view.decision.verdict === "Approve"
          ? "Approved"
          : "Dismissed"
        : "Pending";
    }
    this.notify(alertId);
  }

  /** Validates client-side; an out-of-range rating never reaches the wire. */
  submitFeedback(alertId: string, rating: number, comment: string): Promise<void> {
    const entry = this.entries.get(alertId);
    if (!entry || entry.busy) return Promise.resolve();
    if (!validRating(rating)) {
      entry.feedbackNote = "rating must be an integer between 1 and 5";
      entry.feedbackError = true;
      this.notify(alertId);
      return Promise.resolve();
    }
    entry.busy = true;
    entry.feedbackNote = null;
    entry.feedbackError = false;
    this.notify(alertId);
    return this.chain(alertId, async () => {
      try {
        await this.api.postFeedback(alertId, rating, comment);
        // re-read the card so the list shows the server's own record
        await this.hydrateNow(alertId);
        entry.feedbackNote = "feedback recorded";
        entry.feedbackError = false;
      } catch (err) {
        entry.feedbackNote =
          err instanceof ApiError ? err.detail : "request failed";
        entry.feedbackError = true;
      } finally {
        entry.busy = false;
      }
      this.notify(alertId);
    });
  }
}
