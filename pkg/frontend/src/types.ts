/** Wire shapes of the triage service HTTP API. */

export interface ActionRecord {
  description: string;
  command: string | null;
}

export interface CardRecord {
  alert_id: string;
  summary: string;
  actions: ActionRecord[];
  reasoning: string;
  context_digest: Record<string, unknown>;
  provider_meta: Record<string, unknown>;
  degraded: boolean;
}

export interface DecisionRecord {
  alert_id: string;
  verdict: "Approve" | "Dismiss";
  analyst: string;
  at: string;
}

export interface TicketRecord {
  ticket_id: string;
  alert_id: string;
  title: string;
  body: string;
  status: string;
  created_at: string;
}

export interface FeedbackRecord {
  alert_id: string;
  rating: number;
  comment: string;
  analyst: string;
  at: string;
}

/** GET /cards/{alert_id} response. */
export interface CardViewRecord {
  card: CardRecord;
  related_alert_ids: string[];
  decision: DecisionRecord | null;
  ticket: TicketRecord | null;
  feedback: FeedbackRecord[];
}

/** One frame of the GET /events stream (the `data:` payload). */
export interface FeedEvent {
  seq: number;
  stage: string;
  alert_id: string;
  payload: Record<string, unknown>;
  at: string;
}

export type DecisionState = "Pending" | "Approved" | "Dismissed";

/** What the console holds per card; everything here is reconstructible
 * from GET /cards/{alert_id} plus the event stream. */
export interface CardEntry {
  card: CardRecord;
  state: DecisionState;
  ticketId: string | null;
  feedback: FeedbackRecord[];
  /** request in flight; decision/feedback controls disabled */
  busy: boolean;
  /** "feedback recorded" confirmation or an inline validation error */
  feedbackNote: string | null;
  feedbackError: boolean;
  /** non-null when the last decision attempt failed and was rolled back */
  decisionError: string | null;
}
