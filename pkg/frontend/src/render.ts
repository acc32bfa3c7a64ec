/** DOM rendering for the card feed. No framework: cards are small, the
 * feed replaces one card element at a time, and the whole thing stays
 * debuggable in view-source. */

import type { CardEntry } from "./types.js";

export interface CardActions {
  approve(alertId: string): void;
  dismiss(alertId: string): void;
  feedback(alertId: string, rating: number, comment: string): void;
  /** injectable so tests can observe copies without a real clipboard */
  copy?(text: string): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function defaultCopy(text: string): void {
  void navigator.clipboard?.writeText(text);
}

export function renderCard(
  doc: Document,
  entry: CardEntry,
  actions: CardActions,
): HTMLElement {
  const card = entry.card;
  const copy = actions.copy ?? defaultCopy;
  const root = el(doc, "article", "card");
  root.dataset.alertId = card.alert_id;
  if (entry.state === "Dismissed") root.classList.add("dismissed");
  if (card.degraded) root.classList.add("degraded");

  const header = el(doc, "header", "card-header");
  header.appendChild(el(doc, "span", "alert-id", card.alert_id));
  if (card.degraded) {
    header.appendChild(el(doc, "span", "badge badge-degraded", "degraded"));
  }
  const stateChip = el(doc, "span", `state state-${entry.state.toLowerCase()}`, entry.state);
  header.appendChild(stateChip);
  if (entry.ticketId) {
    header.appendChild(el(doc, "span", "ticket-id", `ticket ${entry.ticketId}`));
  }
  root.appendChild(header);

  // a degraded card carries no trusted summary or actions, only the raw
  // reply preserved as reasoning
  if (!card.degraded) {
    const summary = el(doc, "section", "summary");
    summary.appendChild(el(doc, "h3", undefined, "Alert summary"));
    summary.appendChild(el(doc, "p", undefined, card.summary));
    root.appendChild(summary);

    const actionsSection = el(doc, "section", "actions");
    actionsSection.appendChild(el(doc, "h3", undefined, "Recommended Actions"));
    const list = el(doc, "ol");
    for (const item of card.actions) {
      const li = el(doc, "li");
      li.appendChild(el(doc, "span", "action-desc", item.description));
      if (item.command) {
        const cmd = el(doc, "code", "command", item.command);
        const btn = el(doc, "button", "copy-btn", "copy");
        btn.type = "button";
        btn.dataset.command = item.command;
        btn.addEventListener("click", () => copy(item.command!));
        li.appendChild(cmd);
        li.appendChild(btn);
      }
      list.appendChild(li);
    }
    actionsSection.appendChild(list);
    root.appendChild(actionsSection);
  }

  const reasoning = el(doc, "details", "reasoning");
  reasoning.open = card.degraded; // nothing else to show on a degraded card
  reasoning.appendChild(el(doc, "summary", undefined, "Explanation and Reasoning"));
  reasoning.appendChild(el(doc, "pre", undefined, card.reasoning));
  root.appendChild(reasoning);

  const controls = el(doc, "footer", "controls");
  const decideRow = el(doc, "div", "decide-row");
  const approve = el(doc, "button", "approve-btn", "Approve");
  const dismiss = el(doc, "button", "dismiss-btn", "Dismiss");
  approve.type = "button";
  dismiss.type = "button";
  // once decided (or while a request is in flight) the buttons stay dead
  approve.disabled = entry.state !== "Pending" || entry.busy;
  dismiss.disabled = entry.state !== "Pending" || entry.busy;
  approve.addEventListener("click", () => actions.approve(card.alert_id));
  dismiss.addEventListener("click", () => actions.dismiss(card.alert_id));
  decideRow.appendChild(approve);
  decideRow.appendChild(dismiss);
  if (entry.decisionError) {
    decideRow.appendChild(el(doc, "span", "decision-error", entry.decisionError));
  }
  controls.appendChild(decideRow);

  const form = el(doc, "div", "feedback-form");
  const rating = el(doc, "input", "rating-input") as HTMLInputElement;
  rating.type = "number";
  rating.min = "1";
  rating.max = "5";
  rating.placeholder = "1-5";
  const comment = el(doc, "input", "comment-input") as HTMLInputElement;
  comment.type = "text";
  comment.placeholder = "comment (optional)";
  const send = el(doc, "button", "feedback-btn", "Send feedback");
  send.type = "button";
  send.disabled = entry.busy;
  send.addEventListener("click", () => {
    actions.feedback(card.alert_id, Number(rating.value), comment.value);
  });
  form.appendChild(rating);
  form.appendChild(comment);
  form.appendChild(send);
  if (entry.feedbackNote) {
    const noteClass = entry.feedbackError ? "feedback-note error" : "feedback-note";
    form.appendChild(el(doc, "span", noteClass, entry.feedbackNote));
  }
  if (entry.feedback.length > 0) {
    const given = entry.feedback.map((f) => `${f.rating}/5`).join(", ");
    form.appendChild(el(doc, "span", "feedback-history", `recorded: ${given}`));
  }
  controls.appendChild(form);
  root.appendChild(controls);

  return root;
}

/** Connection banner shown while the feed is down. */
export function renderBanner(doc: Document): HTMLElement {
  const banner = el(doc, "div", "banner hidden");
  banner.textContent = "connection lost, reconnecting…";
  return banner;
}

export function setBannerVisible(banner: HTMLElement, visible: boolean): void {
  banner.classList.toggle("hidden", !visible);
}
