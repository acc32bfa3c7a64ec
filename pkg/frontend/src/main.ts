/** Console entry point: wire the feed, store, and DOM together.
 *
 * Configuration is just the service base URL: `?api=http://host:port`,
 * defaulting to port 8787 on the page's host.
 */

import { ApiClient } from "./api.js";
import { renderBanner, renderCard, setBannerVisible } from "./render.js";
import { FeedClient, type FeedHandlers } from "./sse.js";
import { CardStore } from "./store.js";

export function serviceBase(loc: Location): string {
  const fromQuery = new URLSearchParams(loc.search).get("api");
  if (fromQuery) return fromQuery;
  return `http://${loc.hostname || "127.0.0.1"}:8787`;
}

export interface BootOverrides {
  api?: ApiClient;
  feedFactory?: (base: string, handlers: FeedHandlers) => FeedClient;
}

export function boot(doc: Document, overrides: BootOverrides = {}): CardStore {
  const win = doc.defaultView!;
  const base = serviceBase(win.location);
  const api = overrides.api ?? new ApiClient(base);
  const store = new CardStore(api);

  const banner = renderBanner(doc);
  const feedRoot = doc.getElementById("feed")!;
  const emptyNote = doc.getElementById("empty-note");
  doc.body.insertBefore(banner, doc.body.firstChild);
  const baseLabel = doc.getElementById("service-base");
  if (baseLabel) baseLabel.textContent = api.base;

  const actions = {
    approve: (id: string) => void store.decide(id, "approve"),
    dismiss: (id: string) => void store.decide(id, "dismiss"),
    feedback: (id: string, rating: number, comment: string) =>
      void store.submitFeedback(id, rating, comment),
  };

  store.onChange((alertId) => {
    if (emptyNote) emptyNote.style.display = store.order.length ? "none" : "";
    if (alertId === null) {
      feedRoot.textContent = "";
      for (const entry of store.cards()) {
        feedRoot.appendChild(renderCard(doc, entry, actions));
      }
      return;
    }
    const entry = store.get(alertId);
    if (!entry) return;
    const fresh = renderCard(doc, entry, actions);
    const existing = feedRoot.querySelector(`[data-alert-id="${alertId}"]`);
    if (existing) {
      // keep whatever the analyst was typing across the re-render
      for (const cls of [".rating-input", ".comment-input"]) {
        const oldInput = existing.querySelector<HTMLInputElement>(cls);
        const newInput = fresh.querySelector<HTMLInputElement>(cls);
        if (oldInput && newInput && oldInput.value) newInput.value = oldInput.value;
      }
      existing.replaceWith(fresh);
    } else {
      feedRoot.appendChild(fresh); // feed order == arrival order
    }
  });

  const handlers: FeedHandlers = {
    onEvent: (ev) => store.applyEvent(ev),
    onGap: () => store.clear(),
    onStatus: (connected) => setBannerVisible(banner, !connected),
  };
  const feed = overrides.feedFactory
    ? overrides.feedFactory(api.base, handlers)
    : new FeedClient(api.base, handlers);
  feed.start();
  win.addEventListener("beforeunload", () => void feed.stop());
  return store;
}

// boot immediately when loaded as the page script; tests import the pieces
if (typeof document !== "undefined" && document.getElementById("feed")) {
  boot(document);
}
