// @vitest-environment happy-dom

import { describe, expect, it, vi } from "vitest";

import type { CardActions } from "../src/render";
import { renderBanner, renderCard, setBannerVisible } from "../src/render";
import type { CardEntry } from "../src/types";

function entry(overrides: Partial<CardEntry> = {}): CardEntry {
  return {
    card: {
      alert_id: "evt-1",
      summary: "Priority 10 alert on web-01: brute force.",
      actions: [
        { description: "block the source ip", command: "fw block 10.0.0.9" },
        { description: "review auth logs", command: null },
      ],
      reasoning: "repeated failures then success",
      context_digest: {},
      provider_meta: {},
      degraded: false,
    },
    state: "Pending",
    ticketId: null,
    feedback: [],
    busy: false,
    feedbackNote: null,
    feedbackError: false,
    decisionError: null,
    ...overrides,
  };
}

function noopActions(overrides: Partial<CardActions> = {}): CardActions {
  return {
    approve: () => {},
    dismiss: () => {},
    feedback: () => {},
    copy: () => {},
    ...overrides,
  };
}

describe("renderCard", () => {
  it("renders the three labeled sections in order", () => {
    const root = renderCard(document, entry(), noopActions());
    const headings = [...root.querySelectorAll("h3")].map((h) => h.textContent);
    expect(headings).toEqual(["Alert summary", "Recommended Actions"]);
    const details = root.querySelector("details.reasoning")!;
    expect(details.querySelector("summary")!.textContent).toBe(
      "Explanation and Reasoning",
    );
    expect(root.querySelector(".summary p")!.textContent).toContain("brute force");
    expect(root.querySelector(".reasoning pre")!.textContent).toBe(
      "repeated failures then success",
    );
  });

  it("collapses the reasoning by default", () => {
    const root = renderCard(document, entry(), noopActions());
    const details = root.querySelector("details.reasoning") as HTMLDetailsElement;
    expect(details.open).toBe(false);
  });

  it("gives every command line a copy control", () => {
    const copied: string[] = [];
    const root = renderCard(
      document,
      entry(),
      noopActions({ copy: (text) => copied.push(text) }),
    );
    const commands = [...root.querySelectorAll("code.command")].map(
      (c) => c.textContent,
    );
    expect(commands).toEqual(["fw block 10.0.0.9"]);
    const btn = root.querySelector(".copy-btn") as HTMLButtonElement;
    expect(btn.dataset.command).toBe("fw block 10.0.0.9");
    btn.click();
    expect(copied).toEqual(["fw block 10.0.0.9"]);
  });

  it("renders a degraded card with the badge and reasoning only", () => {
    const e = entry();
    e.card = { ...e.card, degraded: true, summary: "raw first line", actions: [] };
    const root = renderCard(document, e, noopActions());
    expect(root.classList.contains("degraded")).toBe(true);
    expect(root.querySelector(".badge-degraded")!.textContent).toBe("degraded");
    // no summary or actions sections, just the reasoning, pre-opened
    expect(root.querySelector("section.summary")).toBeNull();
    expect(root.querySelector("section.actions")).toBeNull();
    const details = root.querySelector("details.reasoning") as HTMLDetailsElement;
    expect(details.open).toBe(true);
  });

  it("wires approve and dismiss to the card's alert id", () => {
    const approve = vi.fn();
    const dismiss = vi.fn();
    const root = renderCard(document, entry(), noopActions({ approve, dismiss }));
    (root.querySelector(".approve-btn") as HTMLButtonElement).click();
    (root.querySelector(".dismiss-btn") as HTMLButtonElement).click();
    expect(approve).toHaveBeenCalledWith("evt-1");
    expect(dismiss).toHaveBeenCalledWith("evt-1");
  });

  it("disables decision buttons once the card is no longer pending", () => {
    for (const state of ["Approved", "Dismissed"] as const) {
      const root = renderCard(document, entry({ state }), noopActions());
      expect((root.querySelector(".approve-btn") as HTMLButtonElement).disabled).toBe(true);
      expect((root.querySelector(".dismiss-btn") as HTMLButtonElement).disabled).toBe(true);
    }
  });

  it("disables decision buttons while a request is in flight", () => {
    const root = renderCard(document, entry({ busy: true }), noopActions());
    expect((root.querySelector(".approve-btn") as HTMLButtonElement).disabled).toBe(true);
  });

  it("shows the ticket id on an approved card", () => {
    const root = renderCard(
      document,
      entry({ state: "Approved", ticketId: "T-0001" }),
      noopActions(),
    );
    expect(root.querySelector(".ticket-id")!.textContent).toBe("ticket T-0001");
  });

  it("grays a dismissed card", () => {
    const root = renderCard(document, entry({ state: "Dismissed" }), noopActions());
    expect(root.classList.contains("dismissed")).toBe(true);
  });

  it("sends the typed rating and comment", () => {
    const feedback = vi.fn();
    const root = renderCard(document, entry(), noopActions({ feedback }));
    (root.querySelector(".rating-input") as HTMLInputElement).value = "4";
    (root.querySelector(".comment-input") as HTMLInputElement).value = "nice";
    (root.querySelector(".feedback-btn") as HTMLButtonElement).click();
    expect(feedback).toHaveBeenCalledWith("evt-1", 4, "nice");
  });

  it("renders the inline validation error", () => {
    const root = renderCard(
      document,
      entry({
        feedbackNote: "rating must be an integer between 1 and 5",
        feedbackError: true,
      }),
      noopActions(),
    );
    const note = root.querySelector(".feedback-note")!;
    expect(note.textContent).toContain("between 1 and 5");
    expect(note.classList.contains("error")).toBe(true);
  });

  it("renders the confirmation and history after feedback", () => {
    const root = renderCard(
      document,
      entry({
        feedbackNote: "feedback recorded",
        feedback: [
          { alert_id: "evt-1", rating: 4, comment: "", analyst: "a", at: "" },
          { alert_id: "evt-1", rating: 2, comment: "", analyst: "a", at: "" },
        ],
      }),
      noopActions(),
    );
    expect(root.querySelector(".feedback-note")!.textContent).toBe(
      "feedback recorded",
    );
    expect(root.querySelector(".feedback-history")!.textContent).toBe(
      "recorded: 4/5, 2/5",
    );
  });

  it("shows the rollback error next to the decision buttons", () => {
    const root = renderCard(
      document,
      entry({ decisionError: "case backend error: down" }),
      noopActions(),
    );
    expect(root.querySelector(".decision-error")!.textContent).toContain(
      "case backend",
    );
  });
});

describe("banner", () => {
  it("toggles visibility with the connection state", () => {
    const banner = renderBanner(document);
    expect(banner.classList.contains("hidden")).toBe(true);
    setBannerVisible(banner, true);
    expect(banner.classList.contains("hidden")).toBe(false);
    setBannerVisible(banner, false);
    expect(banner.classList.contains("hidden")).toBe(true);
  });
});
