/** Server-sent events client for the /events feed.
 *
 * Built on fetch + ReadableStream rather than EventSource so the resume
 * cursor can be sent as an explicit `?after=` query (the service replays
 * history from any sequence number) and so the same client runs in the
 * browser and under node for the contract tests.
 */

import type { FeedEvent } from "./types.js";

export interface SseFrame {
  id: string | null;
  event: string | null;
  data: string;
}

/** Incremental text/event-stream parser. Push decoded chunks in, complete
 * frames come out. Comment lines (leading ":") are keepalives and are
 * dropped; multi-line data fields are joined with newlines. */
export class SseParser {
  private buffer = "";
  private id: string | null = null;
  private event: string | null = null;
  private data: string[] = [];

  push(chunk: string): SseFrame[] {
    this.buffer += chunk;
    const frames: SseFrame[] = [];
    for (;;) {
      const nl = this.buffer.indexOf("\n");
      if (nl < 0) break;
      let line = this.buffer.slice(0, nl);
      this.buffer = this.buffer.slice(nl + 1);
      if (line.endsWith("\r")) line = line.slice(0, -1);
      if (line === "") {
        if (this.data.length > 0 || this.id !== null || this.event !== null) {
          frames.push({
            id: this.id,
            event: this.event,
            data: this.data.join("\n"),
          });
        }
        this.id = null;
        this.event = null;
        this.data = [];
        continue;
      }
      if (line.startsWith(":")) continue;
      const colon = line.indexOf(":");
      const field = colon < 0 ? line : line.slice(0, colon);
      let value = colon < 0 ? "" : line.slice(colon + 1);
      if (value.startsWith(" ")) value = value.slice(1);
      if (field === "id") this.id = value;
      else if (field === "event") this.event = value;
      else if (field === "data") this.data.push(value);
      // other fields (retry etc.) are ignored
    }
    return frames;
  }
}

export interface FeedHandlers {
  onEvent(ev: FeedEvent): void;
  /** a sequence hole was detected; the store should clear, the full
   * history is about to be replayed from zero */
  onGap?(): void;
  onStatus?(connected: boolean): void;
}

export interface FeedOptions {
  fetchFn?: typeof fetch;
  /** awaited between reconnect attempts; injectable for tests */
  delayFn?: (ms: number) => Promise<void>;
  initialBackoffMs?: number;
  maxBackoffMs?: number;
}

const sleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

export class FeedClient {
  lastSeq = 0;
  private running = false;
  private controller: AbortController | null = null;
  private loop: Promise<void> | null = null;
  private fetchFn: typeof fetch;
  private delayFn: (ms: number) => Promise<void>;
  private initialBackoff: number;
  private maxBackoff: number;

  constructor(
    private base: string,
    private handlers: FeedHandlers,
    options: FeedOptions = {},
  ) {
    this.base = base.replace(/\/+$/, "");
    this.fetchFn = options.fetchFn ?? fetch;
    this.delayFn = options.delayFn ?? sleep;
    this.initialBackoff = options.initialBackoffMs ?? 1000;
    this.maxBackoff = options.maxBackoffMs ?? 15000;
  }

  /** Connect and keep consuming until stop(); resumes from lastSeq across
   * reconnects. Returns immediately; the read loop runs in the background. */
  start(): void {
    if (this.running) return;
    this.running = true;
    this.loop = this.run();
  }

  async stop(): Promise<void> {
    this.running = false;
    this.controller?.abort();
    try {
      await this.loop;
    } catch {
      // the loop never rejects, but be safe
    }
    this.loop = null;
  }

  private async run(): Promise<void> {
    let backoff = this.initialBackoff;
    while (this.running) {
      this.controller = new AbortController();
      let outcome: "end" | "gap" | "error" = "error";
      try {
        const resp = await this.fetchFn(
          `${this.base}/events?after=${this.lastSeq}`,
          {
            headers: { Accept: "text/event-stream" },
            signal: this.controller.signal,
          },
        );
        if (!resp.ok || !resp.body) throw new Error(`HTTP ${resp.status}`);
        if (!this.running) break; // stopped while connecting
        this.handlers.onStatus?.(true);
        const result = await this.consume(resp.body);
        outcome = result.gap ? "gap" : "end";
        if (result.delivered) backoff = this.initialBackoff;
      } catch {
        // fall through to the reconnect delay
      }
      if (!this.running) break;
      if (outcome === "gap") {
        // not an outage: drop the stale stream and refetch immediately
        this.controller.abort();
        continue;
      }
      this.handlers.onStatus?.(false);
      await this.delayFn(backoff);
      backoff = Math.min(backoff * 2, this.maxBackoff);
    }
  }

  /** Read one response body until it ends or a sequence hole shows up.
   * `delivered` reports whether any event arrived (resets the backoff). */
  private async consume(
    body: ReadableStream<Uint8Array>,
  ): Promise<{ delivered: boolean; gap: boolean }> {
    const reader = body.getReader();
    const decoder = new TextDecoder();
    const parser = new SseParser();
    let delivered = false;
    try {
      for (;;) {
        const { done, value } = await reader.read();
        if (done) break;
        for (const frame of parser.push(decoder.decode(value, { stream: true }))) {
          if (!frame.data) continue;
          let ev: FeedEvent;
          try {
            ev = JSON.parse(frame.data) as FeedEvent;
          } catch {
            continue;
          }
          if (typeof ev.seq !== "number") continue;
          if (ev.seq <= this.lastSeq) continue; // overlap after resume
          if (this.lastSeq > 0 && ev.seq > this.lastSeq + 1) {
            // hole in the sequence: restart from zero, the server replays
            // everything and the store rebuilds
            this.lastSeq = 0;
            this.handlers.onGap?.();
            return { delivered, gap: true };
          }
          this.lastSeq = ev.seq;
          delivered = true;
          this.handlers.onEvent(ev);
        }
      }
    } finally {
      reader.releaseLock();
    }
    return { delivered, gap: false };
  }
}
