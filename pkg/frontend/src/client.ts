// Backend transport: SSE inbound (fetch streaming, works in browsers and
// node), POST outbound through a serialized retry queue. Failed submissions
// stay queued and retry with backoff; the UI shows the pending count.

import type { AssessmentDoc, EventReply, OutboundEvent, StatusDoc } from "./protocol.js";

export interface StreamHandlers {
  onStatus: (status: StatusDoc) => void;
  onAssessment: (assessment: AssessmentDoc) => void;
  onConnection: (connected: boolean, reconnectInSeconds: number | null) => void;
}

export interface SseMessage {
  event: string;
  data: string;
}

// Incremental SSE frame parser; returns completed messages and the leftover
// buffer. Comment lines (keep-alives) are dropped.
export function parseSseChunk(buffer: string): { messages: SseMessage[]; rest: string } {
  const messages: SseMessage[] = [];
  let rest = buffer;
  for (;;) {
    const split = rest.indexOf("\n\n");
    if (split < 0) break;
    const block = rest.slice(0, split);
    rest = rest.slice(split + 2);
    let event = "message";
    const dataLines: string[] = [];
    for (const line of block.split("\n")) {
      if (line.startsWith(":")) continue;
      if (line.startsWith("event: ")) event = line.slice(7).trim();
      else if (line.startsWith("data: ")) dataLines.push(line.slice(6));
    }
    if (dataLines.length) messages.push({ event, data: dataLines.join("\n") });
  }
  return { messages, rest };
}

export class EventStreamClient {
  private closed = false;
  private controller: AbortController | null = null;

  constructor(
    private readonly baseUrl: string,
    private readonly handlers: StreamHandlers,
    private readonly reconnectDelaySeconds = 2,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  start(): void {
    void this.loop();
  }

  close(): void {
    this.closed = true;
    this.controller?.abort();
  }

  private async loop(): Promise<void> {
    while (!this.closed) {
      try {
        this.controller = new AbortController();
        const response = await this.fetchImpl(`${this.baseUrl}/assessment`, {
          signal: this.controller.signal,
          headers: { Accept: "text/event-stream" },
        });
        if (!response.ok || !response.body) throw new Error(`stream HTTP ${response.status}`);
        this.handlers.onConnection(true, null);
        await this.consume(response.body);
      } catch {
        // fall through to reconnect
      }
      if (this.closed) return;
      this.handlers.onConnection(false, this.reconnectDelaySeconds);
      for (let left = this.reconnectDelaySeconds; left > 0 && !this.closed; left--) {
        this.handlers.onConnection(false, left);
        await sleep(1000);
      }
    }
  }

  private async consume(body: ReadableStream<Uint8Array>): Promise<void> {
    const reader = body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (done) return;
      buffer += decoder.decode(value, { stream: true });
      const { messages, rest } = parseSseChunk(buffer);
      buffer = rest;
      for (const message of messages) this.dispatch(message);
    }
  }

  private dispatch(message: SseMessage): void {
    let payload: unknown;
    try {
      payload = JSON.parse(message.data);
    } catch {
      return;
    }
    if (message.event === "status") this.handlers.onStatus(payload as StatusDoc);
    else if (message.event === "assessment")
      this.handlers.onAssessment(payload as AssessmentDoc);
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

interface QueueEntry {
  event: OutboundEvent;
  resolve: (reply: EventReply) => void;
}

export class SubmissionQueue {
  private entries: QueueEntry[] = [];
  private running = false;

  constructor(
    private readonly baseUrl: string,
    private readonly onPendingChange: (pending: number) => void = () => {},
    private readonly fetchImpl: typeof fetch = fetch,
    private readonly retryDelayMs = 1000,
    private readonly maxAttempts = 5,
  ) {}

  get pending(): number {
    return this.entries.length;
  }

  submit(event: OutboundEvent): Promise<EventReply> {
    return new Promise((resolve) => {
      this.entries.push({ event, resolve });
      this.onPendingChange(this.pending);
      void this.pump();
    });
  }

  private async pump(): Promise<void> {
    if (this.running) return;
    this.running = true;
    while (this.entries.length) {
      const entry = this.entries[0]!;
      const reply = await this.send(entry.event);
      this.entries.shift();
      this.onPendingChange(this.pending);
      entry.resolve(reply);
    }
    this.running = false;
  }

  private async send(event: OutboundEvent): Promise<EventReply> {
    for (let attempt = 1; ; attempt++) {
      try {
        const response = await this.fetchImpl(`${this.baseUrl}/event`, {
          method: "POST",
          headers: { "Content-Type": "application/json" },
          body: JSON.stringify(event),
        });
        return (await response.json()) as EventReply;
      } catch (error) {
        // transport failure: keep the submission queued and retry
        if (attempt >= this.maxAttempts) {
          return { ok: false, error: `gave up after ${attempt} attempts: ${String(error)}` };
        }
        await sleep(this.retryDelayMs * attempt);
      }
    }
  }
}
