// Client session: owns the WebSocket, the transcript, and the playback
// controller. Reconnects with exponential backoff and surfaces connection
// state, errors, and per-utterance latency to the UI via plain callbacks.

import { PlaybackController, type Clock, systemClock } from "./playback.js";
import {
  parseServerMessage,
  type ClientMessage,
  type LatencyPayload,
  type ServerMessage,
} from "./protocol.js";

export type ConnectionState = "connecting" | "open" | "reconnecting" | "closed";

export interface TranscriptEntry {
  role: "user" | "avatar" | "system";
  text: string;
}

export interface SessionCallbacks {
  onState?(state: ConnectionState, detail?: string): void;
  onTranscript?(entry: TranscriptEntry): void;
  onLatency?(latency: LatencyPayload): void;
  onStats?(stats: { received: number; painted: number; dropped: number }): void;
}

// Minimal surface shared by the browser WebSocket and the ws package.
export interface WebSocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  send(data: string): void;
  close(): void;
}

export type WebSocketFactory = (url: string) => WebSocketLike;

const BACKOFF_BASE_MS = 500;
const BACKOFF_CAP_MS = 10_000;

export class ClientSession {
  readonly playback: PlaybackController;
  transcript: TranscriptEntry[] = [];
  state: ConnectionState = "closed";
  private ws: WebSocketLike | null = null;
  private attempts = 0;
  private closedByUser = false;
  private reconnectTimer: unknown = null;

  constructor(
    private url: string,
    readonly sessionId: string,
    painter: { paint(frame: { frame_url: string }): void | Promise<void> },
    private callbacks: SessionCallbacks = {},
    private wsFactory: WebSocketFactory =
      (u) => new WebSocket(u) as unknown as WebSocketLike,
    private clock: Clock = systemClock,
  ) {
    this.playback = new PlaybackController(painter as never, clock);
  }

  connect(): void {
    this.closedByUser = false;
    this.setState(this.attempts === 0 ? "connecting" : "reconnecting");
    const ws = this.wsFactory(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.attempts = 0;
      this.setState("open");
    };
    ws.onmessage = (ev) => {
      const msg = parseServerMessage(String(ev.data));
      if (msg) this.handleServer(msg);
    };
    ws.onerror = () => {
      // the close handler owns reconnection
    };
    ws.onclose = () => {
      this.ws = null;
      this.playback.flush();
      if (this.closedByUser) {
        this.setState("closed");
        return;
      }
      const delay = this.nextBackoffMs();
      this.setState("reconnecting", `retrying in ${(delay / 1000).toFixed(1)}s`);
      this.reconnectTimer = this.clock.setTimeout(() => this.connect(), delay);
    };
  }

  close(): void {
    this.closedByUser = true;
    if (this.reconnectTimer !== null) {
      this.clock.clearTimeout(this.reconnectTimer);
      this.reconnectTimer = null;
    }
    this.ws?.close();
    this.setState("closed");
  }

  /** Backoff schedule: 0.5s, 1s, 2s, ... capped at 10s. */
  nextBackoffMs(): number {
    const delay = Math.min(BACKOFF_BASE_MS * 2 ** this.attempts, BACKOFF_CAP_MS);
    this.attempts += 1;
    return delay;
  }

  get canSend(): boolean {
    return this.state === "open";
  }

  sendChat(text: string): boolean {
    const trimmed = text.trim();
    if (!trimmed || !this.ws || this.state !== "open") return false;
    const msg: ClientMessage = {
      type: "chat",
      session_id: this.sessionId,
      text: trimmed,
    };
    this.ws.send(JSON.stringify(msg));
    this.pushTranscript({ role: "user", text: trimmed });
    return true;
  }

  private handleServer(msg: ServerMessage): void {
    switch (msg.type) {
      case "utterance_start":
        this.playback.startUtterance(msg.fps);
        if (msg.reply_text) {
          this.pushTranscript({ role: "avatar", text: msg.reply_text });
        }
        break;
      case "frame":
        this.playback.onFrame(msg);
        this.emitStats();
        break;
      case "utterance_end":
        this.callbacks.onLatency?.(msg.latency);
        this.emitStats();
        break;
      case "warning":
        this.pushTranscript({ role: "system", text: `warning: ${msg.message}` });
        break;
      case "error":
        this.pushTranscript({ role: "system",
                              text: `error (${msg.code}): ${msg.message}` });
        break;
    }
  }

  private emitStats(): void {
    const s = this.playback.snapshot;
    this.callbacks.onStats?.({ received: s.received, painted: s.painted,
                               dropped: s.dropped });
  }

  private pushTranscript(entry: TranscriptEntry): void {
    this.transcript.push(entry);
    this.callbacks.onTranscript?.(entry);
  }

  private setState(state: ConnectionState, detail?: string): void {
    this.state = state;
    this.callbacks.onState?.(state, detail);
  }
}
