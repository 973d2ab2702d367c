// Frame playback: a seq-ordered buffer drained on a clock anchored at
// utterance_start. The clock follows server timestamps, not arrival times,
// so network jitter cannot distort cadence. Frames that fall more than one
// frame interval behind the playback clock are dropped and counted:
// received === painted + dropped always holds.

import type { FrameEvent } from "./protocol.js";

export interface Painter {
  paint(frame: FrameEvent): void | Promise<void>;
}

export interface Clock {
  now(): number;
  setTimeout(fn: () => void, delayMs: number): unknown;
  clearTimeout(handle: unknown): void;
}

export const systemClock: Clock = {
  now: () => Date.now(),
  setTimeout: (fn, ms) => setTimeout(fn, ms),
  clearTimeout: (h) => clearTimeout(h as ReturnType<typeof setTimeout>),
};

export interface PlaybackStats {
  received: number;
  painted: number;
  dropped: number;
  lastPaintedSeq: number;
}

export class PlaybackController {
  private anchor: number | null = null;
  private fps = 25;
  private pending: FrameEvent[] = [];
  private timer: unknown = null;
  private stats: PlaybackStats = { received: 0, painted: 0, dropped: 0, lastPaintedSeq: -1 };

  constructor(private painter: Painter, private clock: Clock = systemClock) {}

  /** Anchor the playback clock; call on utterance_start. */
  startUtterance(fps: number): void {
    this.cancelTimer();
    this.anchor = this.clock.now();
    this.fps = fps > 0 ? fps : 25;
    this.pending = [];
    this.stats = { received: 0, painted: 0, dropped: 0, lastPaintedSeq: -1 };
  }

  get frameIntervalMs(): number {
    return 1000 / this.fps;
  }

  get snapshot(): PlaybackStats {
    return { ...this.stats };
  }

  /** True while frames remain scheduled. */
  get busy(): boolean {
    return this.pending.length > 0;
  }

  onFrame(frame: FrameEvent): void {
    this.stats.received += 1;
    if (this.anchor === null) {
      // frame without an utterance_start: treat arrival as the anchor
      this.anchor = this.clock.now() - frame.timestamp_ms;
    }
    if (frame.seq <= this.stats.lastPaintedSeq) {
      this.stats.dropped += 1; // stale or duplicate
      return;
    }
    const due = this.anchor + frame.timestamp_ms;
    if (this.clock.now() - due > this.frameIntervalMs) {
      this.stats.dropped += 1; // too far behind the playback clock
      return;
    }
    // insert keeping seq order
    let i = this.pending.length;
    while (i > 0 && this.pending[i - 1].seq > frame.seq) i -= 1;
    this.pending.splice(i, 0, frame);
    this.drain();
  }

  /** Paint everything due now and reschedule for the next head frame. */
  drain(): void {
    this.cancelTimer();
    while (this.pending.length > 0) {
      const head = this.pending[0];
      const due = this.anchor! + head.timestamp_ms;
      const wait = due - this.clock.now();
      if (wait > 1) {
        this.timer = this.clock.setTimeout(() => this.drain(), wait);
        return;
      }
      this.pending.shift();
      if (head.seq <= this.stats.lastPaintedSeq) {
        this.stats.dropped += 1;
        continue;
      }
      if (this.clock.now() - due > this.frameIntervalMs) {
        this.stats.dropped += 1;
        continue;
      }
      this.stats.lastPaintedSeq = head.seq;
      this.stats.painted += 1;
      void this.painter.paint(head);
    }
  }

  /** Drop whatever is still queued (connection loss, new utterance). */
  flush(): void {
    this.cancelTimer();
    this.stats.dropped += this.pending.length;
    this.pending = [];
  }

  private cancelTimer(): void {
    if (this.timer !== null) {
      this.clock.clearTimeout(this.timer);
      this.timer = null;
    }
  }
}
