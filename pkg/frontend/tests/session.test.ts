import { describe, expect, it } from "vitest";

import { ClientSession, type WebSocketLike } from "../src/session.js";
import type { Clock } from "../src/playback.js";

class FakeSocket implements WebSocketLike {
  onopen: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onerror: ((ev?: unknown) => void) | null = null;
  sent: string[] = [];

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.onclose?.();
  }

  serverSays(payload: unknown): void {
    this.onmessage?.({ data: JSON.stringify(payload) });
  }
}

class ManualClock implements Clock {
  time = 0;
  scheduled: { fn: () => void; at: number; id: number }[] = [];
  private nextId = 1;

  now(): number {
    return this.time;
  }

  setTimeout(fn: () => void, delayMs: number): unknown {
    const id = this.nextId++;
    this.scheduled.push({ fn, at: this.time + delayMs, id });
    return id;
  }

  clearTimeout(handle: unknown): void {
    this.scheduled = this.scheduled.filter((t) => t.id !== handle);
  }
}

function makeSession() {
  const sockets: FakeSocket[] = [];
  const clock = new ManualClock();
  const painted: string[] = [];
  const transcript: string[] = [];
  const latencies: unknown[] = [];
  const states: string[] = [];
  const session = new ClientSession(
    "ws://test/ws",
    "s1",
    { paint: (f) => void painted.push(f.frame_url) },
    {
      onState: (s) => void states.push(s),
      onTranscript: (e) => void transcript.push(`${e.role}:${e.text}`),
      onLatency: (l) => void latencies.push(l),
    },
    (url) => {
      const sock = new FakeSocket();
      sockets.push(sock);
      return sock;
    },
    clock,
  );
  return { session, sockets, clock, painted, transcript, latencies, states };
}

const LATENCY = {
  embed_ms: 1.5,
  match_ms: 4.2,
  reduce_ms: 0.1,
  interpolate_ms: 30.0,
  total_ms: 35.8,
  real_time_factor: 0.02,
};

describe("ClientSession", () => {
  it("sends chat per the wire protocol and logs the turn", () => {
    const { session, sockets, transcript } = makeSession();
    session.connect();
    sockets[0].onopen?.();
    expect(session.sendChat("  hello there ")).toBe(true);
    const sent = JSON.parse(sockets[0].sent[0]);
    expect(sent).toEqual({ type: "chat", session_id: "s1", text: "hello there" });
    expect(transcript).toEqual(["user:hello there"]);
  });

  it("refuses empty input and refuses while disconnected", () => {
    const { session, sockets } = makeSession();
    session.connect();
    expect(session.sendChat("hello")).toBe(false); // not open yet
    sockets[0].onopen?.();
    expect(session.sendChat("   ")).toBe(false);
    expect(session.canSend).toBe(true);
    expect(sockets[0].sent).toHaveLength(0);
  });

  it("runs the full utterance flow: reply, frames, latency", () => {
    const { session, sockets, clock, painted, transcript, latencies } =
      makeSession();
    session.connect();
    const sock = sockets[0];
    sock.onopen?.();
    session.sendChat("hi");
    sock.serverSays({ type: "utterance_start", utterance_id: "u1",
                      reply_text: "Hello there.", fps: 25 });
    for (let i = 0; i < 5; i++) {
      sock.serverSays({ type: "frame", utterance_id: "u1", seq: i,
                        timestamp_ms: i * 40, frame_url: `/frames/lib/${i}.png` });
      clock.time += 40;
      for (const t of clock.scheduled.splice(0)) t.fn();
    }
    sock.serverSays({ type: "utterance_end", utterance_id: "u1",
                      latency: LATENCY });
    expect(transcript).toEqual(["user:hi", "avatar:Hello there."]);
    expect(painted).toHaveLength(5);
    expect(latencies).toEqual([LATENCY]);
    const stats = session.playback.snapshot;
    expect(stats.received).toBe(stats.painted + stats.dropped);
  });

  it("surfaces error and warning events in the transcript", () => {
    const { session, sockets, transcript } = makeSession();
    session.connect();
    sockets[0].onopen?.();
    sockets[0].serverSays({ type: "error", code: "empty_text",
                            message: "chat text is empty" });
    sockets[0].serverSays({ type: "warning", code: "adapter_fallback",
                            message: "remote down" });
    expect(transcript[0]).toContain("error (empty_text)");
    expect(transcript[1]).toContain("warning");
  });

  it("reconnects with exponential backoff after a drop", () => {
    const { session, sockets, clock, states } = makeSession();
    session.connect();
    sockets[0].onopen?.();
    sockets[0].onclose?.(); // connection lost
    expect(states.at(-1)).toBe("reconnecting");
    expect(clock.scheduled).toHaveLength(1);
    expect(clock.scheduled[0].at).toBe(500); // first retry after 0.5 s

    clock.time = 500;
    clock.scheduled.splice(0)[0].fn(); // fire retry -> second socket
    expect(sockets).toHaveLength(2);
    sockets[1].onclose?.(); // fails again -> 1 s backoff
    expect(clock.scheduled[0].at).toBe(clock.time + 1000);

    clock.time += 1000;
    clock.scheduled.splice(0)[0].fn();
    sockets[2].onopen?.(); // success resets the schedule
    expect(states.at(-1)).toBe("open");
    sockets[2].onclose?.();
    expect(clock.scheduled[0].at).toBe(clock.time + 500); // back to base
  });

  it("backoff caps at ten seconds", () => {
    const { session } = makeSession();
    let delay = 0;
    for (let i = 0; i < 12; i++) delay = session.nextBackoffMs();
    expect(delay).toBe(10_000);
  });

  it("close() by the user does not reconnect", () => {
    const { session, sockets, clock, states } = makeSession();
    session.connect();
    sockets[0].onopen?.();
    session.close();
    expect(states.at(-1)).toBe("closed");
    expect(clock.scheduled).toHaveLength(0);
  });

  it("ignores malformed server payloads", () => {
    const { session, sockets, transcript } = makeSession();
    session.connect();
    sockets[0].onopen?.();
    sockets[0].onmessage?.({ data: "not json at all" });
    sockets[0].serverSays({ type: "mystery" });
    expect(transcript).toHaveLength(0);
    expect(session.state).toBe("open");
  });
});
