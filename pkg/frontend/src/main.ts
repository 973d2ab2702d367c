// Browser entry point: wires the session to the DOM. The canvas paints each
// frame fetched by URL; the transcript and latency panes update from
// session callbacks.

import { ClientSession, type ConnectionState } from "./session.js";
import type { FrameEvent, LatencyPayload } from "./protocol.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const canvas = el<HTMLCanvasElement>("avatar");
const ctx2d = canvas.getContext("2d")!;
const transcriptBox = el<HTMLDivElement>("transcript");
const statusLine = el<HTMLSpanElement>("status");
const statsLine = el<HTMLSpanElement>("stats");
const latencyBox = el<HTMLDivElement>("latency");
const input = el<HTMLInputElement>("chat-input");
const sendButton = el<HTMLButtonElement>("send");

class CanvasPainter {
  async paint(frame: FrameEvent): Promise<void> {
    const resp = await fetch(frame.frame_url);
    if (!resp.ok) return;
    const bitmap = await createImageBitmap(await resp.blob());
    ctx2d.drawImage(bitmap, 0, 0, canvas.width, canvas.height);
    bitmap.close();
  }
}

const sessionId = `web-${Math.random().toString(36).slice(2, 10)}`;
const wsUrl = `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/ws`;

const session = new ClientSession(wsUrl, sessionId, new CanvasPainter(), {
  onState(state: ConnectionState, detail?: string) {
    statusLine.textContent = detail ? `${state} (${detail})` : state;
    statusLine.dataset.state = state;
    refreshSendState();
  },
  onTranscript(entry) {
    const row = document.createElement("div");
    row.className = `row ${entry.role}`;
    row.textContent = `${entry.role === "avatar" ? "avatar" :
                        entry.role === "user" ? "you" : "system"}: ${entry.text}`;
    transcriptBox.appendChild(row);
    transcriptBox.scrollTop = transcriptBox.scrollHeight;
  },
  onLatency(latency: LatencyPayload) {
    latencyBox.innerHTML = "";
    const fields: [string, string][] = [
      ["embed", `${latency.embed_ms.toFixed(1)} ms`],
      ["match", `${latency.match_ms.toFixed(1)} ms`],
      ["reduce", `${latency.reduce_ms.toFixed(2)} ms`],
      ["interpolate", `${latency.interpolate_ms.toFixed(1)} ms`],
      ["total", `${latency.total_ms.toFixed(1)} ms`],
      ["real-time factor", latency.real_time_factor.toFixed(3)],
    ];
    for (const [name, value] of fields) {
      const cell = document.createElement("span");
      cell.className = "metric";
      cell.textContent = `${name}: ${value}`;
      latencyBox.appendChild(cell);
    }
  },
  onStats(stats) {
    statsLine.textContent =
      `frames: ${stats.painted} painted / ${stats.received} received` +
      (stats.dropped ? ` (${stats.dropped} dropped)` : "");
  },
});

function refreshSendState(): void {
  sendButton.disabled = !input.value.trim() || !session.canSend;
}

input.addEventListener("input", refreshSendState);
el<HTMLFormElement>("chat-form").addEventListener("submit", (ev) => {
  ev.preventDefault();
  if (session.sendChat(input.value)) {
    input.value = "";
    refreshSendState();
  }
});

refreshSendState();
session.connect();
