// Wire protocol types for the avatar service WebSocket endpoint.
// One JSON message per text frame, mirrored from the server contract.

export interface ChatMessage {
  type: "chat";
  session_id: string;
  text: string;
}

export interface AudioMessage {
  type: "audio";
  session_id: string;
  wav_b64: string;
}

export type ClientMessage = ChatMessage | AudioMessage;

export interface UtteranceStart {
  type: "utterance_start";
  utterance_id: string;
  reply_text: string;
  fps: number;
}

export interface FrameEvent {
  type: "frame";
  utterance_id: string;
  seq: number;
  timestamp_ms: number;
  frame_url: string;
}

export interface LatencyPayload {
  embed_ms: number;
  match_ms: number;
  reduce_ms: number;
  interpolate_ms: number;
  total_ms: number;
  real_time_factor: number;
}

export interface UtteranceEnd {
  type: "utterance_end";
  utterance_id: string;
  latency: LatencyPayload;
}

export interface ErrorEvent {
  type: "error";
  code: string;
  message: string;
}

export interface WarningEvent {
  type: "warning";
  code: string;
  message: string;
}

export type ServerMessage =
  | UtteranceStart
  | FrameEvent
  | UtteranceEnd
  | ErrorEvent
  | WarningEvent;

export function parseServerMessage(data: string): ServerMessage | null {
  let doc: unknown;
  try {
    doc = JSON.parse(data);
  } catch {
    return null;
  }
  if (typeof doc !== "object" || doc === null) return null;
  const type = (doc as { type?: unknown }).type;
  if (type === "utterance_start" || type === "frame" ||
      type === "utterance_end" || type === "error" || type === "warning") {
    return doc as ServerMessage;
  }
  return null;
}
