/** Wire messages exchanged with the gateway. Field names match the server. */

export interface HelloReply {
  type: "hello";
  role: string;
  game: string;
  mode: string;
  protocol: number;
  bounds: [number, number];
}

export interface FrameMessage {
  type: "frame";
  step: number;
  game_time_ms: number;
  score: number;
  furthest_label: string;
  /** Base64 PNG, bit-exact; the console never re-encodes or annotates it. */
  image: string;
  width: number;
  height: number;
  captured_at_ms: number;
}

export interface AckMessage {
  type: "ack";
  step: number;
}

export interface ScoreMessage {
  type: "score";
  progress: number;
  furthest_label: string;
  step: number;
}

export interface ErrorMessage {
  type: "error";
  message: string;
  fatal?: boolean;
  step?: number;
}

export type ServerMessage =
  | HelloReply
  | FrameMessage
  | AckMessage
  | ScoreMessage
  | ErrorMessage;

export const PROTOCOL_VERSION = 1;
