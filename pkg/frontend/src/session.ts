/** DOM-free console session state machine.
 *
 * Owns the gateway handshake and message handling; rendering is delegated to
 * an onUpdate callback so the same class runs under a browser WebSocket or a
 * Node test transport. The view state contains only what an agent would see:
 * frames, acks, scores, and errors — never internal game state, and the
 * frame payload is kept verbatim (zero augmentation).
 */

import {
  FrameMessage,
  PROTOCOL_VERSION,
  ServerMessage,
} from "./protocol.js";
import { KeyEventLike, keyEventToCommand } from "./keymap.js";

export interface Transport {
  send(text: string): void;
  close(): void;
}

export type ConnectionState = "connecting" | "connected" | "closed" | "error";

export interface ConsoleViewState {
  connection: ConnectionState;
  game: string;
  mode: string | null;
  bounds: [number, number] | null;
  frame: FrameMessage | null;
  step: number;
  gameTimeMs: number;
  progress: number;
  furthestLabel: string;
  lastAckStep: number | null;
  lastError: string | null;
  history: string[];
  shortcutMode: boolean;
}

export interface SessionOptions {
  game: string;
  role?: "human" | "observer";
  onUpdate?: (state: ConsoleViewState) => void;
}

export class ConsoleSession {
  readonly state: ConsoleViewState;
  private readonly role: string;
  private readonly onUpdate: (state: ConsoleViewState) => void;
  private transport: Transport | null = null;

  constructor(options: SessionOptions) {
    this.role = options.role ?? "human";
    this.onUpdate = options.onUpdate ?? (() => {});
    this.state = {
      connection: "connecting",
      game: options.game,
      mode: null,
      bounds: null,
      frame: null,
      step: 0,
      gameTimeMs: 0,
      progress: 0,
      furthestLabel: "",
      lastAckStep: null,
      lastError: null,
      history: [],
      shortcutMode: false,
    };
  }

  /** Call when the socket opens; sends the hello. */
  handleOpen(transport: Transport): void {
    this.transport = transport;
    transport.send(
      JSON.stringify({
        type: "hello",
        role: this.role,
        game: this.state.game,
        protocol: PROTOCOL_VERSION,
      })
    );
    this.publish();
  }

  handleMessage(raw: string): void {
    let doc: ServerMessage;
    try {
      doc = JSON.parse(raw);
    } catch {
      this.state.lastError = "unreadable message from gateway";
      this.publish();
      return;
    }
    switch (doc.type) {
      case "hello":
        this.state.connection = "connected";
        this.state.mode = doc.mode;
        this.state.bounds = doc.bounds;
        break;
      case "frame":
        // Stored exactly as received; rendering must not alter it.
        this.state.frame = doc;
        this.state.step = doc.step;
        this.state.gameTimeMs = doc.game_time_ms;
        this.state.progress = doc.score;
        this.state.furthestLabel = doc.furthest_label;
        break;
      case "ack":
        this.state.lastAckStep = doc.step;
        this.state.lastError = null;
        break;
      case "score":
        this.state.progress = doc.progress;
        this.state.furthestLabel = doc.furthest_label;
        break;
      case "error":
        // Shown verbatim, never swallowed.
        this.state.lastError = doc.message;
        if (doc.fatal) {
          this.state.connection = "error";
          this.transport?.close();
        }
        break;
    }
    this.publish();
  }

  handleClose(): void {
    if (this.state.connection !== "error") {
      this.state.connection = "closed";
    }
    this.transport = null;
    this.publish();
  }

  handleTransportError(message: string): void {
    this.state.connection = "error";
    this.state.lastError = message;
    this.publish();
  }

  /** Send raw DSL text unmodified and record it in the history. */
  submitCommand(text: string): void {
    const trimmed = text.trim();
    if (!trimmed || this.transport === null || this.state.connection !== "connected") {
      return;
    }
    this.transport.send(JSON.stringify({ type: "action", text: trimmed }));
    this.state.history.push(trimmed);
    this.publish();
  }

  setShortcutMode(enabled: boolean): void {
    this.state.shortcutMode = enabled;
    this.publish();
  }

  /** Returns true when the event was consumed as a shortcut. */
  handleKeydown(event: KeyEventLike): boolean {
    if (!this.state.shortcutMode) return false;
    const command = keyEventToCommand(event);
    if (command === null) return false;
    this.submitCommand(command);
    return true;
  }

  disconnect(): void {
    this.transport?.send(JSON.stringify({ type: "bye" }));
    this.transport?.close();
  }

  private publish(): void {
    this.onUpdate(this.state);
  }
}
