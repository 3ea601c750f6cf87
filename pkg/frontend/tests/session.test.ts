import { describe, expect, it } from "vitest";

import { keyEventToCommand } from "../src/keymap.js";
import { ConsoleSession, Transport } from "../src/session.js";

class FakeTransport implements Transport {
  sent: string[] = [];
  closed = false;
  send(text: string): void {
    this.sent.push(text);
  }
  close(): void {
    this.closed = true;
  }
}

function connected(game = "navigation") {
  const session = new ConsoleSession({ game });
  const transport = new FakeTransport();
  session.handleOpen(transport);
  session.handleMessage(
    JSON.stringify({
      type: "hello",
      role: "human",
      game,
      mode: "lite",
      protocol: 1,
      bounds: [640, 400],
    })
  );
  return { session, transport };
}

const FRAME = {
  type: "frame",
  step: 3,
  game_time_ms: 1800,
  score: 0.25,
  furthest_label: "cp2",
  image: "aGVsbG8=",
  width: 640,
  height: 400,
  captured_at_ms: 1800,
};

describe("handshake", () => {
  it("sends a protocol-1 human hello on open", () => {
    const session = new ConsoleSession({ game: "clicking" });
    const transport = new FakeTransport();
    session.handleOpen(transport);
    expect(JSON.parse(transport.sent[0])).toEqual({
      type: "hello",
      role: "human",
      game: "clicking",
      protocol: 1,
    });
    expect(session.state.connection).toBe("connecting");
  });

  it("records mode and bounds from the hello reply", () => {
    const { session } = connected();
    expect(session.state.connection).toBe("connected");
    expect(session.state.mode).toBe("lite");
    expect(session.state.bounds).toEqual([640, 400]);
  });
});

describe("messages", () => {
  it("stores the frame payload verbatim", () => {
    const { session } = connected();
    session.handleMessage(JSON.stringify(FRAME));
    expect(session.state.frame).toEqual(FRAME);
    expect(session.state.step).toBe(3);
    expect(session.state.gameTimeMs).toBe(1800);
    expect(session.state.progress).toBe(0.25);
    expect(session.state.furthestLabel).toBe("cp2");
  });

  it("updates score and clears the error on ack", () => {
    const { session } = connected();
    session.handleMessage(JSON.stringify({ type: "error", message: "UnknownKey: Q9" }));
    expect(session.state.lastError).toBe("UnknownKey: Q9");
    session.handleMessage(JSON.stringify({ type: "ack", step: 4 }));
    expect(session.state.lastAckStep).toBe(4);
    expect(session.state.lastError).toBeNull();
    session.handleMessage(
      JSON.stringify({ type: "score", progress: 0.5, furthest_label: "cp5", step: 4 })
    );
    expect(session.state.progress).toBe(0.5);
    expect(session.state.furthestLabel).toBe("cp5");
  });

  it("shows gateway errors verbatim and survives them", () => {
    const { session, transport } = connected();
    session.handleMessage(
      JSON.stringify({ type: "error", message: "UnknownModifier: 'Wrong' in 'Wrong+Stuff'" })
    );
    expect(session.state.lastError).toContain("Wrong+Stuff");
    expect(session.state.connection).toBe("connected");
    expect(transport.closed).toBe(false);
  });

  it("closes on a fatal error", () => {
    const { session, transport } = connected();
    session.handleMessage(
      JSON.stringify({ type: "error", message: "session already has a controlling client", fatal: true })
    );
    expect(session.state.connection).toBe("error");
    expect(transport.closed).toBe(true);
  });

  it("marks the session closed when the socket drops", () => {
    const { session } = connected();
    session.handleClose();
    expect(session.state.connection).toBe("closed");
  });
});

describe("commands", () => {
  it("sends raw text unmodified and appends history", () => {
    const { session, transport } = connected();
    session.submitCommand("  press_key ArrowRight  ");
    expect(JSON.parse(transport.sent[1])).toEqual({
      type: "action",
      text: "press_key ArrowRight",
    });
    expect(session.state.history).toEqual(["press_key ArrowRight"]);
  });

  it("drops empty commands and commands before the hello reply", () => {
    const session = new ConsoleSession({ game: "navigation" });
    const transport = new FakeTransport();
    session.handleOpen(transport);
    session.submitCommand("press_key ArrowRight"); // not yet connected
    session.submitCommand("   ");
    expect(transport.sent).toHaveLength(1); // just the hello
    expect(session.state.history).toEqual([]);
  });

  it("notifies the view on every update", () => {
    const updates: string[] = [];
    const session = new ConsoleSession({
      game: "navigation",
      onUpdate: (s) => updates.push(s.connection),
    });
    session.handleOpen(new FakeTransport());
    session.handleClose();
    expect(updates).toEqual(["connecting", "closed"]);
  });
});

describe("keyboard shortcuts", () => {
  it("emits the identical wire text a typed command would", () => {
    const { session, transport } = connected();
    session.setShortcutMode(true);
    expect(session.handleKeydown({ key: "ArrowRight" })).toBe(true);
    session.submitCommand("press_key ArrowRight");
    const [shortcut, typed] = transport.sent.slice(1).map((t) => JSON.parse(t));
    expect(shortcut).toEqual(typed);
  });

  it("is inert unless the toggle is on", () => {
    const { session, transport } = connected();
    expect(session.handleKeydown({ key: "ArrowRight" })).toBe(false);
    expect(transport.sent).toHaveLength(1);
  });

  it("maps chords and named keys into the DSL", () => {
    expect(keyEventToCommand({ key: "ArrowUp" })).toBe("press_key ArrowUp");
    expect(keyEventToCommand({ key: "c", ctrlKey: true })).toBe("press_key Control+KeyC");
    expect(keyEventToCommand({ key: "A", shiftKey: true })).toBe("press_key Shift+KeyA");
    expect(keyEventToCommand({ key: "7" })).toBe("press_key Digit7");
    expect(keyEventToCommand({ key: " " })).toBe("press_key Space");
    expect(keyEventToCommand({ key: "F11" })).toBe("press_key F11");
    expect(keyEventToCommand({ key: "Control" })).toBeNull(); // modifier alone
    expect(keyEventToCommand({ key: "MediaPlay" })).toBeNull();
  });
});
