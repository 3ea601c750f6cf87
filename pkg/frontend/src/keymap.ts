/** Client-side keyboard shortcuts.
 *
 * A key event maps to exactly the DSL text a player could have typed; the
 * gateway parses it with the same grammar either way. No command is
 * interpreted client-side.
 */

export interface KeyEventLike {
  key: string;
  ctrlKey?: boolean;
  altKey?: boolean;
  shiftKey?: boolean;
}

const NAMED: Record<string, string> = {
  ArrowUp: "ArrowUp",
  ArrowDown: "ArrowDown",
  ArrowLeft: "ArrowLeft",
  ArrowRight: "ArrowRight",
  Enter: "Enter",
  Escape: "Escape",
  Backspace: "Backspace",
  Tab: "Tab",
  " ": "Space",
};

const MODIFIER_KEYS = new Set(["Control", "Alt", "Shift", "Meta"]);

function baseKeyName(key: string): string | null {
  if (key in NAMED) return NAMED[key];
  if (/^[a-zA-Z]$/.test(key)) return `Key${key.toUpperCase()}`;
  if (/^[0-9]$/.test(key)) return `Digit${key}`;
  if (/^F([1-9]|1[0-2])$/.test(key)) return key;
  return null;
}

/**
 * Translate a keydown event into a `press_key` command, or null if the key
 * has no mapping (the event should then fall through to the browser).
 */
export function keyEventToCommand(event: KeyEventLike): string | null {
  if (MODIFIER_KEYS.has(event.key)) return null; // wait for the chorded key
  const base = baseKeyName(event.key);
  if (base === null) return null;
  const parts: string[] = [];
  if (event.ctrlKey) parts.push("Control");
  if (event.altKey) parts.push("Alt");
  if (event.shiftKey) parts.push("Shift");
  parts.push(base);
  return `press_key ${parts.join("+")}`;
}
