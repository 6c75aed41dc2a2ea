// Incremental parser for text/event-stream bodies read off a fetch stream.
// EventSource cannot share the page's fetch stack (or its test doubles), so
// the dashboard reads the response body and feeds chunks through this.

export interface SseFrame {
  event: string;
  data: string;
}

/**
 * Feed arbitrary chunk boundaries; complete frames come out in order.
 * A frame ends at a blank line; `event:` defaults to "message"; multiple
 * `data:` lines join with newlines, as EventSource would. Comment lines
 * (leading ':') and unknown fields are skipped.
 */
export class SseParser {
  private buffer = "";

  feed(chunk: string): SseFrame[] {
    this.buffer += chunk.replace(/\r\n/g, "\n");
    const frames: SseFrame[] = [];
    for (;;) {
      const cut = this.buffer.indexOf("\n\n");
      if (cut < 0) break;
      const block = this.buffer.slice(0, cut);
      this.buffer = this.buffer.slice(cut + 2);
      const frame = parseBlock(block);
      if (frame !== null) frames.push(frame);
    }
    return frames;
  }
}

function parseBlock(block: string): SseFrame | null {
  let event = "message";
  const data: string[] = [];
  for (const line of block.split("\n")) {
    if (!line || line.startsWith(":")) continue;
    const colon = line.indexOf(":");
    const field = colon < 0 ? line : line.slice(0, colon);
    let value = colon < 0 ? "" : line.slice(colon + 1);
    if (value.startsWith(" ")) value = value.slice(1);
    if (field === "event") event = value;
    else if (field === "data") data.push(value);
  }
  if (data.length === 0) return null;
  return { event, data: data.join("\n") };
}
