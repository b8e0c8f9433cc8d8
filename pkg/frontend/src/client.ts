/** Session client over any newline-delimited JSON channel.
 *
 * The channel is abstract so the same client runs over a node TCP socket
 * (tests, scripts) or a browser WebSocket through the bridge. At most one
 * request is in flight at a time; the reply with the matching id resolves it
 * and pushes (proofComplete, id null) are delivered to a listener.
 */

import {
  ClientMessage, RequestId, ServerMessage, parseServerLine,
} from "./protocol.js";

export interface LineChannel {
  send(line: string): void;
  onLine(handler: (line: string) => void): void;
  close(): void;
}

export class SessionClient {
  private nextId = 1;
  private pending: Map<RequestId, (msg: ServerMessage) => void> = new Map();
  private pushListeners: ((msg: ServerMessage) => void)[] = [];

  constructor(private channel: LineChannel) {
    channel.onLine((line) => this.dispatch(line));
  }

  onPush(listener: (msg: ServerMessage) => void): void {
    this.pushListeners.push(listener);
  }

  get inFlight(): boolean {
    return this.pending.size > 0;
  }

  request(partial: Omit<ClientMessage, "id">): Promise<ServerMessage> {
    const id = this.nextId++;
    const message = { ...partial, id } as ClientMessage;
    return new Promise((resolve) => {
      this.pending.set(id, resolve);
      this.channel.send(JSON.stringify(message));
    });
  }

  close(): void {
    this.channel.close();
  }

  private dispatch(line: string): void {
    if (!line.trim()) {
      return;
    }
    const msg = parseServerLine(line);
    const resolver = msg.id === null ? undefined : this.pending.get(msg.id);
    if (resolver) {
      this.pending.delete(msg.id);
      resolver(msg);
    } else {
      for (const listener of this.pushListeners) {
        listener(msg);
      }
    }
  }
}

/** TCP channel for node environments. */
export async function connectTcp(host: string, port: number): Promise<LineChannel> {
  const net = await import("node:net");
  const socket = net.createConnection({ host, port });
  await new Promise<void>((resolve, reject) => {
    socket.once("connect", () => resolve());
    socket.once("error", reject);
  });
  let buffer = "";
  const handlers: ((line: string) => void)[] = [];
  socket.on("data", (chunk: Buffer) => {
    buffer += chunk.toString("utf-8");
    let newline = buffer.indexOf("\n");
    while (newline >= 0) {
      const line = buffer.slice(0, newline);
      buffer = buffer.slice(newline + 1);
      for (const h of handlers) {
        h(line);
      }
      newline = buffer.indexOf("\n");
    }
  });
  return {
    send: (line: string) => socket.write(line + "\n"),
    onLine: (handler) => handlers.push(handler),
    close: () => socket.end(),
  };
}

/** WebSocket channel for browsers (via the ws-to-tcp bridge). */
export function connectWebSocket(url: string): Promise<LineChannel> {
  return new Promise((resolve, reject) => {
    const socket = new WebSocket(url);
    const handlers: ((line: string) => void)[] = [];
    socket.onopen = () =>
      resolve({
        send: (line: string) => socket.send(line + "\n"),
        onLine: (handler) => handlers.push(handler),
        close: () => socket.close(),
      });
    socket.onerror = () => reject(new Error(`cannot connect to ${url}`));
    socket.onmessage = (event) => {
      for (const line of String(event.data).split("\n")) {
        if (line.trim()) {
          for (const h of handlers) {
            h(line);
          }
        }
      }
    };
  });
}
