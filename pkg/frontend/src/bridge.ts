/** WebSocket-to-TCP bridge.
 *
 * Browsers cannot open raw TCP sockets, so this forwards each WebSocket
 * connection to its own TCP connection against the session API (each browser
 * tab gets an isolated proof session, matching the server's
 * connection-per-session model).
 *
 * Usage: node build/src/bridge.js [tcpPort] [wsPort] [tcpHost]
 */

import net from "node:net";
import { WebSocketServer, WebSocket } from "ws";

const tcpPort = Number.parseInt(process.argv[2] ?? "7071", 10);
const wsPort = Number.parseInt(process.argv[3] ?? "7073", 10);
const tcpHost = process.argv[4] ?? "127.0.0.1";

const server = new WebSocketServer({ port: wsPort });
console.log(`bridging ws://127.0.0.1:${wsPort} -> tcp ${tcpHost}:${tcpPort}`);

server.on("connection", (ws: WebSocket) => {
  const tcp = net.createConnection({ host: tcpHost, port: tcpPort });
  ws.on("message", (data) => tcp.write(data.toString()));
  tcp.on("data", (data) => ws.send(data.toString()));
  ws.on("close", () => tcp.end());
  tcp.on("close", () => ws.close());
  tcp.on("error", (err) => {
    console.error(`tcp error: ${err.message}`);
    ws.close();
  });
});
