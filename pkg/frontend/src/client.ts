// Websocket wiring: parse frames, fold them into the store, notify render.
import { ServerMessage, type ClientCommand } from "./protocol.js";
import { applyMessage, initialView, type WorldView } from "./state.js";

export class ConsoleClient {
  view: WorldView = initialView();
  private socket: WebSocket | null = null;
  private listeners: ((view: WorldView) => void)[] = [];

  connect(url: string): void {
    const socket = new WebSocket(url);
    this.socket = socket;
    socket.onmessage = (event) => {
      let parsed: ServerMessage;
      try {
        parsed = ServerMessage.parse(JSON.parse(event.data as string));
      } catch (err) {
        console.error("unparseable server frame", err);
        return;
      }
      this.view = applyMessage(this.view, parsed);
      this.notify();
    };
    socket.onclose = () => {
      console.log("connection closed");
    };
    socket.onerror = (event) => {
      console.error("websocket error", event);
    };
  }

  send(cmd: ClientCommand): void {
    if (this.socket === null || this.socket.readyState !== WebSocket.OPEN) {
      console.error("not connected; dropping command", cmd);
      return;
    }
    this.socket.send(JSON.stringify(cmd));
  }

  setView(view: WorldView): void {
    this.view = view;
    this.notify();
  }

  onChange(listener: (view: WorldView) => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const fn of this.listeners) fn(this.view);
  }
}
