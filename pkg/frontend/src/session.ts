// Console session state machine. Owns the reply cycle for one WebSocket
// connection and keeps a transcript of submitted commands. Transport is
// injected so tests can drive the machine without a network.

import {
    Frame,
    PROTOCOL_VERSION,
    ServerHello,
    encodeFrame,
    parseFrame,
    parseHello,
} from "./protocol.js";

export type Mode = "sexpr" | "json";

export type SessionState = "connecting" | "ready" | "busy" | "dead";

export type EntryResult =
    | { kind: "pending" }
    | { kind: "value"; text: string }
    | { kind: "error"; text: string };

export interface ConsoleEntry {
    command: string;
    mode: Mode;
    chunks: string[];
    result: EntryResult;
}

// Shape shared by browser WebSocket and the ws package client. Handler
// parameters stay loose so both event types are assignable.
export interface WsLike {
    send(data: string): void;
    close(): void;
    // any: DOM and ws event classes differ, handlers only touch .data
    onmessage: ((event: any) => void) | null;
    onclose: ((event?: any) => void) | null;
}

type Phase =
    | "awaiting-hello"
    | "awaiting-first-ready"
    | "idle"
    | "streaming"
    | "awaiting-ready"
    | "dead";

export class ConsoleSession {
    readonly entries: ConsoleEntry[] = [];
    hello: ServerHello | null = null;
    deathReason: string | null = null;
    onChange: (() => void) | null = null;

    private phase: Phase = "awaiting-hello";
    private transport: WsLike;

    constructor(transport: WsLike) {
        this.transport = transport;
        transport.onmessage = (event) => this.handleRaw(String(event.data));
        transport.onclose = () => this.die("connection closed");
    }

    get state(): SessionState {
        switch (this.phase) {
            case "awaiting-hello":
            case "awaiting-first-ready":
                return "connecting";
            case "idle":
                return "ready";
            case "streaming":
            case "awaiting-ready":
                return "busy";
            case "dead":
                return "dead";
        }
    }

    get inputEnabled(): boolean {
        return this.state === "ready";
    }

    submit(command: string, mode: Mode): void {
        if (this.phase !== "idle") {
            throw new Error(`cannot submit while ${this.state}`);
        }
        this.entries.push({ command, mode, chunks: [], result: { kind: "pending" } });
        this.phase = "streaming";
        this.transport.send(encodeFrame(mode === "json" ? "COMMAND_JSON" : "COMMAND", command));
        this.changed();
    }

    die(reason: string): void {
        if (this.phase === "dead") {
            return;
        }
        this.phase = "dead";
        this.deathReason = reason;
        const last = this.entries[this.entries.length - 1];
        if (last && last.result.kind === "pending") {
            last.result = { kind: "error", text: reason };
        }
        try {
            this.transport.close();
        } catch {
            // already closed
        }
        this.changed();
    }

    private handleRaw(raw: string): void {
        if (this.phase === "dead") {
            return;
        }
        const frame = parseFrame(raw);
        if (!frame) {
            this.die("unparseable frame from server");
            return;
        }
        this.handleFrame(frame);
    }

    private handleFrame(frame: Frame): void {
        switch (this.phase) {
            case "awaiting-hello": {
                if (frame.kind !== "HELLO") {
                    this.die(`expected HELLO, got ${frame.kind}`);
                    return;
                }
                const hello = parseHello(frame.body);
                if (!hello) {
                    this.die("malformed HELLO body");
                    return;
                }
                if (hello.protocolVersion !== PROTOCOL_VERSION) {
                    this.die(`unsupported protocol version ${hello.protocolVersion}`);
                    return;
                }
                this.hello = hello;
                this.phase = "awaiting-first-ready";
                this.changed();
                return;
            }
            case "awaiting-first-ready": {
                if (frame.kind !== "READY") {
                    this.die(`expected READY, got ${frame.kind}`);
                    return;
                }
                this.phase = "idle";
                this.changed();
                return;
            }
            case "idle": {
                this.die(`unsolicited ${frame.kind} while idle`);
                return;
            }
            case "streaming": {
                const entry = this.entries[this.entries.length - 1];
                if (frame.kind === "STDOUT") {
                    entry.chunks.push(frame.body);
                    this.changed();
                    return;
                }
                if (frame.kind === "RETURN" || frame.kind === "RETURN_JSON") {
                    const expected = entry.mode === "json" ? "RETURN_JSON" : "RETURN";
                    if (frame.kind !== expected) {
                        this.die(`expected ${expected}, got ${frame.kind}`);
                        return;
                    }
                    entry.result = { kind: "value", text: frame.body };
                    this.phase = "awaiting-ready";
                    this.changed();
                    return;
                }
                if (frame.kind === "ERROR") {
                    entry.result = { kind: "error", text: frame.body };
                    this.phase = "awaiting-ready";
                    this.changed();
                    return;
                }
                this.die(`unexpected ${frame.kind} during reply`);
                return;
            }
            case "awaiting-ready": {
                if (frame.kind !== "READY") {
                    this.die(`expected READY, got ${frame.kind}`);
                    return;
                }
                this.phase = "idle";
                this.changed();
                return;
            }
            case "dead":
                return;
        }
    }

    private changed(): void {
        if (this.onChange) {
            this.onChange();
        }
    }
}
