// Message kinds and the JSON envelope used on the WebSocket transport.
// One text frame carries one message: {"kind": "<KIND>", "body": "<text>"}.

export const WS_PATH = "/bridge";
export const PROTOCOL_VERSION = 1;

export type ServerKind = "HELLO" | "READY" | "RETURN" | "RETURN_JSON" | "STDOUT" | "ERROR";
export type ClientKind = "COMMAND" | "COMMAND_JSON";

export interface Frame {
    kind: string;
    body: string;
}

export interface ServerHello {
    protocolVersion: number;
    sessionName: string;
}

export function parseFrame(raw: string): Frame | null {
    let data: unknown;
    try {
        data = JSON.parse(raw);
    } catch {
        return null;
    }
    if (typeof data !== "object" || data === null) {
        return null;
    }
    const kind = (data as Record<string, unknown>).kind;
    const body = (data as Record<string, unknown>).body ?? "";
    if (typeof kind !== "string" || typeof body !== "string") {
        return null;
    }
    return { kind, body };
}

export function encodeFrame(kind: ClientKind, body: string): string {
    return JSON.stringify({ kind, body });
}

// HELLO body: (bridge <version> "<name>"), name escapes limited to \" and \\
const HELLO_RE = /^\(bridge ([0-9]+) "((?:[^"\\]|\\["\\])*)"\)$/;

export function parseHello(body: string): ServerHello | null {
    const match = HELLO_RE.exec(body);
    if (!match) {
        return null;
    }
    return {
        protocolVersion: Number(match[1]),
        sessionName: match[2].replace(/\\(["\\])/g, "$1"),
    };
}
