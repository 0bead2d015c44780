// DOM rendering and input wiring for the console page. Session logic lives
// in session.ts; this file only reflects state into elements and feeds user
// input back in.

import { ConsoleEntry, ConsoleSession, Mode } from "./session.js";

export interface ConsoleElements {
    status: HTMLElement;
    entries: HTMLElement;
    input: HTMLInputElement;
    modeToggle: HTMLInputElement;
    reconnect: HTMLButtonElement;
}

function renderEntry(entry: ConsoleEntry): HTMLElement {
    const root = document.createElement("div");
    root.className = "entry";

    const cmd = document.createElement("div");
    cmd.className = "entry-command";
    cmd.textContent = (entry.mode === "json" ? "json> " : "> ") + entry.command;
    root.appendChild(cmd);

    if (entry.chunks.length > 0) {
        const out = document.createElement("pre");
        out.className = "entry-stdout";
        out.textContent = entry.chunks.join("");
        root.appendChild(out);
    }

    const result = document.createElement("div");
    switch (entry.result.kind) {
        case "pending":
            result.className = "entry-pending";
            result.textContent = "...";
            break;
        case "value":
            result.className = "entry-value";
            result.textContent = entry.result.text;
            break;
        case "error":
            result.className = "entry-error";
            result.textContent = entry.result.text;
            break;
    }
    root.appendChild(result);
    return root;
}

export function bindConsole(
    elements: ConsoleElements,
    connect: () => ConsoleSession,
): void {
    let session: ConsoleSession;
    const history: string[] = [];
    let historyPos = 0;

    function render(): void {
        const { status, entries, input, reconnect } = elements;
        switch (session.state) {
            case "connecting":
                status.textContent = "connecting...";
                status.className = "status status-connecting";
                break;
            case "ready":
            case "busy": {
                const hello = session.hello;
                status.textContent = hello
                    ? `session "${hello.sessionName}" (protocol ${hello.protocolVersion})`
                    : "connected";
                status.className = "status status-live";
                break;
            }
            case "dead":
                status.textContent = `disconnected: ${session.deathReason ?? "unknown"}`;
                status.className = "status status-dead";
                break;
        }

        entries.replaceChildren(...session.entries.map(renderEntry));
        entries.scrollTop = entries.scrollHeight;

        input.disabled = !session.inputEnabled;
        reconnect.hidden = session.state !== "dead";
        if (session.inputEnabled) {
            input.focus();
        }
    }

    function start(): void {
        session = connect();
        session.onChange = render;
        render();
    }

    elements.input.addEventListener("keydown", (event) => {
        if (event.key === "Enter") {
            const text = elements.input.value.trim();
            if (!text || !session.inputEnabled) {
                return;
            }
            const mode: Mode = elements.modeToggle.checked ? "json" : "sexpr";
            history.push(text);
            historyPos = history.length;
            elements.input.value = "";
            session.submit(text, mode);
        } else if (event.key === "ArrowUp") {
            if (historyPos > 0) {
                historyPos -= 1;
                elements.input.value = history[historyPos];
            }
            event.preventDefault();
        } else if (event.key === "ArrowDown") {
            if (historyPos < history.length) {
                historyPos += 1;
                elements.input.value = history[historyPos] ?? "";
            }
            event.preventDefault();
        }
    });

    elements.reconnect.addEventListener("click", start);
    start();
}
