import { WS_PATH } from "./protocol.js";
import { ConsoleSession } from "./session.js";
import { ConsoleElements, bindConsole } from "./ui.js";

function endpoint(): string {
    const params = new URLSearchParams(window.location.search);
    const target = params.get("bridge") ?? "127.0.0.1:8777";
    return `ws://${target}${WS_PATH}`;
}

function required<T extends HTMLElement>(id: string): T {
    const element = document.getElementById(id);
    if (!element) {
        throw new Error(`missing element #${id}`);
    }
    return element as T;
}

const elements: ConsoleElements = {
    status: required("status"),
    entries: required("entries"),
    input: required<HTMLInputElement>("input"),
    modeToggle: required<HTMLInputElement>("mode-toggle"),
    reconnect: required<HTMLButtonElement>("reconnect"),
};

bindConsole(elements, () => new ConsoleSession(new WebSocket(endpoint())));
