// View model for the chat window. Holds all client state and talks to the
// service; contains no policy logic of its own.

import { ApiClient, ApiError, QuickResponse, RenderedMessage, TranscriptEntry } from "./api";

export interface ChatMessage {
    speaker: "user" | "system";
    text: string;
    clickables: string[];
    clickablePrefix: "@" | "+";
    quickResponses: QuickResponse[];
}

export type ConnectionStatus = "idle" | "connecting" | "ready" | "busy" | "error";

function clickablePrefix(actType: string): "@" | "+" {
    return actType === "suggKeywords" ? "+" : "@";
}

export function systemMessage(rendered: RenderedMessage): ChatMessage {
    return {
        speaker: "system",
        text: rendered.text,
        clickables: rendered.clickable_items,
        clickablePrefix: clickablePrefix(rendered.act.act_type),
        quickResponses: rendered.quick_responses,
    };
}

// Compact client-side rendering used only when restoring a transcript.
export function formatTranscriptEntry(entry: TranscriptEntry): string {
    const payload = entry.payload;
    if (payload == null) {
        return entry.act_type;
    }
    if (typeof payload === "string") {
        return `${entry.act_type}: ${payload}`;
    }
    if (Array.isArray(payload)) {
        return `${entry.act_type}: ${payload.join(", ")}`;
    }
    const record = payload as { id?: string; properties?: string[] };
    if (record.id !== undefined) {
        return `${entry.act_type}: ${record.id} (${(record.properties ?? []).join(", ")})`;
    }
    return `${entry.act_type}: ${JSON.stringify(payload)}`;
}

export class ChatViewModel {
    messages: ChatMessage[] = [];
    sessionId: string | null = null;
    draft = "";
    status: ConnectionStatus = "idle";
    notice = "";
    runningReward = 0;
    turn = 0;
    terminal = false;

    private listeners: Array<() => void> = [];

    constructor(private client: ApiClient) {}

    onChange(listener: () => void) {
        this.listeners.push(listener);
    }

    private emit() {
        for (const listener of this.listeners) {
            listener();
        }
    }

    async startSession(corpus?: string, policy?: string): Promise<void> {
        this.status = "connecting";
        this.notice = "";
        this.emit();
        try {
            const created = await this.client.createSession(corpus, policy);
            this.sessionId = created.session_id;
            this.messages = [systemMessage(created.greeting)];
            this.runningReward = 0;
            this.turn = 0;
            this.terminal = false;
            this.status = "ready";
        } catch (error) {
            this.status = "error";
            this.notice = error instanceof Error ? error.message : "service unreachable";
        }
        this.emit();
    }

    /** Send the draft (or an explicit text); no-ops while a request is in
     * flight so one session never has two concurrent steps. */
    async send(text?: string): Promise<void> {
        const input = (text ?? this.draft).trim();
        if (!input || this.sessionId === null || this.terminal) {
            return;
        }
        if (this.status === "busy") {
            this.notice = "still waiting for the previous message";
            this.emit();
            return;
        }
        this.status = "busy";
        this.notice = "";
        this.emit();
        try {
            const step = await this.client.step(this.sessionId, input);
            this.messages.push({
                speaker: "user",
                text: input,
                clickables: [],
                clickablePrefix: "@",
                quickResponses: [],
            });
            if (step.system) {
                this.messages.push(systemMessage(step.system));
            }
            this.runningReward = step.cumulative_core_reward;
            this.turn = step.turn;
            this.terminal = step.terminal;
            this.draft = "";
            this.status = "ready";
        } catch (error) {
            this.status = "ready";
            if (error instanceof ApiError) {
                this.notice =
                    error.suggestions.length > 0
                        ? `${error.message}`
                        : error.status === 409
                          ? "that message crossed another one; try again"
                          : error.message;
            } else {
                this.notice = "service unreachable";
                this.status = "error";
            }
        }
        this.emit();
    }

    sendQuick(quick: QuickResponse): Promise<void> {
        return this.send(quick.input);
    }

    /** Clicking a result/keyword only fills the search bar; never sends. */
    clickItem(item: string, prefix: "@" | "+"): void {
        this.draft = `${prefix}${item}`;
        this.emit();
    }

    setDraft(value: string): void {
        this.draft = value;
        this.emit();
    }

    async restart(): Promise<void> {
        if (this.sessionId === null || this.status === "busy") {
            return;
        }
        this.status = "busy";
        this.emit();
        try {
            const step = await this.client.restart(this.sessionId);
            this.messages.push({
                speaker: "user",
                text: "restart",
                clickables: [],
                clickablePrefix: "@",
                quickResponses: [],
            });
            if (step.system) {
                this.messages.push(systemMessage(step.system));
            }
            this.runningReward = step.cumulative_core_reward;
            this.turn = step.turn;
            this.terminal = step.terminal;
            this.status = "ready";
        } catch (error) {
            this.status = "ready";
            this.notice = error instanceof Error ? error.message : "restart failed";
        }
        this.emit();
    }

    /** Rebuild the message stream from the server transcript (reconnect). */
    async reconnect(): Promise<void> {
        if (this.sessionId === null) {
            return;
        }
        this.status = "connecting";
        this.emit();
        try {
            const record = await this.client.getSession(this.sessionId);
            this.messages = record.transcript
                .filter((entry) => entry.act_type !== "START")
                .map((entry) => ({
                    speaker: entry.actor,
                    text: formatTranscriptEntry(entry),
                    clickables: [],
                    clickablePrefix: "@" as const,
                    quickResponses: [],
                }));
            this.runningReward = record.cumulative_core_reward;
            this.turn = record.turn;
            this.terminal = record.terminal;
            this.status = "ready";
        } catch (error) {
            this.status = "error";
            this.notice = error instanceof Error ? error.message : "service unreachable";
        }
        this.emit();
    }
}
