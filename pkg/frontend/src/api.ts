// Typed client for the dialogue service JSON API.

export interface WireAct {
    act_type: string;
    payload: unknown;
}

export interface QuickResponse {
    label: string;
    input: string;
    act_type: string;
}

export interface RenderedMessage {
    text: string;
    act: WireAct;
    quick_responses: QuickResponse[];
    clickable_items: string[];
}

export interface CreateSessionResponse {
    session_id: string;
    corpus: string;
    policy: string;
    greeting: RenderedMessage;
}

export interface StepResponse {
    session_id: string;
    user: WireAct;
    system: RenderedMessage | null;
    turn: number;
    cumulative_core_reward: number;
    terminal: boolean;
}

export interface TranscriptEntry {
    actor: "user" | "system";
    act_type: string;
    payload: unknown;
    turn: number;
    top_score: number;
    r: number;
    reward_core: number | null;
}

export interface SessionRecord {
    session_id: string;
    corpus: string;
    policy: string;
    seed: number;
    terminal: boolean;
    turn: number;
    cumulative_core_reward: number;
    transcript: TranscriptEntry[];
}

export interface ServiceInfo {
    corpora: string[];
    policies: string[];
    default_corpus: string;
    default_policy: string;
}

export class ApiError extends Error {
    constructor(
        public status: number,
        message: string,
        public suggestions: string[] = [],
    ) {
        super(message);
    }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
    constructor(
        private baseUrl = "",
        private fetchFn: FetchLike = (input, init) => fetch(input, init),
    ) {}

    private async request<T>(path: string, init?: RequestInit): Promise<T> {
        const response = await this.fetchFn(this.baseUrl + path, {
            headers: { "Content-Type": "application/json" },
            ...init,
        });
        if (!response.ok) {
            let detail = response.statusText;
            let suggestions: string[] = [];
            try {
                const body = await response.json();
                detail = body.detail ?? detail;
                suggestions = body.suggestions ?? [];
            } catch {
                // non-JSON error body; keep the status text
            }
            throw new ApiError(response.status, detail, suggestions);
        }
        if (response.status === 204) {
            return undefined as T;
        }
        return (await response.json()) as T;
    }

    info(): Promise<ServiceInfo> {
        return this.request<ServiceInfo>("/api/info");
    }

    createSession(corpus?: string, policy?: string): Promise<CreateSessionResponse> {
        return this.request<CreateSessionResponse>("/sessions", {
            method: "POST",
            body: JSON.stringify({ corpus, policy }),
        });
    }

    step(sessionId: string, text: string): Promise<StepResponse> {
        return this.request<StepResponse>(`/sessions/${sessionId}/acts`, {
            method: "POST",
            body: JSON.stringify({ text }),
        });
    }

    stepAct(sessionId: string, act: WireAct): Promise<StepResponse> {
        return this.request<StepResponse>(`/sessions/${sessionId}/acts`, {
            method: "POST",
            body: JSON.stringify({ act }),
        });
    }

    getSession(sessionId: string): Promise<SessionRecord> {
        return this.request<SessionRecord>(`/sessions/${sessionId}`);
    }

    restart(sessionId: string): Promise<StepResponse> {
        return this.request<StepResponse>(`/sessions/${sessionId}/restart`, { method: "POST" });
    }

    deleteSession(sessionId: string): Promise<void> {
        return this.request<void>(`/sessions/${sessionId}`, { method: "DELETE" });
    }
}
