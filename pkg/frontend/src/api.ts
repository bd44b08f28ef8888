// Typed client for the arena service. Every server interaction in the UI
// goes through this module; nothing else talks HTTP.

export interface ApiRequestView {
  api_name: string;
  arguments: Record<string, string>;
}

export interface ApiResultView {
  api_name: string;
  status: "success" | "error";
  payload: string;
}

export interface MessageView {
  role: "system" | "user" | "assistant" | "tool";
  content: string;
  request?: ApiRequestView;
  result?: ApiResultView;
}

export interface TraceView {
  messages: MessageView[];
  answer: string;
  steps_taken: number;
  terminated_by: string;
}

export interface BattleCreated {
  battle_id: string;
  response_a: TraceView;
  response_b: TraceView;
}

export type Outcome = "a" | "b" | "tie";

export interface VoteResultView {
  revealed: { a: string; b: string };
  new_ratings: Record<string, number>;
}

export interface LeaderboardRowView {
  agent_id: string;
  rating: number;
  games: number;
}

export interface ChatReply {
  session_id: string;
  reply: string;
  messages: MessageView[];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await fetch(this.base + path, init);
    } catch (err) {
      throw new ApiError(0, `network failure: ${String(err)}`);
    }
    if (!response.ok) {
      let detail = `${response.status} ${response.statusText}`;
      try {
        const body: unknown = await response.json();
        if (
          typeof body === "object" &&
          body !== null &&
          typeof (body as { detail?: unknown }).detail === "string"
        ) {
          detail = (body as { detail: string }).detail;
        }
      } catch {
        // keep the status line
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  agents(): Promise<{ agent_id: string }[]> {
    return this.request("/api/agents");
  }

  leaderboard(): Promise<LeaderboardRowView[]> {
    return this.request("/api/leaderboard");
  }

  createBattle(instruction: string): Promise<BattleCreated> {
    return this.post("/api/battles", { instruction });
  }

  vote(battleId: string, outcome: Outcome): Promise<VoteResultView> {
    return this.post(`/api/battles/${battleId}/vote`, { outcome });
  }

  chat(sessionId: string, message: string): Promise<ChatReply> {
    return this.post("/api/chat", { session_id: sessionId, message });
  }
}

export function describeError(err: unknown): string {
  if (err instanceof ApiError) {
    return err.message;
  }
  return String(err);
}
