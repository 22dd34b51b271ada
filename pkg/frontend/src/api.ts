// Typed client for the assistant service. The UI talks to exactly these
// endpoints: POST /chat, GET /metrics/usage, GET /metrics/breakdown,
// GET /metrics/adopters, GET /health.

export interface SourceRef {
  doc_id: string;
  uri: string;
  span: [number, number];
}

export interface ChatResponse {
  response_text: string;
  sources: SourceRef[];
  task_count: number;
  latency_s: number;
  correlation_id: string;
}

export interface DailyEngagement {
  date: string;
  avg_messages_per_session: number;
}

export interface UsageMetrics {
  range: { start: string; end: string };
  message_count: number;
  unique_users: number;
  avg_response_time_s?: number;
  daily_engagement: DailyEngagement[];
  skipped_records: number;
}

export interface BreakdownRow {
  key: string;
  count: number;
}

export interface Breakdown {
  dimension: string;
  rows: BreakdownRow[];
}

export interface AdopterRow {
  user_id: string;
  query_count: number;
  class: string;
  rising: boolean;
}

export interface Health {
  status: string;
  index_counts: Record<string, number>;
  last_refresh: string | null;
}

export type Dimension = "department" | "job_title" | "user" | "question_type";

export const DIMENSIONS: Dimension[] = ["department", "job_title", "user", "question_type"];

export interface DateRange {
  from?: string;
  to?: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
    readonly correlationId?: string,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      let detail = `request failed with status ${response.status}`;
      let correlationId: string | undefined;
      try {
        const body = await response.json();
        if (body.detail) detail = String(body.detail);
        if (body.correlation_id) correlationId = String(body.correlation_id);
      } catch {
        // non-JSON error body; keep the generic detail
      }
      throw new ApiError(response.status, detail, correlationId);
    }
    return (await response.json()) as T;
  }

  private withRange(path: string, range: DateRange, extra: Record<string, string> = {}): string {
    const params = new URLSearchParams(extra);
    if (range.from) params.set("from", range.from);
    if (range.to) params.set("to", range.to);
    const query = params.toString();
    return query ? `${path}?${query}` : path;
  }

  chat(userId: string, department: string, jobTitle: string, text: string): Promise<ChatResponse> {
    return this.request<ChatResponse>("/chat", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ user_id: userId, department, job_title: jobTitle, text }),
    });
  }

  usage(range: DateRange = {}): Promise<UsageMetrics> {
    return this.request<UsageMetrics>(this.withRange("/metrics/usage", range));
  }

  breakdown(dimension: Dimension, range: DateRange = {}): Promise<Breakdown> {
    return this.request<Breakdown>(this.withRange("/metrics/breakdown", range, { dimension }));
  }

  adopters(range: DateRange = {}): Promise<{ rows: AdopterRow[] }> {
    return this.request<{ rows: AdopterRow[] }>(this.withRange("/metrics/adopters", range));
  }

  health(): Promise<Health> {
    return this.request<Health>("/health");
  }
}
