// REST client for the sketch service, with an offline outbox: strokes that
// fail to send are retained locally and flushed in order before anything
// else mutates the repository.

import type {
  ApiErrorWire,
  CheckoutResponse,
  CommitResponse,
  DiffWire,
  SlideshowWire,
  StrokeRecordWire,
  TreeWire,
} from "./types.js";

export class ApiError extends Error {
  constructor(public payload: ApiErrorWire) {
    super(payload.message);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

function requestId(): string {
  if (typeof crypto !== "undefined" && "randomUUID" in crypto) {
    return crypto.randomUUID();
  }
  return `rq-${Date.now()}-${Math.floor(Math.random() * 1e9)}`;
}

export class ApiClient {
  /** Strokes awaiting delivery, oldest first. */
  readonly outbox: { stroke: StrokeRecordWire; requestId: string }[] = [];

  constructor(
    public baseUrl: string,
    public repoId: string,
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json();
    if (!response.ok) {
      throw new ApiError(payload as ApiErrorWire);
    }
    return payload as T;
  }

  async createRepo(authorName = "designer"): Promise<void> {
    await this.request("POST", "/repos", {
      repo_id: this.repoId,
      author_name: authorName,
      request_id: requestId(),
    });
  }

  /**
   * Send one stroke; on network failure the stroke is retained in the
   * outbox and true is returned once it is queued (never throws for
   * connectivity problems).
   */
  async postStroke(stroke: StrokeRecordWire): Promise<"sent" | "queued"> {
    const entry = { stroke, requestId: requestId() };
    if (this.outbox.length > 0) {
      this.outbox.push(entry); // keep strict ordering
      await this.flushOutbox();
      return this.outbox.length === 0 ? "sent" : "queued";
    }
    try {
      await this.request("POST", `/repos/${this.repoId}/strokes`, {
        stroke: entry.stroke,
        request_id: entry.requestId,
      });
      return "sent";
    } catch (error) {
      if (error instanceof ApiError) throw error; // domain rejection, not connectivity
      this.outbox.push(entry);
      return "queued";
    }
  }

  /** Retry queued strokes in order; stops at the first failure. */
  async flushOutbox(): Promise<number> {
    let delivered = 0;
    while (this.outbox.length > 0) {
      const entry = this.outbox[0];
      try {
        await this.request("POST", `/repos/${this.repoId}/strokes`, {
          stroke: entry.stroke,
          request_id: entry.requestId,
        });
      } catch (error) {
        if (error instanceof ApiError) {
          this.outbox.shift(); // rejected by the server: do not retry forever
          throw error;
        }
        break;
      }
      this.outbox.shift();
      delivered += 1;
    }
    return delivered;
  }

  async commit(
    message: string,
    transcriptSource: "typed" | "speech",
    explicitRequestId?: string,
  ): Promise<CommitResponse> {
    await this.flushOutbox();
    if (this.outbox.length > 0) {
      throw new Error("strokes still queued; cannot commit");
    }
    return this.request("POST", `/repos/${this.repoId}/commits`, {
      message,
      transcript_source: transcriptSource,
      request_id: explicitRequestId ?? requestId(),
    });
  }

  checkout(commitId: string): Promise<CheckoutResponse> {
    return this.request("POST", `/repos/${this.repoId}/checkout/${commitId}`, {
      request_id: requestId(),
    });
  }

  tree(): Promise<TreeWire> {
    return this.request("GET", `/repos/${this.repoId}/tree`);
  }

  diff(a: string, b: string): Promise<DiffWire> {
    return this.request("GET", `/repos/${this.repoId}/diff?a=${a}&b=${b}`);
  }

  slideshow(tip: string): Promise<SlideshowWire> {
    return this.request("GET", `/repos/${this.repoId}/slideshow/${tip}`);
  }

  summary(mode: "deterministic" | "llm"): Promise<{ text: string; provenance: string }> {
    return this.request("POST", `/repos/${this.repoId}/summary`, { mode });
  }
}
