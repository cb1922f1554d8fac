// HTTP client for the annotation backend, plus a retry queue so label
// submissions survive transient network failures.

import type {
  ExportedVideo,
  LabelBody,
  TaskListResponse,
  TimeSummaryRow,
  TimerBody,
} from "./types";

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!res.ok) {
      const detail = await res.text();
      throw new ApiError(`${path}: ${detail}`, res.status);
    }
    return (await res.json()) as T;
  }

  getTasks(projectId: string, worker: string): Promise<TaskListResponse> {
    const query = new URLSearchParams({ worker });
    return this.request(`/projects/${projectId}/tasks?${query}`);
  }

  postLabel(body: LabelBody): Promise<{ applied: number }> {
    return this.request("/labels", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  postTimer(body: TimerBody): Promise<{ ok: boolean }> {
    return this.request("/timer", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  getExport(projectId: string): Promise<ExportedVideo[]> {
    return this.request(`/projects/${projectId}/export`);
  }

  getTimeSummary(projectId: string): Promise<TimeSummaryRow[]> {
    return this.request(`/projects/${projectId}/time`);
  }

  frameUrl(videoId: string, timestamp: number): string {
    return `${this.baseUrl}/frames/${videoId}/${timestamp}`;
  }
}

export type QueueListener = (pending: number, retrying: boolean) => void;

/**
 * Ordered submission queue. A 4xx response is a permanent rejection and
 * surfaces to the caller; a network failure keeps the submission queued and
 * flips the retry indicator until a later flush drains it.
 */
export class SubmissionQueue {
  private pending: LabelBody[] = [];
  private retrying = false;
  private flushing = false;

  constructor(
    private readonly api: ApiClient,
    private readonly onChange: QueueListener = () => {},
  ) {}

  get size(): number {
    return this.pending.length;
  }

  get isRetrying(): boolean {
    return this.retrying;
  }

  enqueue(body: LabelBody): Promise<void> {
    this.pending.push(body);
    this.onChange(this.pending.length, this.retrying);
    return this.flush();
  }

  async flush(): Promise<void> {
    if (this.flushing) {
      return;
    }
    this.flushing = true;
    try {
      while (this.pending.length > 0) {
        const head = this.pending[0];
        try {
          await this.api.postLabel(head);
        } catch (err) {
          if (err instanceof ApiError) {
            this.pending.shift(); // rejected, not retryable
            this.onChange(this.pending.length, this.retrying);
            throw err;
          }
          this.retrying = true; // network failure: keep queued
          this.onChange(this.pending.length, this.retrying);
          return;
        }
        this.pending.shift();
        this.retrying = false;
        this.onChange(this.pending.length, this.retrying);
      }
    } finally {
      this.flushing = false;
    }
  }
}
