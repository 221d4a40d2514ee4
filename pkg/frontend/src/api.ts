/** Typed client for the session API plus a fetch-based SSE reader.
 *
 * The SSE reader is used instead of EventSource so the same code path runs
 * in the browser and under test, and so the resume cursor stays explicit.
 */

import type {
  HistogramEntry,
  InsightData,
  ProfileData,
  SessionEventData,
  SnapshotData,
  TopicData,
} from "./types";

const RETRY_DELAY_MS = 1000;

export class ApiRequestError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

/** The command surface a bound session hands to the views. */
export interface SessionApi {
  patchScore(insightId: string, value: number): Promise<InsightData>;
  patchAttributeOrder(order: string[]): Promise<string[]>;
  getSnapshot(): Promise<SnapshotData>;
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<any> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    const body = await response.json().catch(() => null);
    if (!response.ok) {
      const detail = body?.detail ?? {};
      throw new ApiRequestError(
        response.status,
        detail.code ?? "unknown_error",
        detail.message ?? `request failed with ${response.status}`,
      );
    }
    return body;
  }

  async createSession(): Promise<string> {
    const body = await this.request("/sessions", { method: "POST" });
    return body.session_id;
  }

  async uploadDataset(sessionId: string, csv: Blob | string): Promise<ProfileData> {
    return this.request(`/sessions/${sessionId}/dataset`, {
      method: "POST",
      body: csv,
      headers: { "content-type": "text/csv" },
    });
  }

  async sendMessage(
    sessionId: string,
    text: string,
  ): Promise<{ accepted: boolean; turn_id: number }> {
    return this.request(`/sessions/${sessionId}/messages`, {
      method: "POST",
      body: JSON.stringify({ text }),
      headers: { "content-type": "application/json" },
    });
  }

  async getSnapshot(sessionId: string): Promise<SnapshotData> {
    return this.request(`/sessions/${sessionId}/snapshot`);
  }

  async getInsights(sessionId: string): Promise<InsightData[]> {
    const body = await this.request(`/sessions/${sessionId}/insights`);
    return body.insights;
  }

  async getTopics(sessionId: string): Promise<TopicData[]> {
    const body = await this.request(`/sessions/${sessionId}/topics`);
    return body.topics;
  }

  async getHistogram(sessionId: string): Promise<HistogramEntry[]> {
    const body = await this.request(`/sessions/${sessionId}/histogram`);
    return body.histogram;
  }

  async patchScore(sessionId: string, insightId: string, value: number): Promise<InsightData> {
    return this.request(`/sessions/${sessionId}/insights/${insightId}/score`, {
      method: "PATCH",
      body: JSON.stringify({ value }),
      headers: { "content-type": "application/json" },
    });
  }

  async patchAttributeOrder(sessionId: string, order: string[]): Promise<string[]> {
    const body = await this.request(`/sessions/${sessionId}/attribute-order`, {
      method: "PATCH",
      body: JSON.stringify({ order }),
      headers: { "content-type": "application/json" },
    });
    return body.attribute_order;
  }

  bind(sessionId: string): SessionApi {
    return {
      patchScore: (insightId, value) => this.patchScore(sessionId, insightId, value),
      patchAttributeOrder: (order) => this.patchAttributeOrder(sessionId, order),
      getSnapshot: () => this.getSnapshot(sessionId),
    };
  }

  /**
   * Consume the session's event stream, resuming from the last seen seq
   * after any disconnect, until the signal aborts.
   */
  async streamEvents(
    sessionId: string,
    from: number,
    onEvent: (event: SessionEventData) => void,
    signal?: AbortSignal,
  ): Promise<void> {
    let cursor = from;
    while (!signal?.aborted) {
      try {
        const response = await this.fetchFn(
          `${this.baseUrl}/sessions/${sessionId}/events?from=${cursor}`,
          { signal },
        );
        if (!response.ok || response.body === null) {
          throw new ApiRequestError(response.status, "stream_failed", "event stream failed");
        }
        for await (const event of parseSse(response.body)) {
          cursor = event.seq + 1;
          onEvent(event);
        }
      } catch {
        // fall through to the retry delay; abort is checked by the loop
      }
      if (signal?.aborted) return;
      await new Promise((resolve) => setTimeout(resolve, RETRY_DELAY_MS));
    }
  }
}

/** Parse `id:` / `event:` / `data:` frames from an SSE byte stream. */
export async function* parseSse(
  body: ReadableStream<Uint8Array>,
): AsyncGenerator<SessionEventData> {
  const reader = body.getReader();
  const decoder = new TextDecoder();
  let buffer = "";
  for (;;) {
    const { done, value } = await reader.read();
    if (done) break;
    buffer += decoder.decode(value, { stream: true });
    let cut: number;
    while ((cut = buffer.indexOf("\n\n")) !== -1) {
      const frame = buffer.slice(0, cut);
      buffer = buffer.slice(cut + 2);
      const event = parseFrame(frame);
      if (event !== null) yield event;
    }
  }
}

function parseFrame(frame: string): SessionEventData | null {
  let seq: number | null = null;
  let kind = "";
  const data: string[] = [];
  for (const line of frame.split("\n")) {
    if (line.startsWith("id: ")) seq = Number(line.slice(4));
    else if (line.startsWith("event: ")) kind = line.slice(7);
    else if (line.startsWith("data: ")) data.push(line.slice(6));
  }
  if (seq === null || !Number.isFinite(seq) || kind === "") return null;
  return { seq, kind, payload: data.length ? JSON.parse(data.join("\n")) : null };
}
