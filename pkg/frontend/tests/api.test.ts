import { describe, expect, it } from "vitest";

import { ApiClient, ApiRequestError, parseSse } from "../src/api";
import { SessionStore } from "../src/state";
import { FakeServer } from "./fakeserver";
import { emptySnapshot, fullSnapshot, liveEvents } from "./fixtures";

function makeClient(server: FakeServer): ApiClient {
  return new ApiClient("http://fake", server.fetch);
}

describe("ApiClient", () => {
  it("creates a session and reads it back", async () => {
    const server = new FakeServer(fullSnapshot());
    const client = makeClient(server);
    expect(await client.createSession()).toBe("fake01");
    const snapshot = await client.getSnapshot("fake01");
    expect(snapshot.insights).toHaveLength(3);
    expect(server.requests.map((r) => `${r.method} ${r.path}`)).toEqual([
      "POST /sessions",
      "GET /sessions/fake01/snapshot",
    ]);
  });

  it("uploads a dataset as a raw body", async () => {
    const server = new FakeServer(emptySnapshot());
    const profile = await makeClient(server).uploadDataset("fake01", "MPG\n18.0\n");
    expect(profile.name).toBe("cars");
    expect(server.requests[0]).toMatchObject({
      method: "POST",
      path: "/sessions/fake01/dataset",
      body: "MPG\n18.0\n",
    });
  });

  it("posts messages and surfaces the turn id", async () => {
    const server = new FakeServer(fullSnapshot());
    const reply = await makeClient(server).sendMessage("fake01", "split by origin");
    expect(reply).toEqual({ accepted: true, turn_id: 3 });
    expect(server.requests[0].body).toEqual({ text: "split by origin" });
  });

  it("turns error envelopes into typed errors", async () => {
    const server = new FakeServer(fullSnapshot());
    const client = makeClient(server);
    const error = await client.sendMessage("fake01", "  ").catch((e) => e);
    expect(error).toBeInstanceOf(ApiRequestError);
    expect(error.status).toBe(422);
    expect(error.code).toBe("bad_text");
    const missing = await client.getSnapshot("nope").catch((e) => e);
    expect(missing.code).toBe("unknown_session");
    expect(missing.status).toBe(404);
  });

  it("lists insights, topics, and the histogram", async () => {
    const server = new FakeServer(fullSnapshot());
    const client = makeClient(server);
    expect((await client.getInsights("fake01")).map((i) => i.insight_id)).toEqual([
      "a1",
      "a2",
      "a3",
    ]);
    expect((await client.getTopics("fake01")).map((t) => t.topic_id)).toEqual([
      "t1",
      "t1s",
      "t2",
    ]);
    expect(await client.getHistogram("fake01")).toEqual([
      { attribute: "MPG", count: 2 },
      { attribute: "Horsepower", count: 1 },
      { attribute: "Origin", count: 1 },
    ]);
  });

  it("patches scores through the insight route", async () => {
    const server = new FakeServer(fullSnapshot());
    const updated = await makeClient(server).patchScore("fake01", "a1", 5);
    expect(updated.score.user_override).toBe(5);
    expect(server.requests[0]).toMatchObject({
      method: "PATCH",
      path: "/sessions/fake01/insights/a1/score",
      body: { value: 5 },
    });
  });

  it("rejects bad score patches with the server's code", async () => {
    const server = new FakeServer(fullSnapshot());
    const client = makeClient(server);
    expect((await client.patchScore("fake01", "a1", 9).catch((e) => e)).code).toBe("bad_score");
    expect((await client.patchScore("fake01", "zz", 3).catch((e) => e)).code).toBe(
      "unknown_insight",
    );
  });

  it("patches the attribute order", async () => {
    const server = new FakeServer(fullSnapshot());
    const order = ["Origin", "MPG", "Horsepower"];
    expect(await makeClient(server).patchAttributeOrder("fake01", order)).toEqual(order);
    expect((await makeClient(server).patchAttributeOrder("fake01", ["MPG"]).catch((e) => e)).code).toBe(
      "bad_order",
    );
  });
});

describe("parseSse", () => {
  function streamOf(chunks: string[]): ReadableStream<Uint8Array> {
    const encoder = new TextEncoder();
    return new ReadableStream({
      start(controller) {
        for (const chunk of chunks) controller.enqueue(encoder.encode(chunk));
        controller.close();
      },
    });
  }

  it("parses id, event, and data lines into events", async () => {
    const frames =
      'id: 3\nevent: block_delta\ndata: {"turn_id": 1, "text": "hi"}\n\n' +
      'id: 4\nevent: turn_complete\ndata: {"turn_id": 1}\n\n';
    const seen = [];
    for await (const event of parseSse(streamOf([frames]))) seen.push(event);
    expect(seen).toEqual([
      { seq: 3, kind: "block_delta", payload: { turn_id: 1, text: "hi" } },
      { seq: 4, kind: "turn_complete", payload: { turn_id: 1 } },
    ]);
  });

  it("reassembles frames split across arbitrary chunk boundaries", async () => {
    const frame = 'id: 7\nevent: topic_added\ndata: {"topic": {"topic_id": "t9"}}\n\n';
    for (const cut of [1, 5, 12, frame.length - 2]) {
      const seen = [];
      for await (const event of parseSse(streamOf([frame.slice(0, cut), frame.slice(cut)]))) {
        seen.push(event);
      }
      expect(seen).toHaveLength(1);
      expect(seen[0].seq).toBe(7);
      expect(seen[0].payload.topic.topic_id).toBe("t9");
    }
  });

  it("ignores malformed frames", async () => {
    const text = "retry: 1000\n\nid: 2\nevent: diagnostic\ndata: {}\n\n";
    const seen = [];
    for await (const event of parseSse(streamOf([text]))) seen.push(event);
    expect(seen).toEqual([{ seq: 2, kind: "diagnostic", payload: {} }]);
  });
});

describe("streamEvents", () => {
  it("folds the live feed into the store and respects the cursor", async () => {
    const server = new FakeServer(emptySnapshot());
    server.feed = liveEvents();
    const client = makeClient(server);
    const store = new SessionStore();
    store.loadSnapshot(await client.getSnapshot("fake01"));

    const controller = new AbortController();
    const last = server.feed[server.feed.length - 1].seq;
    await client.streamEvents(
      "fake01",
      store.lastSeq + 1,
      (event) => {
        store.applyEvent(event);
        if (event.seq === last) controller.abort();
      },
      controller.signal,
    );

    expect(store.turns.size).toBe(2);
    expect(store.insights.size).toBe(3);
    expect(store.topics.size).toBe(3);
    const streamRequest = server.requests.find((r) => r.path.endsWith("/events"));
    expect(streamRequest).toBeDefined();
    expect(store.matchesSnapshot(fullSnapshot())).toBe(true);
  });
});
