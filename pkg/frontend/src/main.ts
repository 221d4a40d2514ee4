/** Browser entry point: bind to a session and keep the views streaming. */

import { ApiClient } from "./api";
import { createApp } from "./coordination";
import { SessionStore } from "./state";

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const baseUrl = params.get("api") ?? "http://localhost:8000";
  const client = new ApiClient(baseUrl);

  const sessionId = params.get("session") ?? (await client.createSession());
  const store = new SessionStore();
  const root = document.getElementById("app");
  if (root === null) throw new Error("missing #app container");

  createApp(root, store, client.bind(sessionId));
  store.loadSnapshot(await client.getSnapshot(sessionId));
  void client.streamEvents(sessionId, store.lastSeq + 1, (event) => store.applyEvent(event));
}

void boot();
