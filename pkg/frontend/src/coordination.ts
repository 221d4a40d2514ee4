/** Assembles the five views over one shared store and session API. */

import type { SessionApi } from "./api";
import { el } from "./dom";
import type { SessionStore } from "./state";
import { mountChat } from "./views/chat";
import { mountDetails } from "./views/details";
import { mountGallery } from "./views/gallery";
import { mountMinimap } from "./views/minimap";
import { mountTopics } from "./views/topics";

export interface AppViews {
  chat: HTMLElement;
  details: HTMLElement;
  gallery: HTMLElement;
  minimap: HTMLElement;
  topics: HTMLElement;
}

export function createApp(root: HTMLElement, store: SessionStore, api: SessionApi): AppViews {
  const views: AppViews = {
    chat: el("section", { id: "chat" }),
    details: el("aside", { id: "details" }),
    gallery: el("section", { id: "gallery" }),
    minimap: el("section", { id: "minimap" }),
    topics: el("nav", { id: "topics" }),
  };
  root.append(views.chat, views.details, views.gallery, views.minimap, views.topics);
  mountChat(views.chat, store);
  mountDetails(views.details, store);
  mountGallery(views.gallery, store);
  mountMinimap(views.minimap, store, api);
  mountTopics(views.topics, store);
  return views;
}
