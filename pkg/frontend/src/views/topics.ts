/** Topic tree: main topics with their subtopics, hover-linked to the map. */

import { clear, el } from "../dom";
import type { SessionStore } from "../state";
import type { TopicData } from "../types";

export function mountTopics(root: HTMLElement, store: SessionStore): void {
  root.classList.add("topic-canvas");

  const render = () => {
    clear(root);
    const all = store.orderedTopics();
    const tree = el("ul", { class: "topic-tree" });
    for (const topic of all.filter((t) => t.parent === null)) {
      const node = renderTopic(store, topic);
      const children = all.filter((t) => t.parent === topic.topic_id);
      if (children.length > 0) {
        const sub = el("ul", { class: "subtopics" });
        for (const child of children) sub.append(renderTopic(store, child));
        node.append(sub);
      }
      tree.append(node);
    }
    root.append(tree);
    const hovered = store.hoverTopicId === null ? undefined : store.topics.get(store.hoverTopicId);
    root.append(
      el("p", { class: "topic-description", text: hovered?.description ?? "" }),
    );
  };
  store.subscribe(render);
  render();
}

function renderTopic(store: SessionStore, topic: TopicData): HTMLElement {
  const label = el(
    "span",
    {
      class: topic.topic_id === store.hoverTopicId ? "topic-label hovered" : "topic-label",
      "data-topic-id": topic.topic_id,
      "data-color-index": String(topic.color_index),
    },
    [
      el("span", { class: "topic-title", text: topic.title }),
      el("span", { class: "topic-count", text: String(topic.insight_count) }),
    ],
  );
  label.addEventListener("mouseenter", () => store.setHoverTopic(topic.topic_id));
  label.addEventListener("mouseleave", () => store.setHoverTopic(null));
  return el("li", { class: "topic" }, [label]);
}
