/** Client-side session state, folded from snapshots and the event stream.
 *
 * The store mirrors the server's reducer: every mutation comes from a
 * snapshot load or an event, except the two optimistic paths (score drag,
 * attribute reorder) that the server later confirms with its own event.
 * No scores, topics, or transitions are computed here.
 */

import type {
  BlockData,
  EvidenceRefData,
  InsightData,
  ProfileData,
  SessionEventData,
  SnapshotData,
  TopicData,
  TurnData,
} from "./types";

export type FocusSource = "dot" | "row" | "gallery" | "details" | "scroll";

export interface PendingTurn {
  turn_id: number;
  user_query: string;
  blocks: BlockData[];
  live_text: string;
}

export class SessionStore {
  sessionId = "";
  profile: ProfileData | null = null;
  attributeOrder: string[] = [];
  turns = new Map<number, TurnData>();
  pendingTurn: PendingTurn | null = null;
  insights = new Map<string, InsightData>();
  topics = new Map<string, TopicData>();
  counters: Record<string, number> = {};
  lastSeq = -1;

  focusId: string | null = null;
  pinned = false;
  hoverTopicId: string | null = null;

  private insightOrder: string[] = [];
  private listeners = new Set<() => void>();

  subscribe(listener: () => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  loadSnapshot(snapshot: SnapshotData): void {
    this.sessionId = snapshot.session_id;
    this.profile = snapshot.profile;
    this.attributeOrder = [...snapshot.attribute_order];
    this.turns = new Map(snapshot.turns.map((t) => [t.turn_id, t]));
    this.insights = new Map(snapshot.insights.map((i) => [i.insight_id, i]));
    this.insightOrder = snapshot.insights.map((i) => i.insight_id);
    this.topics = new Map(snapshot.topics.map((t) => [t.topic_id, t]));
    this.counters = { ...snapshot.counters };
    this.lastSeq = snapshot.events.length - 1;
    this.pendingTurn = null;
    this.notify();
  }

  /** Fold one streamed event; events at or below the snapshot seq are no-ops. */
  applyEvent(event: SessionEventData): void {
    if (event.seq <= this.lastSeq) return;
    this.lastSeq = event.seq;
    const p = event.payload;
    switch (event.kind) {
      case "session_created":
        this.sessionId = p.session_id;
        break;
      case "dataset_ingested":
        this.profile = p.profile;
        this.attributeOrder = [...p.attribute_order];
        break;
      case "turn_started":
        this.pendingTurn = {
          turn_id: p.turn_id,
          user_query: p.user_query,
          blocks: [],
          live_text: "",
        };
        break;
      case "block_delta": {
        const pending = this.pendingTurn;
        if (pending !== null && pending.turn_id === p.turn_id) {
          pending.live_text += p.text;
        }
        break;
      }
      case "block_complete": {
        const pending = this.pendingTurn;
        if (pending !== null && pending.turn_id === p.turn_id) {
          pending.blocks.push(p.block);
          pending.live_text = "";
        }
        break;
      }
      case "turn_complete": {
        const pending = this.pendingTurn;
        if (pending !== null && pending.turn_id === p.turn_id) {
          this.turns.set(p.turn_id, {
            turn_id: pending.turn_id,
            user_query: pending.user_query,
            blocks: pending.blocks,
            created_at: "",
          });
          this.pendingTurn = null;
        }
        break;
      }
      case "turn_error":
        this.pendingTurn = null;
        break;
      case "evidence_dropped":
        this.bump("evidence_dropped", p.count);
        break;
      case "context_fabrication":
        this.bump("fabricated_attributes", p.attributes.length);
        break;
      case "topic_regenerated":
        this.bump("topic_regenerations", 1);
        break;
      case "insight_added":
      case "insight_refined":
      case "insight_organized":
        this.upsertInsight(p.insight);
        break;
      case "topic_added":
      case "topic_updated":
        this.topics.set(p.topic.topic_id, p.topic);
        break;
      case "score_adjusted":
        this.overrideScore(p.insight_id, p.value);
        break;
      case "attribute_order_changed":
        this.attributeOrder = [...p.order];
        break;
      default:
        // informational kinds (diagnostic, classification notes) carry no state
        break;
    }
    this.notify();
  }

  private bump(key: string, by: number): void {
    this.counters[key] = (this.counters[key] ?? 0) + by;
  }

  private upsertInsight(insight: InsightData): void {
    if (!this.insights.has(insight.insight_id)) {
      this.insightOrder.push(insight.insight_id);
    }
    this.insights.set(insight.insight_id, insight);
  }

  private overrideScore(insightId: string, value: number | null): void {
    const insight = this.insights.get(insightId);
    if (insight === undefined) return;
    this.insights.set(insightId, {
      ...insight,
      score: { ...insight.score, user_override: value },
    });
  }

  /** Insights in creation order, the order every view shares. */
  orderedInsights(): InsightData[] {
    return this.insightOrder.map((id) => this.insights.get(id)!);
  }

  orderedTopics(): TopicData[] {
    return [...this.topics.keys()].sort().map((id) => this.topics.get(id)!);
  }

  insightsForTurn(turnId: number): InsightData[] {
    return this.orderedInsights().filter((i) => i.source_turns.includes(turnId));
  }

  effectiveScore(insight: InsightData): number {
    return insight.score.user_override ?? insight.score.s_final;
  }

  colorIndexOf(insight: InsightData): number | null {
    const topic = insight.topic_id === null ? undefined : this.topics.get(insight.topic_id);
    return topic?.color_index ?? null;
  }

  histogram(): { attribute: string; count: number }[] {
    const counts = new Map(this.attributeOrder.map((name) => [name, 0]));
    for (const insight of this.insights.values()) {
      for (const name of insight.data_context.attributes) {
        if (counts.has(name)) counts.set(name, counts.get(name)! + 1);
      }
    }
    return this.attributeOrder.map((attribute) => ({
      attribute,
      count: counts.get(attribute)!,
    }));
  }

  /** Focus changes from scrolling are ignored while an insight is pinned. */
  setFocus(id: string | null, source: FocusSource): void {
    if (this.pinned && source === "scroll") return;
    if (this.focusId === id) return;
    this.focusId = id;
    this.notify();
  }

  togglePin(): void {
    this.pinned = !this.pinned;
    this.notify();
  }

  setHoverTopic(id: string | null): void {
    if (this.hoverTopicId === id) return;
    this.hoverTopicId = id;
    this.notify();
  }

  /** Optimistic score override; the server's score_adjusted event confirms it. */
  applyLocalOverride(insightId: string, value: number | null): void {
    this.overrideScore(insightId, value);
    this.notify();
  }

  /** Optimistic attribute reorder, confirmed by attribute_order_changed. */
  applyLocalOrder(order: string[]): void {
    this.attributeOrder = [...order];
    this.notify();
  }

  /** Slice the referenced span out of the stored turn, if it still exists. */
  resolveEvidence(ref: EvidenceRefData): string | null {
    const turn = this.turns.get(ref.turn_id);
    const block = turn?.blocks.find((b) => b.block_index === ref.block_index);
    if (block === undefined) return null;
    if (ref.char_range === null) return block.content;
    return block.content.slice(ref.char_range[0], ref.char_range[1]);
  }

  /** Cross-check rendered state against a fresh snapshot fetch. */
  matchesSnapshot(snapshot: SnapshotData): boolean {
    return (
      this.insights.size === snapshot.insights.length &&
      this.topics.size === snapshot.topics.length &&
      this.turns.size === snapshot.turns.length &&
      JSON.stringify(this.attributeOrder) === JSON.stringify(snapshot.attribute_order)
    );
  }
}
