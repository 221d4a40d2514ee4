/** Hand-built session data mirroring the API's serialized field names. */

import type {
  InsightData,
  ProfileData,
  SessionEventData,
  SnapshotData,
  TopicData,
  TurnData,
} from "../src/types";

export const PROFILE: ProfileData = {
  name: "cars",
  attributes: [
    { name: "MPG", kind: "numeric", null_count: 0 },
    { name: "Horsepower", kind: "numeric", null_count: 1 },
    { name: "Origin", kind: "categorical", null_count: 0 },
  ],
  row_count: 24,
  preview_rows: [["18.0", "130", "USA"]],
  nl_description: "24 rows of car measurements.",
};

export const ATTRIBUTE_ORDER = ["MPG", "Horsepower", "Origin"];

export const TURN_ONE_TEXT = "Average MPG rises steadily across model years.";

export const CHART_SPEC = JSON.stringify({
  data: [
    { hp: 90, mpg: 30.1 },
    { hp: 130, mpg: 22.4 },
    { hp: 190, mpg: 14.8 },
  ],
  encoding: { x: "hp", y: "mpg" },
  mark: "point",
  title: "MPG vs Horsepower",
});

export const TURNS: TurnData[] = [
  {
    turn_id: 1,
    user_query: "How does MPG change over time?",
    blocks: [
      { block_index: 0, kind: "text", content: TURN_ONE_TEXT },
      { block_index: 1, kind: "code", content: "df.groupby('year')['MPG'].mean()" },
      { block_index: 2, kind: "code_output", content: "year\n70    17.7\n82    31.0" },
      { block_index: 3, kind: "visualization", content: CHART_SPEC },
    ],
    created_at: "2024-01-01T00:00:05Z",
  },
  {
    turn_id: 2,
    user_query: "Split by origin?",
    blocks: [{ block_index: 0, kind: "text", content: "Origin splits MPG into three bands." }],
    created_at: "2024-01-01T00:00:09Z",
  },
];

function insight(overrides: Partial<InsightData> & { insight_id: string }): InsightData {
  return {
    summary: "",
    category: "trend",
    source_turns: [1],
    evidence: [],
    evidence_degraded: false,
    score: {
      s_sem: 3,
      s_stat: 3,
      s_final: 3,
      rationale: "clear pattern",
      weight_omega: 0.6,
      user_override: null,
    },
    data_context: { attributes: ["MPG"], actions: [{ kind: "aggregate", detail: "mean" }] },
    topic_id: "t1",
    subtopic_id: null,
    transition: "initial",
    data_related: [],
    semantic_related: [],
    created_seq: 6,
    ...overrides,
  };
}

export const INSIGHTS: InsightData[] = [
  insight({
    insight_id: "a1",
    summary: "MPG rises steadily over model years.",
    evidence: [
      { turn_id: 1, block_index: 0, evidence_kind: "nl_explanation", char_range: [8, 26] },
      { turn_id: 1, block_index: 1, evidence_kind: "code", char_range: null },
    ],
    score: {
      s_sem: 4,
      s_stat: 3,
      s_final: 4,
      rationale: "strong trend",
      weight_omega: 0.6,
      user_override: null,
    },
    subtopic_id: "t1s",
    data_related: ["a2"],
    semantic_related: [["a2", 0.81]],
    created_seq: 6,
  }),
  insight({
    insight_id: "a2",
    summary: "Horsepower trades off against MPG.",
    category: "correlation",
    evidence: [
      { turn_id: 1, block_index: 2, evidence_kind: "code_output", char_range: null },
      { turn_id: 1, block_index: 3, evidence_kind: "visualization", char_range: null },
    ],
    data_context: {
      attributes: ["Horsepower", "MPG"],
      actions: [{ kind: "correlate", detail: "pearson" }],
    },
    transition: "continue",
    data_related: ["a1"],
    semantic_related: [["a1", 0.81]],
    created_seq: 7,
  }),
  insight({
    insight_id: "a3",
    summary: "Origin splits MPG into distinct bands.",
    category: "comparison",
    source_turns: [2],
    evidence: [{ turn_id: 2, block_index: 0, evidence_kind: "nl_explanation", char_range: [0, 17] }],
    score: {
      s_sem: 2,
      s_stat: 2,
      s_final: 2,
      rationale: "expected split",
      weight_omega: 0.6,
      user_override: null,
    },
    data_context: { attributes: ["Origin"], actions: [{ kind: "group", detail: "by origin" }] },
    topic_id: "t2",
    transition: "shift",
    created_seq: 11,
  }),
];

export const TOPICS: TopicData[] = [
  {
    topic_id: "t1",
    title: "Efficiency Trends",
    description: "How fuel efficiency moves over time.",
    embedding: [1, 0, 0],
    parent: null,
    insight_count: 2,
    color_index: 0,
    provenance: "generated",
  },
  {
    topic_id: "t1s",
    title: "Yearly Change",
    description: "Per-year efficiency movement.",
    embedding: [0.9, 0.1, 0],
    parent: "t1",
    insight_count: 1,
    color_index: 0,
    provenance: "generated",
  },
  {
    topic_id: "t2",
    title: "Regional Contrast",
    description: "Differences between origins.",
    embedding: [0, 1, 0],
    parent: null,
    insight_count: 1,
    color_index: 1,
    provenance: "generated",
  },
];

function eventStubs(count: number): SessionEventData[] {
  return Array.from({ length: count }, (_, seq) => ({ seq, kind: "stub", payload: null }));
}

/** Snapshot before any turns ran: dataset only. */
export function emptySnapshot(): SnapshotData {
  return {
    session_id: "fake01",
    created_at: "2024-01-01T00:00:00Z",
    config: {},
    profile: structuredClone(PROFILE),
    turns: [],
    insights: [],
    topics: [],
    attribute_order: [...ATTRIBUTE_ORDER],
    counters: {},
    events: eventStubs(2),
  };
}

/** Snapshot with both turns analysed. */
export function fullSnapshot(): SnapshotData {
  return {
    ...emptySnapshot(),
    turns: structuredClone(TURNS),
    insights: structuredClone(INSIGHTS),
    topics: structuredClone(TOPICS),
    events: eventStubs(2 + liveEvents().length),
  };
}

/** The live event feed that folds the empty snapshot into the full one. */
export function liveEvents(): SessionEventData[] {
  const events: Omit<SessionEventData, "seq">[] = [];
  for (const turn of TURNS) {
    events.push({ kind: "turn_started", payload: { turn_id: turn.turn_id, user_query: turn.user_query } });
    for (const block of turn.blocks) {
      if (block.kind === "text") {
        events.push({ kind: "block_delta", payload: { turn_id: turn.turn_id, text: block.content } });
      }
      events.push({ kind: "block_complete", payload: { turn_id: turn.turn_id, block } });
    }
    events.push({ kind: "turn_complete", payload: { turn_id: turn.turn_id } });
    for (const ins of INSIGHTS.filter((i) => i.source_turns.includes(turn.turn_id))) {
      events.push({ kind: "insight_added", payload: { insight: ins } });
    }
    for (const topic of TOPICS) {
      if (turn.turn_id === (topic.topic_id === "t2" ? 2 : 1)) {
        events.push({
          kind: "topic_added",
          payload: { topic, max_sibling_similarity: 0.1 },
        });
      }
    }
  }
  return events.map((event, i) => ({ seq: 2 + i, ...event }));
}
