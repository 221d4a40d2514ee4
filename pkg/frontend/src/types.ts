/** JSON payload shapes, mirrored from the API; the client adds nothing. */

export interface AttributeInfo {
  name: string;
  kind: string;
  null_count: number;
}

export interface ProfileData {
  name: string;
  attributes: AttributeInfo[];
  row_count: number;
  preview_rows: string[][];
  nl_description: string;
}

export interface BlockData {
  block_index: number;
  kind: "text" | "code" | "code_output" | "visualization";
  content: string;
}

export interface TurnData {
  turn_id: number;
  user_query: string;
  blocks: BlockData[];
  created_at: string;
}

export interface EvidenceRefData {
  turn_id: number;
  block_index: number;
  evidence_kind: string;
  char_range: [number, number] | null;
}

export interface ScoreData {
  s_sem: number;
  s_stat: number;
  s_final: number;
  rationale: string;
  weight_omega: number;
  user_override: number | null;
}

export interface ActionData {
  kind: string;
  detail: string;
}

export interface DataContextData {
  attributes: string[];
  actions: ActionData[];
}

export interface InsightData {
  insight_id: string;
  summary: string;
  category: string;
  source_turns: number[];
  evidence: EvidenceRefData[];
  evidence_degraded: boolean;
  score: ScoreData;
  data_context: DataContextData;
  topic_id: string | null;
  subtopic_id: string | null;
  transition: string;
  data_related: string[];
  semantic_related: [string, number][];
  created_seq: number;
}

export interface TopicData {
  topic_id: string;
  title: string;
  description: string;
  embedding: number[];
  parent: string | null;
  insight_count: number;
  color_index: number;
  provenance: string;
}

export interface HistogramEntry {
  attribute: string;
  count: number;
}

export interface SnapshotData {
  session_id: string;
  created_at: string;
  config: Record<string, unknown>;
  profile: ProfileData | null;
  turns: TurnData[];
  insights: InsightData[];
  topics: TopicData[];
  attribute_order: string[];
  counters: Record<string, number>;
  events: unknown[];
}

export interface SessionEventData {
  seq: number;
  kind: string;
  // payload shape varies by kind; views never reach into it directly
  payload: any;
}
