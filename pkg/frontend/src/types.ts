/** Wire types mirroring the service's JSON API. The UI never computes
 *  statistics: every number rendered comes from one of these payloads. */

export interface RetrievedChunk {
  chunk_id: number;
  score: number;
  text: string;
}

export interface ChatResponse {
  answer: string;
  refused: boolean;
  retrieved: RetrievedChunk[];
  latency: number;
  turn_id?: string;
}

export interface ContactSummary {
  contact_id: string;
  first_seen: number;
  last_seen: number;
  message_count: number;
}

export interface TurnRecord {
  turn_id: string;
  contact: string;
  inbound_text: string;
  answer: {
    text: string;
    retrieved: [number, number][];
    refused: boolean;
    latency: number;
  };
  created_at: number;
}

export interface LatencyStats {
  count: number;
  mean: number | null;
  min: number | null;
  max: number | null;
}

export interface ReportListing {
  report_id: string;
  created_at: number;
}

export interface GradeSection {
  total: number;
  counts: Record<string, number>;
  proportions: Record<string, number>;
  perfect_or_sufficient: { count: number; share: number; percent: string };
  wrong_percent: string;
  defaults_filled?: number;
}

export interface TamRow {
  construct: string;
  mean: number;
  sd: number;
  alpha: number | null;
  alpha_undefined: boolean;
  r_with_intention: number | null;
  p_value: number | null;
  stars: string;
}

export interface RunSection {
  run_id: string;
  questions: number;
  answered: number;
  failed: number;
  refused: number;
  latency?: { mean: number; min: number; max: number };
}

export interface ReportDoc {
  report_id: string;
  created_at: number;
  run?: RunSection;
  grades?: GradeSection;
  per_expert?: Record<string, Record<string, number>>;
  tam?: TamRow[];
  tam_sample_size_note?: string;
}
