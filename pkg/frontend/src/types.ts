/** Wire types mirrored from the annotation service's JSON payloads. */

export type SessionStatus = "training" | "awaiting_labels" | "finished";

export interface SessionDoc {
  session_id: string;
  status: SessionStatus;
  round: number;
  labeled_count: number;
  budget_remaining: number;
  pending_count: number;
}

export interface QueryItemDoc {
  id: number;
  width: number;
  height: number;
  /** base64 of 8-bit grayscale bytes, row-major */
  pixels: string;
  classes: string[];
}

export interface RoundDoc {
  round: number;
  labeled_count: number;
  accuracy: number;
  ece: number;
  nll: number;
  brier: number;
  wall_ms: number;
  strategy: string;
  trial_seed: number;
}

export interface LabelAck {
  ok: boolean;
  id: number;
  label: number;
}

/** One queued image plus the annotator's local progress on it. */
export interface UiQueryItem {
  doc: QueryItemDoc;
  chosen: number | null;
  /** inline error from the last failed post, cleared on retry */
  error: string | null;
}
