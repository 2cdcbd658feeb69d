/** Payload shapes of the review service API. */

export interface PairPayload {
  pair_id: string;
  text: string;
  annotated: string;
  language: string;
}

export interface NextResponse {
  session_id: string;
  judged: number;
  total: number;
  done: boolean;
  pair?: PairPayload;
}

export interface SessionInfo {
  session_id: string;
  evaluator_id: string;
  total_pairs: number;
}

export interface JudgmentAck {
  ok: boolean;
  judged: number;
  total: number;
  done: boolean;
}

export type Verdict = "acceptable" | "unacceptable" | "abstain";
