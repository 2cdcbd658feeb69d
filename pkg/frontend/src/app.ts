import { ConflictError, ReviewApi } from "./api.js";
import type { NextResponse, PairPayload, Verdict } from "./types.js";

export type FlowState = "idle" | "judging" | "submitting" | "done" | "error";

export interface Tally {
  acceptable: number;
  unacceptable: number;
  abstain: number;
}

export interface FlowView {
  state: FlowState;
  pair: PairPayload | null;
  judged: number;
  total: number;
  tally: Tally;
  lastError: string | null;
}

/** Drives one evaluator session: fetch the next pair, submit a verdict,
 *  advance. A submit in flight blocks further verdicts, so a held-down or
 *  double-pressed hotkey cannot record the same pair twice. A network
 *  failure keeps the flow judging the same pair; a conflict (the pair was
 *  already judged, e.g. after a reconnect) resyncs to the server cursor.
 */
export class JudgeFlow {
  state: FlowState = "idle";
  pair: PairPayload | null = null;
  judged = 0;
  total = 0;
  tally: Tally = { acceptable: 0, unacceptable: 0, abstain: 0 };
  lastError: string | null = null;
  private sessionId = "";
  private listeners: Array<(view: FlowView) => void> = [];

  constructor(private api: ReviewApi) {}

  onChange(listener: (view: FlowView) => void): void {
    this.listeners.push(listener);
  }

  view(): FlowView {
    return {
      state: this.state,
      pair: this.pair,
      judged: this.judged,
      total: this.total,
      tally: { ...this.tally },
      lastError: this.lastError,
    };
  }

  private emit(): void {
    const snapshot = this.view();
    for (const listener of this.listeners) listener(snapshot);
  }

  async start(evaluatorId: string, seed: number): Promise<void> {
    const info = await this.api.createSession(evaluatorId, seed);
    this.sessionId = info.session_id;
    this.total = info.total_pairs;
    await this.resync();
  }

  /** Pull the authoritative cursor from the server. */
  async resync(): Promise<void> {
    const next = await this.api.next(this.sessionId);
    this.applyNext(next);
    this.emit();
  }

  private applyNext(next: NextResponse): void {
    this.judged = next.judged;
    this.total = next.total;
    if (next.done || !next.pair) {
      this.state = "done";
      this.pair = null;
    } else {
      this.state = "judging";
      this.pair = next.pair;
    }
  }

  canJudge(): boolean {
    return this.state === "judging" && this.pair !== null;
  }

  async judge(verdict: Verdict): Promise<void> {
    if (!this.canJudge() || this.pair === null) return;
    const pair = this.pair;
    this.state = "submitting";
    this.lastError = null;
    this.emit();
    try {
      const ack = await this.api.submit(this.sessionId, pair.pair_id, verdict);
      this.tally[verdict] += 1;
      this.judged = ack.judged;
      if (ack.done) {
        this.state = "done";
        this.pair = null;
        this.emit();
      } else {
        await this.resync();
      }
    } catch (err) {
      if (err instanceof ConflictError) {
        // Already recorded server-side; drop the duplicate and move on.
        await this.resync();
      } else {
        this.state = "judging";
        this.lastError = err instanceof Error ? err.message : String(err);
        this.emit();
      }
    }
  }

  summary(): string {
    const scored = this.tally.acceptable + this.tally.unacceptable;
    if (scored === 0) {
      return `Session complete: ${this.judged}/${this.total} pairs, no scored verdicts.`;
    }
    const pct = ((100 * this.tally.acceptable) / scored).toFixed(1);
    return (
      `Session complete: ${this.judged}/${this.total} pairs, ` +
      `${pct}% acceptable (${this.tally.acceptable}/${scored} scored, ` +
      `${this.tally.abstain} abstained).`
    );
  }
}
