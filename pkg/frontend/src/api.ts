import type { JudgmentAck, NextResponse, SessionInfo, Verdict } from "./types.js";

export class ConflictError extends Error {}

/** Thin typed client for the review service. `fetchFn` is injectable so
 *  tests can run without a server. */
export class ReviewApi {
  constructor(
    private baseUrl: string = "",
    private fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  async createSession(evaluatorId: string, seed: number): Promise<SessionInfo> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/sessions`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ evaluator_id: evaluatorId, seed }),
    });
    if (!resp.ok) throw new Error(`create session failed: ${resp.status}`);
    return (await resp.json()) as SessionInfo;
  }

  async next(sessionId: string): Promise<NextResponse> {
    const resp = await this.fetchFn(
      `${this.baseUrl}/api/sessions/${sessionId}/next`,
    );
    if (!resp.ok) throw new Error(`next failed: ${resp.status}`);
    return (await resp.json()) as NextResponse;
  }

  async submit(
    sessionId: string,
    pairId: string,
    verdict: Verdict,
  ): Promise<JudgmentAck> {
    const resp = await this.fetchFn(
      `${this.baseUrl}/api/sessions/${sessionId}/judgments`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ pair_id: pairId, verdict }),
      },
    );
    if (resp.status === 409) throw new ConflictError("pair already judged");
    if (!resp.ok) throw new Error(`submit failed: ${resp.status}`);
    return (await resp.json()) as JudgmentAck;
  }
}
