// Exactly-once triage semantics for the candidate queue.
//
// A decision for a candidate goes over the wire at most once: while a
// request is in flight, or after a final answer (2xx or 409), further
// activations are swallowed locally. Background polling merges through
// `mergeCandidates`, which never overwrites a locally settled candidate.

import { ApiError } from "./api.js";
import type { PaCandidate } from "./types.js";

export type Decision = "confirm" | "reject";

export interface TriageOutcome {
  kind: "applied" | "duplicate" | "already_decided" | "failed";
  candidate: PaCandidate | null;
  error?: string;
}

interface TriageApi {
  confirm(candidateId: string): Promise<PaCandidate>;
  reject(candidateId: string): Promise<PaCandidate>;
}

export class TriageController {
  private readonly inFlight = new Set<string>();
  private readonly settled = new Map<string, PaCandidate | null>();

  constructor(private readonly api: TriageApi) {}

  isBlocked(candidateId: string): boolean {
    return this.inFlight.has(candidateId) || this.settled.has(candidateId);
  }

  settledCandidate(candidateId: string): PaCandidate | null {
    return this.settled.get(candidateId) ?? null;
  }

  async decide(candidateId: string, decision: Decision): Promise<TriageOutcome> {
    if (this.isBlocked(candidateId)) {
      return { kind: "duplicate", candidate: this.settledCandidate(candidateId) };
    }
    this.inFlight.add(candidateId);
    try {
      const candidate =
        decision === "confirm"
          ? await this.api.confirm(candidateId)
          : await this.api.reject(candidateId);
      this.settled.set(candidateId, candidate);
      return { kind: "applied", candidate };
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        // someone (or an earlier click) already decided it: final state
        this.settled.set(candidateId, null);
        return { kind: "already_decided", candidate: null, error: error.message };
      }
      return {
        kind: "failed",
        candidate: null,
        error: error instanceof Error ? error.message : String(error),
      };
    } finally {
      this.inFlight.delete(candidateId);
    }
  }
}

/** Merge a freshly polled candidate list with locally settled decisions. */
export function mergeCandidates(
  polled: PaCandidate[],
  controller: TriageController,
): PaCandidate[] {
  return polled.map((candidate) => controller.settledCandidate(candidate.id) ?? candidate);
}

/** Pending first, by score descending; id breaks ties for a stable queue. */
export function sortQueue(candidates: PaCandidate[]): PaCandidate[] {
  return [...candidates].sort((a, b) => {
    const pa = a.status === "pending" ? 0 : 1;
    const pb = b.status === "pending" ? 0 : 1;
    if (pa !== pb) return pa - pb;
    if (a.score !== b.score) return b.score - a.score;
    return a.id < b.id ? -1 : a.id > b.id ? 1 : 0;
  });
}
