// Conversation log for one consultation.
//
// Turns are strictly append-only: nothing rewrites history, so the saved
// transcript can rebuild the page after a reload without repeating any
// server action.

import type { SessionMode } from "./protocol";

export type Turn =
  | { kind: "question"; featureId: string; prompt: string }
  | { kind: "answer"; featureId: string; display: string }
  | {
      kind: "card";
      recId: string;
      title: string;
      body: string;
      interactionMode: string;
    }
  | { kind: "rating"; recId: string; score: number };

export class TranscriptError extends Error {}

export class ChatTranscript {
  readonly sessionId: string;
  readonly mode: SessionMode;
  private entries: Turn[] = [];
  private ready = false;

  constructor(sessionId: string, mode: SessionMode) {
    this.sessionId = sessionId;
    this.mode = mode;
  }

  get turns(): readonly Turn[] {
    return Object.freeze([...this.entries]);
  }

  get readySignaled(): boolean {
    return this.ready;
  }

  markReady(): void {
    this.ready = true;
  }

  append(turn: Turn): void {
    if (turn.kind === "card" && !this.ready) {
      throw new TranscriptError("cards cannot appear before the ready signal");
    }
    if (turn.kind === "rating" && !this.hasCard(turn.recId)) {
      throw new TranscriptError(
        `rating refers to ${turn.recId}, which was never displayed`,
      );
    }
    this.entries.push(turn);
  }

  private hasCard(recId: string): boolean {
    return this.entries.some((t) => t.kind === "card" && t.recId === recId);
  }
}

export interface TranscriptDocument {
  session_id: string;
  mode: SessionMode;
  ready: boolean;
  turns: Turn[];
}

export function transcriptDocument(t: ChatTranscript): TranscriptDocument {
  return {
    session_id: t.sessionId,
    mode: t.mode,
    ready: t.readySignaled,
    turns: [...t.turns],
  };
}

export function restoreTranscript(doc: unknown): ChatTranscript {
  if (typeof doc !== "object" || doc === null) {
    throw new TranscriptError("saved transcript must be an object");
  }
  const rec = doc as Record<string, unknown>;
  if (typeof rec.session_id !== "string" || rec.session_id === "") {
    throw new TranscriptError("saved transcript is missing its session id");
  }
  if (rec.mode !== "identified" && rec.mode !== "anonymous") {
    throw new TranscriptError("saved transcript has an unknown mode");
  }
  if (!Array.isArray(rec.turns)) {
    throw new TranscriptError("saved transcript has no turn list");
  }
  const t = new ChatTranscript(rec.session_id, rec.mode);
  for (const turn of rec.turns) {
    if (!isTurn(turn)) {
      throw new TranscriptError("saved transcript contains a malformed turn");
    }
    // the ready flag is restored before cards so replay obeys the same
    // ordering rule as the live session
    if (turn.kind === "card" && rec.ready === true && !t.readySignaled) {
      t.markReady();
    }
    t.append(turn);
  }
  if (rec.ready === true && !t.readySignaled) {
    t.markReady();
  }
  return t;
}

function isTurn(value: unknown): value is Turn {
  if (typeof value !== "object" || value === null) return false;
  const turn = value as Record<string, unknown>;
  switch (turn.kind) {
    case "question":
      return typeof turn.featureId === "string" && typeof turn.prompt === "string";
    case "answer":
      return typeof turn.featureId === "string" && typeof turn.display === "string";
    case "card":
      return (
        typeof turn.recId === "string" &&
        typeof turn.title === "string" &&
        typeof turn.body === "string" &&
        typeof turn.interactionMode === "string"
      );
    case "rating":
      return typeof turn.recId === "string" && typeof turn.score === "number";
    default:
      return false;
  }
}
