// Wire types for the /v1 consultation protocol.

// null is the explicit decline for non-required questions
export type AnswerValue = string | number | boolean | null;

export interface Question {
  feature_id: string;
  prompt: string;
  kind: "categorical" | "numeric" | "boolean";
  required: boolean;
  values?: string[];
  min?: number;
  max?: number;
}

export interface Card {
  rec_id: string;
  title: string;
  body: string;
  interaction_mode: string;
}

export interface StartResponse {
  session_id: string;
  question: Question;
}

export type AnswerResponse =
  | { question: Question }
  | { ready: true; count: number };

export type NextResponse = { card: Card } | { exhausted: true };

export interface SuggestionResponse {
  suggestion_id: string;
}

export interface CloseResponse {
  presented: number;
  rated: number;
}

export interface HealthResponse {
  status: string;
  bank_counts: Record<string, number>;
}

export interface ErrorBody {
  error_code: string;
  message: string;
}

export type SessionMode = "identified" | "anonymous";
