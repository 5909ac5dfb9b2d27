// Drives the consultation chat: one question at a time, then the
// recommendation cards, then the suggestion box. Inputs are disabled while
// a request is on the wire, and every state change lands in sessionStorage
// so a reload replays the transcript without touching the service again.

import { ApiError, isExhausted, isReady, type ConsultationApi } from "./api";
import type { Card, CloseResponse, Question } from "./protocol";
import {
  ChatTranscript,
  restoreTranscript,
  transcriptDocument,
  TranscriptError,
  type Turn,
} from "./transcript";
import {
  bubble,
  cardBubble,
  cardControls,
  modePicker,
  questionWidget,
  suggestionWidget,
  type AnswerPayload,
  type CardControls,
  type QuestionWidget,
  type SuggestionWidget,
} from "./widgets";

export const STORAGE_KEY = "teachrec.chat.v1";

type Phase = "asking" | "recommending" | "closing" | "done";

interface ViewState {
  phase: Phase;
  pendingQuestion: Question | null;
  currentCard: Card | null;
  currentCardRated: boolean;
  readyCount: number | null;
  suggestionDone: boolean;
  summary: CloseResponse | null;
}

function freshView(): ViewState {
  return {
    phase: "asking",
    pendingQuestion: null,
    currentCard: null,
    currentCardRated: false,
    readyCount: null,
    suggestionDone: false,
    summary: null,
  };
}

export class ChatApp {
  private readonly root: HTMLElement;
  private readonly client: ConsultationApi;
  private readonly storage: Storage;
  private transcript: ChatTranscript | null = null;
  private view: ViewState = freshView();
  private log!: HTMLElement;
  private dock!: HTMLElement;
  private pending: Promise<void> = Promise.resolve();

  constructor(root: HTMLElement, client: ConsultationApi, storage?: Storage) {
    this.root = root;
    this.client = client;
    this.storage = storage ?? window.sessionStorage;
  }

  /** Resolves once every operation started so far has settled. */
  idle(): Promise<void> {
    return this.pending;
  }

  boot(): void {
    this.root.textContent = "";
    this.log = document.createElement("div");
    this.log.className = "chat-log";
    this.dock = document.createElement("div");
    this.dock.className = "input-dock";
    this.root.appendChild(this.log);
    this.root.appendChild(this.dock);
    this.say("Tell me about your course and I will suggest teaching practices.");

    const saved = this.loadSaved();
    if (saved === null) {
      this.renderSetup();
    } else {
      this.transcript = saved.transcript;
      this.view = saved.view;
      this.replay();
    }
  }

  // --- persistence ------------------------------------------------------------

  private save(): void {
    if (this.transcript === null) return;
    this.storage.setItem(
      STORAGE_KEY,
      JSON.stringify({
        transcript: transcriptDocument(this.transcript),
        view: this.view,
      }),
    );
  }

  private loadSaved(): { transcript: ChatTranscript; view: ViewState } | null {
    const raw = this.storage.getItem(STORAGE_KEY);
    if (raw === null) return null;
    try {
      const doc = JSON.parse(raw) as { transcript: unknown; view: ViewState };
      return { transcript: restoreTranscript(doc.transcript), view: doc.view };
    } catch (err) {
      if (err instanceof TranscriptError || err instanceof SyntaxError) {
        this.storage.removeItem(STORAGE_KEY);
        return null;
      }
      throw err;
    }
  }

  // --- rendering --------------------------------------------------------------

  private renderSetup(): void {
    const picker = modePicker((mode, userRef) => {
      this.run(async () => {
        try {
          const started = await this.client.startSession(mode, userRef);
          this.transcript = new ChatTranscript(started.session_id, mode);
          this.showQuestion(started.question);
          this.save();
        } catch (err) {
          const start = picker.querySelector<HTMLButtonElement>(".start-button");
          if (start !== null) start.disabled = false;
          throw err;
        }
      });
    });
    this.setDock(picker);
  }

  private replay(): void {
    let readyShown = false;
    for (const turn of this.transcript?.turns ?? []) {
      if (turn.kind === "card" && !readyShown) {
        this.sayReady();
        readyShown = true;
      }
      this.renderTurn(turn);
    }
    if (!readyShown && this.view.readyCount !== null) {
      this.sayReady();
    }
    if (this.view.suggestionDone) {
      this.say("Thanks, your suggestion is in the review queue.");
    }
    switch (this.view.phase) {
      case "asking":
        if (this.view.pendingQuestion !== null) {
          this.showQuestion(this.view.pendingQuestion, { replayed: true });
        }
        break;
      case "recommending":
        this.showCardControls(this.view.currentCardRated);
        break;
      case "closing":
        this.showClosing({ replayed: true });
        break;
      case "done":
        this.showSummary();
        break;
    }
  }

  private renderTurn(turn: Turn): void {
    switch (turn.kind) {
      case "question":
        this.log.appendChild(bubble("system", turn.prompt));
        break;
      case "answer":
        this.log.appendChild(bubble("user", turn.display));
        break;
      case "card":
        this.log.appendChild(
          cardBubble({
            rec_id: turn.recId,
            title: turn.title,
            body: turn.body,
            interaction_mode: turn.interactionMode,
          }),
        );
        break;
      case "rating":
        this.log.appendChild(bubble("user", `Rated ${turn.score}/5`));
        break;
    }
  }

  private say(text: string): void {
    this.log.appendChild(bubble("system", text));
  }

  private sayReady(): void {
    const count = this.view.readyCount ?? 0;
    const noun = count === 1 ? "practice" : "practices";
    this.say(`I found ${count} ${noun} for your course. Here they come, one at a time.`);
  }

  private setDock(el: HTMLElement): void {
    this.dock.textContent = "";
    this.dock.appendChild(el);
  }

  private dockError(message: string): void {
    const line = document.createElement("div");
    line.className = "inline-error";
    line.textContent = message;
    this.dock.appendChild(line);
  }

  // --- question phase -----------------------------------------------------------

  private showQuestion(q: Question, opts?: { replayed: boolean }): void {
    if (opts?.replayed !== true) {
      this.transcript?.append({
        kind: "question",
        featureId: q.feature_id,
        prompt: q.prompt,
      });
      this.renderTurn({ kind: "question", featureId: q.feature_id, prompt: q.prompt });
      this.view.pendingQuestion = q;
    }
    const widget = questionWidget(q, (value, display) => {
      this.submitAnswer(widget, q, value, display);
    });
    this.setDock(widget.el);
  }

  private submitAnswer(
    widget: QuestionWidget,
    q: Question,
    value: AnswerPayload,
    display: string,
  ): void {
    this.run(async () => {
      const transcript = this.mustTranscript();
      try {
        const res = await this.client.submitAnswer(
          transcript.sessionId,
          q.feature_id,
          value,
        );
        transcript.append({ kind: "answer", featureId: q.feature_id, display });
        this.renderTurn({ kind: "answer", featureId: q.feature_id, display });
        if (isReady(res)) {
          transcript.markReady();
          this.view.pendingQuestion = null;
          this.view.readyCount = res.count;
          this.view.phase = "recommending";
          this.sayReady();
          this.save();
          await this.advanceCard();
        } else {
          this.showQuestion(res.question);
          this.save();
        }
      } catch (err) {
        widget.setBusy(false);
        if (err instanceof ApiError) {
          // keep the widget and the transcript; just surface the refusal
          widget.showError(err.message);
          return;
        }
        throw err;
      }
    });
  }

  // --- recommendation phase -------------------------------------------------------

  private async advanceCard(): Promise<void> {
    const transcript = this.mustTranscript();
    const res = await this.client.nextCard(transcript.sessionId);
    if (isExhausted(res)) {
      this.view.currentCard = null;
      this.view.currentCardRated = false;
      this.view.phase = "closing";
      this.showClosing();
      this.save();
      return;
    }
    const card = res.card;
    transcript.append({
      kind: "card",
      recId: card.rec_id,
      title: card.title,
      body: card.body,
      interactionMode: card.interaction_mode,
    });
    this.renderTurn({
      kind: "card",
      recId: card.rec_id,
      title: card.title,
      body: card.body,
      interactionMode: card.interaction_mode,
    });
    this.view.currentCard = card;
    this.view.currentCardRated = false;
    this.showCardControls(false);
    this.save();
  }

  private showCardControls(alreadyRated: boolean): void {
    const controls: CardControls = cardControls(
      (score) => {
        this.run(async () => {
          const transcript = this.mustTranscript();
          const card = this.view.currentCard;
          if (card === null || this.view.currentCardRated) {
            controls.setBusy(false);
            return;
          }
          try {
            await this.client.rate(transcript.sessionId, card.rec_id, score);
          } catch (err) {
            controls.setBusy(false);
            if (err instanceof ApiError) {
              this.dockError(err.message);
              return;
            }
            throw err;
          }
          transcript.append({ kind: "rating", recId: card.rec_id, score });
          this.renderTurn({ kind: "rating", recId: card.rec_id, score });
          this.view.currentCardRated = true;
          controls.setBusy(false);
          controls.lockStars(score);
          this.save();
        });
      },
      () => {
        this.run(async () => {
          try {
            await this.advanceCard();
          } catch (err) {
            controls.setBusy(false);
            throw err;
          }
        });
      },
    );
    if (alreadyRated) {
      const last = [...this.mustTranscript().turns]
        .reverse()
        .find((t): t is Turn & { kind: "rating" } => t.kind === "rating");
      if (last !== undefined) controls.lockStars(last.score);
    }
    this.setDock(controls.el);
  }

  // --- closing phase ---------------------------------------------------------------

  private showClosing(opts?: { replayed: boolean }): void {
    if (opts?.replayed !== true) {
      this.say(
        "That is everything I have for this course. Know a practice that belongs here? Share it below.",
      );
    }
    const wrap = document.createElement("div");
    wrap.className = "closing-dock";

    const suggestion: SuggestionWidget = suggestionWidget((text) => {
      this.run(async () => {
        const transcript = this.mustTranscript();
        try {
          await this.client.suggest(transcript.sessionId, text);
        } catch (err) {
          suggestion.setBusy(false);
          if (err instanceof ApiError) {
            this.dockError(err.message);
            return;
          }
          throw err;
        }
        this.view.suggestionDone = true;
        this.say("Thanks, your suggestion is in the review queue.");
        suggestion.el.remove();
        this.save();
      });
    });

    const finish = document.createElement("button");
    finish.type = "button";
    finish.className = "finish-button";
    finish.textContent = "End consultation";
    finish.addEventListener("click", () => {
      this.run(async () => {
        const transcript = this.mustTranscript();
        finish.disabled = true;
        try {
          const summary = await this.client.close(transcript.sessionId);
          this.view.summary = summary;
          this.view.phase = "done";
          this.showSummary();
          this.save();
        } catch (err) {
          finish.disabled = false;
          throw err;
        }
      });
    });

    if (!this.view.suggestionDone) wrap.appendChild(suggestion.el);
    wrap.appendChild(finish);
    this.setDock(wrap);
  }

  private showSummary(): void {
    const summary = this.view.summary;
    if (summary !== null) {
      this.say(
        `Consultation closed: ${summary.presented} practices shown, ${summary.rated} rated.`,
      );
    }
    const again = document.createElement("button");
    again.type = "button";
    again.className = "restart-button";
    again.textContent = "Start a new consultation";
    again.addEventListener("click", () => {
      this.storage.removeItem(STORAGE_KEY);
      this.transcript = null;
      this.view = freshView();
      this.boot();
    });
    this.setDock(again);
  }

  // --- plumbing ----------------------------------------------------------------------

  private mustTranscript(): ChatTranscript {
    if (this.transcript === null) {
      throw new Error("no active session");
    }
    return this.transcript;
  }

  private run(op: () => Promise<void>): void {
    const chained = this.pending.then(op, op);
    this.pending = chained.catch((err) => {
      this.dockError(
        err instanceof Error ? err.message : "the service could not be reached",
      );
    });
  }
}
