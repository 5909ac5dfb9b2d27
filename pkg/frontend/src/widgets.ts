// Builds the chat's DOM pieces: message bubbles, one input widget per
// question kind, recommendation cards with a star control, and the
// suggestion box.

import type { Card, Question, SessionMode } from "./protocol";

export type AnswerPayload = string | number | boolean | null;

export function bubble(role: "system" | "user", text: string): HTMLElement {
  const wrapper = document.createElement("div");
  wrapper.className = `chat-message chat-message--${role}`;
  const body = document.createElement("div");
  body.className = "chat-bubble";
  body.textContent = text;
  wrapper.appendChild(body);
  return wrapper;
}

export function cardBubble(card: Card): HTMLElement {
  const wrapper = document.createElement("div");
  wrapper.className = "chat-message chat-message--system chat-message--card";
  const box = document.createElement("div");
  box.className = "chat-bubble rec-card";

  const title = document.createElement("div");
  title.className = "rec-card-title";
  title.textContent = card.title;

  const mode = document.createElement("div");
  mode.className = "rec-card-mode";
  mode.textContent = card.interaction_mode;

  const body = document.createElement("div");
  body.className = "rec-card-body";
  body.textContent = card.body;

  box.appendChild(title);
  box.appendChild(mode);
  box.appendChild(body);
  wrapper.appendChild(box);
  return wrapper;
}

// --- question input ----------------------------------------------------------

export interface QuestionWidget {
  el: HTMLElement;
  setBusy(busy: boolean): void;
  showError(message: string): void;
}

export function questionWidget(
  q: Question,
  onSubmit: (value: AnswerPayload, display: string) => void,
): QuestionWidget {
  const el = document.createElement("form");
  el.className = `question-widget question-widget--${q.kind}`;
  el.dataset.feature = q.feature_id;

  const errorLine = document.createElement("div");
  errorLine.className = "inline-error";
  errorLine.hidden = true;

  const send = document.createElement("button");
  send.type = "submit";
  send.className = "send-button";
  send.textContent = "Send";
  send.disabled = true;

  let current: { value: AnswerPayload; display: string } | null = null;
  const clearError = () => {
    errorLine.hidden = true;
    errorLine.textContent = "";
  };

  if (q.kind === "categorical") {
    const chips = document.createElement("div");
    chips.className = "chip-row";
    for (const value of q.values ?? []) {
      const chip = document.createElement("button");
      chip.type = "button";
      chip.className = "chip";
      chip.textContent = value;
      chip.addEventListener("click", () => {
        for (const other of chips.querySelectorAll(".chip")) {
          other.classList.remove("chip--selected");
        }
        chip.classList.add("chip--selected");
        current = { value, display: value };
        send.disabled = false;
        clearError();
      });
      chips.appendChild(chip);
    }
    el.appendChild(chips);
  } else if (q.kind === "boolean") {
    const row = document.createElement("div");
    row.className = "chip-row";
    for (const [label, value] of [["yes", true], ["no", false]] as const) {
      const btn = document.createElement("button");
      btn.type = "button";
      btn.className = "chip chip--bool";
      btn.textContent = label;
      btn.addEventListener("click", () => {
        for (const other of row.querySelectorAll(".chip")) {
          other.classList.remove("chip--selected");
        }
        btn.classList.add("chip--selected");
        current = { value, display: label };
        send.disabled = false;
        clearError();
      });
      row.appendChild(btn);
    }
    el.appendChild(row);
  } else {
    const input = document.createElement("input");
    input.type = "number";
    input.className = "number-input";
    if (q.min !== undefined) input.min = String(q.min);
    if (q.max !== undefined) input.max = String(q.max);
    input.addEventListener("input", () => {
      const parsed = Number(input.value);
      if (input.value.trim() === "" || Number.isNaN(parsed)) {
        current = null;
        send.disabled = true;
        clearError();
        return;
      }
      // catch range misses here so no request is ever sent for them
      if (
        (q.min !== undefined && parsed < q.min) ||
        (q.max !== undefined && parsed > q.max)
      ) {
        current = null;
        send.disabled = true;
        errorLine.textContent = `ValueOutOfRange: enter a number between ${q.min} and ${q.max}`;
        errorLine.hidden = false;
        return;
      }
      current = { value: parsed, display: input.value.trim() };
      send.disabled = false;
      clearError();
    });
    el.appendChild(input);
  }

  el.appendChild(send);

  if (q.required === false) {
    const skip = document.createElement("button");
    skip.type = "button";
    skip.className = "skip-button";
    skip.textContent = "Skip";
    skip.addEventListener("click", () => {
      onSubmit(null, "(skipped)");
    });
    el.appendChild(skip);
  }

  el.appendChild(errorLine);

  const setBusy = (busy: boolean): void => {
    for (const control of el.querySelectorAll("button, input")) {
      (control as HTMLButtonElement | HTMLInputElement).disabled =
        busy || (control === send && current === null);
    }
  };

  el.addEventListener("submit", (event) => {
    event.preventDefault();
    if (current === null) return;
    // lock the form the moment the answer leaves; the controller re-enables
    // it if the service refuses
    setBusy(true);
    onSubmit(current.value, current.display);
  });

  return {
    el,
    setBusy,
    showError(message: string): void {
      errorLine.textContent = message;
      errorLine.hidden = false;
    },
  };
}

// --- recommendation card controls ---------------------------------------------

export interface CardControls {
  el: HTMLElement;
  setBusy(busy: boolean): void;
  lockStars(score: number): void;
}

export function cardControls(
  onRate: (score: number) => void,
  onNext: () => void,
): CardControls {
  const el = document.createElement("div");
  el.className = "card-controls";

  const setBusy = (busy: boolean): void => {
    for (const control of el.querySelectorAll("button")) {
      control.disabled = busy || control.classList.contains("star--locked");
    }
  };

  const stars = document.createElement("div");
  stars.className = "star-row";
  const starButtons: HTMLButtonElement[] = [];
  for (let score = 1; score <= 5; score += 1) {
    const star = document.createElement("button");
    star.type = "button";
    star.className = "star";
    star.textContent = "☆";
    star.dataset.score = String(score);
    star.addEventListener("click", () => {
      setBusy(true);
      onRate(score);
    });
    starButtons.push(star);
    stars.appendChild(star);
  }

  const next = document.createElement("button");
  next.type = "button";
  next.className = "next-button";
  next.textContent = "Next";
  next.addEventListener("click", () => {
    setBusy(true);
    onNext();
  });

  el.appendChild(stars);
  el.appendChild(next);

  return {
    el,
    setBusy,
    lockStars(score: number): void {
      starButtons.forEach((star, index) => {
        star.textContent = index < score ? "★" : "☆";
        star.classList.add("star--locked");
        star.disabled = true;
      });
    },
  };
}

// --- suggestion box -------------------------------------------------------------

export interface SuggestionWidget {
  el: HTMLElement;
  setBusy(busy: boolean): void;
}

export function suggestionWidget(onSubmit: (text: string) => void): SuggestionWidget {
  const el = document.createElement("form");
  el.className = "suggestion-widget";

  const input = document.createElement("textarea");
  input.className = "suggestion-input";
  input.placeholder = "Suggest a practice we should add";

  const send = document.createElement("button");
  send.type = "submit";
  send.className = "send-button";
  send.textContent = "Share suggestion";
  send.disabled = true;

  const setBusy = (busy: boolean): void => {
    input.disabled = busy;
    send.disabled = busy || input.value.trim() === "";
  };

  input.addEventListener("input", () => {
    send.disabled = input.value.trim() === "";
  });
  el.addEventListener("submit", (event) => {
    event.preventDefault();
    const text = input.value.trim();
    if (text === "") return;
    setBusy(true);
    onSubmit(text);
  });

  el.appendChild(input);
  el.appendChild(send);
  return { el, setBusy };
}

// --- session setup ---------------------------------------------------------------

export function modePicker(
  onStart: (mode: SessionMode, userRef?: string) => void,
): HTMLElement {
  const el = document.createElement("form");
  el.className = "mode-picker";

  const identityRow = document.createElement("div");
  identityRow.className = "identity-row";
  const identity = document.createElement("input");
  identity.type = "text";
  identity.name = "user_ref";
  identity.className = "identity-input";
  identity.placeholder = "Name or email";
  identityRow.appendChild(identity);

  const toggleRow = document.createElement("label");
  toggleRow.className = "anonymous-toggle";
  const toggle = document.createElement("input");
  toggle.type = "checkbox";
  const toggleText = document.createElement("span");
  toggleText.textContent = "Stay anonymous";
  toggleRow.appendChild(toggle);
  toggleRow.appendChild(toggleText);

  const start = document.createElement("button");
  start.type = "submit";
  start.className = "start-button";
  start.textContent = "Start consultation";
  start.disabled = true;

  const refresh = () => {
    if (toggle.checked) {
      // anonymous sessions must not render identity fields at all
      identityRow.remove();
      start.disabled = false;
    } else {
      el.insertBefore(identityRow, toggleRow);
      start.disabled = identity.value.trim() === "";
    }
  };
  toggle.addEventListener("change", refresh);
  identity.addEventListener("input", refresh);

  el.appendChild(identityRow);
  el.appendChild(toggleRow);
  el.appendChild(start);

  el.addEventListener("submit", (event) => {
    event.preventDefault();
    if (toggle.checked) {
      start.disabled = true;
      onStart("anonymous");
    } else {
      const ref = identity.value.trim();
      if (ref === "") return;
      start.disabled = true;
      onStart("identified", ref);
    }
  });
  return el;
}
