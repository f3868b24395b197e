/** Suggestion panel: one card per suggestion, border-colored by state
 * (white processing, blue pending, green applied, red failed), with
 * Apply/Undo/Regenerate gated strictly by the polled state. A 409 from a
 * race re-syncs the panel instead of erroring. */

import { ApiError, type ApiClient } from "./api.js";
import type { SessionView, SuggestionState, SuggestionView } from "./types.js";

export interface PanelCallbacks {
  onMutated(): void; // any accepted apply/undo/regenerate: refetch scene + session
  onResync(): void; // state race (409): refetch session only
}

function buttonGates(state: SuggestionState): { apply: boolean; undo: boolean; regenerate: boolean } {
  return {
    apply: state === "pending",
    undo: state === "applied",
    regenerate: state !== "processing",
  };
}

export class SuggestionPanel {
  private sessionId: string | null = null;
  private busy = false;

  constructor(
    readonly element: HTMLElement,
    private readonly api: ApiClient,
    private readonly callbacks: PanelCallbacks,
  ) {}

  setSession(sessionId: string): void {
    this.sessionId = sessionId;
    this.element.textContent = "";
  }

  render(view: SessionView): void {
    this.sessionId = view.session_id;
    this.element.textContent = "";
    if (view.entries.length === 0) {
      const empty = document.createElement("p");
      empty.className = "empty-note";
      empty.textContent = view.diagnostics.length
        ? `No suggestions: ${view.diagnostics[0]}`
        : "No suggestions for this instruction.";
      this.element.appendChild(empty);
      return;
    }
    for (const entry of view.entries) {
      this.element.appendChild(this.card(entry));
    }
  }

  private card(entry: SuggestionView): HTMLElement {
    const card = document.createElement("div");
    card.className = `suggestion state-${entry.state}`;
    card.dataset.suggestionId = entry.suggestion_id;
    card.dataset.state = entry.state;

    const text = document.createElement("p");
    text.className = "suggestion-text";
    text.textContent = entry.text;
    card.appendChild(text);

    const meta = document.createElement("span");
    meta.className = "suggestion-meta";
    meta.textContent = `${entry.state} · generation ${entry.generation}`;
    card.appendChild(meta);

    if (entry.diagnostics.length) {
      const diag = document.createElement("p");
      diag.className = "suggestion-diagnostics";
      diag.textContent = entry.diagnostics[entry.diagnostics.length - 1];
      card.appendChild(diag);
    }

    const gates = buttonGates(entry.state);
    const row = document.createElement("div");
    row.className = "suggestion-buttons";
    row.appendChild(this.actionButton("Apply", gates.apply, () =>
      this.api.applySuggestion(this.sessionId!, entry.suggestion_id),
    ));
    row.appendChild(this.actionButton("Undo", gates.undo, () =>
      this.api.undoSuggestion(this.sessionId!, entry.suggestion_id),
    ));
    row.appendChild(this.actionButton("Regenerate", gates.regenerate, () =>
      this.api.regenerateSuggestion(this.sessionId!, entry.suggestion_id),
    ));
    card.appendChild(row);
    return card;
  }

  private actionButton(label: string, enabled: boolean, call: () => Promise<void>): HTMLButtonElement {
    const button = document.createElement("button");
    button.textContent = label;
    button.disabled = !enabled || this.busy;
    button.addEventListener("click", () => void this.run(call));
    return button;
  }

  private async run(call: () => Promise<void>): Promise<void> {
    if (this.busy || !this.sessionId) return;
    this.busy = true;
    this.setButtonsDisabled(true);
    try {
      await call();
      this.callbacks.onMutated();
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.callbacks.onResync(); // the poll was stale; fresh state fixes the buttons
      } else {
        this.callbacks.onResync();
      }
    } finally {
      this.busy = false;
    }
  }

  private setButtonsDisabled(disabled: boolean): void {
    for (const button of this.element.querySelectorAll("button")) {
      (button as HTMLButtonElement).disabled = disabled;
    }
  }
}
