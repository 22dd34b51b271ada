// Chat workspace: message thread, expandable source citations, pending
// indicator, and a countdown showing how long the current conversation
// stays inside the service's 60-minute history window.

import { ApiClient, ApiError, SourceRef } from "./api.js";

export const SESSION_WINDOW_MS = 3600 * 1000;

export interface Identity {
  userId: string;
  department: string;
  jobTitle: string;
}

interface Turn {
  role: "user" | "assistant";
  text: string;
  sources: SourceRef[];
  sentAt: number;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function formatCountdown(remainingMs: number): string {
  const total = Math.max(0, Math.floor(remainingMs / 1000));
  const minutes = Math.floor(total / 60);
  const seconds = total % 60;
  return `${minutes}:${String(seconds).padStart(2, "0")}`;
}

export class ChatView {
  private readonly thread: HTMLElement;
  private readonly input: HTMLTextAreaElement;
  private readonly sendButton: HTMLButtonElement;
  private readonly banner: HTMLElement;
  private readonly countdown: HTMLElement;
  private readonly pendingIndicator: HTMLElement;

  private turns: Turn[] = [];
  private pending = false;
  private countdownTimer: ReturnType<typeof setInterval> | null = null;

  constructor(
    root: HTMLElement,
    private readonly api: ApiClient,
    private readonly identity: Identity,
    private readonly now: () => number = () => Date.now(),
  ) {
    root.innerHTML = "";
    const header = el("div", "chat-header");
    header.appendChild(el("span", "chat-title", "Assistant"));
    this.countdown = el("span", "session-countdown");
    this.countdown.hidden = true;
    header.appendChild(this.countdown);
    root.appendChild(header);

    this.banner = el("div", "error-banner");
    this.banner.hidden = true;
    root.appendChild(this.banner);

    this.thread = el("div", "chat-thread");
    root.appendChild(this.thread);

    this.pendingIndicator = el("div", "pending-indicator", "Thinking...");
    this.pendingIndicator.hidden = true;
    root.appendChild(this.pendingIndicator);

    const inputRow = el("div", "input-row");
    this.input = el("textarea", "chat-input") as HTMLTextAreaElement;
    this.input.placeholder = "Ask about documents, work items or code...";
    this.input.rows = 2;
    this.sendButton = el("button", "send-button", "Send") as HTMLButtonElement;
    this.sendButton.disabled = true;
    inputRow.appendChild(this.input);
    inputRow.appendChild(this.sendButton);
    root.appendChild(inputRow);

    this.input.addEventListener("input", () => this.refreshSendState());
    this.input.addEventListener("keydown", (event) => {
      if (event.key === "Enter" && !event.shiftKey) {
        event.preventDefault();
        if (!this.sendButton.disabled) void this.send();
      }
    });
    this.sendButton.addEventListener("click", () => void this.send());
  }

  get isPending(): boolean {
    return this.pending;
  }

  private refreshSendState(): void {
    this.sendButton.disabled = this.pending || !this.input.value.trim();
  }

  async send(): Promise<void> {
    const text = this.input.value.trim();
    if (!text || this.pending) return;

    // One in-flight request per tab.
    this.pending = true;
    this.pendingIndicator.hidden = false;
    this.banner.hidden = true;
    this.refreshSendState();

    this.appendTurn({ role: "user", text, sources: [], sentAt: this.now() });
    try {
      const reply = await this.api.chat(
        this.identity.userId,
        this.identity.department,
        this.identity.jobTitle,
        text,
      );
      this.input.value = "";
      this.appendTurn({
        role: "assistant",
        text: reply.response_text,
        sources: reply.sources,
        sentAt: this.now(),
      });
    } catch (error) {
      // The failed message stays in the input box for a retry.
      this.input.value = text;
      this.showError(error);
    } finally {
      this.pending = false;
      this.pendingIndicator.hidden = true;
      this.refreshSendState();
      this.updateCountdown();
    }
  }

  private showError(error: unknown): void {
    let message = "Network error; your message was kept below.";
    if (error instanceof ApiError) {
      message = `The assistant could not answer (${error.message})`;
      if (error.correlationId) message += ` — correlation id ${error.correlationId}`;
    }
    this.banner.textContent = message;
    this.banner.hidden = false;
  }

  private appendTurn(turn: Turn): void {
    this.turns.push(turn);
    const node = el("div", `turn turn-${turn.role}`);
    node.appendChild(el("div", "turn-text", turn.text));
    if (turn.role === "assistant") {
      node.appendChild(this.renderSources(turn.sources));
    }
    this.thread.appendChild(node);
    this.thread.scrollTop = this.thread.scrollHeight;
    this.startCountdown();
  }

  // Sources render 1:1 with the response's sources array: same count, same order.
  private renderSources(sources: SourceRef[]): HTMLElement {
    const wrap = el("div", "sources");
    if (!sources.length) return wrap;
    wrap.appendChild(el("div", "sources-label", `Sources (${sources.length})`));
    for (const source of sources) {
      const card = el("div", "source-card");
      const head = el("div", "source-head");
      head.appendChild(el("span", "source-title", source.doc_id));
      head.appendChild(el("span", "source-uri", source.uri));
      const detail = el(
        "div",
        "source-detail",
        `span ${source.span[0]}–${source.span[1]} of ${source.uri}`,
      );
      detail.hidden = true;
      head.addEventListener("click", () => {
        detail.hidden = !detail.hidden;
        card.classList.toggle("expanded", !detail.hidden);
      });
      card.appendChild(head);
      card.appendChild(detail);
      wrap.appendChild(card);
    }
    return wrap;
  }

  // The conversation leaves the service's history window 60 minutes after
  // the latest turn; the countdown shows the time remaining.
  remainingWindowMs(): number {
    if (!this.turns.length) return 0;
    const latest = Math.max(...this.turns.map((t) => t.sentAt));
    return Math.max(0, latest + SESSION_WINDOW_MS - this.now());
  }

  updateCountdown(): void {
    const remaining = this.remainingWindowMs();
    if (!this.turns.length) {
      this.countdown.hidden = true;
      return;
    }
    this.countdown.hidden = false;
    this.countdown.textContent =
      remaining > 0 ? `session window ${formatCountdown(remaining)}` : "session expired";
  }

  private startCountdown(): void {
    this.updateCountdown();
    if (this.countdownTimer === null) {
      this.countdownTimer = setInterval(() => this.updateCountdown(), 1000);
    }
  }

  dispose(): void {
    if (this.countdownTimer !== null) clearInterval(this.countdownTimer);
    this.countdownTimer = null;
  }
}
