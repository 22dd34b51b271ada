// Monitoring dashboard: three usage indicator panels plus a breakdown view.
// Every displayed number is rendered verbatim from an API response; the UI
// never aggregates or recomputes. Panels fail independently.

import { ApiClient, Breakdown, DIMENSIONS, DateRange, Dimension, UsageMetrics } from "./api.js";

export const DEFAULT_POLL_INTERVAL_MS = 30_000;

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

// The one rendering rule: numbers go to the DOM as String(value) of the
// parsed API field, nothing else.
export function verbatim(value: number): string {
  return String(value);
}

interface Panel {
  root: HTMLElement;
  body: HTMLElement;
  error: HTMLElement;
}

function makePanel(title: string, className: string): Panel {
  const root = el("section", `panel ${className}`);
  root.appendChild(el("h3", "panel-title", title));
  const error = el("div", "panel-error");
  error.hidden = true;
  root.appendChild(error);
  const body = el("div", "panel-body");
  root.appendChild(body);
  return { root, body, error };
}

function setPanelError(panel: Panel, message: string): void {
  panel.error.textContent = message;
  panel.error.hidden = false;
  panel.body.innerHTML = "";
}

function clearPanelError(panel: Panel): void {
  panel.error.hidden = true;
}

export class DashboardView {
  private readonly volumePanel: Panel;
  private readonly responsePanel: Panel;
  private readonly engagementPanel: Panel;
  private readonly breakdownPanel: Panel;
  private readonly adoptersPanel: Panel;
  private readonly healthChip: HTMLElement;
  private readonly dimensionSelect: HTMLSelectElement;
  private readonly fromInput: HTMLInputElement;
  private readonly toInput: HTMLInputElement;

  private range: DateRange = {};
  private dimension: Dimension = "question_type";
  private pollTimer: ReturnType<typeof setInterval> | null = null;

  constructor(
    root: HTMLElement,
    private readonly api: ApiClient,
    private readonly pollIntervalMs: number = DEFAULT_POLL_INTERVAL_MS,
  ) {
    root.innerHTML = "";

    const controls = el("div", "dashboard-controls");
    this.fromInput = el("input", "range-from") as HTMLInputElement;
    this.fromInput.type = "datetime-local";
    this.toInput = el("input", "range-to") as HTMLInputElement;
    this.toInput.type = "datetime-local";
    this.dimensionSelect = el("select", "dimension-select") as HTMLSelectElement;
    for (const dimension of DIMENSIONS) {
      const option = document.createElement("option");
      option.value = dimension;
      option.textContent = dimension.replace("_", " ");
      this.dimensionSelect.appendChild(option);
    }
    this.dimensionSelect.value = this.dimension;
    const apply = el("button", "apply-range", "Apply");
    this.healthChip = el("span", "health-chip");
    controls.append(this.fromInput, this.toInput, apply, this.dimensionSelect, this.healthChip);
    root.appendChild(controls);

    const grid = el("div", "dashboard-grid");
    this.volumePanel = makePanel("Interaction volume", "panel-volume");
    this.responsePanel = makePanel("Response time", "panel-response");
    this.engagementPanel = makePanel("User engagement", "panel-engagement");
    this.breakdownPanel = makePanel("Volume breakdown", "panel-breakdown");
    this.adoptersPanel = makePanel("Adoption", "panel-adopters");
    grid.append(
      this.volumePanel.root,
      this.responsePanel.root,
      this.engagementPanel.root,
      this.breakdownPanel.root,
      this.adoptersPanel.root,
    );
    root.appendChild(grid);

    apply.addEventListener("click", () => {
      this.range = {
        from: this.fromInput.value ? new Date(this.fromInput.value).toISOString() : undefined,
        to: this.toInput.value ? new Date(this.toInput.value).toISOString() : undefined,
      };
      void this.refresh();
    });
    // A dimension switch re-requests only the breakdown.
    this.dimensionSelect.addEventListener("change", () => {
      this.dimension = this.dimensionSelect.value as Dimension;
      void this.refreshBreakdown();
    });
  }

  async refresh(): Promise<void> {
    await Promise.all([
      this.refreshUsage(),
      this.refreshBreakdown(),
      this.refreshAdopters(),
      this.refreshHealth(),
    ]);
  }

  private async refreshUsage(): Promise<void> {
    let usage: UsageMetrics;
    try {
      usage = await this.api.usage(this.range);
    } catch (error) {
      const message = `usage unavailable: ${String(error)}`;
      setPanelError(this.volumePanel, message);
      setPanelError(this.responsePanel, message);
      setPanelError(this.engagementPanel, message);
      return;
    }
    clearPanelError(this.volumePanel);
    clearPanelError(this.responsePanel);
    clearPanelError(this.engagementPanel);
    this.renderVolume(usage);
    this.renderResponseTime(usage);
    this.renderEngagement(usage);
  }

  private renderVolume(usage: UsageMetrics): void {
    const body = this.volumePanel.body;
    body.innerHTML = "";
    const messages = el("div", "stat");
    messages.appendChild(el("span", "stat-value metric-number", verbatim(usage.message_count)));
    messages.appendChild(el("span", "stat-label", "messages"));
    const users = el("div", "stat");
    users.appendChild(el("span", "stat-value metric-number", verbatim(usage.unique_users)));
    users.appendChild(el("span", "stat-label", "unique users"));
    body.append(messages, users);
  }

  private renderResponseTime(usage: UsageMetrics): void {
    const body = this.responsePanel.body;
    body.innerHTML = "";
    const stat = el("div", "stat");
    if (usage.avg_response_time_s === undefined) {
      stat.appendChild(el("span", "stat-value", "–"));
      stat.appendChild(el("span", "stat-label", "no traffic in range"));
    } else {
      stat.appendChild(el("span", "stat-value metric-number", verbatim(usage.avg_response_time_s)));
      stat.appendChild(el("span", "stat-label", "average seconds"));
    }
    body.appendChild(stat);
  }

  private renderEngagement(usage: UsageMetrics): void {
    const body = this.engagementPanel.body;
    body.innerHTML = "";
    if (!usage.daily_engagement.length) {
      body.appendChild(el("div", "zero-state", "no sessions in range"));
      return;
    }
    const table = el("table", "engagement-table");
    for (const day of usage.daily_engagement) {
      const row = document.createElement("tr");
      row.appendChild(el("td", "engagement-date", day.date));
      row.appendChild(el("td", "engagement-value metric-number", verbatim(day.avg_messages_per_session)));
      table.appendChild(row);
    }
    body.appendChild(table);
    body.appendChild(el("div", "stat-label", "avg messages per session, per day"));
  }

  private async refreshBreakdown(): Promise<void> {
    let breakdown: Breakdown;
    try {
      breakdown = await this.api.breakdown(this.dimension, this.range);
    } catch (error) {
      setPanelError(this.breakdownPanel, `breakdown unavailable: ${String(error)}`);
      return;
    }
    clearPanelError(this.breakdownPanel);
    const body = this.breakdownPanel.body;
    body.innerHTML = "";
    if (!breakdown.rows.length) {
      body.appendChild(el("div", "zero-state", "no interactions in range"));
      return;
    }
    const table = el("table", "breakdown-table");
    for (const row of breakdown.rows) {
      const tr = document.createElement("tr");
      tr.appendChild(el("td", "breakdown-key", row.key));
      tr.appendChild(el("td", "breakdown-count metric-number", verbatim(row.count)));
      table.appendChild(tr);
    }
    body.appendChild(table);
  }

  private async refreshAdopters(): Promise<void> {
    try {
      const { rows } = await this.api.adopters(this.range);
      clearPanelError(this.adoptersPanel);
      const body = this.adoptersPanel.body;
      body.innerHTML = "";
      if (!rows.length) {
        body.appendChild(el("div", "zero-state", "no known users"));
        return;
      }
      const table = el("table", "adopters-table");
      for (const row of rows) {
        const tr = document.createElement("tr");
        tr.appendChild(el("td", "adopter-user", row.user_id));
        tr.appendChild(el("td", "adopter-count metric-number", verbatim(row.query_count)));
        tr.appendChild(el("td", "adopter-class", row.rising ? `${row.class} (rising)` : row.class));
        table.appendChild(tr);
      }
      body.appendChild(table);
    } catch (error) {
      setPanelError(this.adoptersPanel, `adopters unavailable: ${String(error)}`);
    }
  }

  private async refreshHealth(): Promise<void> {
    try {
      const health = await this.api.health();
      this.healthChip.textContent = `service ${health.status}`;
      this.healthChip.classList.toggle("healthy", health.status === "ok");
    } catch {
      this.healthChip.textContent = "service unreachable";
      this.healthChip.classList.remove("healthy");
    }
  }

  startPolling(): void {
    if (this.pollTimer === null) {
      this.pollTimer = setInterval(() => void this.refresh(), this.pollIntervalMs);
    }
  }

  dispose(): void {
    if (this.pollTimer !== null) clearInterval(this.pollTimer);
    this.pollTimer = null;
  }
}
