/**
 * Manager dashboard: live ranking, threshold steering, anomaly review.
 *
 * Polls /ranking (2 s by default; the ranking is a slowly evolving
 * aggregate). Threshold writes go through PUT /admin/thresholds and take
 * effect on the next snapshot, so a change is visible within one poll.
 * The admin token is asked for at runtime and kept in memory only.
 */

import { ApiClient, RankingRow, ThresholdSettings } from "./api.js";

const POLL_MS = 2000;
const FRACTION_MIN = 0.1;
const FRACTION_MAX = 0.2;

export class DashboardView {
  private root!: HTMLElement;
  private tokenForm!: HTMLFormElement;
  private panel!: HTMLElement;
  private tbody!: HTMLElement;
  private anomaliesEl!: HTMLElement;
  private fractionError!: HTMLElement;
  private token: string | null = null;
  private pollTimer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private api: ApiClient,
    private pollMs: number = POLL_MS,
  ) {}

  mount(root: HTMLElement): void {
    this.root = root;
    root.innerHTML = `
      <form class="token-form">
        <label>Admin token <input type="password" name="token" autocomplete="off"></label>
        <button type="submit">Unlock</button>
        <span class="token-error" hidden>Bad token.</span>
      </form>
      <div class="panel" hidden>
        <section class="controls">
          <label>approval bar (&alpha;&#773;)
            <input type="range" name="alpha_bar" min="0" max="1" step="0.01" value="0.5">
            <output name="alpha_bar_out">0.50</output>
          </label>
          <label>engagement bar (&gamma;&#773;)
            <input type="range" name="gamma_bar" min="0" max="1" step="0.01" value="0.5">
            <output name="gamma_bar_out">0.50</output>
          </label>
          <label>sampling fraction
            <input type="number" name="fraction" min="0.10" max="0.20" step="0.01" value="0.15">
            <span class="fraction-error" hidden>Must be between 0.10 and 0.20.</span>
          </label>
          <label>per-proposal bars
            <input type="checkbox" name="dynamic">
          </label>
        </section>
        <table class="ranking">
          <thead>
            <tr><th>#</th><th>proposal</th><th>&alpha;</th><th>&gamma;</th><th>&eta;</th>
            <th>stderr</th><th>verdict</th><th>flags</th></tr>
          </thead>
          <tbody></tbody>
        </table>
        <section class="anomalies">
          <h2>Anomaly flags</h2>
          <ul></ul>
        </section>
      </div>
    `;
    this.tokenForm = root.querySelector(".token-form") as HTMLFormElement;
    this.panel = root.querySelector(".panel") as HTMLElement;
    this.tbody = root.querySelector("tbody") as HTMLElement;
    this.anomaliesEl = root.querySelector(".anomalies ul") as HTMLElement;
    this.fractionError = root.querySelector(".fraction-error") as HTMLElement;

    this.tokenForm.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.unlock();
    });
    for (const name of ["alpha_bar", "gamma_bar"]) {
      const slider = this.input(name);
      slider.addEventListener("input", () => {
        this.output(`${name}_out`).value = Number(slider.value).toFixed(2);
      });
      slider.addEventListener("change", () => {
        void this.pushThresholds({ [name]: Number(slider.value) });
      });
    }
    this.input("fraction").addEventListener("change", () => void this.changeFraction());
    this.input("dynamic").addEventListener("change", () => {
      void this.pushThresholds({ dynamic: this.input("dynamic").checked });
    });
  }

  private input(name: string): HTMLInputElement {
    return this.root.querySelector(`[name="${name}"]`) as HTMLInputElement;
  }

  private output(name: string): HTMLOutputElement {
    return this.root.querySelector(`[name="${name}"]`) as HTMLOutputElement;
  }

  private async unlock(): Promise<void> {
    const candidate = (this.tokenForm.elements.namedItem("token") as HTMLInputElement).value;
    const errorEl = this.root.querySelector(".token-error") as HTMLElement;
    try {
      const settings = await this.api.getThresholds(candidate);
      this.token = candidate;
      errorEl.hidden = true;
      this.tokenForm.hidden = true;
      this.panel.hidden = false;
      this.applySettings(settings);
      await this.poll();
      this.startPolling();
    } catch {
      this.token = null;
      errorEl.hidden = false;
    }
  }

  private applySettings(settings: ThresholdSettings): void {
    this.input("alpha_bar").value = String(settings.alpha_bar);
    this.output("alpha_bar_out").value = settings.alpha_bar.toFixed(2);
    this.input("gamma_bar").value = String(settings.gamma_bar);
    this.output("gamma_bar_out").value = settings.gamma_bar.toFixed(2);
    if (settings.fraction !== null) this.input("fraction").value = String(settings.fraction);
    this.input("dynamic").checked = settings.dynamic;
  }

  /** Client-side range check: out-of-range fractions are never sent. */
  private async changeFraction(): Promise<void> {
    const field = this.input("fraction");
    const value = Number(field.value);
    if (!Number.isFinite(value) || value < FRACTION_MIN || value > FRACTION_MAX) {
      this.fractionError.hidden = false;
      return;
    }
    this.fractionError.hidden = true;
    await this.pushThresholds({ fraction: value });
  }

  private async pushThresholds(changes: Record<string, unknown>): Promise<void> {
    if (this.token === null) return;
    try {
      this.applySettings(await this.api.putThresholds(this.token, changes));
      await this.poll();
    } catch {
      // leave the last good state; the next poll re-syncs
    }
  }

  startPolling(): void {
    if (this.pollTimer !== null) return;
    this.pollTimer = setInterval(() => void this.poll(), this.pollMs);
  }

  stopPolling(): void {
    if (this.pollTimer !== null) {
      clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
  }

  async poll(): Promise<void> {
    try {
      const rows = await this.api.fetchRanking();
      this.renderRanking(rows);
      if (this.token !== null) {
        this.renderAnomalies(await this.api.getAnomalies(this.token));
      }
    } catch {
      // transient fetch trouble: keep showing the previous snapshot
    }
  }

  private renderRanking(rows: RankingRow[]): void {
    const doc = this.root.ownerDocument;
    this.tbody.innerHTML = "";
    rows.forEach((row, index) => {
      const tr = doc.createElement("tr");
      tr.dataset.proposalId = row.proposal_id;
      if (row.prioritized) tr.classList.add("prioritized");
      const fmt = (x: number | null) => (x === null ? "-" : x.toFixed(3));
      const flags = [
        row.sampled ? "sampled" : "",
        row.relevant ? "relevant" : "",
        row.prioritized ? "prioritized" : "",
      ].filter(Boolean).join(" ");
      tr.innerHTML = `
        <td>${index + 1}</td>
        <td class="pid">${row.proposal_id}</td>
        <td class="alpha">${fmt(row.alpha)}</td>
        <td class="gamma">${fmt(row.gamma)}</td>
        <td class="eta">${row.eta}</td>
        <td class="stderr">${fmt(row.stderr_alpha)}</td>
        <td><span class="badge badge-${row.verdict}">${row.verdict}</span></td>
        <td class="flags">${flags}</td>
      `;
      this.tbody.appendChild(tr);
    });
  }

  private renderAnomalies(flags: { ip: string; rule: string; observed_rate: number }[]): void {
    const doc = this.root.ownerDocument;
    this.anomaliesEl.innerHTML = "";
    if (flags.length === 0) {
      const li = doc.createElement("li");
      li.className = "quiet";
      li.textContent = "none";
      this.anomaliesEl.appendChild(li);
      return;
    }
    for (const flag of flags) {
      const li = doc.createElement("li");
      li.textContent = `${flag.ip} broke ${flag.rule} (observed ${flag.observed_rate})`;
      this.anomaliesEl.appendChild(li);
    }
  }

  dispose(): void {
    this.stopPolling();
    this.root.innerHTML = "";
  }
}
