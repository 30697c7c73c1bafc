/**
 * The voter flow: one proposal at a time, three answers, no login.
 *
 * Approve / disapprove / indifferent are the three first-class answers;
 * skip merely advances and leaves the exhibition unanswered (it still
 * counts as implicit indifference server-side). Submitting a new
 * proposal is always available, even while the pool is empty.
 */

import { ApiClient, VoteKind } from "./api.js";

const RETRY_MS = 3000;

export class VoterView {
  private root!: HTMLElement;
  private card!: HTMLElement;
  private textEl!: HTMLElement;
  private emptyEl!: HTMLElement;
  private bannerEl!: HTMLElement;
  private buttons: HTMLButtonElement[] = [];
  private skipButton!: HTMLButtonElement;
  private form!: HTMLFormElement;
  private current: string | null = null;
  private voting = false;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private api: ApiClient,
    private retryMs: number = RETRY_MS,
  ) {}

  mount(root: HTMLElement): void {
    this.root = root;
    root.innerHTML = `
      <div class="banner" hidden>Service unreachable, retrying&hellip;</div>
      <div class="card" hidden>
        <p class="proposal-text"></p>
        <div class="vote-buttons">
          <button type="button" class="vote" data-kind="approve">Approve</button>
          <button type="button" class="vote" data-kind="disapprove">Disapprove</button>
          <button type="button" class="vote" data-kind="indifferent">Indifferent</button>
        </div>
        <button type="button" class="skip">Skip</button>
      </div>
      <p class="empty" hidden>No proposals yet. Add the first one below.</p>
      <form class="submit-proposal">
        <textarea name="text" rows="3" maxlength="2000"
          placeholder="Propose something for everyone to vote on"></textarea>
        <button type="submit">Submit proposal</button>
      </form>
    `;
    this.card = root.querySelector(".card") as HTMLElement;
    this.textEl = root.querySelector(".proposal-text") as HTMLElement;
    this.emptyEl = root.querySelector(".empty") as HTMLElement;
    this.bannerEl = root.querySelector(".banner") as HTMLElement;
    this.skipButton = root.querySelector(".skip") as HTMLButtonElement;
    this.form = root.querySelector("form.submit-proposal") as HTMLFormElement;
    this.buttons = Array.from(root.querySelectorAll("button.vote"));

    for (const button of this.buttons) {
      button.addEventListener("click", () => {
        void this.vote(button.dataset.kind as VoteKind);
      });
    }
    this.skipButton.addEventListener("click", () => void this.loadNext());
    this.form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submitProposal();
    });
  }

  get currentProposalId(): string | null {
    return this.current;
  }

  async loadNext(): Promise<void> {
    try {
      const next = await this.api.fetchNext();
      this.bannerEl.hidden = true;
      if (next === null) {
        this.current = null;
        this.card.hidden = true;
        this.emptyEl.hidden = false;
        return;
      }
      this.current = next.proposal_id;
      this.textEl.textContent = next.text;
      this.card.hidden = false;
      this.emptyEl.hidden = true;
    } catch {
      this.showRetryBanner();
    }
  }

  /** Exactly one POST per interaction; buttons stay dead while in flight. */
  private async vote(kind: VoteKind): Promise<void> {
    if (this.voting || this.current === null) return;
    this.voting = true;
    this.setButtonsDisabled(true);
    try {
      await this.api.castVote(this.current, kind);
      // a conflict means this exhibition was already answered: either
      // way the right move is to advance quietly
      await this.loadNext();
    } catch {
      this.showRetryBanner();
    } finally {
      this.voting = false;
      this.setButtonsDisabled(false);
    }
  }

  private async submitProposal(): Promise<void> {
    const field = this.form.elements.namedItem("text") as HTMLTextAreaElement;
    const text = field.value.trim();
    if (!text) return;
    try {
      await this.api.submitProposal(text);
      field.value = "";
      if (this.current === null) await this.loadNext();
    } catch {
      this.showRetryBanner();
    }
  }

  private setButtonsDisabled(disabled: boolean): void {
    for (const button of this.buttons) button.disabled = disabled;
    this.skipButton.disabled = disabled;
  }

  private showRetryBanner(): void {
    this.bannerEl.hidden = false;
    if (this.retryTimer !== null) clearTimeout(this.retryTimer);
    this.retryTimer = setTimeout(() => {
      this.retryTimer = null;
      void this.loadNext();
    }, this.retryMs);
  }

  dispose(): void {
    if (this.retryTimer !== null) clearTimeout(this.retryTimer);
    this.root.innerHTML = "";
  }
}
