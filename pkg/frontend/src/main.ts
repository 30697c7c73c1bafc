/**
 * Entry point: hash routing between the voter flow (default) and the
 * manager dashboard (#/dashboard). The API base defaults to the page's
 * own origin; set window.CONTIVOTE_API to point elsewhere.
 */

import { ApiClient } from "./api.js";
import { DashboardView } from "./dashboard.js";
import { VoterView } from "./voter.js";

declare global {
  interface Window {
    CONTIVOTE_API?: string;
  }
}

let active: { dispose(): void } | null = null;

function route(): void {
  const root = document.getElementById("app");
  if (!root) return;
  active?.dispose();
  const api = new ApiClient(window.CONTIVOTE_API ?? "");
  if (window.location.hash === "#/dashboard") {
    const dashboard = new DashboardView(api);
    dashboard.mount(root);
    active = dashboard;
  } else {
    const voter = new VoterView(api);
    voter.mount(root);
    void voter.loadNext();
    active = voter;
  }
}

window.addEventListener("hashchange", route);
window.addEventListener("DOMContentLoaded", route);
