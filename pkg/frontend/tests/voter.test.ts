import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { VoterView } from "../src/voter.js";
import { jsonResponse, makeFetchStub, settle } from "./helpers.js";

function mountVoter(stub: ReturnType<typeof makeFetchStub>) {
  const root = document.createElement("div");
  document.body.appendChild(root);
  const view = new VoterView(new ApiClient("", stub.fetchFn), 5);
  view.mount(root);
  return { root, view };
}

function nextPayload(pid: string, text = "do the thing") {
  return { proposal_id: pid, text, session_token: "tok" };
}

beforeEach(() => {
  document.body.innerHTML = "";
});

describe("voter flow", () => {
  it("shows one card, exactly three vote buttons, a skip, and the submission form", async () => {
    const stub = makeFetchStub();
    stub.on("GET", "/next", () => jsonResponse(200, nextPayload("p1")));
    const { root, view } = mountVoter(stub);
    await view.loadNext();

    expect(root.querySelectorAll(".card:not([hidden])")).toHaveLength(1);
    const buttons = root.querySelectorAll("button.vote");
    expect(buttons).toHaveLength(3);
    const kinds = Array.from(buttons).map((b) => (b as HTMLElement).dataset.kind);
    expect(kinds).toEqual(["approve", "disapprove", "indifferent"]);
    expect(root.querySelector("button.skip")).not.toBeNull();
    expect(root.querySelector("form.submit-proposal textarea")).not.toBeNull();
    expect(root.querySelector(".proposal-text")?.textContent).toBe("do the thing");
  });

  it("has no authentication step anywhere in the flow", async () => {
    const stub = makeFetchStub();
    stub.on("GET", "/next", () => jsonResponse(200, nextPayload("p1")));
    const { root, view } = mountVoter(stub);
    await view.loadNext();
    expect(root.querySelector("input[type=password]")).toBeNull();
    expect(root.textContent?.toLowerCase()).not.toContain("login");
    expect(root.textContent?.toLowerCase()).not.toContain("sign in");
  });

  it("clicking approve sends exactly one POST /votes and advances", async () => {
    const stub = makeFetchStub();
    stub.once("GET", "/next", () => jsonResponse(200, nextPayload("p1", "first")));
    stub.once("GET", "/next", () => jsonResponse(200, nextPayload("p2", "second")));
    stub.on("POST", "/votes", () => jsonResponse(204));
    const { root, view } = mountVoter(stub);
    await view.loadNext();

    (root.querySelector('button.vote[data-kind="approve"]') as HTMLButtonElement).click();
    await settle();

    expect(stub.countOf("POST", "/votes")).toBe(1);
    expect(stub.calls.find((c) => c.method === "POST")?.body).toEqual({
      proposal_id: "p1",
      kind: "approve",
    });
    expect(root.querySelector(".proposal-text")?.textContent).toBe("second");
  });

  it("rapid double clicks still produce a single POST", async () => {
    const stub = makeFetchStub();
    stub.once("GET", "/next", () => jsonResponse(200, nextPayload("p1")));
    stub.once("GET", "/next", () => jsonResponse(200, nextPayload("p2")));
    stub.on("POST", "/votes", () => jsonResponse(204));
    const { root, view } = mountVoter(stub);
    await view.loadNext();

    const button = root.querySelector('button.vote[data-kind="approve"]') as HTMLButtonElement;
    button.click();
    button.click();
    await settle();
    expect(stub.countOf("POST", "/votes")).toBe(1);
  });

  it("silently advances on a vote conflict", async () => {
    const stub = makeFetchStub();
    stub.once("GET", "/next", () => jsonResponse(200, nextPayload("p1")));
    stub.once("GET", "/next", () => jsonResponse(200, nextPayload("p2", "after conflict")));
    stub.on("POST", "/votes", () => jsonResponse(409, { error: "already answered" }));
    const { root, view } = mountVoter(stub);
    await view.loadNext();

    (root.querySelector('button.vote[data-kind="disapprove"]') as HTMLButtonElement).click();
    await settle();

    expect(root.querySelector(".proposal-text")?.textContent).toBe("after conflict");
    expect((root.querySelector(".banner") as HTMLElement).hidden).toBe(true);
  });

  it("skip advances without posting any vote", async () => {
    const stub = makeFetchStub();
    stub.once("GET", "/next", () => jsonResponse(200, nextPayload("p1")));
    stub.once("GET", "/next", () => jsonResponse(200, nextPayload("p2", "skipped to")));
    const { root, view } = mountVoter(stub);
    await view.loadNext();

    (root.querySelector("button.skip") as HTMLButtonElement).click();
    await settle();

    expect(stub.countOf("POST", "/votes")).toBe(0);
    expect(root.querySelector(".proposal-text")?.textContent).toBe("skipped to");
  });

  it("shows the empty state with the form when the pool is empty", async () => {
    const stub = makeFetchStub();
    stub.on("GET", "/next", () => jsonResponse(404, { error: "none" }));
    const { root, view } = mountVoter(stub);
    await view.loadNext();

    expect((root.querySelector(".empty") as HTMLElement).hidden).toBe(false);
    expect((root.querySelector(".card") as HTMLElement).hidden).toBe(true);
    expect(root.querySelector("form.submit-proposal")).not.toBeNull();
  });

  it("submitting a proposal posts it and refreshes the card when empty", async () => {
    const stub = makeFetchStub();
    stub.once("GET", "/next", () => jsonResponse(404, { error: "none" }));
    stub.on("POST", "/proposals", () => jsonResponse(201, { proposal_id: "pNew" }));
    stub.on("GET", "/next", () => jsonResponse(200, nextPayload("pNew", "fresh idea")));
    const { root, view } = mountVoter(stub);
    await view.loadNext();

    const field = root.querySelector("textarea") as HTMLTextAreaElement;
    field.value = "fresh idea";
    (root.querySelector("form.submit-proposal") as HTMLFormElement).dispatchEvent(
      new Event("submit", { cancelable: true }),
    );
    await settle();

    expect(stub.countOf("POST", "/proposals")).toBe(1);
    expect(root.querySelector(".proposal-text")?.textContent).toBe("fresh idea");
  });

  it("shows the retry banner when the service is unreachable, then recovers", async () => {
    const stub = makeFetchStub();
    let fail = true;
    stub.on("GET", "/next", () => {
      if (fail) throw new Error("connection refused");
      return jsonResponse(200, nextPayload("p1", "back online"));
    });
    const { root, view } = mountVoter(stub);
    await view.loadNext();
    expect((root.querySelector(".banner") as HTMLElement).hidden).toBe(false);

    fail = false;
    await new Promise((resolve) => setTimeout(resolve, 20)); // retryMs = 5
    expect(root.querySelector(".proposal-text")?.textContent).toBe("back online");
    expect((root.querySelector(".banner") as HTMLElement).hidden).toBe(true);
    view.dispose();
  });
});
