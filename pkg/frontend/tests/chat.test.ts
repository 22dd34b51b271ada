// Chat workspace tests: fixture bodies were captured from the stub-backed
// service (see fixtures/), so "matching the API body" means the real wire
// format.

import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { ChatView, SESSION_WINDOW_MS, formatCountdown } from "../src/chat.js";
import { fixture, makeFakeFetch } from "./helpers.js";

const CHAT_BODY = fixture("chat_response.json");
const IDENTITY = { userId: "u1", department: "IT", jobTitle: "Developer" };

function setup(routes?: Parameters<typeof makeFakeFetch>[0]) {
  const fake = makeFakeFetch();
  fake.routes.push({ match: (url, method) => method === "POST" && url === "/chat", body: CHAT_BODY });
  const root = document.createElement("div");
  document.body.replaceChildren(root);
  let clock = 1_000_000;
  const view = new ChatView(root, new ApiClient("", fake.fetchFn), IDENTITY, () => clock);
  return {
    fake,
    root,
    view,
    advance: (ms: number) => {
      clock += ms;
    },
    input: () => root.querySelector<HTMLTextAreaElement>(".chat-input")!,
    sendButton: () => root.querySelector<HTMLButtonElement>(".send-button")!,
  };
}

async function sendMessage(env: ReturnType<typeof setup>, text: string) {
  env.input().value = text;
  env.input().dispatchEvent(new Event("input"));
  await env.view.send();
}

describe("chat round-trip", () => {
  beforeEach(() => void vi.useRealTimers());

  it("renders the answer text from the API body", async () => {
    const env = setup();
    await sendMessage(env, "Summarise the returns policy and also explain procedure CALCRATE");
    const expected = JSON.parse(CHAT_BODY);
    const turns = env.root.querySelectorAll(".turn-assistant .turn-text");
    expect(turns).toHaveLength(1);
    expect(turns[0].textContent).toBe(expected.response_text);
  });

  it("renders exactly one source card per source in the API body, in order", async () => {
    const env = setup();
    await sendMessage(env, "Summarise the returns policy and also explain procedure CALCRATE");
    const expected = JSON.parse(CHAT_BODY);
    expect(expected.sources.length).toBeGreaterThan(0);
    const cards = env.root.querySelectorAll(".source-card");
    expect(cards).toHaveLength(expected.sources.length);
    const label = env.root.querySelector(".sources-label")!;
    expect(label.textContent).toBe(`Sources (${expected.sources.length})`);
    cards.forEach((card, i) => {
      expect(card.querySelector(".source-title")!.textContent).toBe(expected.sources[i].doc_id);
      expect(card.querySelector(".source-uri")!.textContent).toBe(expected.sources[i].uri);
    });
  });

  it("expands a source card to show the span detail", async () => {
    const env = setup();
    await sendMessage(env, "Summarise the returns policy and also explain procedure CALCRATE");
    const card = env.root.querySelector(".source-card")!;
    const detail = card.querySelector<HTMLElement>(".source-detail")!;
    expect(detail.hidden).toBe(true);
    (card.querySelector(".source-head") as HTMLElement).click();
    expect(detail.hidden).toBe(false);
    const expected = JSON.parse(CHAT_BODY);
    expect(detail.textContent).toContain(String(expected.sources[0].span[0]));
    expect(detail.textContent).toContain(String(expected.sources[0].span[1]));
  });

  it("clears the input after a successful send", async () => {
    const env = setup();
    await sendMessage(env, "Summarise the returns policy and also explain procedure CALCRATE");
    expect(env.input().value).toBe("");
  });
});

describe("input state", () => {
  it("send is disabled for empty input", () => {
    const env = setup();
    expect(env.sendButton().disabled).toBe(true);
    env.input().value = "   ";
    env.input().dispatchEvent(new Event("input"));
    expect(env.sendButton().disabled).toBe(true);
    env.input().value = "hello";
    env.input().dispatchEvent(new Event("input"));
    expect(env.sendButton().disabled).toBe(false);
  });

  it("allows only one in-flight request per tab", async () => {
    const env = setup();
    env.input().value = "first question";
    const first = env.view.send();
    expect(env.view.isPending).toBe(true);
    env.input().value = "second question";
    const second = env.view.send(); // ignored: one request already pending
    await Promise.all([first, second]);
    expect(env.fake.calls.filter((c) => c.url === "/chat")).toHaveLength(1);
  });
});

describe("error handling", () => {
  it("shows a banner with the correlation id on a 500 and keeps the message", async () => {
    const fake = makeFakeFetch();
    fake.routes.push({
      match: (url, method) => method === "POST" && url === "/chat",
      status: 500,
      body: JSON.stringify({ detail: "internal error", correlation_id: "abc-123-def" }),
    });
    const root = document.createElement("div");
    document.body.replaceChildren(root);
    const view = new ChatView(root, new ApiClient("", fake.fetchFn), IDENTITY);
    const input = root.querySelector<HTMLTextAreaElement>(".chat-input")!;
    input.value = "doomed question";
    await view.send();
    const banner = root.querySelector<HTMLElement>(".error-banner")!;
    expect(banner.hidden).toBe(false);
    expect(banner.textContent).toContain("abc-123-def");
    expect(input.value).toBe("doomed question");
  });

  it("shows a banner on network failure and keeps the message in the input", async () => {
    const root = document.createElement("div");
    document.body.replaceChildren(root);
    const failingFetch = () => Promise.reject(new TypeError("network down"));
    const view = new ChatView(root, new ApiClient("", failingFetch), IDENTITY);
    const input = root.querySelector<HTMLTextAreaElement>(".chat-input")!;
    input.value = "are you there?";
    await view.send();
    const banner = root.querySelector<HTMLElement>(".error-banner")!;
    expect(banner.hidden).toBe(false);
    expect(input.value).toBe("are you there?");
  });
});

describe("session countdown", () => {
  it("counts down from the 60-minute window after the latest turn", async () => {
    const env = setup();
    await sendMessage(env, "Summarise the returns policy and also explain procedure CALCRATE");
    expect(env.view.remainingWindowMs()).toBe(SESSION_WINDOW_MS);
    env.advance(15 * 60 * 1000);
    expect(env.view.remainingWindowMs()).toBe(45 * 60 * 1000);
    env.view.updateCountdown();
    const countdown = env.root.querySelector<HTMLElement>(".session-countdown")!;
    expect(countdown.hidden).toBe(false);
    expect(countdown.textContent).toContain("45:00");
    env.advance(46 * 60 * 1000);
    env.view.updateCountdown();
    expect(countdown.textContent).toBe("session expired");
    env.view.dispose();
  });

  it("formats remaining time as m:ss", () => {
    expect(formatCountdown(59 * 60 * 1000 + 7000)).toBe("59:07");
    expect(formatCountdown(0)).toBe("0:00");
    expect(formatCountdown(-5000)).toBe("0:00");
  });

  it("is hidden before any turn exists", () => {
    const env = setup();
    expect(env.root.querySelector<HTMLElement>(".session-countdown")!.hidden).toBe(true);
  });
});
