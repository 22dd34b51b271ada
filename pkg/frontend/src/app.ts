// Entry point: two-view shell (chat workspace / monitoring dashboard).

import { ApiClient } from "./api.js";
import { ChatView, Identity } from "./chat.js";
import { DashboardView } from "./dashboard.js";

function readIdentity(): Identity {
  // Dev-mode identity; the service trusts request body fields.
  const params = new URLSearchParams(window.location.search);
  return {
    userId: params.get("user") ?? "dev-user",
    department: params.get("department") ?? "IT",
    jobTitle: params.get("job_title") ?? "Developer",
  };
}

export function bootstrap(root: HTMLElement): void {
  const api = new ApiClient("");

  const nav = document.createElement("nav");
  nav.className = "tabs";
  const chatTab = document.createElement("button");
  chatTab.textContent = "Chat";
  chatTab.className = "tab active";
  const dashTab = document.createElement("button");
  dashTab.textContent = "Dashboard";
  dashTab.className = "tab";
  nav.append(chatTab, dashTab);

  const chatRoot = document.createElement("main");
  chatRoot.className = "view chat-view";
  const dashRoot = document.createElement("main");
  dashRoot.className = "view dashboard-view";
  dashRoot.hidden = true;

  root.append(nav, chatRoot, dashRoot);

  new ChatView(chatRoot, api, readIdentity());
  const dashboard = new DashboardView(dashRoot, api);
  let dashboardStarted = false;

  chatTab.addEventListener("click", () => {
    chatTab.classList.add("active");
    dashTab.classList.remove("active");
    chatRoot.hidden = false;
    dashRoot.hidden = true;
  });
  dashTab.addEventListener("click", () => {
    dashTab.classList.add("active");
    chatTab.classList.remove("active");
    dashRoot.hidden = false;
    chatRoot.hidden = true;
    if (!dashboardStarted) {
      dashboardStarted = true;
      void dashboard.refresh();
      dashboard.startPolling();
    }
  });
}

const rootElement = typeof document !== "undefined" ? document.getElementById("app") : null;
if (rootElement) bootstrap(rootElement);
