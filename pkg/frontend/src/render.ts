// DOM builders shared by both views. All content goes in via textContent,
// never innerHTML, so model output cannot inject markup.

import type {
  ApiRequestView,
  ApiResultView,
  LeaderboardRowView,
  MessageView,
} from "./api.js";

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

// The first line starting with ACTION: is rendered as a card instead, so
// drop it from the prose. Later occurrences are plain text and stay.
export function stripActionLine(content: string): string {
  const lines = content.split("\n");
  const index = lines.findIndex((line) => line.trimStart().startsWith("ACTION:"));
  if (index < 0) {
    return content.trim();
  }
  return lines
    .filter((_, i) => i !== index)
    .join("\n")
    .trim();
}

export function actionCard(request: ApiRequestView): HTMLElement {
  const card = el("div", "action-card");
  const head = el("div", "action-head");
  head.appendChild(el("span", "action-label", "action"));
  head.appendChild(el("span", "action-api", request.api_name));
  card.appendChild(head);
  const entries = Object.entries(request.arguments);
  if (entries.length > 0) {
    const table = el("table", "action-args");
    for (const [name, value] of entries) {
      const row = el("tr");
      row.appendChild(el("td", "arg-name", name));
      row.appendChild(el("td", "arg-value", value));
      table.appendChild(row);
    }
    card.appendChild(table);
  }
  return card;
}

export function resultBlock(result: ApiResultView): HTMLElement {
  const failed = result.status === "error";
  const block = el("div", failed ? "tool-result error" : "tool-result");
  block.appendChild(el("span", "tool-status", failed ? "tool error" : "tool result"));
  block.appendChild(el("span", "tool-payload", result.payload));
  return block;
}

export function traceView(messages: MessageView[]): HTMLElement {
  const root = el("div", "trace");
  let lastAssistant = -1;
  messages.forEach((message, index) => {
    if (message.role === "assistant") {
      lastAssistant = index;
    }
  });
  messages.forEach((message, index) => {
    if (message.role === "system") {
      return;
    }
    if (message.role === "user") {
      root.appendChild(el("div", "bubble user", message.content));
      return;
    }
    if (message.role === "tool") {
      if (message.result) {
        root.appendChild(resultBlock(message.result));
      }
      return;
    }
    const turn = el("div", "turn");
    const prose = stripActionLine(message.content);
    if (prose) {
      const cls =
        index === lastAssistant ? "bubble assistant final-answer" : "bubble assistant";
      turn.appendChild(el("div", cls, prose));
    }
    if (message.request) {
      turn.appendChild(actionCard(message.request));
    }
    root.appendChild(turn);
  });
  return root;
}

export function leaderboardTable(rows: LeaderboardRowView[]): HTMLElement {
  const table = el("table", "leaderboard");
  const head = el("tr");
  for (const title of ["#", "Agent", "Rating", "Games"]) {
    head.appendChild(el("th", undefined, title));
  }
  table.appendChild(head);
  rows.forEach((row, index) => {
    const line = el("tr");
    line.appendChild(el("td", "rank", String(index + 1)));
    line.appendChild(el("td", "agent-id", row.agent_id));
    line.appendChild(el("td", "rating", row.rating.toFixed(1)));
    line.appendChild(el("td", "games", String(row.games)));
    table.appendChild(line);
  });
  return table;
}

export function errorBanner(message: string, onRetry?: () => void): HTMLElement {
  const banner = el("div", "error-banner");
  banner.appendChild(el("span", "error-text", message));
  if (onRetry) {
    const retry = el("button", "retry", "Retry");
    retry.type = "button";
    retry.addEventListener("click", onRetry);
    banner.appendChild(retry);
  }
  return banner;
}
