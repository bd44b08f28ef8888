// Hash-routed entry point: #/chat and #/arena swap views inside #app.

import { ApiClient } from "./api.js";
import { mountArena } from "./arena.js";
import { mountChat } from "./chat.js";

export type Route = "chat" | "arena";

export function parseRoute(hash: string): Route {
  return hash.startsWith("#/arena") ? "arena" : "chat";
}

export function mountApp(
  root: HTMLElement,
  api: ApiClient,
  getHash: () => string = () => location.hash,
): () => void {
  const render = () => {
    const route = parseRoute(getHash());
    root.replaceChildren();
    if (route === "arena") {
      mountArena(root, api);
    } else {
      mountChat(root, api);
    }
    document.querySelectorAll("nav a").forEach((link) => {
      const target = link.getAttribute("href") ?? "";
      link.classList.toggle("active", parseRoute(target) === route);
    });
  };
  window.addEventListener("hashchange", render);
  render();
  return render;
}

const appRoot = document.getElementById("app");
if (appRoot) {
  mountApp(appRoot, new ApiClient(""));
}
