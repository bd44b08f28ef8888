// Chat view: one session against the service's chat agent. The server
// returns the whole conversation each turn, so rendering is a full redraw.

import { describeError, type ChatReply, type MessageView } from "./api.js";
import { el, errorBanner, traceView } from "./render.js";
import { Tasks } from "./tasks.js";

export interface ChatApi {
  chat(sessionId: string, message: string): Promise<ChatReply>;
}

export interface ChatView {
  element: HTMLElement;
  settled(): Promise<void>;
}

function newSessionId(): string {
  const provider = globalThis.crypto;
  if (provider && "randomUUID" in provider) {
    return `web-${provider.randomUUID()}`;
  }
  return `web-${Math.random().toString(36).slice(2)}`;
}

export function mountChat(
  root: HTMLElement,
  api: ChatApi,
  sessionId: string = newSessionId(),
): ChatView {
  const tasks = new Tasks();
  const view = el("section", "chat-view");
  const log = el("div", "messages");
  const notices = el("div", "notices");
  const form = el("form", "composer");
  const input = el("input", "composer-input");
  input.type = "text";
  input.placeholder = "Message the agent";
  const send = el("button", "send", "Send");
  send.type = "submit";
  send.disabled = true;
  form.append(input, send);
  view.append(log, notices, form);
  root.appendChild(view);

  let inFlight = false;

  const refreshSend = () => {
    send.disabled = inFlight || input.value.trim() === "";
  };

  const renderMessages = (messages: MessageView[]) => {
    log.replaceChildren(traceView(messages));
  };

  const deliver = (text: string): Promise<void> =>
    tasks.run(async () => {
      inFlight = true;
      refreshSend();
      notices.replaceChildren();
      try {
        const reply = await api.chat(sessionId, text);
        renderMessages(reply.messages);
        input.value = "";
      } catch (err) {
        notices.replaceChildren(
          errorBanner(describeError(err), () => {
            void deliver(text);
          }),
        );
      } finally {
        inFlight = false;
        refreshSend();
      }
    });

  input.addEventListener("input", refreshSend);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const text = input.value.trim();
    if (!text || inFlight) {
      return;
    }
    void deliver(text);
  });

  return { element: view, settled: () => tasks.settled() };
}
