// Arena view: anonymous A/B battles with one vote each. Ratings shown
// here are whatever the server returned; no rating math happens in the
// browser. The pending battle survives a reload via sessionStorage.

import {
  describeError,
  type BattleCreated,
  type LeaderboardRowView,
  type Outcome,
  type VoteResultView,
} from "./api.js";
import { el, errorBanner, leaderboardTable, traceView } from "./render.js";
import { Tasks } from "./tasks.js";

export interface ArenaApi {
  createBattle(instruction: string): Promise<BattleCreated>;
  vote(battleId: string, outcome: Outcome): Promise<VoteResultView>;
  leaderboard(): Promise<LeaderboardRowView[]>;
}

interface DecidedState {
  outcome: Outcome;
  revealed: { a: string; b: string };
  new_ratings: Record<string, number>;
}

interface StoredArena {
  instruction: string;
  battle: BattleCreated;
  decided: DecidedState | null;
}

export interface ArenaView {
  element: HTMLElement;
  settled(): Promise<void>;
}

const STORAGE_KEY = "arena.current";

function loadStored(): StoredArena | null {
  try {
    const raw = sessionStorage.getItem(STORAGE_KEY);
    return raw ? (JSON.parse(raw) as StoredArena) : null;
  } catch {
    return null;
  }
}

function saveStored(state: StoredArena | null): void {
  try {
    if (state === null) {
      sessionStorage.removeItem(STORAGE_KEY);
    } else {
      sessionStorage.setItem(STORAGE_KEY, JSON.stringify(state));
    }
  } catch {
    // storage unavailable; the battle just will not survive a reload
  }
}

export function mountArena(root: HTMLElement, api: ArenaApi): ArenaView {
  const tasks = new Tasks();
  const view = el("section", "arena-view");

  const form = el("form", "battle-form");
  const instruction = el("input", "instruction-input");
  instruction.type = "text";
  instruction.placeholder = "Instruction for both agents";
  const start = el("button", "start", "Start battle");
  start.type = "submit";
  start.disabled = true;
  form.append(instruction, start);

  const notices = el("div", "notices");
  const battleArea = el("div", "battle-area");
  const voteRow = el("div", "vote-row");
  const verdict = el("div", "verdict");
  const boardSection = el("div", "leaderboard-section");
  boardSection.appendChild(el("h2", undefined, "Leaderboard"));
  const boardBody = el("div", "leaderboard-body");
  boardSection.appendChild(boardBody);

  const voteButtons: { outcome: Outcome; button: HTMLButtonElement }[] = [];
  for (const [outcome, label] of [
    ["a", "Vote A"],
    ["tie", "Tie"],
    ["b", "Vote B"],
  ] as [Outcome, string][]) {
    const button = el("button", `vote vote-${outcome}`, label);
    button.type = "button";
    button.disabled = true;
    voteButtons.push({ outcome, button });
    voteRow.appendChild(button);
  }

  view.append(form, notices, battleArea, voteRow, verdict, boardSection);
  root.appendChild(view);

  let current: StoredArena | null = loadStored();
  let busy = false;

  const refreshControls = () => {
    start.disabled = busy || instruction.value.trim() === "";
    const votable = current !== null && current.decided === null && !busy;
    for (const { button } of voteButtons) {
      button.disabled = !votable;
    }
  };

  const pane = (title: string, trace: BattleCreated["response_a"]) => {
    const box = el("div", "pane");
    box.appendChild(el("h3", "pane-title", title));
    box.appendChild(traceView(trace.messages));
    return box;
  };

  const renderBattle = () => {
    battleArea.replaceChildren();
    verdict.replaceChildren();
    if (current === null) {
      battleArea.appendChild(
        el("p", "hint", "Start a battle to compare two anonymous agents."),
      );
      return;
    }
    const { battle, decided } = current;
    const titleA = decided ? `Agent A: ${decided.revealed.a}` : "Agent A";
    const titleB = decided ? `Agent B: ${decided.revealed.b}` : "Agent B";
    battleArea.appendChild(pane(titleA, battle.response_a));
    battleArea.appendChild(pane(titleB, battle.response_b));
    if (decided) {
      const summary = el("div", "verdict-body");
      summary.appendChild(el("span", "verdict-outcome", `Voted: ${decided.outcome}`));
      for (const [agentId, rating] of Object.entries(decided.new_ratings)) {
        summary.appendChild(
          el("span", "verdict-rating", `${agentId}: ${rating.toFixed(1)}`),
        );
      }
      verdict.appendChild(summary);
    }
  };

  const loadBoard = async (): Promise<void> => {
    try {
      const rows = await api.leaderboard();
      boardBody.replaceChildren(leaderboardTable(rows));
    } catch (err) {
      boardBody.replaceChildren(errorBanner(describeError(err)));
    }
  };

  const refreshLeaderboard = (): Promise<void> => tasks.run(loadBoard);

  const launch = (text: string): Promise<void> =>
    tasks.run(async () => {
      busy = true;
      refreshControls();
      notices.replaceChildren();
      try {
        const battle = await api.createBattle(text);
        current = { instruction: text, battle, decided: null };
        saveStored(current);
        renderBattle();
      } catch (err) {
        notices.replaceChildren(
          errorBanner(describeError(err), () => {
            void launch(text);
          }),
        );
      } finally {
        busy = false;
        refreshControls();
      }
    });

  const castVote = (outcome: Outcome): Promise<void> =>
    tasks.run(async () => {
      if (current === null || current.decided !== null) {
        return;
      }
      busy = true;
      refreshControls();
      notices.replaceChildren();
      try {
        const result = await api.vote(current.battle.battle_id, outcome);
        current = {
          ...current,
          decided: {
            outcome,
            revealed: result.revealed,
            new_ratings: result.new_ratings,
          },
        };
        saveStored(current);
        renderBattle();
        await loadBoard();
      } catch (err) {
        notices.replaceChildren(errorBanner(describeError(err)));
      } finally {
        busy = false;
        refreshControls();
      }
    });

  instruction.addEventListener("input", refreshControls);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const text = instruction.value.trim();
    if (!text || busy) {
      return;
    }
    void launch(text);
  });
  for (const { outcome, button } of voteButtons) {
    button.addEventListener("click", () => {
      // Disable instantly so a double click cannot race the request.
      button.disabled = true;
      void castVote(outcome);
    });
  }

  if (current !== null) {
    instruction.value = current.instruction;
  }
  renderBattle();
  refreshControls();
  void refreshLeaderboard();

  return { element: view, settled: () => tasks.settled() };
}
