import { ReviewApi } from "./api.js";
import { JudgeFlow } from "./app.js";
import { renderTokensHtml, tokenizeAnnotated } from "./render.js";
import type { FlowView } from "./app.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export function wireUp(): void {
  const api = new ReviewApi("");
  const flow = new JudgeFlow(api);
  let showRaw = false;

  const startForm = el<HTMLFormElement>("start-form");
  const evaluatorInput = el<HTMLInputElement>("evaluator-id");
  const seedInput = el<HTMLInputElement>("seed");
  const startPanel = el<HTMLElement>("start-panel");
  const judgePanel = el<HTMLElement>("judge-panel");
  const progress = el<HTMLElement>("progress");
  const utterance = el<HTMLElement>("utterance");
  const language = el<HTMLElement>("language");
  const status = el<HTMLElement>("status");

  function render(view: FlowView): void {
    startPanel.hidden = view.state !== "idle";
    judgePanel.hidden = view.state === "idle";
    progress.textContent = `${view.judged} / ${view.total}`;
    status.textContent = view.lastError
      ? `Submit failed (${view.lastError}); verdict not recorded, try again.`
      : view.state === "submitting"
        ? "Submitting…"
        : "";
    if (view.state === "done") {
      utterance.textContent = flow.summary();
      language.textContent = "";
      return;
    }
    if (view.pair) {
      language.textContent = view.pair.language;
      utterance.innerHTML = showRaw
        ? `<code>${view.pair.annotated.replace(/&/g, "&amp;").replace(/</g, "&lt;")}</code>`
        : renderTokensHtml(tokenizeAnnotated(view.pair.annotated));
    }
  }

  flow.onChange(render);

  startForm.addEventListener("submit", (event) => {
    event.preventDefault();
    const evaluatorId = evaluatorInput.value.trim() || "anonymous";
    const seed = parseInt(seedInput.value, 10) || 0;
    flow.start(evaluatorId, seed).catch((err) => {
      status.textContent = `Could not start session: ${err}`;
    });
  });

  document.addEventListener("keydown", (event) => {
    if (event.repeat || event.target instanceof HTMLInputElement) return;
    switch (event.key) {
      case "a":
        void flow.judge("acceptable");
        break;
      case "u":
        void flow.judge("unacceptable");
        break;
      case "s":
        void flow.judge("abstain");
        break;
      case "v":
        showRaw = !showRaw;
        render(flow.view());
        break;
    }
  });

  el<HTMLButtonElement>("btn-accept").addEventListener("click", () =>
    void flow.judge("acceptable"),
  );
  el<HTMLButtonElement>("btn-reject").addEventListener("click", () =>
    void flow.judge("unacceptable"),
  );
  el<HTMLButtonElement>("btn-abstain").addEventListener("click", () =>
    void flow.judge("abstain"),
  );
}

if (typeof document !== "undefined" && document.getElementById("start-form")) {
  wireUp();
}
