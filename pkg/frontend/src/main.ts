// DOM wiring: frame viewer with a +-5 s context strip, multi-select class
// picker, Background button, timer controls, and progress display.

import { AnnotationSession } from "./controller";
import { contextOffsets, currentTimestamp } from "./state";
import type { TimerAction } from "./types";

const TIMER_LABELS: Record<TimerAction, string> = {
  start: "Start timer",
  stop: "Stop timer",
  self_check_start: "Start self-check",
  self_check_stop: "Stop self-check",
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text) {
    node.textContent = text;
  }
  return node;
}

export function mountApp(root: HTMLElement): void {
  const params = new URLSearchParams(window.location.search);
  const session = new AnnotationSession({
    baseUrl: params.get("api") ?? "",
    project: params.get("project") ?? "default",
    worker: params.get("worker") ?? "anonymous",
    onQueueChange: (pending, retrying) => {
      queueBadge.textContent = retrying
        ? `retrying: ${pending} queued`
        : pending > 0
          ? `${pending} queued`
          : "";
      queueBadge.className = retrying ? "badge retrying" : "badge";
    },
  });

  const taskSelect = el("select");
  const frameImage = el("img", { class: "frame", alt: "sampled frame" });
  const contextStrip = el("div", { class: "context" });
  const classBox = el("div", { class: "classes" });
  const statusLine = el("div", { class: "status" });
  const queueBadge = el("span", { class: "badge" });
  const timerBox = el("div", { class: "timer" });
  const saveButton = el("button", {}, "Save & next");
  const backgroundButton = el("button", { class: "background" }, "Background");
  const prevButton = el("button", {}, "Prev");
  const nextButton = el("button", {}, "Next");

  root.append(
    taskSelect, timerBox, frameImage, contextStrip, classBox,
    el("div", { class: "actions" }),
    statusLine, queueBadge,
  );
  root.querySelector(".actions")!.append(prevButton, saveButton, backgroundButton, nextButton);

  function renderTimer(): void {
    timerBox.replaceChildren();
    const legal = new Set(session.legalTimerActions());
    for (const action of Object.keys(TIMER_LABELS) as TimerAction[]) {
      const button = el("button", {}, TIMER_LABELS[action]);
      button.disabled = !legal.has(action); // illegal transitions stay disabled
      button.onclick = () => session.timer(action).then(render);
      timerBox.append(button);
    }
  }

  function renderFrame(): void {
    const view = session.view!;
    const t = currentTimestamp(view);
    frameImage.src = session.api.frameUrl(view.videoId, t);
    contextStrip.replaceChildren();
    for (const offset of contextOffsets(view)) {
      const thumb = el("img", {
        class: offset === 0 ? "thumb focus" : "thumb",
        src: session.api.frameUrl(view.videoId, t + offset),
        title: `${offset >= 0 ? "+" : ""}${offset}s`,
      });
      contextStrip.append(thumb);
    }
  }

  function renderClasses(): void {
    const view = session.view!;
    classBox.replaceChildren();
    session.classNames.forEach((name, index) => {
      const label = el("label");
      const box = el("input", { type: "checkbox" }) as HTMLInputElement;
      box.checked = view.pendingSelection.has(index);
      box.onchange = () => {
        session.toggleClass(index);
        render();
      };
      label.append(box, el("span", {}, name));
      classBox.append(label);
    });
  }

  function render(): void {
    const view = session.view;
    if (!view) {
      return;
    }
    renderTimer();
    renderFrame();
    renderClasses();
    const { labeled, total } = session.progress();
    const t = currentTimestamp(view);
    statusLine.textContent =
      `${view.videoId} @ ${t.toFixed(1)}s  |  frame ${view.currentIndex + 1}/${total}` +
      `  |  labeled ${labeled}/${total}` +
      (view.dirty ? "  |  unsaved selection" : "") +
      (session.isComplete() ? "  |  done, stop the timer" : "");
    const timerRunning = view.timer !== "stopped";
    saveButton.disabled = !timerRunning;
    backgroundButton.disabled = !timerRunning;
  }

  saveButton.onclick = () => session.labelCurrentFrame().then(render);
  backgroundButton.onclick = () => session.labelBackground().then(render);
  prevButton.onclick = () => {
    const view = session.view!;
    if (!session.goTo(Math.max(0, view.currentIndex - 1)) &&
        window.confirm("Discard the unsaved selection?")) {
      session.goTo(Math.max(0, view.currentIndex - 1), true);
    }
    render();
  };
  nextButton.onclick = () => {
    const view = session.view!;
    const next = Math.min(view.timestamps.length - 1, view.currentIndex + 1);
    if (!session.goTo(next) && window.confirm("Discard the unsaved selection?")) {
      session.goTo(next, true);
    }
    render();
  };
  taskSelect.onchange = () => {
    session.openTask(taskSelect.value);
    render();
  };

  session.loadTasks().then((tasks) => {
    taskSelect.replaceChildren(
      ...tasks.map((task) => el("option", { value: task.video_id }, task.video_id)),
    );
    if (tasks.length > 0) {
      session.openTask(tasks[0].video_id);
    }
    render();
  });
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  mountApp(document.getElementById("app")!);
}
