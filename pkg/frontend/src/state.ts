// Pure view-state logic: frame focus, class selection, timer transitions.
// No IO here; the controller pairs these with the API client.

import type { ClassSelection, TaskView, TimerAction, TimerState } from "./types";

export function createTaskView(videoId: string, timestamps: number[]): TaskView {
  if (timestamps.length === 0) {
    throw new Error(`task for ${videoId} has no sampled frames`);
  }
  return {
    videoId,
    timestamps,
    currentIndex: 0,
    chosen: new Map(),
    pendingSelection: new Set(),
    dirty: false,
    timer: "stopped",
  };
}

export function currentTimestamp(view: TaskView): number {
  return view.timestamps[view.currentIndex];
}

export function progress(view: TaskView): { labeled: number; total: number } {
  return { labeled: view.chosen.size, total: view.timestamps.length };
}

export function isComplete(view: TaskView): boolean {
  return view.chosen.size === view.timestamps.length;
}

/** Toggle one class in the in-progress selection for the focused frame. */
export function toggleClass(view: TaskView, classIndex: number): void {
  if (view.pendingSelection.has(classIndex)) {
    view.pendingSelection.delete(classIndex);
  } else {
    view.pendingSelection.add(classIndex);
  }
  view.dirty = true;
}

/**
 * Commit the focused frame's answer and advance to the next unlabeled frame.
 *
 * Passing a selection overrides the pending one; an empty array is the
 * explicit Background answer. Requires a running timer (no measurement, no
 * labels). Returns the committed classes, sorted, for submission.
 */
export function labelFrame(view: TaskView, selection?: ClassSelection): ClassSelection {
  if (view.timer === "stopped") {
    throw new Error("cannot label while the timer is stopped");
  }
  const classes =
    selection !== undefined ? [...selection] : [...view.pendingSelection];
  classes.sort((a, b) => a - b);
  view.chosen.set(view.currentIndex, classes);
  view.pendingSelection = new Set();
  view.dirty = false;
  advanceToNextUnlabeled(view);
  return classes;
}

function advanceToNextUnlabeled(view: TaskView): void {
  const n = view.timestamps.length;
  for (let step = 1; step <= n; step++) {
    const idx = (view.currentIndex + step) % n;
    if (!view.chosen.has(idx)) {
      view.currentIndex = idx;
      return;
    }
  }
  // Everything labeled: stay put.
}

/**
 * Move focus to another frame. Unsaved changes block navigation unless
 * force is set, so a click cannot silently discard a half-made selection.
 */
export function goTo(view: TaskView, index: number, force = false): boolean {
  if (index < 0 || index >= view.timestamps.length) {
    throw new Error(`frame index ${index} outside the plan`);
  }
  if (view.dirty && !force) {
    return false;
  }
  view.currentIndex = index;
  const saved = view.chosen.get(index);
  view.pendingSelection = new Set(saved ?? []);
  view.dirty = false;
  return true;
}

const TIMER_TRANSITIONS: Record<TimerState, Partial<Record<TimerAction, TimerState>>> = {
  stopped: { start: "running", self_check_start: "self_check" },
  running: { stop: "stopped" },
  self_check: { self_check_stop: "stopped" },
};

export function legalTimerActions(state: TimerState): TimerAction[] {
  return Object.keys(TIMER_TRANSITIONS[state]) as TimerAction[];
}

/** Apply a timer action; illegal transitions throw (the UI disables them). */
export function applyTimerAction(view: TaskView, action: TimerAction): TimerState {
  const next = TIMER_TRANSITIONS[view.timer][action];
  if (next === undefined) {
    throw new Error(`timer action ${action} is illegal while ${view.timer}`);
  }
  view.timer = next;
  return next;
}

/**
 * Context-playback offsets around the focused frame: one-second steps
 * within +-5 s, clamped to the video span implied by the plan. The UI shows
 * these as a scrub strip; going further back is discouraged, not enforced.
 */
export function contextOffsets(view: TaskView, spanSeconds = 5): number[] {
  const t = currentTimestamp(view);
  const last = view.timestamps[view.timestamps.length - 1];
  const offsets: number[] = [];
  for (let d = -spanSeconds; d <= spanSeconds; d++) {
    const at = t + d;
    if (at >= 0 && at <= last + spanSeconds) {
      offsets.push(d);
    }
  }
  return offsets;
}
