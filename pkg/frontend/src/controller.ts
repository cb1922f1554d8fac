// Headless annotation session: the exact logic the DOM layer drives.
// Keeping it DOM-free makes the round-trip test honest about what the UI
// sends over the wire.

import { ApiClient, SubmissionQueue, type QueueListener } from "./api";
import {
  applyTimerAction,
  createTaskView,
  currentTimestamp,
  goTo,
  isComplete,
  labelFrame,
  legalTimerActions,
  progress,
  toggleClass,
} from "./state";
import type { ClassSelection, Task, TaskView, TimerAction } from "./types";

export interface SessionOptions {
  baseUrl: string;
  project: string;
  worker: string;
  fetchImpl?: typeof fetch;
  /** Clock for timer events; defaults to wall-clock seconds. */
  now?: () => number;
  onQueueChange?: QueueListener;
}

export class AnnotationSession {
  readonly api: ApiClient;
  readonly queue: SubmissionQueue;
  classNames: string[] = [];
  tasks: Task[] = [];
  view: TaskView | null = null;
  private readonly now: () => number;

  constructor(private readonly opts: SessionOptions) {
    this.api = new ApiClient(opts.baseUrl, opts.fetchImpl);
    this.queue = new SubmissionQueue(this.api, opts.onQueueChange);
    this.now = opts.now ?? (() => Date.now() / 1000);
  }

  async loadTasks(): Promise<Task[]> {
    const res = await this.api.getTasks(this.opts.project, this.opts.worker);
    this.classNames = res.class_names;
    this.tasks = res.tasks;
    return this.tasks;
  }

  openTask(videoId: string): TaskView {
    const task = this.tasks.find((t) => t.video_id === videoId);
    if (!task) {
      throw new Error(`no task for video ${videoId}`);
    }
    this.view = createTaskView(task.video_id, task.timestamps);
    return this.view;
  }

  private requireView(): TaskView {
    if (!this.view) {
      throw new Error("no task open");
    }
    return this.view;
  }

  /** Timer buttons: legal actions only; each action posts a TimerEvent. */
  legalTimerActions(): TimerAction[] {
    return legalTimerActions(this.requireView().timer);
  }

  async timer(action: TimerAction): Promise<void> {
    const view = this.requireView();
    applyTimerAction(view, action); // throws on illegal transitions
    await this.api.postTimer({
      project: this.opts.project,
      worker: this.opts.worker,
      video: view.videoId,
      kind: action,
      timestamp: this.now(),
    });
  }

  toggleClass(classIndex: number): void {
    toggleClass(this.requireView(), classIndex);
  }

  /**
   * Commit the focused frame (multi-select answer, or [] for Background),
   * queue the POST, and advance to the next unlabeled frame.
   */
  async labelCurrentFrame(selection?: ClassSelection): Promise<ClassSelection> {
    const view = this.requireView();
    const frameT = currentTimestamp(view);
    const classes = labelFrame(view, selection);
    await this.queue.enqueue({
      project: this.opts.project,
      worker: this.opts.worker,
      video: view.videoId,
      frame_t: frameT,
      classes,
      submitted_at: this.now(),
    });
    return classes;
  }

  labelBackground(): Promise<ClassSelection> {
    return this.labelCurrentFrame([]);
  }

  goTo(index: number, force = false): boolean {
    return goTo(this.requireView(), index, force);
  }

  progress(): { labeled: number; total: number } {
    return progress(this.requireView());
  }

  isComplete(): boolean {
    return isComplete(this.requireView());
  }
}
