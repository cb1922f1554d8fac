// Shared types for the annotation frontend. The wire formats mirror the
// backend's JSON bodies exactly.

export type TimerState = "stopped" | "running" | "self_check";

export type TimerAction = "start" | "stop" | "self_check_start" | "self_check_stop";

export interface Task {
  video_id: string;
  scheme: string;
  timestamps: number[];
}

export interface TaskListResponse {
  worker: string;
  class_names: string[];
  tasks: Task[];
}

/** One frame's saved answer: class indices, [] meaning background. */
export type ClassSelection = number[];

export interface TaskView {
  videoId: string;
  timestamps: number[];
  currentIndex: number;
  /** Saved class sets keyed by frame index; missing key = unlabeled. */
  chosen: Map<number, ClassSelection>;
  /** In-progress multi-select for the focused frame, not yet saved. */
  pendingSelection: Set<number>;
  /** True when pendingSelection differs from the saved answer. */
  dirty: boolean;
  timer: TimerState;
}

export interface LabelBody {
  project: string;
  worker: string;
  video: string;
  frame_t: number;
  classes: number[];
  submitted_at: number;
}

export interface TimerBody {
  project: string;
  worker: string;
  video: string;
  kind: TimerAction;
  timestamp: number;
}

export interface ExportedLabel {
  t: number;
  classes: number[];
}

export interface ExportedVideo {
  video_id: string;
  labels: ExportedLabel[];
}

export interface TimeSummaryRow {
  video_id: string;
  worker: string;
  annotation_seconds: number;
  self_check_seconds: number;
  relative_time?: number;
  relative_time_with_self_check?: number;
}
