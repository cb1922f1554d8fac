"""Annotation backend: projects, block-randomized allocation, label and
timer ingestion, and export to the label JSON format.

The store is a single-writer append log: every mutation is serialized under
one lock, written as a JSONL record, and flushed to disk before the caller
sees an ack. Restarting a store on the same directory replays the log.
Label submissions upsert by (video, frame timestamp); timer events must
alternate start/stop per (worker, video, kind family).
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import AAPLLabelSet, labels_to_json
from .sampling import SamplingPlan, plan_from_json, plan_to_json

TIMER_KINDS = ("start", "stop", "self_check_start", "self_check_stop")


@dataclass(frozen=True)
class TimerEvent:
    worker: str
    video: str
    kind: str
    timestamp: float  # wall-clock seconds

    def __post_init__(self) -> None:
        if self.kind not in TIMER_KINDS:
            raise ValueError(f"unknown timer kind {self.kind!r}")

    @property
    def family(self) -> str:
        return "self_check" if self.kind.startswith("self_check") else "annotation"

    @property
    def is_start(self) -> bool:
        return self.kind.endswith("start")


@dataclass(frozen=True)
class LabelSubmission:
    worker: str
    video: str
    frame_t: float
    classes: frozenset[int]
    submitted_at: float = 0.0


@dataclass
class Project:
    id: str
    class_names: tuple[str, ...]
    workers: tuple[str, ...]
    schemes: tuple[str, ...]
    plans: dict[str, SamplingPlan]
    durations: dict[str, float]
    allocation: dict[str, tuple[str, str]]  # video -> (worker, scheme)

    def tasks_for(self, worker: str) -> list[dict]:
        out = []
        for video_id, (w, scheme) in self.allocation.items():
            if w == worker:
                out.append(
                    {
                        "video_id": video_id,
                        "scheme": scheme,
                        "timestamps": list(self.plans[video_id].timestamps),
                    }
                )
        return out


def allocate_block_randomized(
    video_ids: list[str],
    workers: list[str],
    schemes: list[str],
    seed: int = 0,
) -> dict[str, tuple[str, str]]:
    """Assign each video one (worker, scheme) pair in balanced blocks.

    Videos are shuffled, then consumed in blocks of len(workers) *
    len(schemes); a fresh shuffled pair list per block means every pair
    occurs exactly once per complete block and at most once in the final
    partial block.
    """
    if not workers or not schemes:
        raise ValueError("need at least one worker and one scheme")
    rng = np.random.default_rng(seed)
    order = list(video_ids)
    rng.shuffle(order)
    pairs = [(w, s) for w in workers for s in schemes]
    allocation: dict[str, tuple[str, str]] = {}
    cursor = 0
    while cursor < len(order):
        block = order[cursor : cursor + len(pairs)]
        shuffled = [pairs[i] for i in rng.permutation(len(pairs))]
        for video_id, pair in zip(block, shuffled):
            allocation[video_id] = pair
        cursor += len(pairs)
    return allocation


class SubmissionError(ValueError):
    """Raised when a label or timer submission violates the project state."""


class ProjectStore:
    """Single-writer store with an append-log; safe for concurrent readers."""

    def __init__(self, root: str | Path | None = None):
        self._lock = threading.Lock()
        self._projects: dict[str, Project] = {}
        self._labels: dict[str, dict[tuple[str, float], LabelSubmission]] = {}
        self._timers: dict[str, list[TimerEvent]] = {}
        self._log_path: Path | None = None
        self._log_file = None
        if root is not None:
            root = Path(root)
            root.mkdir(parents=True, exist_ok=True)
            self._log_path = root / "store.jsonl"
            if self._log_path.exists():
                for line in self._log_path.read_text().splitlines():
                    if line.strip():
                        self._replay(json.loads(line))
            self._log_file = open(self._log_path, "a")

    # -- durability --------------------------------------------------

    def _append(self, record: dict) -> None:
        if self._log_file is None:
            return
        self._log_file.write(json.dumps(record, sort_keys=True) + "\n")
        self._log_file.flush()
        os.fsync(self._log_file.fileno())

    def _replay(self, record: dict) -> None:
        kind = record.pop("kind")
        if kind == "project":
            self._install_project(self._project_from_json(record))
        elif kind == "label":
            sub = LabelSubmission(
                worker=record["worker"],
                video=record["video"],
                frame_t=float(record["frame_t"]),
                classes=frozenset(int(c) for c in record["classes"]),
                submitted_at=float(record.get("submitted_at", 0.0)),
            )
            self._apply_label(record["project"], sub)
        elif kind == "timer":
            event = TimerEvent(
                worker=record["worker"],
                video=record["video"],
                kind=record["event_kind"],
                timestamp=float(record["timestamp"]),
            )
            self._timers.setdefault(record["project"], []).append(event)

    # -- projects ----------------------------------------------------

    @staticmethod
    def _project_to_json(project: Project) -> dict:
        return {
            "id": project.id,
            "class_names": list(project.class_names),
            "workers": list(project.workers),
            "schemes": list(project.schemes),
            "plans": [plan_to_json(p) for p in project.plans.values()],
            "durations": project.durations,
            "allocation": {v: list(pair) for v, pair in project.allocation.items()},
        }

    @staticmethod
    def _project_from_json(obj: dict) -> Project:
        plans = {p["video_id"]: plan_from_json(p) for p in obj["plans"]}
        return Project(
            id=obj["id"],
            class_names=tuple(obj["class_names"]),
            workers=tuple(obj["workers"]),
            schemes=tuple(obj["schemes"]),
            plans=plans,
            durations={k: float(v) for k, v in obj["durations"].items()},
            allocation={v: (pair[0], pair[1]) for v, pair in obj["allocation"].items()},
        )

    def _install_project(self, project: Project) -> None:
        self._projects[project.id] = project
        self._labels.setdefault(project.id, {})
        self._timers.setdefault(project.id, [])

    def create_project(
        self,
        project_id: str,
        class_names: list[str],
        plans: list[SamplingPlan],
        durations: dict[str, float],
        workers: list[str],
        schemes: list[str],
        seed: int = 0,
    ) -> Project:
        with self._lock:
            if project_id in self._projects:
                raise SubmissionError(f"project {project_id!r} already exists")
            for plan in plans:
                duration = durations.get(plan.video_id)
                plan.validate(duration)
            allocation = allocate_block_randomized(
                [p.video_id for p in plans], workers, schemes, seed
            )
            project = Project(
                id=project_id,
                class_names=tuple(class_names),
                workers=tuple(workers),
                schemes=tuple(schemes),
                plans={p.video_id: p for p in plans},
                durations=dict(durations),
                allocation=allocation,
            )
            self._install_project(project)
            record = {"kind": "project"} | self._project_to_json(project)
            self._append(record)
            return project

    def project(self, project_id: str) -> Project:
        try:
            return self._projects[project_id]
        except KeyError:
            raise KeyError(f"unknown project {project_id!r}") from None

    def plan_for_video(self, video_id: str, project_id: str | None = None) -> SamplingPlan:
        if project_id is not None:
            return self.project(project_id).plans[video_id]
        for project in reversed(list(self._projects.values())):
            if video_id in project.plans:
                return project.plans[video_id]
        raise KeyError(f"no plan for video {video_id!r}")

    # -- labels ------------------------------------------------------

    def _apply_label(self, project_id: str, sub: LabelSubmission) -> None:
        self._labels.setdefault(project_id, {})[(sub.video, sub.frame_t)] = sub

    def submit_labels(self, project_id: str, submissions: list[LabelSubmission]) -> int:
        """Validate and upsert submissions; ack (return) only after the log
        write. Returns the number of records applied."""
        with self._lock:
            project = self.project(project_id)
            for sub in submissions:
                if sub.video not in project.plans:
                    raise SubmissionError(f"video {sub.video!r} not in project")
                if sub.frame_t not in project.plans[sub.video].timestamps:
                    raise SubmissionError(
                        f"timestamp {sub.frame_t} not in the plan for {sub.video!r}"
                    )
                worker, _scheme = project.allocation[sub.video]
                if sub.worker != worker:
                    raise SubmissionError(
                        f"video {sub.video!r} is allocated to {worker!r}, not {sub.worker!r}"
                    )
            for sub in submissions:
                self._apply_label(project_id, sub)
                self._append(
                    {
                        "kind": "label",
                        "project": project_id,
                        "worker": sub.worker,
                        "video": sub.video,
                        "frame_t": sub.frame_t,
                        "classes": sorted(sub.classes),
                        "submitted_at": sub.submitted_at,
                    }
                )
            return len(submissions)

    def export_labels(self, project_id: str) -> list[dict]:
        """One label object per video, the corpus JSON format; unlabeled
        sampled frames are omitted. Pure function of the stored submissions."""
        project = self.project(project_id)
        stored = self._labels.get(project_id, {})
        out = []
        for video_id in sorted(project.plans):
            labels = [
                (t, sub.classes)
                for (vid, t), sub in stored.items()
                if vid == video_id
            ]
            label_set = AAPLLabelSet(video_id, tuple(sorted(labels)))
            out.append(labels_to_json(label_set))
        return out

    # -- timers ------------------------------------------------------

    def _validate_timer(self, project_id: str, event: TimerEvent) -> None:
        history = [
            e
            for e in self._timers.get(project_id, [])
            if e.worker == event.worker and e.video == event.video
            and e.family == event.family
        ]
        if event.is_start:
            if history and history[-1].is_start:
                raise SubmissionError(
                    f"{event.kind} while a {event.family} session is already running"
                )
        else:
            if not history or not history[-1].is_start:
                raise SubmissionError(f"{event.kind} without a matching start")
            if event.timestamp <= history[-1].timestamp:
                raise SubmissionError("stop must come strictly after its start")

    def record_timer(self, project_id: str, event: TimerEvent) -> None:
        with self._lock:
            project = self.project(project_id)
            if event.video not in project.plans:
                raise SubmissionError(f"video {event.video!r} not in project")
            self._validate_timer(project_id, event)
            self._timers.setdefault(project_id, []).append(event)
            self._append(
                {
                    "kind": "timer",
                    "project": project_id,
                    "worker": event.worker,
                    "video": event.video,
                    "event_kind": event.kind,
                    "timestamp": event.timestamp,
                }
            )

    def summarize_time(self, project_id: str) -> list[dict]:
        """Per (video, worker) durations split into annotation and self-check,
        plus time relative to the video duration."""
        project = self.project(project_id)
        sessions: dict[tuple[str, str], dict[str, float]] = {}
        open_starts: dict[tuple[str, str, str], float] = {}
        for event in self._timers.get(project_id, []):
            key = (event.video, event.worker)
            slot = sessions.setdefault(key, {"annotation": 0.0, "self_check": 0.0})
            open_key = (event.video, event.worker, event.family)
            if event.is_start:
                open_starts[open_key] = event.timestamp
            else:
                slot[event.family] += event.timestamp - open_starts.pop(open_key)
        out = []
        for (video, worker), slot in sorted(sessions.items()):
            duration_min = project.durations.get(video, 0.0) / 60.0
            annotation_min = slot["annotation"] / 60.0
            self_check_min = slot["self_check"] / 60.0
            entry = {
                "video_id": video,
                "worker": worker,
                "annotation_seconds": slot["annotation"],
                "self_check_seconds": slot["self_check"],
            }
            if duration_min > 0:
                entry["relative_time"] = annotation_min / duration_min
                entry["relative_time_with_self_check"] = (
                    (annotation_min + self_check_min) / duration_min
                )
            out.append(entry)
        return out


# ---------------------------------------------------------------------------
# HTTP layer

from pydantic import BaseModel


class PlanBody(BaseModel):
    video_id: str
    timestamps: list[float]
    method: str = "regular"
    params: dict = {}


class ProjectBody(BaseModel):
    id: str
    class_names: list[str]
    plans: list[PlanBody]
    durations: dict[str, float] = {}
    workers: list[str]
    schemes: list[str] = ["aapl"]
    seed: int = 0


class LabelBody(BaseModel):
    project: str
    worker: str
    video: str
    frame_t: float
    classes: list[int]
    submitted_at: float = 0.0


class TimerBody(BaseModel):
    project: str
    worker: str
    video: str
    kind: str
    timestamp: float


def create_app(store: ProjectStore, frames_dir: str | Path | None = None):
    """FastAPI app over a ProjectStore; all state lives in the store."""
    from fastapi import FastAPI, HTTPException, Query
    from fastapi.responses import FileResponse

    app = FastAPI(title="aapl annotation service")

    @app.post("/projects")
    def post_project(body: ProjectBody):
        plans = [
            SamplingPlan(p.video_id, tuple(p.timestamps), p.method, p.params)
            for p in body.plans
        ]
        try:
            project = store.create_project(
                body.id, body.class_names, plans, body.durations,
                body.workers, body.schemes, body.seed,
            )
        except (SubmissionError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"id": project.id, "allocation": {v: list(p) for v, p in project.allocation.items()}}

    @app.get("/projects/{project_id}/tasks")
    def get_tasks(project_id: str, worker: str = Query(...)):
        try:
            project = store.project(project_id)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return {
            "worker": worker,
            "class_names": list(project.class_names),
            "tasks": project.tasks_for(worker),
        }

    @app.get("/videos/{video_id}/plan")
    def get_plan(video_id: str, project: str | None = None):
        try:
            plan = store.plan_for_video(video_id, project)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return plan_to_json(plan)

    @app.post("/labels")
    def post_labels(body: LabelBody):
        sub = LabelSubmission(
            worker=body.worker,
            video=body.video,
            frame_t=body.frame_t,
            classes=frozenset(body.classes),
            submitted_at=body.submitted_at,
        )
        try:
            count = store.submit_labels(body.project, [sub])
        except SubmissionError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return {"applied": count}

    @app.post("/timer")
    def post_timer(body: TimerBody):
        try:
            event = TimerEvent(body.worker, body.video, body.kind, body.timestamp)
            store.record_timer(body.project, event)
        except (SubmissionError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return {"ok": True}

    @app.get("/projects/{project_id}/export")
    def get_export(project_id: str):
        try:
            return store.export_labels(project_id)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.get("/projects/{project_id}/time")
    def get_time(project_id: str):
        try:
            return store.summarize_time(project_id)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    if frames_dir is not None:
        frames_root = Path(frames_dir)

        @app.get("/frames/{video_id}/{timestamp}")
        def get_frame(video_id: str, timestamp: str):
            # Frame rendering is an external preprocessing step; this only
            # serves whatever images exist under frames_dir/<video>/<t>.jpg.
            path = frames_root / video_id / f"{timestamp}.jpg"
            if not path.is_file():
                raise HTTPException(status_code=404, detail="frame image not found")
            return FileResponse(path)

    return app
