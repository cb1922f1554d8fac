"""Annotation backend walkthrough, no browser required.

Creates a project with block-randomized worker allocation, submits labels
and timer events the way the web UI would, and exports the label files.
Run the real server with `aapl serve --store DIR` and point the frontend
at it for the interactive version.
"""

from fastapi.testclient import TestClient

from aapl.sampling import SamplingPlan
from aapl.service import ProjectStore, create_app

store = ProjectStore()  # in-memory; pass a directory for a durable log
client = TestClient(create_app(store))

plans = [
    {"video_id": f"v{i}", "timestamps": [2.5, 7.5, 12.5], "method": "regular",
     "params": {"interval": 5.0}}
    for i in range(4)
]
created = client.post(
    "/projects",
    json={
        "id": "kitchen-study",
        "class_names": ["pour", "stir", "open"],
        "plans": plans,
        "durations": {f"v{i}": 15.0 for i in range(4)},
        "workers": ["alice", "bob"],
        "schemes": ["aapl", "point"],
        "seed": 42,
    },
).json()
print("allocation (video -> worker, scheme):")
for video_id, pair in sorted(created["allocation"].items()):
    print(f"  {video_id}: {pair[0]:6s} {pair[1]}")

# A worker asks for their task list, then labels through the same endpoints
# the browser UI uses: timer start, one submission per frame, timer stop.
worker = created["allocation"]["v0"][0]
tasks = client.get("/projects/kitchen-study/tasks", params={"worker": worker}).json()
print(f"\n{worker}'s tasks: {[t['video_id'] for t in tasks['tasks']]}")

client.post("/timer", json={"project": "kitchen-study", "worker": worker,
                            "video": "v0", "kind": "start", "timestamp": 0.0})
for frame_t, classes in [(2.5, [0, 1]), (7.5, []), (12.5, [2])]:
    res = client.post("/labels", json={
        "project": "kitchen-study", "worker": worker, "video": "v0",
        "frame_t": frame_t, "classes": classes,
    })
    assert res.status_code == 200
client.post("/timer", json={"project": "kitchen-study", "worker": worker,
                            "video": "v0", "kind": "stop", "timestamp": 21.0})

# Self-checking is timed separately, mirroring the measurement protocol.
client.post("/timer", json={"project": "kitchen-study", "worker": worker,
                            "video": "v0", "kind": "self_check_start", "timestamp": 25.0})
client.post("/timer", json={"project": "kitchen-study", "worker": worker,
                            "video": "v0", "kind": "self_check_stop", "timestamp": 31.0})

print("\nexported labels:")
for entry in client.get("/projects/kitchen-study/export").json():
    if entry["labels"]:
        print(" ", entry)

print("\ntime summary:")
for row in client.get("/projects/kitchen-study/time").json():
    print(
        f"  {row['video_id']} by {row['worker']}: "
        f"{row['annotation_seconds']:.0f}s annotating, "
        f"{row['self_check_seconds']:.0f}s self-check, "
        f"relative time {row['relative_time']:.2f}"
    )
