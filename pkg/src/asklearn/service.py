"""HTTP annotation service for the human oracle.

The engine runs in a worker thread and the web server in the main thread;
the SessionStore between them is the only shared state. The engine
publishes pending query images and blocks; annotators post labels through
the API; when the last pending id gets a label the engine wakes, the round
closes, and further posts for those ids are rejected.

Endpoints (JSON over HTTP, CORS open, localhost tool, no auth):
  GET  /api/session  -> {session_id, status, round, labeled_count,
                         budget_remaining, pending_count}
  GET  /api/queries  -> [{id, width, height, pixels, classes}], 409 unless
                        a round is awaiting labels; pixels is base64 of
                        8-bit grayscale row-major bytes
  POST /api/labels   -> {id, label}; 404 unknown id, 422 label out of
                        range, 409 round already closed
  GET  /api/metrics  -> per-round records, chronological

No payload ever contains a ground-truth label for a pool sample: the store
only ever sees images, posted labels, and test-set metric records.
"""

import base64
import threading
import time
import uuid
from pathlib import Path

import uvicorn
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .engine import ExperimentConfig, load_datasets, run_experiment
from .errors import (
    AnnotationTimeout,
    LabelOutOfRange,
    SessionClosed,
    UnknownId,
)


class SessionStore:
    """Shared state between the engine thread and HTTP handlers.

    All access goes through one condition variable. Writers notify on every
    state change; the engine waits on label completeness, pollers read
    consistent snapshots.
    """

    def __init__(
        self,
        num_classes: int,
        class_names=None,
        session_id: str | None = None,
    ) -> None:
        self._cond = threading.Condition()
        self.session_id = session_id or uuid.uuid4().hex[:12]
        self.num_classes = num_classes
        self.class_names = (
            list(class_names)
            if class_names
            else [str(i) for i in range(num_classes)]
        )
        self.status = "training"
        self.round_index = 0
        self.labeled_count = 0
        self.budget_remaining = 0
        self._pending: dict[int, dict] = {}
        self._received: dict[int, int] = {}
        self._closed_ids: set[int] = set()
        self._records: list[dict] = []
        self._closed = False

    # engine side

    def mark_training(
        self, round_index: int, labeled_count: int, budget_remaining: int
    ) -> None:
        with self._cond:
            self.status = "training"
            self.round_index = round_index
            self.labeled_count = labeled_count
            self.budget_remaining = budget_remaining
            self._pending = {}
            self._received = {}
            self._cond.notify_all()

    def begin_round(self, round_index: int, items: list[dict]) -> None:
        """Publish a query batch; items are {id, image(uint8 [H, W])}."""
        with self._cond:
            if self._closed:
                raise SessionClosed("session closed")
            self.round_index = round_index
            self._pending = {int(item["id"]): item for item in items}
            self._received = {}
            self.status = "awaiting_labels"
            self._cond.notify_all()

    def await_labels(self, ids, timeout: float | None = None) -> dict[int, int]:
        """Block until every id has a posted label; close the round and
        return the final (last-write-wins) labels."""
        wanted = [int(i) for i in ids]
        deadline = time.monotonic() + timeout if timeout is not None else None
        with self._cond:
            while not (
                self._closed or all(i in self._received for i in wanted)
            ):
                remaining = None
                if deadline is not None:
                    remaining = deadline - time.monotonic()
                    if remaining <= 0:
                        raise AnnotationTimeout(
                            f"round {self.round_index}: labels not complete "
                            f"within {timeout}s"
                        )
                self._cond.wait(remaining)
            if self._closed:
                raise SessionClosed("session closed while awaiting labels")
            snapshot = {i: int(self._received[i]) for i in wanted}
            self._closed_ids.update(self._pending)
            self._pending = {}
            self._received = {}
            self.status = "training"
            self._cond.notify_all()
            return snapshot

    def record_round(
        self, record: dict, labeled_count: int, budget_remaining: int
    ) -> None:
        with self._cond:
            self._records.append(dict(record))
            self.labeled_count = labeled_count
            self.budget_remaining = budget_remaining
            self._cond.notify_all()

    def finish(self) -> None:
        with self._cond:
            self.status = "finished"
            self._pending = {}
            self._received = {}
            self._cond.notify_all()

    def close(self) -> None:
        """Cancel the session; wakes and fails any blocked engine round."""
        with self._cond:
            self._closed = True
            self.status = "finished"
            self._cond.notify_all()

    # HTTP side

    def snapshot(self) -> dict:
        with self._cond:
            return {
                "session_id": self.session_id,
                "status": self.status,
                "round": self.round_index,
                "labeled_count": self.labeled_count,
                "budget_remaining": self.budget_remaining,
                "pending_count": len(self._pending) - len(self._received),
            }

    def pending_items(self) -> list[dict] | None:
        """Unlabeled pending queries as wire payloads; None unless a round
        is awaiting labels."""
        with self._cond:
            if self.status != "awaiting_labels":
                return None
            out = []
            for i, item in self._pending.items():
                if i in self._received:
                    continue
                image = item["image"]
                out.append(
                    {
                        "id": i,
                        "width": int(image.shape[1]),
                        "height": int(image.shape[0]),
                        "pixels": base64.b64encode(image.tobytes()).decode("ascii"),
                        "classes": list(self.class_names),
                    }
                )
            return out

    def post_label(self, sample_id: int, label: int) -> None:
        sample_id = int(sample_id)
        label = int(label)
        with self._cond:
            if sample_id in self._pending:
                if not 0 <= label < self.num_classes:
                    raise LabelOutOfRange(
                        f"label {label} outside [0, {self.num_classes})"
                    )
                self._received[sample_id] = label
                self._cond.notify_all()
                return
            if sample_id in self._closed_ids:
                raise SessionClosed(f"round with id {sample_id} already closed")
            raise UnknownId(f"id {sample_id} is not pending")

    def metrics(self) -> list[dict]:
        with self._cond:
            return [dict(r) for r in self._records]


class LabelPost(BaseModel):
    id: int
    label: int


def create_app(store: SessionStore | None, frontend_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="asklearn annotation service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def _store() -> SessionStore:
        if store is None:
            raise HTTPException(status_code=404, detail="no active session")
        return store

    @app.get("/api/session")
    def get_session() -> dict:
        return _store().snapshot()

    @app.get("/api/queries")
    def get_queries() -> list[dict]:
        items = _store().pending_items()
        if items is None:
            raise HTTPException(status_code=409, detail="no round awaiting labels")
        return items

    @app.post("/api/labels")
    def post_label(body: LabelPost) -> dict:
        try:
            _store().post_label(body.id, body.label)
        except UnknownId as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except LabelOutOfRange as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except SessionClosed as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return {"ok": True, "id": body.id, "label": body.label}

    @app.get("/api/metrics")
    def get_metrics() -> list[dict]:
        return _store().metrics()

    if frontend_dir and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="ui")
    return app


def default_frontend_dir() -> str | None:
    """Built annotation UI when running from a source checkout."""
    candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return str(candidate) if candidate.is_dir() else None


def serve_experiment(
    config: ExperimentConfig,
    port: int = 8000,
    host: str = "127.0.0.1",
    frontend_dir: str | None = None,
) -> None:
    """Run the experiment on a worker thread and serve the annotation API.

    Blocks until the server exits; the session is closed on the way out so
    a round blocked on labels aborts cleanly (its checkpoint, if configured,
    was written at the previous commit).
    """
    train_ds, _ = load_datasets(config)
    store = SessionStore(
        train_ds.num_classes,
        class_names=config.class_names,
    )
    store.budget_remaining = config.budget
    errors: list[BaseException] = []

    def _run() -> None:
        try:
            run_experiment(config, session=store)
        except SessionClosed:
            pass
        except BaseException as exc:  # surfaced after server exit
            errors.append(exc)
            store.finish()

    worker = threading.Thread(target=_run, name="asklearn-engine", daemon=True)
    worker.start()
    try:
        app = create_app(store, frontend_dir or default_frontend_dir())
        uvicorn.run(app, host=host, port=port, log_level="info")
    finally:
        store.close()
    if errors:
        raise errors[0]
