"""Background search jobs: FIFO queue, worker pool, replayable progress events."""

from __future__ import annotations

import os
import threading
import time
import uuid
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator

from .discovery import SearchCancelled, SearchConfig, SearchResult, discover

QUEUED = "queued"
RUNNING = "running"
DONE = "done"
FAILED = "failed"
CANCELLED = "cancelled"
TERMINAL = (DONE, FAILED, CANCELLED)


@dataclass
class Job:
    id: str
    config: SearchConfig
    state: str = QUEUED
    events: list[dict] = field(default_factory=list)
    progress: dict = field(default_factory=dict)
    result: SearchResult | None = None
    error: str | None = None
    created: float = field(default_factory=time.monotonic)
    finished: float | None = None
    cancel_flag: threading.Event = field(default_factory=threading.Event)


class JobManager:
    """Runs searches on a bounded worker pool; one FIFO queue, in-memory history.

    Every mutation happens under one lock; ``_cond`` wakes both idle workers
    and event-stream readers. Event lists only grow, so a reader can replay
    from any sequence number and see the same prefix every time.
    """

    def __init__(self, workers: int | None = None, ttl_seconds: float = 86400.0):
        self._jobs: dict[str, Job] = {}
        self._queue: deque[str] = deque()
        self._lock = threading.Lock()
        self._cond = threading.Condition(self._lock)
        self._closed = False
        self.ttl_seconds = ttl_seconds
        count = workers if workers is not None else (os.cpu_count() or 2)
        self._threads = [
            threading.Thread(target=self._worker, name=f"search-worker-{i}", daemon=True)
            for i in range(max(1, count))
        ]
        for t in self._threads:
            t.start()

    # -- submission and inspection ------------------------------------

    def submit(self, config: SearchConfig) -> str:
        job = Job(id=uuid.uuid4().hex, config=config)
        with self._cond:
            self._purge_locked()
            self._jobs[job.id] = job
            self._queue.append(job.id)
            self._cond.notify_all()
        return job.id

    def get(self, job_id: str) -> Job:
        with self._cond:
            self._purge_locked()
            job = self._jobs.get(job_id)
            if job is None:
                raise KeyError(job_id)
            return job

    def cancel(self, job_id: str) -> str:
        """Request cancellation; returns the state after the request.

        Queued jobs flip to cancelled immediately; running jobs stop at the
        next optimizer step; finished jobs just report their final state.
        """
        with self._cond:
            job = self._jobs.get(job_id)
            if job is None:
                raise KeyError(job_id)
            if job.state == QUEUED:
                job.state = CANCELLED
                job.finished = time.monotonic()
                self._append_event_locked(job, {"type": "cancelled"})
            elif job.state == RUNNING:
                job.cancel_flag.set()
            return job.state

    def events(self, job_id: str, start: int = 0, poll: float = 0.5) -> Iterator[dict]:
        """Yield events in order from ``start``; returns after the terminal event."""
        seq = start
        while True:
            with self._cond:
                job = self._jobs.get(job_id)
                if job is None:
                    return
                while seq >= len(job.events):
                    if job.state in TERMINAL or self._closed:
                        return
                    self._cond.wait(poll)
                batch = job.events[seq:]
                seq = len(job.events)
            yield from batch

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()
        for t in self._threads:
            t.join(timeout=2.0)

    # -- internals ------------------------------------------------------

    def _append_event_locked(self, job: Job, event: dict) -> None:
        event = dict(event)
        event["seq"] = len(job.events)
        job.events.append(event)
        for key in ("phase", "loss", "edge_count"):
            if key in event:
                job.progress[key] = event[key]
        self._cond.notify_all()

    def _purge_locked(self) -> None:
        now = time.monotonic()
        dead = [
            jid
            for jid, job in self._jobs.items()
            if job.finished is not None and now - job.finished > self.ttl_seconds
        ]
        for jid in dead:
            del self._jobs[jid]

    def _next_job(self) -> Job | None:
        with self._cond:
            while not self._closed:
                while self._queue:
                    job = self._jobs.get(self._queue.popleft())
                    if job is not None and job.state == QUEUED:
                        job.state = RUNNING
                        return job
                self._cond.wait(0.5)
            return None

    def _worker(self) -> None:
        while True:
            job = self._next_job()
            if job is None:
                return

            def emit(event: dict, job: Job = job) -> None:
                with self._cond:
                    self._append_event_locked(job, event)

            try:
                result = discover(
                    job.config, progress=emit, should_stop=job.cancel_flag.is_set
                )
                with self._cond:
                    job.result = result
                    job.state = DONE
                    job.finished = time.monotonic()
                    self._cond.notify_all()
            except SearchCancelled:
                with self._cond:
                    job.state = CANCELLED
                    job.finished = time.monotonic()
                    self._append_event_locked(job, {"type": "cancelled"})
            except Exception as exc:  # noqa: BLE001 - job must record any failure
                with self._cond:
                    job.state = FAILED
                    job.error = f"{type(exc).__name__}: {exc}"
                    job.finished = time.monotonic()
                    self._append_event_locked(job, {"type": "failed", "error": job.error})
