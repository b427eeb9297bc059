"""Sharded map / shuffle-by-key execution over a process pool."""

import hashlib
import multiprocessing
import os
import time
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence


@dataclass
class StageReport:
    stage: str
    input_count: int = 0
    output_count: int = 0
    wall_time: float = 0.0
    worker_items: dict = field(default_factory=dict)  # worker label -> items processed

    def to_dict(self):
        return {"stage": self.stage, "input": self.input_count, "output": self.output_count,
                "seconds": round(self.wall_time, 6), "workers": dict(self.worker_items)}


def stable_hash(key) -> int:
    return int.from_bytes(hashlib.blake2b(repr(key).encode("utf-8"), digest_size=8).digest(), "big")


def worker_for(key, workers: int) -> int:
    return stable_hash(key) % workers


def shuffle_by_key(records: Iterable, key_fn: Callable, workers: int = 1, sort_key=None):
    """Group records by key and assign each group to a worker by stable hash.

    Returns ``[(key, worker, sorted group), ...]`` ordered by key. Group
    contents do not depend on ``workers``; only the assignment does.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    groups = defaultdict(list)
    for r in records:
        groups[key_fn(r)].append(r)
    return [(k, worker_for(k, workers), sorted(v, key=sort_key))
            for k, v in sorted(groups.items(), key=lambda kv: kv[0])]


def shards(items: Sequence, size: int) -> list:
    if size < 1:
        raise ValueError("shard size must be >= 1")
    return [items[i:i + size] for i in range(0, len(items), size)]


def _traced(fn, task):
    return os.getpid(), fn(task)


class Executor:
    """Runs ``fn`` over tasks inline (one worker) or in a forked process pool.

    Results always come back in task order, so downstream output does not
    depend on scheduling. ``initializer`` runs once per process (and once
    inline) to install read-only shared state.
    """

    def __init__(self, workers: int = 1, initializer=None, initargs=()):
        if workers < 1:
            raise ValueError("workers must be >= 1")
        self.workers = workers
        self.initializer = initializer
        self.initargs = initargs
        self._pool = None

    def __enter__(self):
        if self.workers > 1:
            ctx = multiprocessing.get_context("fork")
            self._pool = ProcessPoolExecutor(self.workers, mp_context=ctx,
                                             initializer=self.initializer, initargs=self.initargs)
        elif self.initializer is not None:
            self.initializer(*self.initargs)
        return self

    def __exit__(self, *exc):
        if self._pool is not None:
            self._pool.shutdown(wait=True, cancel_futures=True)
            self._pool = None

    def map(self, fn, tasks: Sequence, report: StageReport = None, weight=len):
        """Apply ``fn`` to each task; per-worker item counts go to ``report``."""
        start = time.perf_counter()
        if self._pool is None:
            traced = [(os.getpid(), fn(t)) for t in tasks]
        else:
            futures = [self._pool.submit(_traced, fn, t) for t in tasks]
            traced = [f.result() for f in futures]
        if report is not None:
            counts = Counter()
            for (pid, _), t in zip(traced, tasks):
                counts[pid] += weight(t) if weight else 1
            labels = {pid: f"w{i}" for i, pid in enumerate(sorted(counts))}
            for pid, n in counts.items():
                report.worker_items[labels[pid]] = report.worker_items.get(labels[pid], 0) + n
            report.wall_time += time.perf_counter() - start
        return [r for _, r in traced]
