"""
Chunked Monte Carlo runner.

A study of ``reps`` replications is cut into chunks of ``chunk_size``. Chunk
``i`` draws from ``SeedSequence([seed, *key, i])`` so the numbers a chunk sees
depend only on its index, never on how many workers ran it or in which order
chunks finished. Chunks are dispatched in batches of ``jobs`` onto a process
pool through asyncio; with ``jobs=1`` they run in-process.
"""

from __future__ import annotations

import asyncio
import hashlib
import logging
import time
from concurrent.futures import Executor, ProcessPoolExecutor
from datetime import datetime
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import settings
from utils.constants import MSG_CHUNK_FAILED, MSG_PROCESSING_BATCH, MSG_PROGRESS
from utils.helpers import calculate_eta, chunk_sizes

logger = logging.getLogger(__name__)

# fn(size, seed_sequence, *args) -> chunk result
ChunkTask = Callable[..., Any]


def stream_key(*parts: Any) -> Tuple[int, ...]:
    """Stable integer words for a SeedSequence from arbitrary labels."""
    words = []
    for part in parts:
        if isinstance(part, (int, np.integer)) and part >= 0:
            words.append(int(part))
        else:
            digest = hashlib.sha256(str(part).encode("utf-8")).digest()
            words.append(int.from_bytes(digest[:4], "little"))
    return tuple(words)


def chunk_seed(seed: int, key: Sequence[int], index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), *key, int(index)])


class MonteCarloRunner:
    """Runs chunked replications, in-process or on a process pool."""

    def __init__(self, jobs: Optional[int] = None, chunk_size: Optional[int] = None):
        self.jobs = max(1, jobs if jobs is not None else settings.jobs)
        self.chunk_size = max(1, chunk_size if chunk_size is not None else settings.chunk_size)

        self.stats: Dict[str, Any] = {
            "start_time": None,
            "chunks_done": 0,
            "reps_done": 0,
            "failed": 0,
        }

    def run(
        self,
        task: ChunkTask,
        reps: int,
        seed: int,
        key: Sequence[int],
        args: Tuple[Any, ...] = (),
        label: str = "",
    ) -> List[Any]:
        """Run ``task`` over ``reps`` replications; results ordered by chunk index."""
        sizes = chunk_sizes(reps, self.chunk_size)
        if self.jobs == 1:
            return self._run_serial(task, sizes, seed, key, args, label)
        return asyncio.run(self._run_pool(task, sizes, seed, key, args, label))

    def _start(self) -> float:
        self.stats["start_time"] = datetime.now()
        return time.monotonic()

    def _record(self, size: int) -> None:
        self.stats["chunks_done"] += 1
        self.stats["reps_done"] += size

    def _run_serial(
        self,
        task: ChunkTask,
        sizes: List[int],
        seed: int,
        key: Sequence[int],
        args: Tuple[Any, ...],
        label: str,
    ) -> List[Any]:
        started = self._start()
        results = []
        total = sum(sizes)
        for index, size in enumerate(sizes):
            results.append(task(size, chunk_seed(seed, key, index), *args))
            self._record(size)
            logger.debug(
                MSG_PROGRESS.format(
                    label=label,
                    current=self.stats["reps_done"],
                    total=total,
                    eta=calculate_eta(index + 1, len(sizes), time.monotonic() - started),
                )
            )
        return results

    async def _run_pool(
        self,
        task: ChunkTask,
        sizes: List[int],
        seed: int,
        key: Sequence[int],
        args: Tuple[Any, ...],
        label: str,
    ) -> List[Any]:
        started = self._start()
        loop = asyncio.get_running_loop()
        results: List[Any] = [None] * len(sizes)
        total_batches = (len(sizes) + self.jobs - 1) // self.jobs

        with ProcessPoolExecutor(max_workers=self.jobs) as executor:
            for i in range(0, len(sizes), self.jobs):
                indices = list(range(i, min(i + self.jobs, len(sizes))))
                logger.info(
                    MSG_PROCESSING_BATCH.format(
                        label=label,
                        batch=i // self.jobs + 1,
                        total=total_batches,
                        size=sum(sizes[j] for j in indices),
                    )
                )
                batch = await self._process_batch(
                    loop, executor, task, indices, sizes, seed, key, args
                )
                for index, result in zip(indices, batch):
                    results[index] = result
                    self._record(sizes[index])

                logger.info(
                    MSG_PROGRESS.format(
                        label=label,
                        current=self.stats["reps_done"],
                        total=sum(sizes),
                        eta=calculate_eta(
                            indices[-1] + 1, len(sizes), time.monotonic() - started
                        ),
                    )
                )
        return results

    async def _process_batch(
        self,
        loop: asyncio.AbstractEventLoop,
        executor: Executor,
        task: ChunkTask,
        indices: List[int],
        sizes: List[int],
        seed: int,
        key: Sequence[int],
        args: Tuple[Any, ...],
    ) -> List[Any]:
        futures = [
            loop.run_in_executor(
                executor, task, sizes[index], chunk_seed(seed, key, index), *args
            )
            for index in indices
        ]
        outcomes = await asyncio.gather(*futures, return_exceptions=True)

        for index, outcome in zip(indices, outcomes):
            if isinstance(outcome, BaseException):
                self.stats["failed"] += 1
                logger.error(MSG_CHUNK_FAILED.format(index=index, error=outcome))
                raise outcome
        return list(outcomes)
