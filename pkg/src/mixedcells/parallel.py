"""Hash-partitioned traversal over a message transport.

Worker ``k`` owns the facets whose hash falls in ``[k/N, (k+1)/N)``.  Work
proceeds in rounds: every worker drains its inbox, expands all facets it has
pending and sends each neighbor to its owner; a barrier then makes every
message visible and an or-reduction over the pending flags decides whether
another round is needed.
"""

from __future__ import annotations

import heapq
import itertools
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass

from .errors import MixedCellsError, TransportError
from .traversal import (
    RunOptions,
    RunResult,
    RunSetup,
    TraversalStats,
    VisitedSet,
    all_mixed_cells_full,
    expand,
    facet_volume,
    hash_facet,
    to_mixed_cell,
)


def owner(sigma: float, N: int) -> int:
    return min(int(N * sigma), N - 1)


@dataclass(frozen=True)
class WorkerConfig:
    N: int
    k: int

    def owns(self, sigma: float) -> bool:
        return owner(sigma, self.N) == self.k


@dataclass(frozen=True)
class Envelope:
    dest: int
    labels: tuple


class Transport(ABC):
    """Message passing among ``N`` workers.

    ``send`` may be called at any time; ``barrier`` blocks until all workers
    reach it, after which every envelope sent before the barrier is returned
    by its recipient's next ``drain``.
    """

    def __init__(self, N: int):
        self.N = N

    @abstractmethod
    def send(self, env: Envelope) -> None: ...

    @abstractmethod
    def drain(self, k: int) -> list: ...

    @abstractmethod
    def barrier(self) -> None: ...

    def abort(self) -> None:
        """Release every worker blocked in ``barrier``."""


class ThreadTransport(Transport):
    """In-process channels for workers running as threads."""

    def __init__(self, N: int):
        super().__init__(N)
        self._boxes = [[] for _ in range(N)]
        self._locks = [threading.Lock() for _ in range(N)]
        self._barrier = threading.Barrier(N)
        self.sent = 0

    def send(self, env: Envelope) -> None:
        if not 0 <= env.dest < self.N:
            raise TransportError(f"no worker {env.dest}")
        with self._locks[env.dest]:
            self._boxes[env.dest].append(env)
            self.sent += 1

    def drain(self, k: int) -> list:
        with self._locks[k]:
            out, self._boxes[k] = self._boxes[k], []
        return out

    def barrier(self) -> None:
        try:
            self._barrier.wait()
        except threading.BrokenBarrierError as exc:
            raise TransportError("barrier broken by another worker") from exc

    def abort(self) -> None:
        self._barrier.abort()


class Worker:
    def __init__(self, setup: RunSetup, cfg: WorkerConfig, transport: Transport, debug=False):
        self.setup = setup
        self.cfg = cfg
        self.transport = transport
        self.ctx = setup.ctx
        self.frontier = []
        self.visited = VisitedSet(debug)
        self.cells = []
        self.stats = TraversalStats(self.ctx.n, [0] * (self.ctx.n + 1))
        self._tie = itertools.count()
        self.error = None

    def post(self, labels: tuple) -> None:
        sigma = hash_facet(self.setup.H, labels)
        self.transport.send(Envelope(owner(sigma, self.cfg.N), labels))

    def receive(self) -> None:
        for env in self.transport.drain(self.cfg.k):
            sigma = hash_facet(self.setup.H, env.labels)
            if not self.cfg.owns(sigma):
                raise TransportError(f"worker {self.cfg.k} got a facet it does not own")
            heapq.heappush(self.frontier, (sigma, env.labels, next(self._tie)))

    def work(self) -> None:
        ctx = self.ctx
        while self.frontier:
            sigma, labels, _ = heapq.heappop(self.frontier)
            if self.visited.visit(sigma, labels):
                continue
            facet = ctx.materialize(labels)
            self.stats.v[facet.level] += 1
            nbrs, is_cell = expand(ctx, facet)
            if is_cell:
                self.stats.cells += 1
                self.stats.mixed_volume += facet_volume(ctx, labels)
                self.cells.append(to_mixed_cell(self.setup, facet))
            for nb_labels, _ in nbrs:
                self.post(nb_labels)
                self.stats.pushed += 1


def quiescence(workers) -> bool:
    """True iff no worker has pending facets (all workers at the barrier)."""
    return not any(w.frontier for w in workers)


def _run_rounds(workers, transport: Transport, flags: list) -> None:
    def loop(w: Worker):
        try:
            while True:
                transport.barrier()
                w.receive()
                flags[w.cfg.k] = bool(w.frontier)
                transport.barrier()
                if not any(flags):
                    return
                w.work()
        except BaseException as exc:  # noqa: BLE001 - reported by the caller
            w.error = exc
            transport.abort()

    threads = [threading.Thread(target=loop, args=(w,), daemon=True) for w in workers[1:]]
    for t in threads:
        t.start()
    loop(workers[0])
    for t in threads:
        t.join()


def parallel_engine(N: int, transport_factory=ThreadTransport, debug=False):
    """Engine for :func:`all_mixed_cells_full` running ``N`` workers."""

    def engine(setup: RunSetup):
        transport = transport_factory(N)
        workers = [Worker(setup, WorkerConfig(N, k), transport, debug) for k in range(N)]
        start = setup.ctx.start_facet()
        workers[0].post(start.active)
        _run_rounds(workers, transport, [False] * N)
        errors = [w.error for w in workers if w.error is not None]
        primary = [e for e in errors if isinstance(e, MixedCellsError) and not isinstance(e, TransportError)]
        if primary or errors:
            raise (primary or errors)[0]
        stats = TraversalStats(setup.ctx.n, [0] * (setup.ctx.n + 1))
        cells = []
        for w in workers:
            stats.merge(w.stats)
            cells.extend(w.cells)
        return cells, stats

    return engine


def run_workers(sys, seed: int, N: int, transport_factory=ThreadTransport,
                options: RunOptions | None = None) -> RunResult:
    """All mixed cells computed by ``N`` cooperating workers; the result
    equals the serial run for the same seed."""
    options = options or RunOptions()
    return all_mixed_cells_full(
        sys, seed, options, engine=parallel_engine(N, transport_factory, options.debug)
    )
