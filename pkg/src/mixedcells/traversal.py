"""Graph exploration of lower facets and the end-to-end driver."""

from __future__ import annotations

import heapq
import itertools
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import GenericityFailure, HashCollision, RankDeficient
from .linalg import sample_orthogonal
from .pivot import Flag, LowerFacet, PivotContext
from .support import (
    LatticeReduction,
    Lifting,
    SupportSystem,
    affine_reduce,
    build_schedule,
    cell_normalized_volume,
    validate_system,
)

log = logging.getLogger(__name__)


_SPLIT = 134217729.0  # 2^27 + 1


def hash_facet(H: Sequence[float], labels: Sequence[int]) -> float:
    """``sum_j H_j l_j mod 1``, reduced term by term.

    Summing the raw products first would leave only ~1e-12 of resolution on
    large systems, enough for collisions among a few million facets.  Each
    ``H_j`` is split into two halves of at most 27 bits, so both partial
    products with a label are exact and so is their fractional part.
    """
    acc = 0.0
    for h, lab in zip(H, labels):
        t = _SPLIT * h
        hh = t - (t - h)
        acc = (acc + (hh * lab) % 1.0 + ((h - hh) * lab) % 1.0) % 1.0
    return acc


@dataclass
class TraversalStats:
    n: int
    v: list  # visited facets per level
    cells: int = 0
    mixed_volume: int = 0
    pushed: int = 0
    E: list = field(default_factory=list)
    V: list = field(default_factory=list)
    sizes: list = field(default_factory=list)
    wall_time: float = 0.0
    attempts: int = 1

    @property
    def visited(self) -> int:
        return sum(self.v)

    def merge(self, other: "TraversalStats") -> None:
        self.v = [a + b for a, b in zip(self.v, other.v)]
        self.cells += other.cells
        self.mixed_volume += other.mixed_volume
        self.pushed += other.pushed


def _glog(x: float) -> float:
    return math.log(max(x, math.e))


def compute_T_stats(stats: TraversalStats, sys: SupportSystem):
    """Work estimates ``(T, T')`` of the facet traversal and the hull passes."""
    n = sys.n
    v2 = sum(stats.v[2:])
    T = v2 * (n * n * sum(stats.E) + _glog(v2))
    vmax = max(stats.V) if stats.V else 1
    T2 = vmax * (n * n * sys.total_points + _glog(vmax))
    return T, T2


# -- serial exploration --------------------------------------------------------


class VisitedSet:
    """Hash keys of expanded facets.

    Each key also stores a fingerprint of its label list so that two distinct
    facets with the same hash are detected; ``debug`` keeps the full lists.
    """

    def __init__(self, debug: bool = False):
        self.debug = debug
        self._seen: dict = {}

    def __len__(self):
        return len(self._seen)

    def visit(self, sigma: float, labels: tuple) -> bool:
        """True if already visited; otherwise records the facet."""
        tag = labels if self.debug else hash(labels)
        old = self._seen.get(sigma)
        if old is None:
            self._seen[sigma] = tag
            return False
        if old != tag:
            raise HashCollision(f"hash {sigma!r} shared by two facets")
        return True


def expand(ctx: PivotContext, facet: LowerFacet):
    """Neighbors of ``facet`` as ``(labels, B_update)`` pairs, and whether the
    facet is a mixed cell."""
    moves, is_cell = ctx.expand_labels(facet)
    out = []
    for dropped, entering in moves:
        kept = [a for a in facet.active if a != dropped]
        labels = tuple(sorted(kept + [entering]))
        B = None
        if ctx.rank1:
            j = ctx.s + facet.level if dropped is None else facet.active.index(dropped)
            B = ctx.rank_one_inverse(facet, j, entering, labels)
        out.append((labels, B))
    return out, is_cell


def expand_reference(ctx: PivotContext, facet: LowerFacet):
    """Same as :func:`expand` through the numpy pivot routines."""
    out = [(o.labels, o.B_update) for o in ctx.neighbors(facet, materialize=False)
           if o.is_neighbor]
    return out, is_mixed_cell(ctx, facet)


def is_mixed_cell(ctx: PivotContext, facet: LowerFacet) -> bool:
    return facet.level == ctx.n and ctx.is_quota(facet)


def cell_blocks(ctx: PivotContext, labels: Sequence[int]) -> tuple:
    return tuple(
        tuple(lab for lab in labels if ctx.block[lab] == i) for i in range(ctx.s)
    )


def facet_volume(ctx: PivotContext, labels: Sequence[int]) -> int:
    pts = ctx.sys.points_array()
    blocks = cell_blocks(ctx, labels)
    return cell_normalized_volume([[tuple(pts[l]) for l in b] for b in blocks])


def all_mixed_cells(
    ctx: PivotContext,
    H: Sequence[float],
    sink: Callable | None = None,
    observer: Callable | None = None,
    debug: bool = False,
) -> TraversalStats:
    """Explore the facet graph from the start facet.

    ``sink(facet, volume)`` receives every mixed cell; ``observer(facet)``
    sees every expanded facet.  Pending facets are popped lowest hash first.
    """
    stats = TraversalStats(ctx.n, [0] * (ctx.n + 1))
    t_start = time.perf_counter()
    start = ctx.start_facet()
    tie = itertools.count()
    pending = [(hash_facet(H, start.active), start.active, next(tie), None)]
    visited = VisitedSet(debug)
    while pending:
        sigma, labels, _, B = heapq.heappop(pending)
        if visited.visit(sigma, labels):
            continue
        facet = ctx.materialize(labels, B)
        stats.v[facet.level] += 1
        if observer is not None:
            observer(facet)
        nbrs, is_cell = expand(ctx, facet)
        if is_cell:
            vol = facet_volume(ctx, labels)
            stats.cells += 1
            stats.mixed_volume += vol
            if sink is not None:
                sink(facet, vol)
        for nb_labels, nb_B in nbrs:
            heapq.heappush(pending, (hash_facet(H, nb_labels), nb_labels, next(tie), nb_B))
            stats.pushed += 1
    stats.wall_time = time.perf_counter() - t_start
    return stats


# -- lower hull pass -------------------------------------------------------------


@dataclass
class HullResult:
    dim: int
    simplices: list  # tuples of local point indices
    edges: set
    E: int
    V: int
    pruned: list  # local indices of the lower hull vertices


def lower_hull_pass(
    points: Sequence[tuple],
    values: Sequence[float],
    rng: np.random.Generator,
    H: Sequence[float],
) -> HullResult:
    """Regular triangulation of one lifted support, computed by the same
    traversal with a single block in affine-hull lattice coordinates."""
    coords, rows, _ = affine_reduce(points)
    d = len(rows)
    if d == 0:
        return HullResult(0, [(0,)], set(), 0, 1, [0])
    sub = SupportSystem.from_lists(d, [coords], [d])
    flag = Flag.standard(sample_orthogonal(rng, d))
    ctx = PivotContext(sub, Lifting(np.asarray(values, dtype=float)), flag, build_schedule(sub))
    simplices = []
    vols = []

    def sink(facet, vol):
        simplices.append(facet.active)
        vols.append(vol)

    all_mixed_cells(ctx, H, sink)
    edges = set()
    for sx in simplices:
        for a in range(len(sx)):
            for b in range(a + 1, len(sx)):
                edges.add((sx[a], sx[b]))
    degree = np.zeros(len(points), dtype=int)
    for a, b in edges:
        degree[a] += 1
        degree[b] += 1
    pruned = sorted({p for sx in simplices for p in sx})
    return HullResult(d, simplices, edges, int(degree.max()) if edges else 0, sum(vols), pruned)


def skeleton_adjacency(sys: SupportSystem, hulls: Sequence[HullResult]) -> np.ndarray:
    adj = np.zeros((sys.total_points, sys.total_points), dtype=bool)
    for off, hull in zip(sys.offsets, hulls):
        for a, b in hull.edges:
            adj[off + a, off + b] = adj[off + b, off + a] = True
    return adj


# -- full driver -------------------------------------------------------------------


@dataclass
class RunOptions:
    hnf: bool = True
    rank1: bool = False
    naive: bool = False
    retries: int = 3
    lifting: Lifting | None = None
    debug: bool = False
    workers: int = 1


@dataclass
class MixedCell:
    blocks: tuple  # labels per block
    volume: int  # |det| in the original coordinates
    xi0: np.ndarray
    lambda0: np.ndarray

    @property
    def labels(self) -> tuple:
        return tuple(sorted(l for b in self.blocks for l in b))


@dataclass
class RunSetup:
    sys: SupportSystem  # system the traversal runs on (reduced when hnf)
    original: SupportSystem
    reduction: LatticeReduction | None
    lifting: Lifting
    H: np.ndarray
    flag: Flag
    hulls: list
    ctx: PivotContext


@dataclass
class RunResult:
    seed: int
    original: SupportSystem
    lifting: Lifting
    cells: list
    stats: TraversalStats
    index: int
    reduced_mixed_volume: int

    @property
    def mixed_volume(self) -> int:
        return self.reduced_mixed_volume * self.index


def prepare_run(sys: SupportSystem, rng: np.random.Generator, options: RunOptions,
                lifting: Lifting | None) -> RunSetup:
    if lifting is None:
        lifting = Lifting.sample(rng, sys.total_points)
    H = rng.random(2 * sys.n)
    flag = Flag.standard(sample_orthogonal(rng, sys.n))
    reduction = None
    work = sys
    if options.hnf:
        from .support import hermite_reduce

        work, reduction = hermite_reduce(sys)
    hulls = []
    for off, A in zip(work.offsets, work.supports):
        hulls.append(lower_hull_pass(A, lifting.values[off : off + len(A)], rng, H))
    schedule = build_schedule(work, [h.V for h in hulls])
    adjacency = None if options.naive else skeleton_adjacency(work, hulls)
    ctx = PivotContext(work, lifting, flag, schedule, adjacency, rank1=options.rank1)
    return RunSetup(work, sys, reduction, lifting, H, flag, hulls, ctx)


def to_mixed_cell(setup: RunSetup, facet: LowerFacet) -> MixedCell:
    """Cell record in the original coordinates, recomputed from the labels
    alone so that it does not depend on how the facet was reached."""
    ctx = setup.ctx
    fresh = ctx.materialize(facet.active)
    xi, lam = fresh.xi0.copy(), fresh.lambda0.copy()
    if setup.reduction is not None:
        xi = setup.reduction.xi_to_original(xi)
        lam = setup.reduction.lambda_to_original(lam, xi)
    blocks = cell_blocks(ctx, facet.active)
    orig = setup.original
    offs = orig.offsets
    pts = [[orig.supports[i][l - offs[i]] for l in b] for i, b in enumerate(blocks)]
    return MixedCell(blocks, cell_normalized_volume(pts), xi, lam)


def run_serial(setup: RunSetup, observer=None, debug=False):
    cells = []
    stats = all_mixed_cells(
        setup.ctx, setup.H, lambda f, v: cells.append(to_mixed_cell(setup, f)),
        observer, debug,
    )
    return cells, stats


def all_mixed_cells_full(
    sys: SupportSystem,
    seed: int = 0,
    options: RunOptions | None = None,
    observer: Callable | None = None,
    engine: Callable | None = None,
) -> RunResult:
    """Mixed cells and scaled mixed volume of ``sys``.

    Draws the lifting, hash coefficients and flag from ``seed``; a genericity
    failure or hash collision restarts with fresh draws from the same stream.
    A rank-deficient system reports mixed volume 0 without traversal.
    """
    options = options or RunOptions()
    validate_system(sys)
    t0 = time.perf_counter()
    if engine is None:
        engine = lambda setup: run_serial(setup, observer, options.debug)  # noqa: E731
    last_exc = None
    for attempt in range(options.retries + 1):
        # attempt k draws from seed + k, so the recorded seed replays it directly
        run_seed = seed + attempt
        rng = np.random.default_rng(run_seed)
        try:
            setup = prepare_run(sys, rng, options, options.lifting)
        except RankDeficient:
            stats = TraversalStats(sys.n, [0] * (sys.n + 1), sizes=list(sys.sizes))
            fallback = options.lifting or Lifting(np.zeros(sys.total_points))
            return RunResult(run_seed, sys, fallback, [], stats, 1, 0)
        except (GenericityFailure, HashCollision) as exc:
            log.warning("attempt %d failed in hull pass: %s", attempt + 1, exc)
            last_exc = exc
            continue
        try:
            cells, stats = engine(setup)
        except (GenericityFailure, HashCollision) as exc:
            log.warning("attempt %d failed: %s", attempt + 1, exc)
            last_exc = exc
            continue
        cells.sort(key=lambda c: c.labels)
        stats.E = [h.E for h in setup.hulls]
        stats.V = [h.V for h in setup.hulls]
        stats.sizes = list(sys.sizes)
        stats.attempts = attempt + 1
        stats.wall_time = time.perf_counter() - t0
        index = setup.reduction.index if setup.reduction else 1
        total = sum(c.volume for c in cells)
        if total != stats.mixed_volume * index:
            raise GenericityFailure(
                f"cell volumes sum to {total}, traversal counted {stats.mixed_volume * index}"
            )
        return RunResult(run_seed, sys, setup.lifting, cells, stats, index, stats.mixed_volume)
    raise GenericityFailure(f"giving up after {options.retries + 1} attempts: {last_exc}")
