"""Acceptance criteria, each at its stated tolerance.

Every test records one pass/fail line that the terminal summary prints.
Criterion 10 (hardware timings) is excluded by definition.
"""

import time

import numpy as np
import pytest

from conftest import CYCLIC3_B, CYCLIC3_XI, random_instance, record
from mixedcells.cellfile import format_cells
from mixedcells.generators import cyclic, generate
from mixedcells.oracle import oracle_enumerate_cells
from mixedcells.parallel import run_workers
from mixedcells.support import Lifting
from mixedcells.traversal import RunOptions, all_mixed_cells_full, prepare_run, run_serial

EPS_M = np.finfo(float).eps
SUITE_SIZE = 200


def _labels(result):
    return [c.labels for c in result.cells]


# -- criterion 1 ------------------------------------------------------------------

PUBLISHED = [
    ("katsura", 13, 8190, None),
    ("chandra", 18, 131072, None),
    ("eco", 19, 131072, None),
    ("cyclic", 12, 500352, 12),
    # noon-18 is optional; noon-10 = 3^10 - 20 stands in for it
    ("noon", 10, 59029, None),
]


@pytest.mark.slow
def test_criterion_1_published_mixed_volumes():
    lines, ok = [], True
    for family, n, mv, index in PUBLISHED:
        t0 = time.perf_counter()
        r = all_mixed_cells_full(generate(family, n), 0)
        good = r.mixed_volume == mv and (index is None or r.index == index)
        ok &= good
        extra = f" index {r.index}" if index else ""
        lines.append(
            f"{family}-{n}={r.mixed_volume}{extra} (visited {r.stats.visited}, "
            f"attempts {r.stats.attempts}, {time.perf_counter() - t0:.0f}s)"
        )
    record(1, ok, "; ".join(lines) + "; noon-18 skipped")
    assert ok, lines


# -- criterion 2 ------------------------------------------------------------------


def test_criterion_2_cyclic3_fixture():
    r = all_mixed_cells_full(cyclic(3), 0, RunOptions(hnf=False, lifting=Lifting(np.array(CYCLIC3_B))))
    got = sorted((tuple(c.xi0) for c in r.cells), key=lambda x: x[0])
    want = sorted(CYCLIC3_XI, key=lambda x: x[0])
    ok = len(got) == 2 and all(
        np.all(np.abs(np.subtract(g, w)) <= 1e-12 * np.abs(w)) for g, w in zip(got, want)
    )
    err = max(np.max(np.abs(np.subtract(g, w)) / np.abs(w)) for g, w in zip(got, want)) if len(got) == 2 else float("nan")
    record(2, ok, f"{len(got)} cells, max relative error {err:.1e}")
    assert ok


# -- criteria 3, 7, 9 share one random suite ---------------------------------------


def _suite():
    return [random_instance(np.random.default_rng(10_000 + k)) for k in range(SUITE_SIZE)]


def _observed_engine(check):
    def engine(setup):
        return run_serial(setup, observer=lambda f: check(setup.ctx, f))
    return engine


def test_criterion_3_oracle_equivalence_and_7_balancing():
    t0 = time.perf_counter()
    worst = [0.0]

    def balance(ctx, f):
        worst[0] = max(worst[0], ctx.balancing_residual(f))

    mismatches = []
    for k, (sys, lift) in enumerate(_suite()):
        cells, mv = oracle_enumerate_cells(sys, lift)
        r = all_mixed_cells_full(sys, k, RunOptions(lifting=lift), engine=_observed_engine(balance))
        same = r.mixed_volume == mv and _labels(r) == [c[0] for c in cells]
        same &= all(c.volume == o[1] for c, o in zip(r.cells, cells))
        if not same:
            mismatches.append(k)
    elapsed = time.perf_counter() - t0
    ok3 = not mismatches and elapsed <= 120
    ok7 = worst[0] <= 1e-8
    record(3, ok3, f"{SUITE_SIZE} instances, {len(mismatches)} mismatches, {elapsed:.1f}s")
    record(7, ok7, f"max relative balancing residual {worst[0]:.1e}")
    assert ok3 and ok7, (mismatches, elapsed, worst)


def test_criterion_9_rank_one_path():
    worst = [0.0]

    def check(ctx, f):
        for o in ctx.neighbors(f, materialize=False):
            if o.is_neighbor:
                fresh = ctx.materialize(o.labels)
                kappa = max(f.cond_estimate, fresh.cond_estimate)
                scale = max(1.0, np.abs(fresh.B).max())
                err = np.abs(o.B_update - fresh.B).max() / (kappa * EPS_M * scale)
                worst[0] = max(worst[0], err)

    differ = []
    for k, (sys, lift) in enumerate(_suite()):
        base = all_mixed_cells_full(sys, k, RunOptions(lifting=lift))
        fast = all_mixed_cells_full(sys, k, RunOptions(lifting=lift, rank1=True), engine=_observed_engine(check))
        if format_cells(base) != format_cells(fast):
            differ.append(k)
    ok = worst[0] <= 10 and not differ
    record(9, ok, f"max |dB| / (cond eps_M) = {worst[0]:.2f}, {len(differ)} differing outputs")
    assert ok, (worst, differ)


# -- criteria 4, 5 ------------------------------------------------------------------

INVARIANCE_SUITE = [("cyclic", 7), ("noon", 7), ("eco", 10), ("reimer", 6), ("graphmodel", 5)]


@pytest.mark.slow
def test_criterion_4_lifting_invariance():
    t0 = time.perf_counter()
    found = {}
    for family, n in INVARIANCE_SUITE:
        sys = generate(family, n)
        found[f"{family}-{n}"] = sorted({all_mixed_cells_full(sys, seed).mixed_volume for seed in range(10)})
    elapsed = time.perf_counter() - t0
    ok = all(len(v) == 1 for v in found.values()) and elapsed <= 300
    record(4, ok, ", ".join(f"{k}={v}" for k, v in found.items()) + f" ({elapsed:.0f}s)")
    assert ok, found


@pytest.mark.slow
def test_criterion_5_flag_invariance():
    diffs = []
    for family, n in INVARIANCE_SUITE:
        sys = generate(family, n)
        lift = Lifting.sample(np.random.default_rng(99), sys.total_points)
        ref = None
        for seed in range(5):
            labels = _labels(all_mixed_cells_full(sys, seed, RunOptions(lifting=lift)))
            ref = labels if ref is None else ref
            if labels != ref:
                diffs.append(f"{family}-{n} seed {seed}")
    record(5, not diffs, f"5 flag seeds per system, {len(diffs)} differing cell sets")
    assert not diffs


# -- criterion 6 ------------------------------------------------------------------


@pytest.mark.slow
def test_criterion_6_parallel_equivalence():
    sys = cyclic(10)
    outs = {N: format_cells(run_workers(sys, 1, N)) for N in (1, 2, 4, 8)}
    serial = format_cells(all_mixed_cells_full(sys, 1))
    ok = all(o == serial for o in outs.values())
    record(6, ok, f"cyclic-10, N in (1, 2, 4, 8), {serial.count(chr(10)) - 6} cells, identical={ok}")
    assert ok


# -- criterion 8 ------------------------------------------------------------------


def test_criterion_8_edge_degree_sum():
    totals = set()
    for seed in range(3):
        setup = prepare_run(cyclic(13), np.random.default_rng(seed), RunOptions(), None)
        totals.add(sum(h.E for h in setup.hulls))
    ok = totals == {133}
    record(8, ok, f"cyclic-13 sum E_i = {sorted(totals)} (published 133); visited-facet average skipped")
    assert ok, totals
