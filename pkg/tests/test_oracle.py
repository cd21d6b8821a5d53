import itertools

import numpy as np
import pytest

from conftest import CYCLIC3_B, CYCLIC3_XI, f3_lifting, f3_system, segment_system
from mixedcells.cellfile import format_cells, parse_cells
from mixedcells.errors import InstanceTooLarge, VerificationFailure
from mixedcells.generators import cyclic
from mixedcells.oracle import oracle_enumerate_cells, oracle_mixed_vertices, verify_cells
from mixedcells.support import Lifting, SupportSystem
from mixedcells.traversal import RunOptions, all_mixed_cells_full


def test_segment():
    cells, mv = oracle_enumerate_cells(segment_system(), Lifting(np.array([0.25, 0.5])))
    assert mv == 3 and len(cells) == 1


def test_f3():
    _, mv = oracle_enumerate_cells(f3_system(), f3_lifting())
    assert mv == 1


def test_dense_quadrics():
    A = [p for p in itertools.product(range(3), repeat=2) if sum(p) <= 2]
    sys = SupportSystem.from_lists(2, [A, A])
    _, mv = oracle_enumerate_cells(sys, Lifting(np.random.default_rng(0).random(12)))
    assert mv == 4


def test_cyclic3_vertices():
    xs = sorted(oracle_mixed_vertices(cyclic(3), Lifting(np.array(CYCLIC3_B))), key=lambda x: x[0])
    for got, want in zip(xs, sorted(CYCLIC3_XI)):
        assert np.allclose(got, want, rtol=1e-12, atol=0)


def test_segment_vertex():
    (xi,) = oracle_mixed_vertices(segment_system(), Lifting(np.array([0.25, 0.5])))
    assert xi == pytest.approx([1 / 12], rel=1e-14)


def test_too_large():
    sys = cyclic(9)
    with pytest.raises(InstanceTooLarge):
        oracle_enumerate_cells(sys, Lifting(np.zeros(sys.total_points)))


def _run(sys, lifting):
    r = all_mixed_cells_full(sys, 0, RunOptions(lifting=lifting))
    return r, parse_cells(format_cells(r))


def test_verify_passes_on_engine_output():
    r, cf = _run(f3_system(), f3_lifting())
    rep = verify_cells(f3_system(), f3_lifting(), cf)
    assert rep.ok and rep.total_volume == 1


def test_verify_flags_non_hull_label():
    sys = cyclic(4)
    lift = Lifting(np.random.default_rng(1).random(sys.total_points))
    _, cf = _run(sys, lift)
    cell = cf.cells[0]
    blk = list(cell.blocks[0])
    off = 0
    others = [l for l in range(off, off + len(sys.supports[0])) if l not in blk]
    cell.blocks = (tuple(sorted([others[0]] + blk[1:])),) + cell.blocks[1:]
    rep = verify_cells(sys, lift, cf, strict=False)
    assert not rep.ok


def test_verify_flags_mv_edit():
    _, cf = _run(f3_system(), f3_lifting())
    cf.mixed_volume += 1
    with pytest.raises(VerificationFailure):
        verify_cells(f3_system(), f3_lifting(), cf)


def test_verify_flags_volume_edit():
    _, cf = _run(f3_system(), f3_lifting())
    cf.cells[0].volume = 2
    rep = verify_cells(f3_system(), f3_lifting(), cf, strict=False)
    assert any("volume" in f for f in rep.failures)


def test_verify_flags_wrong_xi():
    _, cf = _run(f3_system(), f3_lifting())
    cf.cells[0].xi0 = cf.cells[0].xi0 + 1e-3
    with pytest.raises(VerificationFailure):
        verify_cells(f3_system(), f3_lifting(), cf)


def test_verify_flags_wrong_lifting():
    _, cf = _run(f3_system(), f3_lifting())
    with pytest.raises(VerificationFailure):
        verify_cells(f3_system(), Lifting(np.array([0.7, 0.2, 0.1, 0.3, 0.05, 0.4])), cf)
