"""Brute-force enumeration of mixed cells, independent of the pivoting engine.

Every choice of ``m_i + 1`` points per support is tested directly: the
equalities are solved and every other point must lie strictly below.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .cellfile import CellFile
from .errors import GenericityFailure, InstanceTooLarge, VerificationFailure
from .linalg import EPS
from .support import Lifting, SupportSystem, cell_normalized_volume

MAX_TUPLES = 10**7


def _cayley(sys: SupportSystem, lifting: Lifting):
    block = sys.block_of()
    rows = np.zeros((sys.total_points, sys.s + sys.n))
    rows[np.arange(sys.total_points), block] = -1.0
    rows[:, sys.s :] = sys.points_array()
    return rows, np.asarray(lifting.values, dtype=float), block


def _check_cell(rows, rhs, labels, margin):
    """Solve the equalities of ``labels``; return ``(x, worst slack)`` or
    None when the system is singular."""
    C = rows[list(labels)]
    try:
        x = np.linalg.solve(C, rhs[list(labels)])
    except np.linalg.LinAlgError:
        return None
    others = np.setdiff1d(np.arange(len(rhs)), labels)
    slack = rows[others] @ x - rhs[others]
    return x, slack


def oracle_enumerate_cells(sys: SupportSystem, lifting: Lifting):
    """All mixed cells as ``(sorted labels, volume, x)`` and their total volume."""
    combos = math.prod(math.comb(len(A), m + 1) for A, m in zip(sys.supports, sys.multiplicities))
    if combos > MAX_TUPLES:
        raise InstanceTooLarge(f"{combos} subset tuples exceed the limit {MAX_TUPLES}")
    rows, rhs, _ = _cayley(sys, lifting)
    margin = sys.n * EPS
    offs = sys.offsets
    per_block = [
        list(itertools.combinations(range(off, off + len(A)), m + 1))
        for off, A, m in zip(offs, sys.supports, sys.multiplicities)
    ]
    cells, total = [], 0
    for choice in itertools.product(*per_block):
        blocks = [[sys.supports[i][l - offs[i]] for l in c] for i, c in enumerate(choice)]
        # skip degenerate cells before any floating point work
        try:
            vol = cell_normalized_volume(blocks)
        except Exception:
            continue
        labels = tuple(sorted(l for c in choice for l in c))
        res = _check_cell(rows, rhs, labels, margin)
        if res is None:
            continue
        x, slack = res
        if len(slack) and np.any(np.abs(slack) <= margin):
            raise GenericityFailure(f"constraint within {margin:.1e} of cell {labels}")
        if len(slack) == 0 or np.all(slack < 0):
            cells.append((labels, vol, x))
            total += vol
    cells.sort()
    return cells, total


def oracle_mixed_vertices(sys: SupportSystem, lifting: Lifting) -> list:
    """The normal vector xi of every mixed cell."""
    cells, _ = oracle_enumerate_cells(sys, lifting)
    return [x[sys.s :] for _, _, x in cells]


@dataclass
class VerificationReport:
    checked: int = 0
    total_volume: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def verify_cells(sys: SupportSystem, lifting: Lifting, cellfile: CellFile,
                 strict: bool = True) -> VerificationReport:
    """Re-check every cell of ``cellfile`` from scratch.

    With ``strict`` the first failure raises :class:`VerificationFailure`.
    """
    rows, rhs, block = _cayley(sys, lifting)
    margin = sys.n * EPS
    report = VerificationReport()
    offs = sys.offsets

    def fail(msg):
        report.failures.append(msg)
        if strict:
            raise VerificationFailure(msg)

    if (cellfile.n, cellfile.s) != (sys.n, sys.s):
        fail(f"cells file is for n={cellfile.n} s={cellfile.s}")
        return report
    for k, cell in enumerate(cellfile.cells):
        report.checked += 1
        sizes = [len(b) for b in cell.blocks]
        if sizes != [m + 1 for m in sys.multiplicities]:
            fail(f"cell {k}: block sizes {sizes} do not match multiplicities")
            continue
        if any(block[l] != i for i, b in enumerate(cell.blocks) for l in b):
            fail(f"cell {k}: label outside its block")
            continue
        pts = [[sys.supports[i][l - offs[i]] for l in b] for i, b in enumerate(cell.blocks)]
        try:
            vol = cell_normalized_volume(pts)
        except Exception:
            fail(f"cell {k}: degenerate")
            continue
        if vol != cell.volume:
            fail(f"cell {k}: volume {cell.volume} recorded, {vol} recomputed")
        res = _check_cell(rows, rhs, cell.labels, margin)
        if res is None:
            fail(f"cell {k}: singular active system")
            continue
        x, slack = res
        if len(slack) and not np.all(slack < -margin):
            fail(f"cell {k}: inequality violated (max slack {slack.max():.3e})")
        xi = x[sys.s :]
        scale = max(1.0, float(np.abs(xi).max()))
        if np.abs(xi - cell.xi0).max() > 1e-8 * scale:
            fail(f"cell {k}: recorded xi0 differs from the re-solved normal")
        report.total_volume += vol
    if report.total_volume != cellfile.mixed_volume:
        fail(f"mixed volume {cellfile.mixed_volume} recorded, cells sum to {report.total_volume}")
    return report
