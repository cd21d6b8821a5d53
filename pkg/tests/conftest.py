import itertools

import numpy as np
import pytest

from mixedcells.support import Lifting, SupportSystem

TRIANGLE = [(0, 0), (1, 0), (0, 1)]

# lifting of the random cyclic-3 instance, in label order of the generated
# supports; b_4 and b_5 sit on e3+e1 and e2+e3 respectively
CYCLIC3_B = [
    0.0681718062929322, 0.2764482146232536, 0.4266688073141105,
    0.8654168322306781, 0.2369372029023467, 0.6630347993316177,
    0.6575801418616753, 0.2139433513437121,
]
CYCLIC3_XI = [
    (1.7041246197535198e-01, -2.5568513445391900e-01, 5.2890946299653028e-01),
    (2.8794667050532442e-01, 4.9622307883564581e-01, -3.4053295882300698e-01),
]


def f3_system():
    return SupportSystem.from_lists(2, [TRIANGLE, TRIANGLE])


def f3_lifting():
    return Lifting(np.array([0.1, 0.2, 0.7, 0.4, 0.05, 0.3]))


def segment_system():
    return SupportSystem.from_lists(1, [[(0,), (3,)]])


@pytest.fixture
def f3():
    return f3_system(), f3_lifting()


def random_instance(rng, max_n=3, max_size=6, box=3):
    """Random support system with n <= max_n and #A_i <= max_size."""
    n = int(rng.integers(1, max_n + 1))
    # random composition of n into multiplicities
    cuts = sorted(rng.choice(np.arange(1, n), size=int(rng.integers(0, n)), replace=False)) if n > 1 else []
    mult = [b - a for a, b in zip([0] + list(cuts), list(cuts) + [n])]
    grid = list(itertools.product(range(box + 1), repeat=n))
    supports = []
    for m in mult:
        size = int(rng.integers(m + 1, min(max_size, len(grid)) + 1))
        idx = rng.choice(len(grid), size=size, replace=False)
        supports.append([grid[k] for k in idx])
    sys = SupportSystem.from_lists(n, supports, mult)
    return sys, Lifting(rng.random(sys.total_points))


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE = {}


def record(criterion, ok, detail=""):
    ACCEPTANCE[criterion] = (bool(ok), detail)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())
