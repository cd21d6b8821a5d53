"""Mixed cells and mixed volumes of sparse polynomial systems by tropical
pivoting over lower facets."""

from .cellfile import CellFile, CellRecord, format_cells, parse_cells
from .errors import (
    DegenerateCell,
    GenericityFailure,
    HashCollision,
    IllConditioned,
    InputError,
    InstanceTooLarge,
    MixedCellsError,
    RankDeficient,
    SingularMatrix,
    SingularUpdate,
    TransportError,
    UnsupportedFamily,
    VerificationFailure,
)
from .generators import generate
from .oracle import oracle_enumerate_cells, oracle_mixed_vertices, verify_cells
from .parallel import ThreadTransport, Transport, run_workers
from .support import (
    Lifting,
    SupportSystem,
    bareiss_det,
    build_schedule,
    format_lifting,
    format_system,
    hermite_reduce,
    parse_lifting,
    parse_system,
)
from .traversal import MixedCell, RunOptions, RunResult, all_mixed_cells_full


def mixed_volume(sys: SupportSystem, seed: int = 0, **options) -> int:
    """Scaled mixed volume of ``sys``."""
    return all_mixed_cells_full(sys, seed, RunOptions(**options)).mixed_volume


__version__ = "0.1.0"
