"""MVCELLS text format."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError


@dataclass
class CellRecord:
    volume: int
    blocks: tuple
    xi0: np.ndarray
    lambda0: np.ndarray

    @property
    def labels(self) -> tuple:
        return tuple(sorted(l for b in self.blocks for l in b))


@dataclass
class CellFile:
    seed: int
    n: int
    s: int
    index: int
    mixed_volume: int
    cells: list


def _floats(values) -> str:
    return " ".join(repr(float(x)) for x in values)


def format_cells(result) -> str:
    """Render a :class:`~mixedcells.traversal.RunResult`."""
    out = [
        "MVCELLS 1",
        f"seed {result.seed}",
        f"n {result.original.n} s {result.original.s}",
        f"index {result.index}",
        f"scaled_mixed_volume {result.mixed_volume}",
        f"cells {len(result.cells)}",
    ]
    for c in result.cells:
        parts = [f"cell {c.volume}"]
        parts += [" ".join(map(str, b)) for b in c.blocks]
        parts += [f"xi0 {_floats(c.xi0)}", f"lambda0 {_floats(c.lambda0)}"]
        out.append(" ; ".join(parts))
    return "\n".join(out) + "\n"


def parse_cells(text: str) -> CellFile:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    try:
        if lines[0] != "MVCELLS 1":
            raise InputError("missing 'MVCELLS 1' header")
        seed = int(lines[1].split()[1])
        tok = lines[2].split()
        n, s = int(tok[1]), int(tok[3])
        index = int(lines[3].split()[1])
        mv = int(lines[4].split()[1])
        count = int(lines[5].split()[1])
        cells = []
        for line in lines[6:]:
            parts = [p.strip() for p in line.split(";")]
            head = parts[0].split()
            if head[0] != "cell" or len(parts) != s + 3:
                raise InputError(f"malformed cell line: {line!r}")
            blocks = tuple(tuple(int(x) for x in p.split()) for p in parts[1 : s + 1])
            xi = parts[s + 1].split()
            lam = parts[s + 2].split()
            if xi[0] != "xi0" or lam[0] != "lambda0":
                raise InputError(f"malformed cell line: {line!r}")
            cells.append(
                CellRecord(int(head[1]), blocks, np.array(xi[1:], dtype=float),
                           np.array(lam[1:], dtype=float))
            )
    except (IndexError, ValueError) as exc:
        raise InputError(f"malformed cells file: {exc}") from exc
    if len(cells) != count:
        raise InputError(f"header announces {count} cells, found {len(cells)}")
    return CellFile(seed, n, s, index, mv, cells)
