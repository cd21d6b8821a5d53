"""Problem instances: supports, multiplicities, lattice reduction, schedules
and exact cell volumes.

Points are tuples of Python ints.  Labels are global 0-based indices into
the concatenation ``A_1 + ... + A_s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateCell, InputError, RankDeficient

Point = tuple


@dataclass(frozen=True)
class SupportSystem:
    n: int
    supports: tuple  # tuple of tuples of points
    multiplicities: tuple

    @classmethod
    def from_lists(cls, n, supports, multiplicities=None) -> "SupportSystem":
        sups = tuple(tuple(tuple(int(c) for c in p) for p in A) for A in supports)
        if multiplicities is None:
            multiplicities = (1,) * len(sups)
        return cls(int(n), sups, tuple(int(m) for m in multiplicities))

    @property
    def s(self) -> int:
        return len(self.supports)

    @property
    def sizes(self) -> tuple:
        return tuple(len(A) for A in self.supports)

    @property
    def total_points(self) -> int:
        return sum(self.sizes)

    @property
    def offsets(self) -> tuple:
        out, acc = [], 0
        for A in self.supports:
            out.append(acc)
            acc += len(A)
        return tuple(out)

    def block_of(self) -> np.ndarray:
        """Block index of every global label."""
        return np.repeat(np.arange(self.s), self.sizes)

    def points_array(self) -> np.ndarray:
        """All points stacked in label order, shape ``(total_points, n)``."""
        pts = [p for A in self.supports for p in A]
        return np.array(pts, dtype=np.int64).reshape(len(pts), self.n)

    def point(self, label: int) -> Point:
        for i, off in enumerate(self.offsets):
            if label < off + len(self.supports[i]):
                return self.supports[i][label - off]
        raise IndexError(label)


@dataclass(frozen=True)
class Lifting:
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(vals)):
            raise InputError("lifting values must be finite")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    @classmethod
    def sample(cls, rng: np.random.Generator, size: int) -> "Lifting":
        return cls(rng.random(size))


@dataclass(frozen=True)
class Schedule:
    """``table[d][i]`` is m_i(d) for ``0 <= d <= n``."""

    table: tuple
    order: tuple

    @property
    def n(self) -> int:
        return len(self.table) - 1

    def m(self, d: int) -> tuple:
        return self.table[d]

    def q(self, d: int) -> int:
        """The block whose quota grows between levels d-1 and d."""
        prev, cur = self.table[d - 1], self.table[d]
        for i, (a, b) in enumerate(zip(prev, cur)):
            if b == a + 1:
                return i
        raise ValueError(f"no block grows at level {d}")


@dataclass(frozen=True)
class LatticeReduction:
    translations: tuple
    basis: tuple  # n rows of n ints, upper triangular (Hermite form)
    index: int

    def unreduce_point(self, block: int, coords: Sequence[int]) -> Point:
        t = self.translations[block]
        n = len(t)
        return tuple(
            t[k] + sum(coords[r] * self.basis[r][k] for r in range(len(coords)))
            for k in range(n)
        )

    def unreduce(self, reduced: SupportSystem) -> SupportSystem:
        sups = [
            [self.unreduce_point(i, p) for p in A]
            for i, A in enumerate(reduced.supports)
        ]
        return SupportSystem.from_lists(reduced.n, sups, reduced.multiplicities)

    def xi_to_original(self, xi: np.ndarray) -> np.ndarray:
        """Map a dual vector from reduced coordinates back to Z^n coordinates."""
        L = np.array(self.basis, dtype=float)
        return np.linalg.solve(L, np.asarray(xi, dtype=float))

    def lambda_to_original(self, lam: np.ndarray, xi_orig: np.ndarray) -> np.ndarray:
        t = np.array(self.translations, dtype=float)
        return np.asarray(lam, dtype=float) + t @ xi_orig


def validate_system(sys: SupportSystem) -> None:
    if sys.n < 1:
        raise InputError("dimension n must be positive")
    if sys.s < 1:
        raise InputError("at least one support is required")
    if len(sys.multiplicities) != sys.s:
        raise InputError(
            f"got {len(sys.multiplicities)} multiplicities for {sys.s} supports"
        )
    if any(m < 0 for m in sys.multiplicities):
        raise InputError("multiplicities must be non-negative")
    if sum(sys.multiplicities) != sys.n:
        raise InputError(
            f"multiplicities sum to {sum(sys.multiplicities)}, expected n={sys.n}"
        )
    for i, A in enumerate(sys.supports):
        if not A:
            raise InputError(f"support {i + 1} is empty")
        for p in A:
            if len(p) != sys.n:
                raise InputError(
                    f"support {i + 1} has a point of length {len(p)}, expected {sys.n}"
                )
        if len(set(A)) != len(A):
            raise InputError(f"support {i + 1} contains a duplicate point")


# -- integer lattice helpers -------------------------------------------------


def hermite_rows(vectors: Iterable[Sequence[int]], ncols: int):
    """Row Hermite normal form of the lattice spanned by ``vectors``.

    Returns ``(rows, pivots)``: the non-zero rows of the echelon form and the
    pivot column of each row.  Pivots are positive and entries above a pivot
    are reduced into ``[0, pivot)``.
    """
    M = [list(map(int, v)) for v in vectors if any(v)]
    rows, pivots = [], []
    r = 0
    for c in range(ncols):
        # gcd-reduce column c among rows r..end
        while True:
            nz = [k for k in range(r, len(M)) if M[k][c] != 0]
            if not nz:
                break
            k0 = min(nz, key=lambda k: abs(M[k][c]))
            M[r], M[k0] = M[k0], M[r]
            done = True
            for k in range(r + 1, len(M)):
                if M[k][c]:
                    f = M[k][c] // M[r][c]
                    if f:
                        M[k] = [x - f * y for x, y in zip(M[k], M[r])]
                    if M[k][c]:
                        done = False
            if done:
                break
        if r < len(M) and M[r][c] != 0:
            if M[r][c] < 0:
                M[r] = [-x for x in M[r]]
            for k in range(r):
                f = M[k][c] // M[r][c]
                if f:
                    M[k] = [x - f * y for x, y in zip(M[k], M[r])]
            pivots.append(c)
            r += 1
            M = M[:r] + [row for row in M[r:] if any(row)]
        if r == len(M):
            break
    rows = [tuple(M[k]) for k in range(r)]
    return rows, pivots


def lattice_coordinates(v: Sequence[int], rows, pivots) -> tuple:
    """Integer coordinates of ``v`` in the Hermite basis ``rows``."""
    res = list(map(int, v))
    coords = []
    for row, p in zip(rows, pivots):
        c, rem = divmod(res[p], row[p])
        if rem:
            raise ValueError(f"{tuple(v)} is not in the lattice")
        coords.append(c)
        if c:
            res = [x - c * y for x, y in zip(res, row)]
    if any(res):
        raise ValueError(f"{tuple(v)} is not in the lattice")
    return tuple(coords)


def affine_reduce(points: Sequence[Point]):
    """Coordinates of ``points`` in a basis of the affine lattice they generate.

    The first point is sent to the origin.  Returns ``(coords, rows,
    pivots)``; ``len(rows)`` is the dimension of the affine hull.
    """
    a0 = points[0]
    diffs = [tuple(x - y for x, y in zip(p, a0)) for p in points]
    rows, pivots = hermite_rows(diffs, len(a0))
    coords = [lattice_coordinates(v, rows, pivots) for v in diffs]
    return coords, rows, pivots


def affine_dimension(points: Sequence[Point]) -> int:
    a0 = points[0]
    diffs = [tuple(x - y for x, y in zip(p, a0)) for p in points]
    return len(hermite_rows(diffs, len(a0))[0])


def hermite_reduce(sys: SupportSystem):
    """Rewrite the supports in a basis of the lattice generated by their
    differences.

    Each support is translated by its lexicographically smallest point, which
    is a vertex of its convex hull.  Raises :class:`RankDeficient` when that
    lattice has rank below ``n``.
    """
    validate_system(sys)
    translations = tuple(min(A) for A in sys.supports)
    diffs = [
        tuple(x - y for x, y in zip(p, t))
        for A, t in zip(sys.supports, translations)
        for p in A
    ]
    rows, pivots = hermite_rows(diffs, sys.n)
    if len(rows) < sys.n:
        raise RankDeficient(
            f"supports generate a lattice of rank {len(rows)} < n={sys.n}"
        )
    index = math.prod(rows[k][pivots[k]] for k in range(sys.n))
    reduced = [
        [lattice_coordinates(tuple(x - y for x, y in zip(p, t)), rows, pivots) for p in A]
        for A, t in zip(sys.supports, translations)
    ]
    red = SupportSystem.from_lists(sys.n, reduced, sys.multiplicities)
    return red, LatticeReduction(translations, tuple(rows), index)


# -- schedule -----------------------------------------------------------------


def build_schedule(sys: SupportSystem, volumes: Sequence[int] | None = None) -> Schedule:
    """Order supports by (dimension, normalized volume, size) and fill the
    quotas one support at a time in that order.

    ``volumes`` are the normalized volumes of the convex hulls; when omitted
    the volume key is ignored.  Ties keep the input order.
    """
    dims = [affine_dimension(A) for A in sys.supports]
    vols = list(volumes) if volumes is not None else [0] * sys.s
    order = tuple(
        sorted(range(sys.s), key=lambda i: (dims[i], vols[i], len(sys.supports[i]), i))
    )
    table = []
    for d in range(sys.n + 1):
        row = [0] * sys.s
        before = 0
        for i in order:
            row[i] = min(sys.multiplicities[i], max(0, d - before))
            before += sys.multiplicities[i]
        table.append(tuple(row))
    return Schedule(tuple(table), order)


# -- exact volumes ------------------------------------------------------------


def _hadamard_fits_int64(M: np.ndarray) -> bool:
    norms = np.sqrt((M.astype(float) ** 2).sum(axis=1))
    return float(np.prod(norms)) < 2.0**31


def bareiss_det(M) -> int:
    """Exact determinant of an integer matrix by fraction-free elimination."""
    try:
        A = np.array(M, dtype=np.int64)
    except OverflowError:
        A = np.array(M, dtype=object)
    n = A.shape[0]
    if n == 0:
        return 1
    if A.dtype != object and _hadamard_fits_int64(A):
        # entries stay minors of M; their pairwise products fit when the
        # Hadamard bound is below 2**31
        A = A.astype(np.int64)
        sign, prev = 1, 1
        for k in range(n - 1):
            if A[k, k] == 0:
                nz = np.nonzero(A[k + 1 :, k])[0]
                if len(nz) == 0:
                    return 0
                p = k + 1 + nz[0]
                A[[k, p]] = A[[p, k]]
                sign = -sign
            piv = A[k, k]
            sub = A[k + 1 :, k + 1 :] * piv - np.outer(A[k + 1 :, k], A[k, k + 1 :])
            A[k + 1 :, k + 1 :] = sub // prev
            A[k + 1 :, k] = 0
            prev = piv
        return int(sign * A[n - 1, n - 1])
    A = [[int(x) for x in row] for row in np.asarray(M).tolist()]
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            for p in range(k + 1, n):
                if A[p][k] != 0:
                    A[k], A[p] = A[p], A[k]
                    sign = -sign
                    break
            else:
                return 0
        piv = A[k][k]
        for i in range(k + 1, n):
            aik = A[i][k]
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * piv - aik * A[k][j]) // prev
        prev = piv
    return sign * A[n - 1][n - 1]


def edge_matrix(blocks: Sequence[Sequence[Point]]) -> list:
    rows = []
    for pts in blocks:
        a0 = pts[0]
        rows.extend([x - y for x, y in zip(p, a0)] for p in pts[1:])
    return rows


def cell_normalized_volume(blocks: Sequence[Sequence[Point]]) -> int:
    """|det| of the stacked edge matrix of a mixed cell.

    ``blocks[i]`` holds the active points of block i.  The edge vectors must
    form a square matrix.
    """
    rows = edge_matrix(blocks)
    if rows and len(rows) != len(rows[0]):
        raise InputError(f"edge matrix is {len(rows)}x{len(rows[0])}, not square")
    det = abs(bareiss_det(np.array(rows, dtype=np.int64))) if rows else 1
    if det == 0:
        raise DegenerateCell("cell has zero volume")
    return det


# -- MVSYS text format --------------------------------------------------------


def _content_lines(text: str):
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            yield line


def parse_system(text: str) -> SupportSystem:
    lines = list(_content_lines(text))
    try:
        if lines[0].split() != ["MVSYS", "1"]:
            raise InputError("missing 'MVSYS 1' header")
        key, n = lines[1].split()
        if key != "n":
            raise InputError("expected 'n <n>'")
        key, s = lines[2].split()
        if key != "s":
            raise InputError("expected 's <s>'")
        n, s = int(n), int(s)
        mline = lines[3].split()
        if mline[0] != "m" or len(mline) != s + 1:
            raise InputError("expected 'm <m_1> ... <m_s>'")
        mult = [int(x) for x in mline[1:]]
        pos, supports = 4, []
        for i in range(s):
            head = lines[pos].split()
            if head[0] != "support" or int(head[1]) != i + 1:
                raise InputError(f"expected 'support {i + 1} <count>'")
            count = int(head[2])
            pts = [tuple(int(x) for x in lines[pos + 1 + k].split()) for k in range(count)]
            supports.append(pts)
            pos += 1 + count
        if pos != len(lines):
            raise InputError("trailing content after the last support")
    except (IndexError, ValueError) as exc:
        raise InputError(f"malformed system file: {exc}") from exc
    sys = SupportSystem.from_lists(n, supports, mult)
    validate_system(sys)
    return sys


def format_system(sys: SupportSystem, comment: str | None = None) -> str:
    out = []
    if comment:
        out.append(f"# {comment}")
    out += ["MVSYS 1", f"n {sys.n}", f"s {sys.s}", "m " + " ".join(map(str, sys.multiplicities))]
    for i, A in enumerate(sys.supports):
        out.append(f"support {i + 1} {len(A)}")
        out.extend(" ".join(map(str, p)) for p in A)
    return "\n".join(out) + "\n"


def parse_lifting(text: str, size: int | None = None) -> Lifting:
    pairs = {}
    try:
        for line in _content_lines(text):
            lab, val = line.split()
            pairs[int(lab)] = float(val)
    except ValueError as exc:
        raise InputError(f"malformed lifting file: {exc}") from exc
    size = size if size is not None else len(pairs)
    if sorted(pairs) != list(range(size)):
        raise InputError(f"lifting file must give one value for each label 0..{size - 1}")
    return Lifting(np.array([pairs[k] for k in range(size)]))


def format_lifting(lifting: Lifting) -> str:
    return "".join(f"{k} {float(v)!r}\n" for k, v in enumerate(lifting.values))
