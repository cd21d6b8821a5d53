"""Supports of standard benchmark families."""

from __future__ import annotations

from .errors import UnsupportedFamily
from .support import SupportSystem


def _unit(n, *idx):
    v = [0] * n
    for k in idx:
        v[k] += 1
    return tuple(v)


def _dedup(points):
    seen, out = set(), []
    for p in points:
        if p not in seen:
            seen.add(p)
            out.append(p)
    return out


def cyclic(n: int) -> SupportSystem:
    sups = []
    for k in range(1, n):
        sups.append(_dedup(_unit(n, *[(i + j) % n for j in range(k)]) for i in range(n)))
    sups.append([(1,) * n, (0,) * n])
    return SupportSystem.from_lists(n, sups)


def noon(n: int) -> SupportSystem:
    sups = []
    for i in range(n):
        pts = [_unit(n, i, j, j) for j in range(n) if j != i]
        sups.append(pts + [_unit(n, i), (0,) * n])
    return SupportSystem.from_lists(n, sups)


def chandra(n: int) -> SupportSystem:
    sups = []
    for i in range(n):
        pts = [_unit(n, i, j) for j in range(n - 1)]
        sups.append(_dedup(pts + [_unit(n, i), (0,) * n]))
    return SupportSystem.from_lists(n, sups)


def katsura(m: int) -> SupportSystem:
    """Katsura-m in the m+1 unknowns x_0 .. x_m."""
    n = m + 1
    sups = []
    for k in range(m):
        pts = [
            _unit(n, abs(l), abs(k - l))
            for l in range(-m, m + 1)
            if abs(k - l) <= m
        ]
        sups.append(_dedup(pts + [_unit(n, k)]))
    sups.append([_unit(n, i) for i in range(n)] + [(0,) * n])
    return SupportSystem.from_lists(n, sups)


def eco(n: int) -> SupportSystem:
    last = n - 1
    sups = []
    for i in range(1, n):
        pts = [_unit(n, i - 1, last)]
        pts += [_unit(n, j - 1, i + j - 1, last) for j in range(1, n - i)]
        sups.append(_dedup(pts + [(0,) * n]))
    sups.append([_unit(n, j) for j in range(n - 1)] + [(0,) * n])
    return SupportSystem.from_lists(n, sups)


def reimer(n: int) -> SupportSystem:
    sups = []
    for i in range(1, n + 1):
        sups.append([tuple((i + 1) if k == j else 0 for k in range(n)) for j in range(n)] + [(0,) * n])
    return SupportSystem.from_lists(n, sups)


def graphmodel(n: int) -> SupportSystem:
    """Entries (i, j), i <= j, of X Y = I for the cycle graph on n vertices.

    X is symmetric with unknown entries on the diagonal and the cycle edges;
    Y is symmetric with unknown entries off the graph and generic constants
    on it.
    """
    if n < 3:
        raise UnsupportedFamily("graphmodel needs n >= 3")

    def edge(i, j):
        return i == j or (i - j) % n in (1, n - 1)

    var = {}
    for i in range(n):
        for j in range(i, n):
            var[("x" if edge(i, j) else "y", i, j)] = len(var)
    nv = len(var)

    def xv(i, j):
        i, j = min(i, j), max(i, j)
        return var.get(("x", i, j))

    def yv(i, j):
        i, j = min(i, j), max(i, j)
        return var.get(("y", i, j))

    sups = []
    for i in range(n):
        for j in range(i, n):
            pts = []
            for k in range(n):
                x = xv(i, k)
                if x is None:
                    continue
                y = yv(k, j)
                pts.append(_unit(nv, x, y) if y is not None else _unit(nv, x))
            if i == j:
                pts.append((0,) * nv)
            sups.append(_dedup(pts))
    return SupportSystem.from_lists(nv, sups)


FAMILIES = {
    "cyclic": cyclic,
    "noon": noon,
    "chandra": chandra,
    "katsura": katsura,
    "eco": eco,
    "reimer": reimer,
    "graphmodel": graphmodel,
}

MIN_SIZE = {"cyclic": 2, "noon": 2, "chandra": 2, "katsura": 1, "eco": 2, "reimer": 1, "graphmodel": 3}


def generate(family: str, n: int) -> SupportSystem:
    try:
        make = FAMILIES[family]
    except KeyError:
        raise UnsupportedFamily(f"unknown family {family!r}; choose from {sorted(FAMILIES)}") from None
    if n < MIN_SIZE[family]:
        raise UnsupportedFamily(f"{family} needs n >= {MIN_SIZE[family]}")
    return make(n)
