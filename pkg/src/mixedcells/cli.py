"""Command line front end."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import generators
from .cellfile import format_cells, parse_cells
from .errors import MixedCellsError, VerificationFailure
from .oracle import oracle_enumerate_cells, verify_cells
from .parallel import run_workers
from .support import Lifting, format_system, parse_lifting, parse_system
from .traversal import RunOptions, all_mixed_cells_full, compute_T_stats


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path) as fh:
        return fh.read()


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w") as fh:
        fh.write(text)


def _lifting(args, size: int) -> Lifting | None:
    if args.lifting is None:
        return None
    return parse_lifting(_read(args.lifting), size)


def cmd_compute(args) -> int:
    system = parse_system(_read(args.system))
    opts = RunOptions(
        hnf=not args.no_hnf,
        rank1=args.rank1,
        naive=args.naive_neighbors,
        retries=args.retries,
        lifting=_lifting(args, system.total_points),
        workers=args.workers,
    )
    if args.workers > 1:
        result = run_workers(system, args.seed, args.workers, options=opts)
    else:
        result = all_mixed_cells_full(system, args.seed, opts)
    if args.output is not None or not args.stats:
        _write(args.output, format_cells(result))
    if args.stats:
        st = result.stats
        T, T2 = compute_T_stats(st, system) if st.V else (0.0, 0.0)
        lines = {
            "n": system.n,
            "s": system.s,
            "sum_A": system.total_points,
            "E": ",".join(map(str, st.E)),
            "sum_E": sum(st.E),
            "v": ",".join(map(str, st.v)),
            "visited": st.visited,
            "T": f"{T:.6g}",
            "T_prime": f"{T2:.6g}",
            "cells": len(result.cells),
            "index": result.index,
            "reduced_mixed_volume": result.reduced_mixed_volume,
            "mixed_volume": result.mixed_volume,
            "seed": result.seed,
            "attempts": st.attempts,
            "wall_time": f"{st.wall_time:.3f}",
        }
        for k, v in lines.items():
            print(f"{k}={v}")
    return 0


def cmd_gen(args) -> int:
    system = generators.generate(args.family, args.n)
    _write(args.output, format_system(system, f"{args.family}-{args.n}"))
    return 0


def cmd_oracle(args) -> int:
    system = parse_system(_read(args.system))
    lifting = _lifting(args, system.total_points)
    if lifting is None:
        lifting = Lifting.sample(np.random.default_rng(args.seed), system.total_points)
    cells, total = oracle_enumerate_cells(system, lifting)
    out = []
    for labels, vol, x in cells:
        xi = " ".join(repr(float(v)) for v in x[system.s :])
        out.append(f"cell {vol} ; {' '.join(map(str, labels))} ; xi0 {xi}")
    out.append(f"mixed_volume={total}")
    _write(args.output, "\n".join(out) + "\n")
    return 0


def cmd_check(args) -> int:
    cellfile = parse_cells(_read(args.cells))
    system = parse_system(_read(args.system))
    lifting = _lifting(args, system.total_points)
    if lifting is None:
        # the lifting is the first draw of the recorded seed
        lifting = Lifting.sample(np.random.default_rng(cellfile.seed), system.total_points)
    report = verify_cells(system, lifting, cellfile, strict=True)
    print(f"ok cells={report.checked} mixed_volume={report.total_volume}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mixedcells", description="Mixed cells and mixed volume of sparse systems.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compute", help="enumerate mixed cells")
    c.add_argument("system")
    c.add_argument("-o", "--output")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--no-hnf", action="store_true", help="skip lattice reduction")
    c.add_argument("--rank1", action="store_true", help="rank-one inverse updates")
    c.add_argument("--naive-neighbors", action="store_true", help="do not prune with hull skeleta")
    c.add_argument("--retries", type=int, default=3)
    c.add_argument("--stats", action="store_true")
    c.add_argument("--lifting")
    c.set_defaults(func=cmd_compute)

    g = sub.add_parser("gen", help="write a benchmark system")
    g.add_argument("family", choices=sorted(generators.FAMILIES))
    g.add_argument("n", type=int)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    o = sub.add_parser("oracle", help="brute-force enumeration for small systems")
    o.add_argument("system")
    o.add_argument("--lifting")
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("-o", "--output")
    o.set_defaults(func=cmd_oracle)

    k = sub.add_parser("check", help="verify a cells file")
    k.add_argument("cells")
    k.add_argument("system")
    k.add_argument("--lifting")
    k.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(message)s")
    if getattr(args, "workers", 1) < 1:
        print("error: InputError: --workers must be at least 1", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except VerificationFailure as exc:
        print(f"fail: {exc}", file=sys.stderr)
        return 1
    except (MixedCellsError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
