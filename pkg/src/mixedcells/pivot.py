"""Facet pivoting along the tropical curves cut by a flag at infinity.

A lower facet at level ``d`` is a strictly increasing tuple of ``s + d``
active labels.  Its active-constraint matrix stacks the Cayley rows
``[-e_i, a]`` of those labels and the flag rows ``[0, Q_{d+1}] .. [0, Q_n]``
whose right-hand sides ``R^{n-d} r_{d+1}, .., R r_n`` grow without bound.
Everything that depends on ``R`` is tracked as a polynomial in ``R`` and
compared by its leading coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels, linalg
from .errors import GenericityFailure, SingularMatrix
from .support import Lifting, Schedule, SupportSystem

NEIGHBOR = "neighbor"
UNBOUNDED = "unbounded"
INELIGIBLE = "ineligible"


@dataclass(frozen=True)
class CayleySystem:
    """Rows ``[-e_i, a]`` and right-hand sides ``b(i, a)`` for every label."""

    rows: np.ndarray
    rhs: np.ndarray
    block: np.ndarray
    n: int
    s: int

    @classmethod
    def build(cls, sys: SupportSystem, lifting: Lifting) -> "CayleySystem":
        if len(lifting) != sys.total_points:
            raise ValueError(
                f"lifting has {len(lifting)} values for {sys.total_points} points"
            )
        block = sys.block_of()
        rows = np.zeros((sys.total_points, sys.s + sys.n))
        rows[np.arange(sys.total_points), block] = -1.0
        rows[:, sys.s :] = sys.points_array()
        return cls(rows, lifting.values.copy(), block, sys.n, sys.s)


@dataclass(frozen=True)
class Flag:
    Q: np.ndarray  # rows Q_1 .. Q_n
    r: np.ndarray

    @classmethod
    def standard(cls, Q, r=None) -> "Flag":
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        n = Q.shape[0]
        r = np.ones(n) if r is None else np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise ValueError("flag scales r_d must be positive")
        if np.max(np.abs(Q.T @ Q - np.eye(n))) > 1e-10:
            raise ValueError("flag directions must be orthonormal")
        return cls(Q, r)


class RPoly:
    """Polynomial in the symbolic scale R, ``coeffs[l]`` multiplying ``R**l``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs, zero_tol: float = 0.0):
        c = np.array(coeffs, dtype=float)
        c[np.abs(c) <= zero_tol] = 0.0
        self.coeffs = c

    def __repr__(self):
        return f"RPoly({self.coeffs.tolist()})"

    def __len__(self):
        return len(self.coeffs)


def rpoly_sign(p: RPoly) -> int:
    nz = np.nonzero(p.coeffs)[0]
    return 0 if len(nz) == 0 else int(np.sign(p.coeffs[nz[-1]]))


def rpoly_less(p: RPoly, q: RPoly, eq_tol: float = 0.0) -> bool:
    """Strict comparison for R large enough, highest degree first."""
    if len(p) != len(q):
        raise ValueError("R-polynomials of different length")
    for a, b in zip(p.coeffs[::-1], q.coeffs[::-1]):
        if abs(a - b) > eq_tol:
            return a < b
    return False


@dataclass(frozen=True)
class LowerFacet:
    level: int
    active: tuple
    B: np.ndarray
    x0: np.ndarray  # (lambda0, xi0) stacked
    cond_estimate: float = 0.0
    refined: bool = False

    @property
    def lambda0(self) -> np.ndarray:
        return self.x0[: len(self.active) - self.level]

    @property
    def xi0(self) -> np.ndarray:
        return self.x0[len(self.active) - self.level :]


@dataclass
class PivotOutcome:
    kind: str
    labels: tuple = ()
    entering: int | None = None
    dropped: int | None = None
    facet: LowerFacet | None = None
    t0: float | None = None
    B_update: np.ndarray | None = field(default=None, repr=False)

    @property
    def is_neighbor(self) -> bool:
        return self.kind == NEIGHBOR


class PivotContext:
    """Immutable data shared by every pivot of one run.

    ``adjacency`` is an optional boolean matrix over labels holding the lower
    hull 1-skeleta of the lifted supports; when given (skeleton mode) entering
    candidates must be adjacent to every remaining active point of their
    block.
    """

    def __init__(
        self,
        sys: SupportSystem,
        lifting: Lifting,
        flag: Flag,
        schedule: Schedule,
        adjacency: np.ndarray | None = None,
        rank1: bool = False,
    ):
        self.sys = sys
        self.cayley = CayleySystem.build(sys, lifting)
        self.flag = flag
        self.schedule = schedule
        self.adjacency = adjacency
        self.rank1 = rank1
        self.rank1_accepted = 0
        self.n, self.s = sys.n, sys.s
        self.rows = self.cayley.rows
        self.rhs = self.cayley.rhs
        self.block = self.cayley.block
        self.nlabels = sys.total_points
        self.eps = linalg.EPS
        self._flag_rows = np.hstack([np.zeros((self.n, self.s)), flag.Q])
        self._m = [np.array(schedule.m(d)) for d in range(self.n + 1)]
        self._mtab = np.array([schedule.m(d) for d in range(self.n + 1)], dtype=np.int64)
        self._block64 = self.block.astype(np.int64)
        self._sparse = _kernels.sparse_rows(self.rows)
        self._adj = (
            adjacency if adjacency is not None else np.zeros((1, 1), dtype=bool)
        )

    # -- facet construction ------------------------------------------------

    def counts(self, labels: Sequence[int]) -> np.ndarray:
        """m_i for the facet: active points per block minus one."""
        return np.bincount(self.block[list(labels)], minlength=self.s) - 1

    def active_matrix(self, labels: Sequence[int]) -> np.ndarray:
        d = len(labels) - self.s
        return np.vstack([self.rows[list(labels)], self._flag_rows[d:]])

    def active_rhs(self, labels: Sequence[int]) -> np.ndarray:
        d = len(labels) - self.s
        return np.concatenate([self.rhs[list(labels)], np.zeros(self.n - d)])

    def materialize(self, labels: Sequence[int], B: np.ndarray | None = None) -> LowerFacet:
        """Build the facet with the given active labels.

        ``B`` may carry an inverse obtained by a rank-one update; it is used
        when it passes the residual check, otherwise a fresh certified inverse
        is computed.
        """
        labels = tuple(labels)
        d = len(labels) - self.s
        if B is not None:
            C = self.active_matrix(labels)
            cond = linalg.inf_norm(C) * linalg.inf_norm(B)
            # updates compound, so an updated inverse is kept only while it is
            # as accurate as a fresh one; otherwise the chain restarts
            thr = min(linalg.accept_threshold(C.shape[0]), cond * linalg.EPS_MACHINE)
            if linalg.inf_norm(np.eye(C.shape[0]) - C @ B) <= thr:
                x0 = B @ self.active_rhs(labels)
                self.rank1_accepted += 1
                return LowerFacet(d, labels, B, x0, cond, False)
        act = np.asarray(labels, dtype=np.int64)
        try:
            B, x0, cond, resid, status = _kernels.materialize_kernel(
                act, d, self.rows, self._sparse, self.rhs, self._flag_rows
            )
        except np.linalg.LinAlgError as exc:
            raise SingularMatrix(f"active matrix of {labels} is singular") from exc
        if status != _kernels.OK or not np.isfinite(cond) or cond * linalg.EPS_MACHINE >= 1.0:
            raise SingularMatrix(f"active matrix of {labels} is singular")
        if resid <= linalg.accept_threshold(len(x0)) and cond * linalg.EPS_MACHINE <= linalg.EPS:
            return LowerFacet(d, labels, B, x0, cond, False)
        inv = linalg.invert_certified(self.active_matrix(labels))
        x0 = inv.B @ self.active_rhs(labels)
        return LowerFacet(d, labels, inv.B, x0, inv.cond_estimate, inv.refined)

    def expand_labels(self, facet: LowerFacet):
        """Compiled neighbor search: ``(list of (dropped, entering), is_cell)``.

        ``dropped`` is None for the ascent; entering labels are never -1 in
        the returned list (pivots to infinity are left out).
        """
        drops, ents, is_cell, status = _kernels.expand_kernel(
            np.asarray(facet.active, dtype=np.int64), facet.level, facet.B, facet.x0,
            self.rows, self._sparse, self.rhs, self._block64, self._adj, self.adjacency is not None,
            self.flag.r, self._mtab, self.s, self.n, self.eps,
        )
        if status == _kernels.BAD_TYPE:
            raise GenericityFailure(f"facet {facet.active} has an invalid type")
        if status == _kernels.TIE:
            raise GenericityFailure("candidates tie for the pivot minimum")
        if status == _kernels.MIXED_SIGNS:
            raise GenericityFailure("ascent candidates have mixed signs")
        if status == _kernels.TIGHT:
            raise GenericityFailure(f"an inactive constraint is tight at {facet.active}")
        out = [
            (None if dr < 0 else int(dr), int(en))
            for dr, en in zip(drops, ents)
            if en >= 0
        ]
        return out, bool(is_cell)

    def start_facet(self) -> LowerFacet:
        """Level-0 facet: per block the point maximizing ``a . xi(R) - b``
        with ``xi(R) = sum_k R^{n+1-k} r_k Q_k``."""
        pts = self.rows[:, self.s :]
        proj = pts @ self.flag.Q.T * self.flag.r  # column k-1 multiplies R^{n+1-k}
        keys = np.hstack([proj, -self.rhs[:, None]])
        labels = []
        for i in range(self.s):
            idx = np.nonzero(self.block == i)[0]
            best = [idx[0]]
            for lab in idx[1:]:
                cmp = _lex_cmp(keys[lab], keys[best[0]], self.eps)
                if cmp > 0:
                    best = [lab]
                elif cmp == 0:
                    best.append(lab)
            if len(best) > 1:
                raise GenericityFailure(f"tie for the start point of block {i}")
            labels.append(int(best[0]))
        return self.materialize(sorted(labels))

    # -- candidates ----------------------------------------------------------

    def candidates(self, facet: LowerFacet, dropped: int | None) -> np.ndarray:
        """Inactive labels that may enter after dropping ``dropped`` (a label,
        or None for the ascent)."""
        active = list(facet.active)
        if self.adjacency is None:
            mask = np.ones(self.nlabels, dtype=bool)
        else:
            remaining = [a for a in active if a != dropped]
            hits = self.adjacency[remaining].sum(axis=0)
            need = np.bincount(self.block[remaining], minlength=self.s)[self.block]
            mask = hits == need
        mask[active] = False
        return np.nonzero(mask)[0]

    # -- scores --------------------------------------------------------------

    def _flag_columns(self, level: int) -> list:
        # coefficient of R^l (l = 1 .. n-d) sits in column s+n-l
        return [self.s + self.n - l for l in range(1, self.n - level + 1)]

    def score_matrix(self, facet: LowerFacet, j: int, cand: np.ndarray):
        """Numerators and denominators of the scores t(i, a).

        Returns ``(N, D, AN, AD)`` where ``N[:, l]`` is the numerator of the
        coefficient of ``R**l`` and ``AN``, ``AD`` bound the magnitude of the
        terms summed into ``N`` and ``D``.  Entries within their zero
        tolerance (see :meth:`zero_tolerance`) are flushed to exact zero.
        """
        rows = self.rows[cand]
        cols = [j] + self._flag_columns(facet.level)
        G = rows @ facet.B[:, cols]
        A = np.abs(rows) @ np.abs(facet.B[:, cols])
        D, AD = G[:, 0], A[:, 0]
        N = np.empty((len(cand), len(cols)))
        AN = np.empty_like(N)
        N[:, 0] = rows @ facet.x0 - self.rhs[cand]
        AN[:, 0] = np.abs(rows) @ np.abs(facet.x0) + np.abs(self.rhs[cand])
        if len(cols) > 1:
            r_idx = [self.n - l for l in range(1, self.n - facet.level + 1)]
            N[:, 1:] = G[:, 1:] * self.flag.r[r_idx]
            AN[:, 1:] = A[:, 1:] * self.flag.r[r_idx]
        N[np.abs(N) <= self.zero_tolerance(AN)] = 0.0
        D = np.where(np.abs(D) <= self.zero_tolerance(AD), 0.0, D)
        return N, D, AN, AD

    def zero_tolerance(self, magnitude):
        """Absolute error bound of a dot product whose terms sum to
        ``magnitude`` in absolute value, given B accurate to relative EPS."""
        return self.eps * np.maximum(1.0, magnitude)

    def _check_tight(self, N, cand):
        tight = ~(N != 0.0).any(axis=1)
        if tight.any():
            raise GenericityFailure(f"constraint {int(cand[tight][0])} is tight")

    def pivot_scores(self, facet: LowerFacet, j: int, candidates) -> list:
        """``(label, RPoly | None)`` per candidate; None marks ineligible."""
        cand = np.asarray(list(candidates), dtype=int)
        if len(cand) == 0:
            return []
        N, D, _, _ = self.score_matrix(facet, j, cand)
        out = []
        for k, lab in enumerate(cand):
            if D[k] == 0.0:
                out.append((int(lab), None))
            else:
                out.append((int(lab), RPoly(N[k] / D[k])))
        return out

    def _tolerances(self, T, D, AN, AD) -> np.ndarray:
        """Equality tolerance of every score coefficient: ``EPS / |D|`` scaled
        by the rounding-error magnitude of the quotient."""
        scale = np.maximum(1.0, AN + np.abs(T) * AD[:, None])
        return self.eps * scale / np.abs(D)[:, None]

    @staticmethod
    def _argmin(T: np.ndarray, TOL: np.ndarray) -> int:
        """Row index of the lexicographic minimum (highest degree first).

        Coefficients closer than their tolerance are equal; a surviving tie
        is a genericity failure.
        """
        alive = np.arange(len(T))
        for l in range(T.shape[1] - 1, -1, -1):
            col = T[alive, l]
            k = int(np.argmin(col))
            keep = (col - col[k]) <= np.maximum(TOL[alive, l], TOL[alive[k], l])
            alive = alive[keep]
            if len(alive) == 1:
                return int(alive[0])
        raise GenericityFailure(f"{len(alive)} candidates tie for the pivot minimum")

    @staticmethod
    def _signs(N: np.ndarray, D: np.ndarray) -> np.ndarray:
        nz = N != 0.0
        has = nz.any(axis=1)
        lead = N.shape[1] - 1 - np.argmax(nz[:, ::-1], axis=1)
        s = np.sign(N[np.arange(len(N)), lead]) * np.sign(D)
        return np.where(has & (D != 0.0), s, 0.0)

    # -- pivots --------------------------------------------------------------

    def _neighbor(self, facet, j, dropped, entering, t0, materialize):
        labels = tuple(sorted([a for a in facet.active if a != dropped] + [entering]))
        out = PivotOutcome(NEIGHBOR, labels, entering, dropped)
        if self.rank1:
            out.B_update = self.rank_one_inverse(facet, j, entering, labels)
        if materialize:
            out.facet = self.materialize(labels, out.B_update)
        out.t0 = float(t0)
        return out

    def rank_one_inverse(self, facet, j, entering, new_labels) -> np.ndarray:
        """Inverse of the next active matrix by Sherman-Morrison, with
        columns permuted to the sorted label order of the new facet."""
        C = self.active_matrix(facet.active)
        v = C[j] - self.rows[entering]
        u = np.zeros(C.shape[0])
        u[j] = 1.0
        B_new = linalg.sherman_morrison(facet.B, u, v)
        # row j of the updated matrix holds the entering label
        row_labels = list(facet.active) + [None] * (self.n - facet.level)
        row_labels[j] = entering
        d_new = len(new_labels) - self.s
        order = [row_labels.index(lab) for lab in new_labels]
        order += list(range(self.s + d_new, C.shape[0]))
        return B_new[:, order]

    def over_quota_block(self, facet: LowerFacet) -> int:
        c = self.counts(facet.active) - self._m[facet.level - 1]
        q = np.nonzero(c)[0]
        if len(q) != 1 or c[q[0]] != 1 or np.any(c < 0):
            raise GenericityFailure(f"facet {facet.active} has an invalid type")
        return int(q[0])

    def is_quota(self, facet: LowerFacet) -> bool:
        return bool(np.array_equal(self.counts(facet.active), self._m[facet.level]))

    def droppable(self, facet: LowerFacet) -> list:
        """Row indices of the active constraints that may be released."""
        if facet.level == 0:
            return []
        q = self.over_quota_block(facet)
        return [k for k, lab in enumerate(facet.active) if self.block[lab] == q]

    def pivot_within(self, facet: LowerFacet, j: int, materialize: bool = True) -> PivotOutcome:
        dropped = facet.active[j]
        cand = self.candidates(facet, dropped)
        if len(cand) == 0:
            return PivotOutcome(UNBOUNDED, dropped=dropped)
        N, D, AN, AD = self.score_matrix(facet, j, cand)
        self._check_tight(N, cand)
        pos = self._signs(N, D) > 0
        if not pos.any():
            return PivotOutcome(UNBOUNDED, dropped=dropped)
        N, D, AN, AD, cand = N[pos], D[pos], AN[pos], AD[pos], cand[pos]
        T = N / D[:, None]
        k = self._argmin(T, self._tolerances(T, D, AN, AD))
        return self._neighbor(facet, j, dropped, int(cand[k]), T[k, 0], materialize)

    def pivot_up(self, facet: LowerFacet, materialize: bool = True) -> PivotOutcome:
        d = facet.level
        if d >= self.n:
            raise ValueError("no flag row left to release")
        j = self.s + d
        cand = self.candidates(facet, None)
        if len(cand) == 0:
            return PivotOutcome(UNBOUNDED)
        N, D, AN, AD = self.score_matrix(facet, j, cand)
        self._check_tight(N, cand)
        sg = self._signs(N, D)
        keep = sg != 0
        if not keep.any():
            return PivotOutcome(UNBOUNDED)
        signs = np.unique(sg[keep])
        if len(signs) > 1:
            raise GenericityFailure("ascent candidates have mixed signs")
        N, D, AN, AD, cand = N[keep], D[keep], AN[keep], AD[keep], cand[keep]
        T = N / D[:, None]
        TOL = self._tolerances(T, D, AN, AD)
        # the leading coefficient is r_{d+1} for every candidate
        T[:, -1] = self.flag.r[d] * np.sign(T[:, -1])
        k = self._argmin(signs[0] * T, TOL)
        return self._neighbor(facet, j, None, int(cand[k]), T[k, 0], materialize)

    def pivot_down_check(self, facet: LowerFacet, j: int) -> bool:
        """True iff releasing active row ``j`` leads down to level ``d-1``
        along a half-line."""
        out = self.pivot_within(facet, j, materialize=False)
        if out.kind != UNBOUNDED:
            return False
        Bej = facet.B[self.s :, j]
        return float(self.flag.Q[facet.level - 1] @ Bej) < 0.0

    def neighbors(self, facet: LowerFacet, materialize: bool = True) -> list:
        out = [self.pivot_within(facet, j, materialize) for j in self.droppable(facet)]
        if facet.level < self.n and self.is_quota(facet):
            out.append(self.pivot_up(facet, materialize))
        return out

    # -- invariants ------------------------------------------------------------

    def balancing_residual(self, facet: LowerFacet) -> float:
        """``||sum_j Delta_j xi||_inf / max_j ||Delta_j xi||_inf`` over the
        releasable constraints."""
        js = self.droppable(facet)
        if not js:
            return 0.0
        deltas = -facet.B[self.s :, js]
        scale = np.abs(deltas).max()
        return float(np.abs(deltas.sum(axis=1)).max() / scale)

    def consistency_residual(self, facet: LowerFacet) -> float:
        C = self.active_matrix(facet.active)
        return float(np.abs(C @ facet.x0 - self.active_rhs(facet.active)).max())

    def inactive_signs(self, facet: LowerFacet) -> np.ndarray:
        """Sign of every inactive constraint value as a polynomial in R, in
        increasing label order of the inactive labels."""
        inact = np.setdiff1d(np.arange(self.nlabels), facet.active)
        rows = self.rows[inact]
        cols = self._flag_columns(facet.level)
        V = np.empty((len(inact), 1 + len(cols)))
        A = np.empty_like(V)
        V[:, 0] = rows @ facet.x0 - self.rhs[inact]
        A[:, 0] = np.abs(rows) @ np.abs(facet.x0) + np.abs(self.rhs[inact])
        if cols:
            r_idx = [self.n - l for l in range(1, self.n - facet.level + 1)]
            V[:, 1:] = (rows @ facet.B[:, cols]) * self.flag.r[r_idx]
            A[:, 1:] = (np.abs(rows) @ np.abs(facet.B[:, cols])) * self.flag.r[r_idx]
        V[np.abs(V) <= self.zero_tolerance(A)] = 0.0
        return self._signs(V, np.ones(len(inact)))


def _lex_cmp(a: np.ndarray, b: np.ndarray, tol: float) -> int:
    for x, y in zip(a, b):
        if abs(x - y) > tol:
            return 1 if x > y else -1
    return 0
