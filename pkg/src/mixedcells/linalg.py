"""Dense linear algebra with residual certification.

Inverses are accepted only when ``||I - C B||_inf <= order * EPS``.  When the
cheap condition estimate ``||C||_inf ||B||_inf`` is too large, or the residual
check fails, the inverse is polished by Newton iteration with the residual
accumulated in double-double arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IllConditioned, SingularMatrix, SingularUpdate

EPS_MACHINE = float(np.finfo(float).eps)
EPS = 1e5 * EPS_MACHINE
MAX_NEWTON_STEPS = 3

_SPLITTER = 134217729.0  # 2**27 + 1


@dataclass(frozen=True)
class CertifiedInverse:
    B: np.ndarray
    cond_estimate: float
    refined: bool = False
    residual: float = 0.0


def accept_threshold(order: int) -> float:
    return order * EPS


def inf_norm(M: np.ndarray) -> float:
    return float(np.abs(M).sum(axis=1).max()) if M.size else 0.0


# -- double-double residual ---------------------------------------------------


def _split(a):
    t = _SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


def _two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def residual_extended(C: np.ndarray, B: np.ndarray) -> np.ndarray:
    """``I - C B`` with every product and partial sum carried as a
    double-double pair, rounded to double at the end."""
    n = C.shape[0]
    hi = np.eye(n)
    lo = np.zeros((n, n))
    for k in range(n):
        p, e = _two_prod(-C[:, k : k + 1], B[k : k + 1, :])
        hi, s_err = _two_sum(hi, p)
        lo = lo + (s_err + e)
    return hi + lo


def refine_inverse(C: np.ndarray, B: np.ndarray, threshold: float | None = None) -> np.ndarray:
    """Newton iteration ``B <- B + B (I - C B)``.

    Stops after :data:`MAX_NEWTON_STEPS` steps or as soon as the residual stops
    decreasing.  Raises :class:`IllConditioned` if the final residual is still
    above ``threshold`` (default ``order * EPS``).
    """
    C = np.asarray(C, dtype=float)
    B = np.array(B, dtype=float)
    if threshold is None:
        threshold = accept_threshold(C.shape[0])
    R = residual_extended(C, B)
    best = inf_norm(R)
    for _ in range(MAX_NEWTON_STEPS):
        if best == 0.0:
            break
        B_new = B + B @ R
        R_new = residual_extended(C, B_new)
        r_new = inf_norm(R_new)
        if not np.isfinite(r_new) or r_new >= best:
            break
        B, R, best = B_new, R_new, r_new
    if not np.isfinite(best):
        raise IllConditioned("residual is not finite after refinement")
    if best > threshold and not forward_error_ok(B, R, best):
        raise IllConditioned(f"residual {best:.3e} exceeds {threshold:.3e} after refinement")
    return B


def forward_error_ok(B: np.ndarray, R: np.ndarray, r: float) -> bool:
    """``||B_true - B|| <= EPS ||B||`` from ``B_true - B = B_true R``.

    A correctly rounded inverse still leaves a residual near ``cond * eps_M``,
    so on ill-conditioned matrices the residual overstates the error of ``B``
    itself; ``||B R|| / (1 - ||R||)`` bounds it to first order.
    """
    if r >= 0.5:
        return False
    return inf_norm(B @ R) / (1.0 - r) <= EPS * inf_norm(B)


def invert_certified(C: np.ndarray) -> CertifiedInverse:
    C = np.asarray(C, dtype=float)
    order = C.shape[0]
    try:
        B = np.linalg.inv(C)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(str(exc)) from exc
    cond = inf_norm(C) * inf_norm(B)
    if not np.isfinite(cond) or cond * EPS_MACHINE >= 1.0:
        raise SingularMatrix(f"condition estimate {cond:.3e}")
    threshold = accept_threshold(order)
    resid = inf_norm(np.eye(order) - C @ B)
    if resid <= threshold and cond * EPS_MACHINE <= EPS:
        return CertifiedInverse(B, cond, False, resid)
    B = refine_inverse(C, B, threshold)
    resid = inf_norm(residual_extended(C, B))
    return CertifiedInverse(B, inf_norm(C) * inf_norm(B), True, resid)


def sherman_morrison(B: np.ndarray, u: np.ndarray, v: np.ndarray, tol: float = EPS) -> np.ndarray:
    """Inverse of ``A - u v`` given ``B = A^-1``."""
    Bu = B @ u
    denom = 1.0 - float(v @ Bu)
    if abs(denom) <= tol:
        raise SingularUpdate(f"1 - vBu = {denom:.3e}")
    return B + np.outer(Bu, v @ B) / denom


def _box_muller(rng: np.random.Generator, count: int) -> np.ndarray:
    m = (count + 1) // 2
    u1 = 1.0 - rng.random(m)  # (0, 1]
    u2 = rng.random(m)
    rad = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([rad * np.cos(2 * np.pi * u2), rad * np.sin(2 * np.pi * u2)])
    return z[:count]


def sample_orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
    diagonal of R made positive."""
    while True:
        G = _box_muller(rng, n * n).reshape(n, n)
        Q, R = np.linalg.qr(G)
        diag = np.diag(R)
        if np.all(np.abs(diag) > 1e-8):
            return Q * np.sign(diag)
