"""Covering LPs with two rows over a box.

    minimize    w . v
    subject to  theta . v >= a,  ell . v >= b,  0 <= v <= 1

with nonnegative coefficients. The primary solver scans the dual: for a
fixed multiplier of the second row the best multiplier of the first is a
weighted quantile of ratio breakpoints, and the outer concave function of
the second multiplier only changes slope at pairwise intersection points, so
evaluating those candidates finds the dual optimum exactly. The primal is
then read off by complementary slackness; coordinates with zero reduced cost
are settled by a small dense simplex (Bland's rule), which also serves as a
fallback for the whole problem.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

FEAS_TOL = 1e-8


@dataclass(frozen=True)
class BoxLp2:
    """Two-row covering LP restricted to ``support`` within a ground set of size ``n``.

    Coefficient vectors have length ``n``; entries outside the support are
    ignored and the corresponding coordinates are fixed at 0.
    """

    support: tuple[int, ...]
    w: np.ndarray
    theta: np.ndarray
    ell: np.ndarray
    a: float
    b: float

    def __post_init__(self):
        for name in ("w", "theta", "ell"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.ndim != 1 or not np.all(np.isfinite(v)) or np.any(v < 0):
                raise DomainError(f"{name} must be a finite nonnegative vector")
            object.__setattr__(self, name, v)
        if not (self.w.shape == self.theta.shape == self.ell.shape):
            raise DomainError("coefficient vectors differ in length")
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise DomainError("row bounds must be finite")
        sup = tuple(sorted(set(int(e) for e in self.support)))
        if sup and not (0 <= sup[0] and sup[-1] < self.w.shape[0]):
            raise DomainError("support outside the ground set")
        object.__setattr__(self, "support", sup)

    @property
    def n(self) -> int:
        return self.w.shape[0]


@dataclass
class LpSolution:
    feasible: bool
    v: np.ndarray | None = None
    objective: float = math.inf
    method: str = ""

    def __bool__(self) -> bool:
        return self.feasible


def residuals(lp: BoxLp2, v: np.ndarray) -> tuple[float, float]:
    """Row slacks theta.v - a and ell.v - b (negative means violated)."""
    return float(lp.theta @ v - lp.a), float(lp.ell @ v - lp.b)


def _row_tol(coeffs: np.ndarray, bound: float) -> float:
    return 1e-12 * max(1.0, abs(bound), float(coeffs.sum()))


def solve_box_lp(lp: BoxLp2) -> LpSolution:
    """Optimal v for a :class:`BoxLp2`, or an infeasible marker.

    Feasibility is decided by the all-ones point on the support, since both
    rows are monotone in v.
    """
    idx = np.array(lp.support, dtype=int)
    w, th, el = lp.w[idx], lp.theta[idx], lp.ell[idx]
    if th.sum() < lp.a - _row_tol(th, lp.a) or el.sum() < lp.b - _row_tol(el, lp.b):
        return LpSolution(False, method="infeasible")
    need_a, need_b = lp.a > 0, lp.b > 0
    if not need_a and not need_b:
        local, method = np.zeros(idx.shape[0]), "trivial"
    elif need_a != need_b:
        c, bound = (th, lp.a) if need_a else (el, lp.b)
        local, method = _cover_one_row(w, c, bound), "ratio"
    else:
        local = _solve_two_rows(w, th, el, lp.a, lp.b)
        method = "dual-scan"
        if local is None or not _ok(w, th, el, lp.a, lp.b, local):
            local, method = simplex_box_lp(w, th, el, lp.a, lp.b), "simplex"
    v = np.zeros(lp.n)
    v[idx] = np.clip(local, 0.0, 1.0)
    return LpSolution(True, v, float(lp.w @ v), method)


def _ok(w, th, el, a, b, v) -> bool:
    return th @ v >= a - FEAS_TOL and el @ v >= b - FEAS_TOL


def _cover_one_row(w: np.ndarray, c: np.ndarray, bound: float) -> np.ndarray:
    """min w.v s.t. c.v >= bound over the box: fill by ascending w/c."""
    v = np.zeros(w.shape[0])
    useful = np.flatnonzero(c > 0)
    ratio = w[useful] / c[useful]
    order = useful[np.lexsort((useful, ratio))]
    need = bound
    for e in order:
        if need <= 0:
            break
        if c[e] <= need:
            v[e] = 1.0
            need -= c[e]
        else:
            v[e] = need / c[e]
            need = 0.0
    return v


def _inner_mu1(w, th, el, a, mu2):
    """Best first-row multiplier for fixed mu2 (vectorized over mu2)."""
    mu2 = np.atleast_1d(mu2)
    cost = w[None, :] - mu2[:, None] * el[None, :]
    pos = th > 0
    k = mu2.shape[0]
    if not np.any(pos):
        return np.zeros(k)
    bp = np.maximum(cost[:, pos] / th[pos], 0.0)
    order = np.argsort(bp, axis=1, kind="stable")
    bps = np.take_along_axis(bp, order, axis=1)
    cum = np.cumsum(th[pos][order], axis=1)
    j = np.argmax(cum >= a - 1e-15 * max(1.0, a), axis=1)
    return bps[np.arange(k), j]


def _dual_value(w, th, el, a, b, mu1, mu2):
    red = mu1[:, None] * th[None, :] + mu2[:, None] * el[None, :] - w[None, :]
    return a * mu1 + b * mu2 - np.maximum(red, 0.0).sum(axis=1)


def _dual_candidates(w, th, el):
    cands = [0.0]
    pos_l = el > 0
    cands.extend((w[pos_l] / el[pos_l]).tolist())
    k = w.shape[0]
    if k >= 2:
        i, j = np.triu_indices(k, 1)
        num = w[i] * th[j] - w[j] * th[i]
        den = el[i] * th[j] - el[j] * th[i]
        ok = np.abs(den) > 1e-300
        vals = num[ok] / den[ok]
        cands.extend(vals[np.isfinite(vals) & (vals >= 0)].tolist())
    return np.unique(np.array(cands))


def _solve_two_rows(w, th, el, a, b) -> np.ndarray | None:
    mu2 = _dual_candidates(w, th, el)
    mu1 = _inner_mu1(w, th, el, a, mu2)
    vals = _dual_value(w, th, el, a, b, mu1, mu2)
    best = int(np.argmax(vals))
    m1, m2 = float(mu1[best]), float(mu2[best])
    red = w - m1 * th - m2 * el
    scale = max(1.0, float(np.max(w, initial=0.0)), m1 * float(np.max(th, initial=0.0)), m2 * float(np.max(el, initial=0.0)))
    tol = 1e-11 * scale
    v = np.zeros(w.shape[0])
    v[red < -tol] = 1.0
    tied = np.flatnonzero(np.abs(red) <= tol)
    ra = a - th @ v
    rb = b - el @ v
    if tied.size == 0:
        return v if (ra <= FEAS_TOL and rb <= FEAS_TOL) else None
    sub = simplex_box_lp(w[tied], th[tied], el[tied], ra, rb)
    if sub is None:
        return None
    v[tied] = sub
    return v


def simplex_box_lp(w, th, el, a, b) -> np.ndarray | None:
    """Dense two-phase simplex with Bland's rule for the two-row box LP.

    Returns the optimal point, or ``None`` when the problem is infeasible.
    """
    w, th, el = (np.asarray(x, dtype=float) for x in (w, th, el))
    k = w.shape[0]
    if k == 0:
        return np.zeros(0) if (a <= FEAS_TOL and b <= FEAS_TOL) else None
    # columns: v (k) | surplus s1, s2 | slack u (k)
    nv = 2 * k + 2
    A = np.zeros((k + 2, nv))
    rhs = np.zeros(k + 2)
    A[0, :k], A[0, k] = th, -1.0
    A[1, :k], A[1, k + 1] = el, -1.0
    rhs[:2] = a, b
    A[2:, :k] = np.eye(k)
    A[2:, k + 2 :] = np.eye(k)
    rhs[2:] = 1.0
    c = np.zeros(nv)
    c[:k] = w
    x = _simplex_eq(A, rhs, c)
    return None if x is None else np.clip(x[:k], 0.0, 1.0)


def _simplex_eq(A, b, c, tol=1e-12):
    """min c.x s.t. A x = b, x >= 0 via the two-phase tableau method."""
    A = A.copy()
    b = b.copy()
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1
    m, nv = A.shape
    # phase I: artificial variable per row
    T = np.zeros((m + 1, nv + m + 1))
    T[:m, :nv] = A
    T[:m, nv : nv + m] = np.eye(m)
    T[:m, -1] = b
    basis = list(range(nv, nv + m))
    T[m, :nv] = -A.sum(axis=0)
    T[m, -1] = -b.sum()
    _pivot_loop(T, basis, nv + m, tol)
    if T[m, -1] < -1e-9 * max(1.0, float(b.sum())):
        return None
    # drive artificials out of the basis
    for r, bv in enumerate(basis):
        if bv >= nv:
            cols = np.flatnonzero(np.abs(T[r, :nv]) > tol)
            if cols.size:
                _pivot(T, basis, r, int(cols[0]))
    keep = [r for r, bv in enumerate(basis) if bv < nv]
    T2 = np.zeros((len(keep) + 1, nv + 1))
    T2[:-1, :nv] = T[keep, :nv]
    T2[:-1, -1] = T[keep, -1]
    basis2 = [basis[r] for r in keep]
    T2[-1, :nv] = c
    for r, bv in enumerate(basis2):
        T2[-1] -= c[bv] * T2[r]
    _pivot_loop(T2, basis2, nv, tol)
    x = np.zeros(nv)
    for r, bv in enumerate(basis2):
        x[bv] = T2[r, -1]
    return x


def _pivot(T, basis, r, col):
    T[r] /= T[r, col]
    for i in range(T.shape[0]):
        if i != r and T[i, col] != 0.0:
            T[i] -= T[i, col] * T[r]
    basis[r] = col


def _pivot_loop(T, basis, ncols, tol):
    m = len(basis)
    for _ in range(10_000):
        entering = next((j for j in range(ncols) if T[m, j] < -tol), None)
        if entering is None:
            return
        col = T[:m, entering]
        rows = np.flatnonzero(col > tol)
        if rows.size == 0:
            raise RuntimeError("unbounded LP in simplex_box_lp")
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol * max(1.0, abs(best))]
        r = int(min(ties, key=lambda i: basis[i]))
        _pivot(T, basis, r, entering)
    raise RuntimeError("simplex did not terminate")


def vertex_enumeration_solve(lp: BoxLp2) -> LpSolution:
    """Reference solver: try every basic point of the polytope.

    A vertex fixes all but at most two support coordinates at 0 or 1; the
    free ones are pinned by an equal number of tight rows. Exponential in
    the support size, intended for |support| <= 8.
    """
    idx = list(lp.support)
    k = len(idx)
    rows = [(lp.theta, lp.a), (lp.ell, lp.b)]
    best_v, best_obj = None, math.inf
    for nfree in range(0, min(2, k) + 1):
        for free in itertools.combinations(range(k), nfree):
            fixed = [j for j in range(k) if j not in free]
            for bits in itertools.product((0.0, 1.0), repeat=len(fixed)):
                base = np.zeros(lp.n)
                for j, bit in zip(fixed, bits):
                    base[idx[j]] = bit
                for tight in itertools.combinations(range(2), nfree):
                    v = base.copy()
                    if nfree:
                        M = np.array([[rows[r][0][idx[j]] for j in free] for r in tight])
                        rhs = np.array([rows[r][1] - rows[r][0] @ base for r in tight])
                        if abs(np.linalg.det(M)) < 1e-12:
                            continue
                        sol = np.linalg.solve(M, rhs)
                        if np.any(sol < -1e-12) or np.any(sol > 1 + 1e-12):
                            continue
                        for j, s in zip(free, sol):
                            v[idx[j]] = min(1.0, max(0.0, s))
                    if lp.theta @ v < lp.a - FEAS_TOL or lp.ell @ v < lp.b - FEAS_TOL:
                        continue
                    obj = float(lp.w @ v)
                    if obj < best_obj - 1e-15:
                        best_v, best_obj = v, obj
    if best_v is None:
        return LpSolution(False, method="vertex-enumeration")
    return LpSolution(True, best_v, best_obj, "vertex-enumeration")
