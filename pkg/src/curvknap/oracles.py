"""Set-function oracles over the ground set ``{0, ..., n-1}``.

Sets are passed around in two forms. The public API accepts any iterable of
element indices and normalizes it to a ``frozenset``. Batched code paths use
boolean matrices of shape ``(k, n)`` where row ``r`` is the indicator vector of
the ``r``-th set; :meth:`SetFunction.evaluate_many` consumes those directly.
Full value tables are indexed by bitmask with element 0 in the least
significant bit.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import CapabilityError, DomainError, NotSubmodularError

ATOL = 1e-9
MAX_TABLE_N = 16
MAX_CHECK_N = 12


def to_index_set(S: Iterable[int], n: int) -> frozenset[int]:
    out = frozenset(int(e) for e in S)
    for e in out:
        if not 0 <= e < n:
            raise DomainError(f"element {e} is outside the ground set 0..{n - 1}")
    return out


def indicator(S: Iterable[int], n: int) -> np.ndarray:
    row = np.zeros(n, dtype=bool)
    idx = list(to_index_set(S, n))
    row[idx] = True
    return row


def all_masks(n: int) -> np.ndarray:
    """Boolean matrix whose row ``k`` is the indicator of bitmask ``k``."""
    k = np.arange(1 << n, dtype=np.int64)
    return ((k[:, None] >> np.arange(n)) & 1).astype(bool)


def mask_index(rows: np.ndarray) -> np.ndarray:
    """Bitmask index of each indicator row (requires n <= 62)."""
    rows = np.atleast_2d(rows)
    bits = np.left_shift(np.int64(1), np.arange(rows.shape[1], dtype=np.int64))
    return rows.astype(np.int64) @ bits


def mask_of(S: Iterable[int]) -> int:
    out = 0
    for e in S:
        out |= 1 << int(e)
    return out


def members(mask: int) -> frozenset[int]:
    out = []
    e = 0
    while mask:
        if mask & 1:
            out.append(e)
        mask >>= 1
        e += 1
    return frozenset(out)


def set_weight(w: Sequence[float], S: Iterable[int]) -> float:
    """Exactly rounded w(S); all feasibility decisions go through this."""
    return math.fsum(float(w[e]) for e in S)


def is_feasible(w: Sequence[float], S: Iterable[int]) -> bool:
    return set_weight(w, S) <= 1.0


class SetFunction:
    """A queryable set function f: 2^E -> R with an evaluation counter.

    Subclasses implement :meth:`_value` (one set) and optionally
    :meth:`_values_many` (a batch of indicator rows). Oracles are immutable
    after construction apart from the counter and a lazily built value table,
    both guarded by a lock so parallel readers are safe.
    """

    kind = "abstract"

    def __init__(self, n: int):
        if n < 1:
            raise DomainError("a ground set needs at least one element")
        self.n = int(n)
        self._calls = 0
        self._lock = threading.Lock()
        self._table_lock = threading.Lock()
        self._table: np.ndarray | None = None

    # -- evaluation -----------------------------------------------------
    @property
    def calls(self) -> int:
        """Number of set evaluations performed so far."""
        return self._calls

    def _count(self, k: int) -> None:
        with self._lock:
            self._calls += k

    def __call__(self, S: Iterable[int]) -> float:
        s = to_index_set(S, self.n)
        self._count(1)
        return float(self._value(s))

    def eval(self, S: Iterable[int]) -> float:
        return self(S)

    def marginal(self, S: Iterable[int], e: int) -> float:
        """f_S(e) = f(S + e) - f(S); zero when e is already in S."""
        s = to_index_set(S, self.n)
        if not 0 <= e < self.n:
            raise DomainError(f"element {e} is outside the ground set")
        if e in s:
            return 0.0
        return self(s | {e}) - self(s)

    def evaluate_many(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=bool)
        if rows.ndim != 2 or rows.shape[1] != self.n:
            raise DomainError(f"expected indicator rows of width {self.n}, got {rows.shape}")
        self._count(rows.shape[0])
        return np.asarray(self._values_many(rows), dtype=float)

    def table(self) -> np.ndarray:
        """Values on all 2^n subsets in bitmask order (cached, read-only)."""
        if self.n > MAX_TABLE_N:
            raise CapabilityError(f"value tables are limited to n <= {MAX_TABLE_N} (n = {self.n})")
        with self._table_lock:
            if self._table is None:
                vals = self.evaluate_many(all_masks(self.n))
                vals.setflags(write=False)
                self._table = vals
        return self._table

    def _value(self, s: frozenset[int]) -> float:
        raise NotImplementedError

    def _values_many(self, rows: np.ndarray) -> np.ndarray:
        return np.array([self._value(frozenset(np.flatnonzero(r).tolist())) for r in rows])

    def to_dict(self) -> dict:
        raise CapabilityError(f"{type(self).__name__} has no serialized form")

    def __repr__(self) -> str:
        return f"{type(self).__name__}(n={self.n})"


class TableFunction(SetFunction):
    """Explicit value table over all 2^n subsets (n <= 16)."""

    kind = "explicit"

    def __init__(self, values: Sequence[float]):
        vals = np.array(values, dtype=float)
        size = vals.shape[0]
        n = size.bit_length() - 1
        if vals.ndim != 1 or size < 2 or (1 << n) != size:
            raise DomainError("an explicit table needs 2^n values for some n >= 1")
        if n > MAX_TABLE_N:
            raise CapabilityError(f"explicit tables are limited to n <= {MAX_TABLE_N}")
        if not np.all(np.isfinite(vals)):
            raise DomainError("table values must be finite")
        super().__init__(n)
        vals.setflags(write=False)
        self.values = vals
        self._table = vals

    def _value(self, s):
        return self.values[mask_of(s)]

    def _values_many(self, rows):
        return self.values[mask_index(rows)]

    def to_dict(self) -> dict:
        return {"type": "explicit", "values": [float(v) for v in self.values]}


class LinearFunction(SetFunction):
    """Nonnegative modular function l(S) = sum of coefficients over S."""

    kind = "linear"

    def __init__(self, coeffs: Sequence[float]):
        c = np.array(coeffs, dtype=float)
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise DomainError("coefficients must be a finite vector")
        if np.any(c < 0):
            raise DomainError("linear oracle coefficients must be nonnegative")
        super().__init__(c.shape[0])
        c.setflags(write=False)
        self.coeffs = c

    def _value(self, s):
        return math.fsum(self.coeffs[e] for e in s)

    def _values_many(self, rows):
        return rows.astype(float) @ self.coeffs


class CoverageFunction(SetFunction):
    """Weighted coverage: f(S) = total weight of universe items covered by S."""

    kind = "coverage"

    def __init__(self, item_weights: Sequence[float], covers: Sequence[Sequence[int]]):
        iw = np.array(item_weights, dtype=float)
        if iw.ndim != 1 or np.any(iw < 0) or not np.all(np.isfinite(iw)):
            raise DomainError("item weights must be finite and nonnegative")
        super().__init__(len(covers))
        inc = np.zeros((self.n, iw.shape[0]), dtype=bool)
        for e, items in enumerate(covers):
            for u in items:
                if not 0 <= u < iw.shape[0]:
                    raise DomainError(f"element {e} covers unknown item {u}")
                inc[e, u] = True
        iw.setflags(write=False)
        inc.setflags(write=False)
        self.item_weights = iw
        self.incidence = inc

    def _value(self, s):
        if not s:
            return 0.0
        covered = self.incidence[sorted(s)].any(axis=0)
        return float(self.item_weights[covered].sum())

    def _values_many(self, rows):
        covered = (rows.astype(np.int32) @ self.incidence.astype(np.int32)) > 0
        return covered.astype(float) @ self.item_weights

    def to_dict(self) -> dict:
        return {
            "type": "coverage",
            "universe": int(self.item_weights.shape[0]),
            "item_weights": [float(v) for v in self.item_weights],
            "covers": [np.flatnonzero(r).tolist() for r in self.incidence],
        }


class SumFunction(SetFunction):
    """Pointwise sum of oracles on a common ground set."""

    kind = "sum"

    def __init__(self, *parts: SetFunction):
        if not parts or len({p.n for p in parts}) != 1:
            raise DomainError("summands must share one ground set")
        super().__init__(parts[0].n)
        self.parts = parts

    def _value(self, s):
        return sum(p(s) for p in self.parts)

    def _values_many(self, rows):
        return sum(p.evaluate_many(rows) for p in self.parts)


def eval_set(f: SetFunction, S: Iterable[int]) -> float:
    return f(S)


def marginal(f: SetFunction, S: Iterable[int], e: int) -> float:
    return f.marginal(S, e)


def curvature_from_values(f_full: float, f_minus: np.ndarray, f_single: np.ndarray) -> float:
    """Total curvature from f(E), f(E - e) and f({e}) for every e."""
    gains = f_full - np.asarray(f_minus, dtype=float)
    single = np.asarray(f_single, dtype=float)
    ratios = np.ones_like(gains)
    tol = ATOL * max(1.0, abs(float(f_full)))
    zero = single <= ATOL
    # submodularity caps the last gain at f(e); only a clear excess is a violation
    bad = zero & (gains - single > tol)
    if np.any(bad):
        e = int(np.flatnonzero(bad)[0])
        raise NotSubmodularError(
            f"element {e} has f(e) = {single[e]:.3g} but f_(E-e)(e) = {gains[e]:.3g} > 0"
        )
    ratios[~zero] = gains[~zero] / single[~zero]
    c = 1.0 - float(ratios.min())
    return min(1.0, max(0.0, c)) if -ATOL <= c <= 1 + ATOL else c


def total_curvature(f: SetFunction) -> float:
    """Exact total curvature c_f = 1 - min_e f_(E-e)(e) / f(e).

    Uses 2n + 1 oracle calls. Elements with f(e) = 0 contribute ratio 1; if
    such an element still has positive gain on top of E - e the oracle is not
    submodular and :class:`NotSubmodularError` is raised.
    """
    n = f.n
    full = np.ones(n, dtype=bool)
    rows = np.vstack([full[None, :], ~np.eye(n, dtype=bool), np.eye(n, dtype=bool)])
    vals = f.evaluate_many(rows)
    return curvature_from_values(vals[0], vals[1 : n + 1], vals[n + 1 :])


def singleton_values(f: SetFunction) -> np.ndarray:
    if isinstance(f, LinearFunction):
        return f.coeffs.copy()
    return f.evaluate_many(np.eye(f.n, dtype=bool))


def singleton_maxima(g: SetFunction, ell: SetFunction) -> tuple[float, float, float]:
    """(d_g, d_l, d_gl): largest singleton values of g and l and their max."""
    dg = float(singleton_values(g).max())
    dl = float(singleton_values(ell).max())
    return dg, dl, max(dg, dl)


@dataclass
class CheckReport:
    """Outcome of an exhaustive property check.

    ``violation`` names the failed property and ``witness`` carries the sets
    and values that demonstrate it; both are ``None`` on success.
    """

    ok: bool
    violation: str | None = None
    witness: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.ok


def _check_n(n: int) -> None:
    if n > MAX_CHECK_N:
        raise CapabilityError(
            f"exhaustive checks are limited to n <= {MAX_CHECK_N}; refusing n = {n}"
        )


def check_monotone_submodular(f: SetFunction, atol: float = ATOL) -> CheckReport:
    """Exhaustively verify f(empty) >= 0, monotonicity and diminishing returns.

    Uses the local characterisations, which are equivalent to the global ones:
    f(S + e) >= f(S) for all S, e, and f_S(e) >= f_(S+e')(e) for all S and
    distinct e, e' outside S. The first violation in bitmask order is
    reported together with a witness (S, T, e).
    """
    n = f.n
    _check_n(n)
    T = f.table()
    if T[0] < -atol:
        return CheckReport(False, "nonnegativity", {"S": [], "value": float(T[0])})
    idx = np.arange(1 << n)
    for e in range(n):
        base = idx[(idx >> e) & 1 == 0]
        gain = T[base | (1 << e)] - T[base]
        bad = np.flatnonzero(gain < -atol)
        if bad.size:
            S = int(base[bad[0]])
            return CheckReport(
                False,
                "monotonicity",
                {"S": sorted(members(S)), "e": e, "gain": float(gain[bad[0]])},
            )
    first = None
    for e in range(n):
        for e2 in range(n):
            if e2 == e:
                continue
            base = idx[((idx >> e) & 1 == 0) & ((idx >> e2) & 1 == 0)]
            small = T[base | (1 << e)] - T[base]
            big = T[base | (1 << e) | (1 << e2)] - T[base | (1 << e2)]
            bad = np.flatnonzero(small < big - atol)
            if bad.size:
                S = int(base[bad[0]])
                cand = (S, e, e2, float(small[bad[0]]), float(big[bad[0]]))
                if first is None or cand[:3] < first[:3]:
                    first = cand
    if first is not None:
        S, e, e2, small, big = first
        return CheckReport(
            False,
            "diminishing returns",
            {
                "S": sorted(members(S)),
                "T": sorted(members(S | (1 << e2))),
                "e": e,
                "f_S(e)": small,
                "f_T(e)": big,
            },
        )
    return CheckReport(True)
