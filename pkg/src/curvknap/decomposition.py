"""Split a monotone submodular f into a submodular part g and a linear part l.

The linear part takes a ``(1 - eps/2)`` share of each element's gain on top
of everything else, l(e) = (1 - eps/2) f_(E-e)(e), and g = f - l keeps the
rest. g then has curvature at most ``1 - eps (1 - c_f) / 2``, which bounds the
number of large elements the joint algorithm has to guess.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .oracles import (
    ATOL,
    CheckReport,
    LinearFunction,
    SetFunction,
    _check_n,
    all_masks,
    check_monotone_submodular,
    curvature_from_values,
    members,
    total_curvature,
)


class ResidualFunction(SetFunction):
    """g(S) = f(S) - l(S), evaluated lazily with one call to f per query."""

    kind = "residual"

    def __init__(self, f: SetFunction, ell: LinearFunction):
        if f.n != ell.n:
            raise DomainError("f and l must share a ground set")
        super().__init__(f.n)
        self.f = f
        self.ell = ell

    def _value(self, s):
        return self.f(s) - self.ell._value(s)

    def _values_many(self, rows):
        return self.f.evaluate_many(rows) - rows.astype(float) @ self.ell.coeffs

    def table(self):
        with self._table_lock:
            if self._table is None:
                vals = self.f.table() - all_masks(self.n).astype(float) @ self.ell.coeffs
                self._count(vals.shape[0])
                vals.setflags(write=False)
                self._table = vals
        return self._table


@dataclass(frozen=True)
class Decomposition:
    f: SetFunction
    g: ResidualFunction
    ell: LinearFunction
    epsilon: float
    c_f: float
    c_g_bound: float

    @property
    def n(self) -> int:
        return self.f.n


def decompose(f: SetFunction, epsilon: float) -> Decomposition:
    """Build (g, l) with l(e) = (1 - eps/2) f_(E-e)(e) and g = f - l."""
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    n = f.n
    rows = np.vstack([np.ones((1, n), dtype=bool), ~np.eye(n, dtype=bool), np.eye(n, dtype=bool)])
    vals = f.evaluate_many(rows)
    gains = vals[0] - vals[1 : n + 1]
    if np.any(gains < -ATOL):
        e = int(np.argmin(gains))
        raise DomainError(f"f is not monotone: f_(E-e)(e) = {gains[e]:.3g} < 0 for e = {e}")
    gains = np.clip(gains, 0.0, None)
    c_f = curvature_from_values(vals[0], vals[1 : n + 1], vals[n + 1 :])
    ell = LinearFunction((1.0 - epsilon / 2.0) * gains)
    g = ResidualFunction(f, ell)
    return Decomposition(f, g, ell, epsilon, c_f, 1.0 - epsilon * (1.0 - c_f) / 2.0)


@dataclass
class DecompositionReport:
    ok: bool
    c_g: float
    checks: dict[str, CheckReport]

    def __bool__(self) -> bool:
        return self.ok


def verify_decomposition(d: Decomposition, f: SetFunction | None = None, atol: float = ATOL) -> DecompositionReport:
    """Exhaustively check g + l = f, l >= (1 - c_f - eps/2) f, the curvature of
    g against its bound, and that g is monotone submodular (n <= 12)."""
    f = d.f if f is None else f
    _check_n(f.n)
    F = f.table()
    G = d.g.table()
    Lv = all_masks(f.n).astype(float) @ d.ell.coeffs
    checks: dict[str, CheckReport] = {}

    gap = np.abs(G + Lv - F)
    bad = int(np.argmax(gap))
    checks["sum"] = (
        CheckReport(True)
        if gap[bad] <= atol
        else CheckReport(False, "g + l != f", {"S": sorted(members(bad)), "gap": float(gap[bad])})
    )

    floor = (1.0 - d.c_f - d.epsilon / 2.0) * F
    short = floor - Lv
    bad = int(np.argmax(short))
    checks["linear_share"] = (
        CheckReport(True)
        if short[bad] <= atol
        else CheckReport(
            False,
            "l(S) < (1 - c_f - eps/2) f(S)",
            {"S": sorted(members(bad)), "l": float(Lv[bad]), "bound": float(floor[bad])},
        )
    )

    mono = check_monotone_submodular(d.g, atol)
    checks["g_submodular"] = mono
    c_g = float("nan")
    if mono.ok:
        c_g = total_curvature(d.g)
        checks["curvature"] = (
            CheckReport(True)
            if c_g <= d.c_g_bound + atol
            else CheckReport(False, "c_g above bound", {"c_g": c_g, "bound": d.c_g_bound})
        )
    return DecompositionReport(all(c.ok for c in checks.values()), c_g, checks)
