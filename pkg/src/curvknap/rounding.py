"""Randomized rounding of a continuous greedy state into a feasible set."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError
from .multilinear import RngStream
from .oracles import is_feasible

SUM_TOL = 1e-9
TAIL_FACTORS = (1.0, 1.5, 2.0, 3.0)


@dataclass(frozen=True)
class RoundingInput:
    """Everything the rounding needs: one categorical per copy plus the small part.

    ``y`` has shape (m, n) and every row must sum to 1; ``z`` is supported on
    ``small``; ``v_history`` holds the small-element directions, whose largest
    weight sets the heavy-element cutoff.
    """

    w: np.ndarray
    large: tuple[int, ...]
    small: tuple[int, ...]
    m: int
    y: np.ndarray
    z: np.ndarray
    v_history: tuple[np.ndarray, ...]
    epsilon: float

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        y = np.asarray(self.y, dtype=float).reshape(self.m, z.shape[0])
        for name, arr in (("y", y), ("z", z)):
            if np.any(arr < -SUM_TOL) or np.any(arr > 1 + SUM_TOL):
                raise DomainError(f"{name} has a probability outside [0, 1]")
        sums = y.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > SUM_TOL):
            raise DomainError(f"each copy needs total mass 1, got {sums.tolist()}")
        y = np.clip(y, 0.0, 1.0)
        if self.m:
            y = y / y.sum(axis=1, keepdims=True)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", np.clip(z, 0.0, 1.0))
        object.__setattr__(self, "w", np.asarray(self.w, dtype=float))

    @classmethod
    def from_state(cls, state, w: Sequence[float]) -> "RoundingInput":
        return cls(
            np.asarray(w, dtype=float),
            state.large,
            state.small,
            state.m,
            state.y,
            state.z,
            tuple(state.v_history),
            state.epsilon,
        )

    @property
    def n(self) -> int:
        return self.w.shape[0]

    def trimmed_small(self) -> np.ndarray:
        """z'(e) = (1 - eps) z(e) if w(e) < eps^3 max_t W(v^t), else 0."""
        top = max((float(self.w @ v) for v in self.v_history), default=0.0)
        keep = self.w < self.epsilon**3 * top
        return np.where(keep, (1.0 - self.epsilon) * self.z, 0.0)


def _draw(inp: RoundingInput, gen: np.random.Generator, trials: int) -> np.ndarray:
    """``trials`` rounded sets before the feasibility filter, as boolean rows."""
    n = inp.n
    out = gen.random((trials, n)) < inp.trimmed_small()
    if inp.m:
        cdf = np.cumsum(inp.y, axis=1)
        cdf[:, -1] = 1.0
        u = gen.random((trials, inp.m))
        for i in range(inp.m):
            picks = np.searchsorted(cdf[i], u[:, i], side="right")
            out[np.arange(trials), np.minimum(picks, n - 1)] = True
    return out


def round_many(inp: RoundingInput, rng: RngStream, trials: int) -> np.ndarray:
    """``trials`` independent roundings; infeasible draws become empty rows."""
    rows = _draw(inp, rng.generator(), trials)
    approx = rows.astype(float) @ inp.w
    heavy = approx > 1.0 + 1e-9
    # settle the near-boundary rows with the exactly rounded sum
    for k in np.flatnonzero(np.abs(approx - 1.0) <= 1e-9):
        heavy[k] = not is_feasible(inp.w, np.flatnonzero(rows[k]))
    rows[heavy] = False
    return rows


def round_state(inp: RoundingInput, rng: RngStream) -> frozenset[int]:
    """One rounding: a categorical pick per copy, independent small draws,
    and the empty set whenever the union overflows the knapsack."""
    row = round_many(inp, rng, 1)[0]
    return frozenset(np.flatnonzero(row).tolist())


def weight_tail_profile(
    inp: RoundingInput,
    rng: RngStream,
    trials: int,
    reference_weight: float,
    factors: Sequence[float] = TAIL_FACTORS,
) -> dict[float, float]:
    """Empirical Pr[w(S) > gamma * reference_weight] before the feasibility filter."""
    rows = _draw(inp, rng.generator(), trials)
    weights = rows.astype(float) @ inp.w
    return {float(g): float(np.mean(weights > g * reference_weight + 1e-12)) for g in factors}
