"""Geometric guess grids, small/large classification and guess profiles."""
from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import BudgetExceededError, DomainError
from .oracles import ATOL, SetFunction, singleton_values


@dataclass(frozen=True)
class ValueGrid:
    """Descending values {top, (1-eps) top, ..., ~eps*d, 0}.

    ``top`` is ``count * d``; the last nonzero value is the first geometric
    step at or below ``eps * d``.
    """

    values: tuple[float, ...]
    epsilon: float
    d: float
    top: float

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __contains__(self, v) -> bool:
        return any(abs(v - u) <= ATOL * max(1.0, abs(u)) for u in self.values)

    @property
    def bottom(self) -> float:
        """Smallest nonzero value (0 for the degenerate grid {0})."""
        return self.values[-2] if len(self.values) > 1 else 0.0

    def floor(self, q: float) -> float:
        """Largest grid value <= q (0 when q is below every nonzero value)."""
        asc = self.values[::-1]
        i = bisect.bisect_right(asc, q + ATOL * max(1.0, abs(q)))
        return asc[i - 1] if i > 0 else 0.0

    def ceil(self, q: float) -> float:
        """Smallest grid value >= q; q above the top maps to the top value."""
        asc = self.values[::-1]
        i = bisect.bisect_left(asc, q - ATOL * max(1.0, abs(q)))
        return asc[i] if i < len(asc) else asc[-1]

    def scaled(self, k: float) -> "ValueGrid":
        return ValueGrid(tuple(v / k for v in self.values), self.epsilon, self.d / k, self.top / k)


def build_grid(epsilon: float, n: int, d: float) -> ValueGrid:
    """V_(eps, n): n*d, (1-eps) n*d, ..., down to the first step <= eps*d, and 0."""
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    if n < 1:
        raise DomainError("grid length parameter must be >= 1")
    if d < 0:
        raise DomainError("d must be nonnegative")
    if d == 0:
        return ValueGrid((0.0,), epsilon, 0.0, 0.0)
    ratio = epsilon / n
    K = math.ceil(math.log(ratio) / math.log(1.0 - epsilon) - 1e-12)
    K = max(K, 0)
    top = n * d
    vals = tuple(top * (1.0 - epsilon) ** j for j in range(K + 1)) + (0.0,)
    return ValueGrid(vals, epsilon, d, top)


def restricted_grid(grid: ValueGrid, gamma0: float, c_g: float) -> ValueGrid:
    """Grid values v >= (1 - eps)(1 - c_g) gamma0."""
    thr = (1.0 - grid.epsilon) * (1.0 - c_g) * gamma0
    vals = tuple(v for v in grid.values if v >= thr - ATOL * max(1.0, thr))
    return ValueGrid(vals, grid.epsilon, grid.d, grid.top)


@dataclass(frozen=True)
class ElementClassification:
    v_g: float
    v_ell: float
    large: tuple[int, ...]
    small: tuple[int, ...]

    def small_mask(self, n: int) -> np.ndarray:
        m = np.zeros(n, dtype=bool)
        m[list(self.small)] = True
        return m


def classify_elements(
    g: SetFunction | np.ndarray,
    ell: SetFunction | np.ndarray,
    v_g: float,
    v_ell: float,
    epsilon: float,
) -> ElementClassification:
    """Small iff g(e) <= eps^6 v_g and l(e) <= eps^6 v_l; everything else is large.

    ``g`` and ``ell`` may be oracles or precomputed singleton value vectors.
    """
    gs = singleton_values(g) if isinstance(g, SetFunction) else np.asarray(g, float)
    ls = singleton_values(ell) if isinstance(ell, SetFunction) else np.asarray(ell, float)
    e6 = epsilon**6
    small = (gs <= e6 * v_g) & (ls <= e6 * v_ell)
    return ElementClassification(
        float(v_g),
        float(v_ell),
        tuple(np.flatnonzero(~small).tolist()),
        tuple(np.flatnonzero(small).tolist()),
    )


def large_element_count_bound(c_g: float, epsilon: float) -> int:
    """floor(1/((1-c_g) eps^6)) + floor(1/eps^6): bound on |O_L| under good v_g, v_l."""
    if c_g >= 1:
        raise DomainError("the large-element bound is unbounded for c_g = 1")
    if not 0 < epsilon <= 1:
        raise DomainError("epsilon must lie in (0, 1]")
    e6 = epsilon**6
    return math.floor(1.0 / ((1.0 - c_g) * e6) + 1e-9) + math.floor(1.0 / e6 + 1e-9)


def normalize_epsilon(epsilon: float) -> float:
    """Largest eps' <= eps with 1/eps' integral."""
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    return 1.0 / math.ceil(1.0 / epsilon - 1e-9)


def iterations(epsilon: float) -> int:
    return int(round(1.0 / epsilon))


@dataclass
class GuessProfile:
    """One complete set of guesses for a continuous greedy run.

    ``gamma_large[i, t]`` and ``lambda_large[i]`` belong to the i-th large
    slot, ``gamma_small[t]`` and ``lambda_small`` to the small elements.
    """

    v_g: float
    v_ell: float
    m: int
    gamma_large: np.ndarray
    lambda_large: np.ndarray
    gamma_small: np.ndarray
    lambda_small: float

    def __post_init__(self):
        self.gamma_small = np.asarray(self.gamma_small, dtype=float).reshape(-1)
        self.lambda_large = np.asarray(self.lambda_large, dtype=float).reshape(self.m)
        gl = np.asarray(self.gamma_large, dtype=float)
        if gl.size != self.m * self.gamma_small.shape[0]:
            raise DomainError("large and small guess sequences differ in length")
        self.gamma_large = gl.reshape(self.m, self.gamma_small.shape[0])
        vals = [self.v_g, self.v_ell, self.lambda_small]
        if min(vals) < 0 or np.any(self.gamma_large < 0) or np.any(self.lambda_large < 0) or np.any(self.gamma_small < 0):
            raise DomainError("guessed values must be nonnegative")

    @property
    def steps(self) -> int:
        return self.gamma_small.shape[0]

    # guess provider protocol used by the continuous greedy
    def gamma_for_large(self, t: int, i: int, probe) -> float:
        return float(self.gamma_large[i, t])

    def lambda_for_large(self, i: int) -> float:
        return float(self.lambda_large[i])

    def gamma_for_small(self, t: int, probe) -> float:
        return float(self.gamma_small[t])

    def lambda_for_small(self) -> float:
        return float(self.lambda_small)

    def to_dict(self) -> dict:
        return {
            "v_g": self.v_g,
            "v_ell": self.v_ell,
            "m": self.m,
            "gamma_large": self.gamma_large.tolist(),
            "lambda_large": self.lambda_large.tolist(),
            "gamma_small": self.gamma_small.tolist(),
            "lambda_small": self.lambda_small,
        }


class OptimumGuesser:
    """Guess provider that snaps the true quantities of a reference set down
    onto the grids ("largest grid value <= truth").

    With the true optimum as reference these are good guesses by grid
    coverage. The reference's large elements ``ref_large[i]`` are matched to
    copy ``i``; ``probe`` objects handed in by the continuous greedy supply
    E[g_R(x)(e)] and E[g_R(x)(T)] at the current point. Every issued value is
    recorded together with the truth it was derived from.
    """

    def __init__(
        self,
        ref_large: Sequence[int],
        ref_small: Sequence[int],
        ell_coeffs: np.ndarray,
        v_g: float,
        v_ell: float,
        grid_n: ValueGrid,
        grid_m: ValueGrid | None,
        steps: int,
    ):
        self.ref_large = list(ref_large)
        self.ref_small = sorted(ref_small)
        self.m = len(self.ref_large)
        self.ell = np.asarray(ell_coeffs, dtype=float)
        self.v_g = v_g
        self.v_ell = v_ell
        self.grid_n = grid_n
        self.grid_m = grid_m
        self.steps = steps
        self.gamma_large = np.zeros((self.m, steps))
        self.gamma_small = np.zeros(steps)
        self.truth_large = np.full((self.m, steps), np.nan)
        self.truth_small = np.full(steps, np.nan)
        self.lambda_large = np.array([grid_m.floor(self.ell[o]) for o in self.ref_large]) if self.m else np.zeros(0)
        self.lambda_small = grid_n.floor(float(self.ell[self.ref_small].sum())) if self.ref_small else 0.0

    def gamma_for_large(self, t: int, i: int, probe) -> float:
        truth = float(probe.element(self.ref_large[i]))
        self.truth_large[i, t] = truth
        self.gamma_large[i, t] = self.grid_m.floor(truth)
        return float(self.gamma_large[i, t])

    def lambda_for_large(self, i: int) -> float:
        return float(self.lambda_large[i])

    def gamma_for_small(self, t: int, probe) -> float:
        truth = float(probe.subset(self.ref_small)) if self.ref_small else 0.0
        self.truth_small[t] = truth
        self.gamma_small[t] = self.grid_n.floor(truth)
        return float(self.gamma_small[t])

    def lambda_for_small(self) -> float:
        return float(self.lambda_small)

    def profile(self) -> GuessProfile:
        return GuessProfile(
            self.v_g,
            self.v_ell,
            self.m,
            self.gamma_large.copy(),
            self.lambda_large.copy(),
            self.gamma_small.copy(),
            float(self.lambda_small),
        )


def good_guesses_from_optimum(
    optimum: Sequence[int],
    decomposition,
    classification: ElementClassification,
    grid_n: ValueGrid,
    epsilon: float,
    weights: Sequence[float],
    trajectory,
) -> GuessProfile:
    """Good guesses for a known optimum, produced along a coupled run.

    ``trajectory(guesser)`` must run the continuous greedy with ``guesser`` as
    its guess provider (the per-step quantities depend on the trajectory
    itself). The recorded guesses are returned as a fixed profile.
    """
    O = sorted(set(int(e) for e in optimum))
    if sum(float(weights[e]) for e in O) > 1.0 + 1e-12:
        raise DomainError("the reference optimum violates the knapsack constraint")
    large = [e for e in O if e in set(classification.large)]
    small = [e for e in O if e in set(classification.small)]
    m = len(large)
    grid_m = build_grid(epsilon, m, grid_n.d).scaled(m) if m else None
    guesser = OptimumGuesser(
        large,
        small,
        decomposition.ell.coeffs,
        classification.v_g,
        classification.v_ell,
        grid_n,
        grid_m,
        iterations(epsilon),
    )
    trajectory(guesser)
    return guesser.profile()


def count_guess_profiles(grid_n: ValueGrid, grid_m: ValueGrid | None, m: int, steps: int, c_g: float) -> int:
    """Closed-form number of profiles :func:`enumerate_guess_profiles` yields."""
    large = len(grid_m) ** (m * steps + m) if m else 1
    small = sum(len(restricted_grid(grid_n, g0, c_g)) ** (steps - 1) for g0 in grid_n)
    return large * small * len(grid_n)


def enumerate_guess_profiles(
    grid_n: ValueGrid,
    grid_m: ValueGrid | None,
    m: int,
    steps: int,
    c_g: float,
    v_g: float = 0.0,
    v_ell: float = 0.0,
    budget: int | None = None,
) -> Iterator[GuessProfile]:
    """Every profile of the full enumeration, in a fixed order.

    Large slots take (gamma^t_i, lambda_i) from ``grid_m`` (already divided by
    m); gamma^0_S and lambda_S range over ``grid_n`` and the later gamma^t_S
    over the grid restricted by gamma^0_S.
    """
    total = count_guess_profiles(grid_n, grid_m, m, steps, c_g)
    if budget is not None and total > budget:
        raise BudgetExceededError(
            f"{total} guess profiles exceed the budget of {budget}; "
            "use the known-O or heuristic mode instead"
        )
    large_vals = tuple(grid_m) if m else ()
    for large in itertools.product(large_vals, repeat=m * steps + m) if m else [()]:
        gl = np.array(large[: m * steps]).reshape(m, steps) if m else np.zeros((0, steps))
        ll = np.array(large[m * steps :])
        for g0 in grid_n:
            rest = tuple(restricted_grid(grid_n, g0, c_g))
            for lam_s in grid_n:
                for tail in itertools.product(rest, repeat=steps - 1):
                    yield GuessProfile(v_g, v_ell, m, gl, ll, np.array((g0,) + tail), lam_s)
