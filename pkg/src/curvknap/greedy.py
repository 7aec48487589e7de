"""Continuous greedy over the copied ground set with guessed step targets.

The copied ground set holds ``m`` full copies of E (one per guessed large
optimal element) followed by the small elements. Its objective evaluates the
union of the chosen copies under the base oracle, so a fractional point on
the copies acts on the base oracle through the inclusion probabilities

    p(e) = 1 - (1 - z(e)) * prod_i (1 - y_i(e)),

and every expectation the algorithm needs is an expectation over R(p). Exact
mode computes those expectations from the full value table (n <= 16);
sampled mode estimates them with the relative+additive sample counts.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import CapabilityError, DomainError
from .grids import iterations
from .lp import BoxLp2, LpSolution, solve_box_lp
from .multilinear import (
    RngStream,
    estimate_marginals,
    estimate_mean,
    exact_multilinear,
    sample_sets,
    subset_probabilities,
)
from .oracles import ATOL, MAX_TABLE_N, SetFunction, singleton_maxima

MODES = ("exact", "sampled")


@dataclass(frozen=True)
class CopiedGroundSet:
    """Index layout of E_1 u ... u E_m u E_S."""

    n: int
    m: int
    small: tuple[int, ...]

    @property
    def size(self) -> int:
        return self.m * self.n + len(self.small)

    def index(self, i: int, e: int) -> int:
        if not (0 <= i < self.m and 0 <= e < self.n):
            raise DomainError(f"no copy ({i}, {e})")
        return i * self.n + e

    def small_index(self, e: int) -> int:
        return self.m * self.n + self.small.index(e)

    def base(self, k: int) -> int:
        if k < self.m * self.n:
            return k % self.n
        return self.small[k - self.m * self.n]

    def collapse_rows(self, rows: np.ndarray) -> np.ndarray:
        """Map indicator rows on the copied set to their base-set unions."""
        rows = np.atleast_2d(np.asarray(rows, dtype=bool))
        out = np.zeros((rows.shape[0], self.n), dtype=bool)
        for i in range(self.m):
            out |= rows[:, i * self.n : (i + 1) * self.n]
        if self.small:
            out[:, list(self.small)] |= rows[:, self.m * self.n :]
        return out


def inclusion_probabilities(y: np.ndarray, z: np.ndarray) -> np.ndarray:
    keep = 1.0 - np.asarray(z, dtype=float)
    for row in np.atleast_2d(y):
        keep = keep * (1.0 - row)
    return np.clip(1.0 - keep, 0.0, 1.0)


@dataclass
class GreedyState:
    """Vectors and history of one guessing continuous greedy run.

    ``y[i]`` is the point on copy ``i`` (indexed by base element) and ``z`` the
    point on the small elements. ``e_history[i, t]`` is the base element
    picked for copy ``i`` at iteration ``t`` (-1 if not reached) and
    ``v_history[t]`` the small-element direction of iteration ``t``.
    ``large_points[t][i]`` and ``small_points[t]`` keep the collapsed points at
    which each step's expectations were taken.
    """

    epsilon: float
    n: int
    m: int
    large: tuple[int, ...]
    small: tuple[int, ...]
    d: float
    y: np.ndarray
    z: np.ndarray
    e_history: np.ndarray
    v_history: list[np.ndarray] = field(default_factory=list)
    large_points: list[list[np.ndarray]] = field(default_factory=list)
    small_points: list[np.ndarray] = field(default_factory=list)
    steps: list[dict] = field(default_factory=list)
    t: int = 0
    status: str = "running"
    reason: str = ""

    @property
    def copied(self) -> CopiedGroundSet:
        return CopiedGroundSet(self.n, self.m, self.small)

    @property
    def time(self) -> float:
        return self.t * self.epsilon

    @property
    def ok(self) -> bool:
        return self.status == "complete"

    def hat_point(self) -> np.ndarray:
        return np.concatenate([self.y.reshape(-1), self.z[list(self.small)]])

    def base_point(self) -> np.ndarray:
        return inclusion_probabilities(self.y, self.z)

    def linear_value(self, coeffs) -> float:
        """sum_i c.y_i + c.z, i.e. L(x) or W(x) on the copied set."""
        c = np.asarray(coeffs, dtype=float)
        return float(self.y.sum(axis=0) @ c + self.z @ c)

    def point_after(self, t: int) -> tuple[np.ndarray, np.ndarray]:
        """(y, z) as they stood after ``t`` completed iterations."""
        y = np.zeros_like(self.y)
        for i in range(self.m):
            for s in range(t):
                e = self.e_history[i, s]
                if e >= 0:
                    y[i, e] += self.epsilon
        z = np.zeros(self.n)
        for v in self.v_history[:t]:
            z += self.epsilon * v
        return y, z


def collapse_point(state: GreedyState) -> tuple[np.ndarray, np.ndarray]:
    """The point on the copied set and its base inclusion probabilities."""
    return state.hat_point(), state.base_point()


class ExpectationProbe:
    """Expectations of marginals of g over R(p) at one fixed point."""

    def __init__(self, g: SetFunction, p: np.ndarray, mode: str, d: float, rng: RngStream | None,
                 table: np.ndarray | None = None, small_params: tuple | None = None):
        self.g = g
        self.p = np.asarray(p, dtype=float)
        self.mode = mode
        self.d = d
        self.rng = rng
        self.table = table
        self.small_params = small_params
        self._probs = subset_probabilities(self.p) if mode == "exact" else None
        self._cache: dict[int, float] = {}

    def marginals(self, elements: Sequence[int], alpha=None, beta=None, delta=None, key="theta") -> np.ndarray:
        elements = list(elements)
        if not elements:
            return np.zeros(0)
        if self.mode == "exact":
            idx = np.arange(self.table.shape[0])
            out = np.array([self._probs @ (self.table[idx | (1 << e)] - self.table) for e in elements])
        else:
            if self.d <= 0:
                out = np.zeros(len(elements))
            else:
                out = estimate_marginals(self.g, self.p, elements, alpha, beta, delta, self.d, self.rng.child(key))
        out = np.maximum(out, 0.0)
        self._cache.update(zip(elements, out.tolist()))
        return out

    def element(self, e: int) -> float:
        if e not in self._cache:
            if self.mode == "exact":
                self.marginals([e])
            else:
                alpha, beta, delta = self.small_params
                self.marginals([e], alpha, beta, delta, key=("element", e))
        return self._cache[e]

    def subset(self, S: Sequence[int]) -> float:
        """E[g(R(p) + S) - g(R(p))]."""
        S = sorted(S)
        if not S:
            return 0.0
        if self.mode == "exact":
            idx = np.arange(self.table.shape[0])
            mask = sum(1 << e for e in S)
            return float(self._probs @ (self.table[idx | mask] - self.table))
        if self.d <= 0:
            return 0.0
        alpha, beta, delta = self.small_params

        def draw(gen, k):
            sets = sample_sets(self.p, gen, k)
            up = sets.copy()
            up[:, S] = True
            return self.g.evaluate_many(up) - self.g.evaluate_many(sets)

        return max(0.0, estimate_mean(draw, len(S) * self.d, alpha, beta, delta, self.rng.child("subset")))


def _make_probe(g, p, mode, d, rng, table, small_params):
    return ExpectationProbe(g, p, mode, d, rng, table, small_params)


def small_elements(
    g: SetFunction,
    ell: Sequence[float],
    w: Sequence[float],
    small: Sequence[int],
    gamma: float,
    lam: float,
    x: np.ndarray,
    epsilon: float,
    delta: float,
    d: float,
    rng: RngStream | None = None,
    mode: str = "exact",
    probe: ExpectationProbe | None = None,
) -> tuple[LpSolution, np.ndarray]:
    """One small-element direction: estimate marginals, then solve the LP.

    ``x`` is the collapsed inclusion-probability point. Marginals on the small
    elements use Estimate with parameters (eps, eps/n, delta/n) in sampled
    mode and exact expectations in exact mode. The direction minimizes W(v)
    subject to v.theta >= (1 - eps) gamma - eps d and L(v) >= lam; an
    infeasible LP is reported through ``LpSolution.feasible``. Returns the
    LP solution and the marginal vector used.
    """
    n = g.n
    if probe is None:
        table = g.table() if mode == "exact" else None
        probe = ExpectationProbe(g, x, mode, d, rng, table, (epsilon, epsilon / n, delta / n))
    small = list(small)
    theta = np.zeros(n)
    if small:
        theta[small] = probe.marginals(small, epsilon, epsilon / n, delta / n, key="small")
    lp = BoxLp2(
        tuple(small),
        np.asarray(w, dtype=float),
        theta,
        np.asarray(ell, dtype=float),
        (1.0 - epsilon) * gamma - epsilon * d,
        float(lam),
    )
    return solve_box_lp(lp), theta


def guessing_continuous_greedy(
    decomposition,
    w: Sequence[float],
    large: Sequence[int],
    small: Sequence[int],
    m: int,
    guesses,
    epsilon: float,
    delta: float,
    rng: RngStream,
    mode: str = "exact",
    d: float | None = None,
) -> GreedyState:
    """Run 1/eps rounds of the guessing continuous greedy.

    ``guesses`` is a :class:`~curvknap.grids.GuessProfile` or any object with
    the same four ``*_for_*`` methods (the known-optimum guesser computes its
    values from probes of the current point). A round first moves every copy
    ``i`` by eps along the lightest element whose estimated marginal clears
    (1 - eps) gamma^t_i - eps d / m and whose linear value is at least
    lambda_i, then moves the small part by eps along the LP direction. An
    empty candidate set or an infeasible LP rejects the profile; the
    returned state then has ``status == "rejected"``.
    """
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}")
    g = decomposition.g
    ell = np.asarray(decomposition.ell.coeffs, dtype=float)
    w = np.asarray(w, dtype=float)
    n = g.n
    if mode == "exact" and n > MAX_TABLE_N:
        raise CapabilityError(f"exact mode is limited to n <= {MAX_TABLE_N}")
    steps = iterations(epsilon)
    if abs(steps * epsilon - 1.0) > 1e-9:
        raise DomainError("1/epsilon must be an integer; normalize epsilon first")
    if d is None:
        d = singleton_maxima(g, decomposition.ell)[2]
    table = g.table() if mode == "exact" else None
    small = tuple(sorted(int(e) for e in small))
    state = GreedyState(
        epsilon=epsilon,
        n=n,
        m=m,
        large=tuple(sorted(int(e) for e in large)),
        small=small,
        d=d,
        y=np.zeros((m, n)),
        z=np.zeros(n),
        e_history=np.full((m, steps), -1, dtype=int),
    )
    everything = list(range(n))
    delta_large = epsilon * delta / (2 * n * m) if m else None
    delta_small = epsilon * delta / 2
    small_params = (epsilon, epsilon / n, delta_small / n)

    for t in range(steps):
        state.large_points.append([])
        for i in range(m):
            p = state.base_point()
            state.large_points[t].append(p)
            probe = _make_probe(g, p, mode, d, rng.child("large", t, i) if rng else None, table, small_params)
            theta = probe.marginals(everything, epsilon, epsilon / m, delta_large)
            gamma = guesses.gamma_for_large(t, i, probe)
            lam = guesses.lambda_for_large(i)
            thr = (1.0 - epsilon) * gamma - epsilon * d / m
            ok = (theta >= thr - ATOL * max(1.0, abs(thr))) & (ell >= lam - ATOL * max(1.0, abs(lam)))
            cand = np.flatnonzero(ok)
            state.steps.append({"t": t, "i": i, "gamma": gamma, "lambda": lam, "threshold": thr,
                                "candidates": int(cand.size)})
            if cand.size == 0:
                state.status = "rejected"
                state.reason = f"no candidate for copy {i} at round {t}"
                return state
            e = int(cand[np.lexsort((cand, w[cand]))[0]])
            state.y[i, e] += epsilon
            state.e_history[i, t] = e
            state.steps[-1]["chosen"] = e

        p = state.base_point()
        state.small_points.append(p)
        probe = _make_probe(g, p, mode, d, rng.child("small", t) if rng else None, table, small_params)
        gamma_s = guesses.gamma_for_small(t, probe)
        lam_s = guesses.lambda_for_small()
        sol, _ = small_elements(g, ell, w, small, gamma_s, lam_s, p, epsilon, delta_small, d,
                                mode=mode, probe=probe)
        state.steps.append({"t": t, "i": None, "gamma": gamma_s, "lambda": lam_s,
                            "feasible": sol.feasible, "lp": sol.method})
        if not sol.feasible:
            state.status = "rejected"
            state.reason = f"small-element LP infeasible at round {t}"
            return state
        state.v_history.append(sol.v)
        state.z = state.z + epsilon * sol.v
        state.t = t + 1
    state.status = "complete"
    return state


def multilinear_value(g: SetFunction, state: GreedyState) -> float:
    """G-hat(x) for the final point, exactly, through the collapse."""
    return exact_multilinear(g, state.base_point())
