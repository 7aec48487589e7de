"""Algorithms end to end: exact and greedy baselines, the curvature-aware
guessing pipeline and the curvature dispatcher."""
from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .decomposition import Decomposition, decompose
from .errors import BudgetExceededError, CapabilityError, DomainError
from .grids import (
    OptimumGuesser,
    build_grid,
    classify_elements,
    count_guess_profiles,
    enumerate_guess_profiles,
    iterations,
    large_element_count_bound,
    normalize_epsilon,
)
from .greedy import GreedyState, guessing_continuous_greedy
from .multilinear import RngStream, exact_multilinear
from .oracles import (
    MAX_CHECK_N,
    MAX_TABLE_N,
    SetFunction,
    is_feasible,
    set_weight,
    singleton_maxima,
    singleton_values,
    total_curvature,
)
from .rounding import RoundingInput, round_state

MAX_BRUTE_N = 20
DEFAULT_BUDGET = 10**6
CURVATURE_MODES = ("known-O", "heuristic", "enumerate")
ESTIMATORS = ("exact", "sampled")
CSV_COLUMNS = (
    "instance_id",
    "algorithm",
    "mode",
    "epsilon",
    "seed",
    "objective",
    "weight",
    "oracle_calls",
    "wall_time_ms",
    "error",
)
DIAGNOSTIC_KEYS = (
    "epsilon",
    "c_f",
    "v_g",
    "v_ell",
    "m",
    "G_hat",
    "L",
    "W",
    "profiles_tried",
    "profiles_rejected",
    "oracle_calls",
)


@dataclass
class RunReport:
    """Outcome of one algorithm run.

    ``trace`` carries in-memory artifacts for inspection (greedy states,
    guessers) and is never serialized; ``wall_time_ms`` only enters CSV rows.
    """

    chosen: tuple[int, ...]
    objective: float
    weight: float
    algorithm: str
    seed: int | None = None
    mode: str = ""
    diagnostics: dict[str, Any] = field(default_factory=dict)
    wall_time_ms: float = 0.0
    trace: dict[str, Any] = field(default_factory=dict, repr=False)

    @property
    def feasible(self) -> bool:
        return self.weight <= 1.0

    def to_dict(self) -> dict:
        diag = {k: self.diagnostics.get(k) for k in DIAGNOSTIC_KEYS}
        diag.update({k: v for k, v in self.diagnostics.items() if k not in diag})
        return {
            "chosen_set": list(self.chosen),
            "objective": self.objective,
            "weight": self.weight,
            "feasible": self.feasible,
            "algorithm": self.algorithm,
            "mode": self.mode,
            "seed": self.seed,
            "diagnostics": diag,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_jsonable)

    def csv_row(self, instance_id: str = "", epsilon: float | None = None) -> dict:
        return {
            "instance_id": instance_id,
            "algorithm": self.algorithm,
            "mode": self.mode,
            "epsilon": "" if epsilon is None else epsilon,
            "seed": "" if self.seed is None else self.seed,
            "objective": repr(self.objective),
            "weight": repr(self.weight),
            "oracle_calls": self.diagnostics.get("oracle_calls", ""),
            "wall_time_ms": f"{self.wall_time_ms:.3f}",
            "error": "",
        }


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"cannot serialize {type(v).__name__}")


def _report(f: SetFunction, w, chosen, algorithm, *, seed=None, mode="", calls0=0, t0=None, **diag) -> RunReport:
    chosen = tuple(sorted(int(e) for e in chosen))
    weight = set_weight(w, chosen)
    if weight > 1.0:
        raise DomainError(f"{algorithm} produced an infeasible set of weight {weight}")
    objective = float(f(chosen))
    diag["oracle_calls"] = f.calls - calls0
    elapsed = 0.0 if t0 is None else (time.perf_counter() - t0) * 1e3
    return RunReport(chosen, objective, weight, algorithm, seed, mode, diag, elapsed)


def _set_key(value: float, chosen: Sequence[int]):
    """Sort key: larger value first, then lexicographically smaller set."""
    return (-value, tuple(sorted(chosen)))


# ---------------------------------------------------------------- baselines


def brute_force(f: SetFunction, w: Sequence[float]) -> RunReport:
    """Exact optimum by scanning all 2^n subsets (ties: smallest bitmask)."""
    n = f.n
    if n > MAX_BRUTE_N:
        raise CapabilityError(f"brute force is limited to n <= {MAX_BRUTE_N}")
    t0, calls0 = time.perf_counter(), f.calls
    w = np.asarray(w, dtype=float)
    best_val, best_mask = -math.inf, 0
    chunk = 1 << min(n, 16)
    bits = np.arange(n)
    for start in range(0, 1 << n, chunk):
        masks = np.arange(start, min(start + chunk, 1 << n))
        rows = ((masks[:, None] >> bits) & 1).astype(bool)
        weights = rows.astype(float) @ w
        ok = weights <= 1.0 + 1e-9
        for k in np.flatnonzero(ok & (weights > 1.0 - 1e-9)):
            ok[k] = is_feasible(w, np.flatnonzero(rows[k]))
        vals = np.where(ok, f.evaluate_many(rows), -math.inf)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val, best_mask = float(vals[k]), int(masks[k])
    chosen = [e for e in range(n) if best_mask >> e & 1]
    return _report(f, w, chosen, "brute", calls0=calls0, t0=t0)


def _greedy_complete(f: SetFunction, w: np.ndarray, start: Sequence[int]) -> tuple[float, tuple[int, ...]]:
    """Add the feasible element of best gain/weight ratio until none fits."""
    n = f.n
    S = set(start)
    cur = f(S)
    while True:
        cand = [e for e in range(n) if e not in S and is_feasible(w, list(S) + [e])]
        if not cand:
            break
        rows = np.zeros((len(cand), n), dtype=bool)
        rows[:, list(S)] = True
        rows[np.arange(len(cand)), cand] = True
        gains = f.evaluate_many(rows) - cur
        we = w[cand]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(we > 0, gains / np.where(we > 0, we, 1.0), np.inf)
        k = int(np.argmax(ratio))  # first maximum is the smallest index
        S.add(cand[k])
        cur = float(cur + gains[k])
    return f(S), tuple(sorted(S))


def greedy_cost_benefit(f: SetFunction, w: Sequence[float]) -> RunReport:
    """Ratio greedy guarded by the best feasible singleton."""
    t0, calls0 = time.perf_counter(), f.calls
    w = np.asarray(w, dtype=float)
    val, S = _greedy_complete(f, w, ())
    single = singleton_values(f)
    fits = np.flatnonzero(w <= 1.0)
    if fits.size:
        e = int(fits[np.argmax(single[fits])])
        if single[e] > val:
            val, S = float(single[e]), (e,)
    return _report(f, w, S, "greedy", calls0=calls0, t0=t0)


def sviridenko_greedy(f: SetFunction, w: Sequence[float], seed_size: int = 3) -> RunReport:
    """Partial enumeration: every feasible set of at most ``seed_size``
    elements, completed by ratio greedy; the best completion wins."""
    t0, calls0 = time.perf_counter(), f.calls
    w = np.asarray(w, dtype=float)
    best = (-math.inf, ())
    for k in range(seed_size + 1):
        for seed in itertools.combinations(range(f.n), k):
            if not is_feasible(w, seed):
                continue
            val, S = _greedy_complete(f, w, seed)
            if _set_key(val, S) < _set_key(*best):
                best = (val, S)
    return _report(f, w, best[1], "sviridenko", calls0=calls0, t0=t0)


# ---------------------------------------------------------------- curvature pipeline


@dataclass
class _Candidate:
    value: float
    chosen: tuple[int, ...]


def _round_and_score(state: GreedyState, w, g_plus_l: SetFunction, rng: RngStream) -> _Candidate:
    S = round_state(RoundingInput.from_state(state, w), rng)
    return _Candidate(float(g_plus_l(S)), tuple(sorted(S)))


def _fractional_diagnostics(d: Decomposition, w, state: GreedyState) -> dict:
    g_hat = exact_multilinear(d.g, state.base_point()) if d.n <= MAX_TABLE_N else None
    return {"G_hat": g_hat, "L": state.linear_value(d.ell.coeffs), "W": state.linear_value(w)}


def _reference_run(d, w, eps, reference, grid_n, dmax, rng, estimator):
    """Coupled run whose guesses are the snapped true quantities of ``reference``."""
    ell = d.ell.coeffs
    g_ref, l_ref = float(d.g(reference)), float(ell[list(reference)].sum())
    v_g, v_ell = grid_n.ceil(g_ref), grid_n.ceil(l_ref)
    cls = classify_elements(singleton_values(d.g), ell, v_g, v_ell, eps)
    large = set(cls.large)
    ref_large = [e for e in sorted(reference) if e in large]
    ref_small = [e for e in sorted(reference) if e not in large]
    m = len(ref_large)
    grid_m = build_grid(eps, m, dmax).scaled(m) if m else None
    guesser = OptimumGuesser(ref_large, ref_small, ell, v_g, v_ell, grid_n, grid_m, iterations(eps))
    state = guessing_continuous_greedy(d, w, cls.large, cls.small, m, guesser, eps, eps, rng, estimator, dmax)
    return state, guesser, cls


def knapsack_curvature(
    decomposition: Decomposition,
    w: Sequence[float],
    epsilon: float,
    mode: str = "known-O",
    rng: RngStream | None = None,
    budget: int = DEFAULT_BUDGET,
    estimator: str = "exact",
    optimum: Sequence[int] | None = None,
) -> RunReport:
    """Maximize g + l under w(S) <= 1 with the guessing continuous greedy.

    ``known-O`` feeds the run with the snapped quantities of the true optimum
    of g + l (brute force unless ``optimum`` is given; n <= 12).
    ``heuristic`` does the same with the ratio-greedy solution standing in for
    the optimum; it carries no guarantee. ``enumerate`` tries every guess
    profile and refuses when their number exceeds ``budget``.
    Every completed run is rounded once; the best candidate by g + l wins
    and the empty set is always a candidate.
    """
    if mode not in CURVATURE_MODES:
        raise DomainError(f"mode must be one of {CURVATURE_MODES}, got {mode!r}")
    if estimator not in ESTIMATORS:
        raise DomainError(f"estimator must be one of {ESTIMATORS}, got {estimator!r}")
    d = decomposition
    f = d.f
    n = d.n
    if estimator == "exact" and n > MAX_TABLE_N:
        raise CapabilityError(f"exact estimation is limited to n <= {MAX_TABLE_N}; use --estimator sampled")
    rng = rng or RngStream(0)
    t0, calls0 = time.perf_counter(), f.calls
    w = np.asarray(w, dtype=float)
    eps = normalize_epsilon(epsilon)
    dmax = singleton_maxima(d.g, d.ell)[2]
    grid_n = build_grid(eps, n, dmax)
    diag: dict[str, Any] = {"epsilon": eps, "c_f": d.c_f, "profiles_tried": 0, "profiles_rejected": 0}
    trace: dict[str, Any] = {"states": [], "guessers": []}
    cands = [_Candidate(float(f(())), ())]

    if mode in ("known-O", "heuristic"):
        if mode == "known-O":
            if n > MAX_CHECK_N:
                raise CapabilityError(f"known-O mode is limited to n <= {MAX_CHECK_N}")
            reference = brute_force(f, w).chosen if optimum is None else tuple(sorted(optimum))
        else:
            reference = greedy_cost_benefit(f, w).chosen
        state, guesser, cls = _reference_run(d, w, eps, reference, grid_n, dmax, rng.child("greedy"), estimator)
        diag.update(v_g=guesser.v_g, v_ell=guesser.v_ell, m=guesser.m, profiles_tried=1)
        diag["reference"] = list(reference)
        trace["states"].append(state)
        trace["guessers"].append(guesser)
        trace["classification"] = cls
        if state.ok:
            diag.update(_fractional_diagnostics(d, w, state))
            cands.append(_round_and_score(state, w, f, rng.child("round")))
        else:
            diag["profiles_rejected"] = 1
            diag["reject_reason"] = state.reason
    else:
        tried, rejected = _enumerate(d, w, eps, grid_n, dmax, rng, estimator, budget, cands, trace)
        diag.update(profiles_tried=tried, profiles_rejected=rejected)

    best = min(cands, key=lambda c: _set_key(c.value, c.chosen))
    rep = _report(f, w, best.chosen, "curvature", seed=rng.seed, mode=mode, calls0=calls0, t0=t0, **diag)
    rep.diagnostics["estimator"] = estimator
    rep.trace = trace
    return rep


def _enumeration_plan(d, eps, grid_n, dmax):
    """(v_g, v_l, classification, m, grid_m) for every outer loop of the enumeration."""
    c_g = total_curvature(d.g)
    ell = d.ell.coeffs
    gs = singleton_values(d.g)
    steps = iterations(eps)
    plan = []
    for v_g in grid_n:
        for v_ell in grid_n:
            cls = classify_elements(gs, ell, v_g, v_ell, eps)
            cap = len(cls.large)
            if c_g < 1:
                cap = min(cap, large_element_count_bound(c_g, eps))
            for m in range(cap + 1):
                grid_m = build_grid(eps, m, dmax).scaled(m) if m else None
                count = count_guess_profiles(grid_n, grid_m, m, steps, c_g)
                plan.append((v_g, v_ell, cls, m, grid_m, count))
    return c_g, plan


def _enumerate(d, w, eps, grid_n, dmax, rng, estimator, budget, cands, trace):
    c_g, plan = _enumeration_plan(d, eps, grid_n, dmax)
    total = sum(p[-1] for p in plan)
    if total > budget:
        raise BudgetExceededError(
            f"full enumeration needs {total} guess profiles, over the budget of {budget}; "
            "use the known-O or heuristic mode instead"
        )
    steps = iterations(eps)
    tried = rejected = 0
    for v_g, v_ell, cls, m, grid_m, _ in plan:
        for prof in enumerate_guess_profiles(grid_n, grid_m, m, steps, c_g, v_g, v_ell):
            r = rng.child("profile", tried)
            tried += 1
            state = guessing_continuous_greedy(d, w, cls.large, cls.small, m, prof, eps, eps, r, estimator, dmax)
            if not state.ok:
                rejected += 1
                continue
            cands.append(_round_and_score(state, w, d.f, r.child("round")))
    return tried, rejected


def dispatch(
    f: SetFunction,
    w: Sequence[float],
    epsilon: float,
    rng: RngStream | None = None,
    mode: str = "known-O",
    estimator: str = "exact",
    budget: int = DEFAULT_BUDGET,
) -> RunReport:
    """Route by curvature: c_f >= 1 - e*eps goes to partial-enumeration
    greedy, everything else is decomposed with eps and solved at eps/2."""
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    t0, calls0 = time.perf_counter(), f.calls
    c_f = total_curvature(f)
    if c_f >= 1.0 - math.e * epsilon:
        rep = sviridenko_greedy(f, w)
        rep.algorithm = "dispatch:sviridenko"
        rep.diagnostics["c_f"] = c_f
        rep.diagnostics["epsilon"] = epsilon
    else:
        d = decompose(f, epsilon)
        rep = knapsack_curvature(d, w, epsilon / 2.0, mode, rng, budget, estimator)
        rep.algorithm = "dispatch:curvature"
    rep.seed = None if rng is None else rng.seed
    rep.mode = mode
    rep.diagnostics["oracle_calls"] = f.calls - calls0
    rep.wall_time_ms = (time.perf_counter() - t0) * 1e3
    return rep


def run_algorithm(name: str, f: SetFunction, w, epsilon: float, seed: int = 0,
                  mode: str = "known-O", estimator: str = "exact", budget: int = DEFAULT_BUDGET) -> RunReport:
    """Run an algorithm by its command-line name."""
    rng = RngStream(seed)
    if name == "brute":
        rep = brute_force(f, w)
    elif name == "greedy":
        rep = greedy_cost_benefit(f, w)
    elif name == "sviridenko":
        rep = sviridenko_greedy(f, w)
    elif name == "curvature":
        rep = knapsack_curvature(decompose(f, epsilon), w, epsilon, mode, rng, budget, estimator)
    elif name == "dispatch":
        rep = dispatch(f, w, epsilon, rng, mode, estimator, budget)
    else:
        raise DomainError(f"unknown algorithm {name!r}")
    rep.seed = seed
    if name in ("brute", "greedy", "sviridenko"):
        rep.mode = ""
    return rep
