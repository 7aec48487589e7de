"""Named invariant suites with machine-readable pass/fail results."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .budget import (
    BudgetFunction,
    BudgetInstance,
    Channel,
    Customer,
    budget_curvature_bound,
    budget_marginal,
    generate_budget_instance,
)
from .decomposition import decompose, verify_decomposition
from .driver import brute_force, sviridenko_greedy
from .grids import build_grid
from .instances import curvature_suite, random_coverage, random_submodular_table
from .lp import BoxLp2, residuals, solve_box_lp, vertex_enumeration_solve
from .multilinear import RngStream, check_discretization_lemma, estimate_mean
from .oracles import all_masks, check_monotone_submodular, total_curvature

MAX_WITNESSES = 5


@dataclass
class SuiteResult:
    name: str
    total: int = 0
    failed: int = 0
    ok: bool = True
    witnesses: list[dict] = field(default_factory=list)
    details: dict[str, Any] = field(default_factory=dict)

    def fail(self, witness: dict) -> None:
        self.failed += 1
        self.ok = False
        if len(self.witnesses) < MAX_WITNESSES:
            self.witnesses.append(witness)

    def to_dict(self) -> dict:
        return {
            "suite": self.name,
            "ok": self.ok,
            "total": self.total,
            "failed": self.failed,
            "witnesses": self.witnesses,
            "details": self.details,
        }


def estimator_contract(seed: int = 0, meta_trials: int = 200, d: float = 1.0, alpha: float = 0.1,
                       beta: float = 0.1, delta: float = 0.01, max_rate: float = 0.02) -> SuiteResult:
    """Fraction of Bernoulli(1/2)*d mean estimates outside alpha*mu + beta*d."""
    res = SuiteResult("estimator", total=meta_trials)
    mu = 0.5 * d
    root = RngStream(seed, 1)
    bad = 0
    for k in range(meta_trials):
        est = estimate_mean(lambda gen, size: d * (gen.random(size) < 0.5), d, alpha, beta, delta, root.child(k))
        if abs(est - mu) > alpha * mu + beta * d:
            bad += 1
            if len(res.witnesses) < MAX_WITNESSES:
                res.witnesses.append({"trial": k, "estimate": est})
    res.failed = bad
    res.details = {"violation_rate": bad / meta_trials, "max_rate": max_rate}
    res.ok = bad / meta_trials <= max_rate
    return res


def discretization_lemma(seed: int = 0, cases: int = 1000, n_max: int = 8, atol: float = 1e-9) -> SuiteResult:
    res = SuiteResult("discretization-lemma", total=cases)
    root = RngStream(seed, 2)
    for k in range(cases):
        r = root.child(k)
        gen = r.generator()
        n = int(gen.integers(1, n_max + 1))
        f = random_submodular_table(n, r.child("f"))
        eps = float(gen.choice([0.05, 0.1, 0.2, 0.25, 0.5, 1.0]))
        x = gen.random(n) * gen.random()
        room = np.minimum(1.0, (1.0 - x) / eps)
        y = gen.random(n) * room
        if not check_discretization_lemma(f, x, y, eps, atol):
            res.fail({"case": k, "n": n, "epsilon": eps, "x": x.tolist(), "y": y.tolist()})
    return res


def decomposition_chain(seed: int = 0, cases: int = 100, n_max: int = 10,
                        epsilons=(0.1, 0.25, 0.5)) -> SuiteResult:
    res = SuiteResult("decomposition")
    root = RngStream(seed, 3)
    for k in range(cases):
        r = root.child(k)
        n = int(r.generator().integers(1, n_max + 1))
        f = random_submodular_table(n, r.child("f"))
        for eps in epsilons:
            res.total += 1
            rep = verify_decomposition(decompose(f, eps))
            if not rep.ok:
                bad = {name: c.witness for name, c in rep.checks.items() if not c.ok}
                res.fail({"case": k, "n": n, "epsilon": eps, "checks": bad})
    return res


def grid_coverage(seed: int = 0, draws: int = 10_000, epsilons=(0.1, 0.25, 0.5),
                  sizes=(1, 4, 10, 50), ds=(0.3, 1.0, 7.5)) -> SuiteResult:
    """Every q in [0, n d] has grid neighbours with (1-eps) v - eps d <= q <= v
    (ceiling) and q >= v >= (1-eps) q - eps d (floor)."""
    res = SuiteResult("grid-coverage")
    gen = RngStream(seed, 4).generator()
    for eps in epsilons:
        for n in sizes:
            for d in ds:
                grid = build_grid(eps, n, d)
                asc = np.array(grid.values[::-1])
                q = gen.uniform(0, n * d, draws)
                q[:3] = (0.0, n * d, grid.bottom)
                up = asc[np.minimum(np.searchsorted(asc, q, side="left"), asc.size - 1)]
                down = asc[np.searchsorted(asc, q, side="right") - 1]
                tol = 1e-9 * max(1.0, n * d)
                bad = (up < q - tol) | ((1 - eps) * up - eps * d > q + tol)
                bad |= (down > q + tol) | (down < (1 - eps) * q - eps * d - tol)
                res.total += draws
                for k in np.flatnonzero(bad):
                    res.fail({"epsilon": eps, "n": n, "d": d, "q": float(q[k])})
    return res


def lp_solver(seed: int = 0, cases: int = 500, max_support: int = 6, gap: float = 1e-6,
              feas: float = 1e-8) -> SuiteResult:
    res = SuiteResult("lp-solver", total=cases)
    root = RngStream(seed, 5)
    infeasible = 0
    for k in range(cases):
        gen = root.child(k).generator()
        n = int(gen.integers(1, 10))
        s = int(gen.integers(1, min(n, max_support) + 1))
        sup = tuple(sorted(gen.choice(n, s, replace=False).tolist()))
        w, th, el = gen.random(n), gen.random(n), gen.random(n)
        if gen.random() < 0.3:  # ties and zeros stress degenerate vertices
            w, th, el = np.round(w, 1), np.round(th, 1), np.round(el, 1)
        a = gen.uniform(-0.1, 1.1) * th[list(sup)].sum()
        b = gen.uniform(-0.1, 1.1) * el[list(sup)].sum()
        lp = BoxLp2(sup, w, th, el, a, b)
        got, ref = solve_box_lp(lp), vertex_enumeration_solve(lp)
        if got.feasible != ref.feasible:
            res.fail({"case": k, "reason": "feasibility disagrees", "solver": got.feasible})
            continue
        if not got.feasible:
            infeasible += 1
            continue
        slack = min(residuals(lp, got.v))
        box = float(max(0.0, -got.v.min(), got.v.max() - 1.0))
        off = float(np.abs(np.delete(got.v, list(sup))).max(initial=0.0))
        if abs(got.objective - ref.objective) > gap or slack < -feas or box > feas or off > 0:
            res.fail({"case": k, "objective": got.objective, "reference": ref.objective,
                      "slack": slack, "method": got.method})
    res.details = {"infeasible_cases": infeasible}
    return res


def _single_channel() -> BudgetInstance:
    return BudgetInstance((Channel("a", 0.4, 2, 0.5),), (Customer("b", ("a",)),))


def budget_identities(seed: int = 0, cases: int = 50, max_n: int = 12, tol: float = 1e-12) -> SuiteResult:
    res = SuiteResult("budget-identities")
    root = RngStream(seed, 6)
    for k in range(cases):
        r = root.child(k)
        gen = r.generator()
        cap = int(gen.integers(1, 4))
        channels = int(gen.integers(1, max_n // cap + 1))
        inst = generate_budget_instance(channels, int(gen.integers(1, 6)), r.child("inst"), capacity=cap,
                                        prob_range=(0.0, 1.0), density=float(gen.uniform(0.2, 1.0)))
        f = BudgetFunction(inst)
        T = f.table()
        masks = all_masks(f.n)
        for e in range(f.n):
            bit = 1 << e
            for s in range(1 << f.n):
                if s & bit:
                    continue
                res.total += 1
                diff = T[s | bit] - T[s]
                got = budget_marginal(f, np.flatnonzero(masks[s]), e)
                if abs(got - diff) > tol:
                    res.fail({"case": k, "S": np.flatnonzero(masks[s]).tolist(), "e": e,
                              "closed_form": got, "difference": float(diff)})
        res.total += 1
        c_f, bound = total_curvature(f), budget_curvature_bound(inst)
        if c_f > bound + 1e-9:
            res.fail({"case": k, "c_f": c_f, "bound": bound})
    f = BudgetFunction(_single_channel())
    res.total += 1
    c_f, bound = total_curvature(f), budget_curvature_bound(_single_channel())
    res.details = {"single_channel_c_f": c_f, "single_channel_bound": bound}
    if abs(c_f - 0.5) > 1e-12 or abs(bound - 0.5) > 1e-12:
        res.fail({"single_channel_c_f": c_f, "bound": bound})
    return res


def submodularity(seed: int = 0, cases: int = 30, n_max: int = 10) -> SuiteResult:
    """Generated coverage, budget and table oracles are monotone submodular."""
    res = SuiteResult("submodularity")
    root = RngStream(seed, 7)
    for k in range(cases):
        r = root.child(k)
        n = int(r.generator().integers(1, n_max + 1))
        oracles = {
            "coverage": random_coverage(n, r.child("c")),
            "table": random_submodular_table(n, r.child("t")),
            "budget": BudgetFunction(generate_budget_instance(max(1, n // 2), 3, r.child("b"))),
        }
        for kind, f in oracles.items():
            res.total += 1
            rep = check_monotone_submodular(f)
            if not rep.ok:
                res.fail({"case": k, "kind": kind, "violation": rep.violation, "witness": rep.witness})
    return res


def sviridenko_bound(seed: int = 0) -> SuiteResult:
    """Partial-enumeration greedy reaches (1 - 1/e) of the optimum."""
    res = SuiteResult("sviridenko-bound")
    for inst in curvature_suite(seed):
        res.total += 1
        opt = brute_force(inst.f, inst.w).objective
        got = sviridenko_greedy(inst.f, inst.w).objective
        if got < (1 - 1 / math.e) * opt - 1e-9:
            res.fail({"instance": inst.name, "objective": got, "optimum": opt})
    return res


SUITES: dict[str, Callable[..., SuiteResult]] = {
    "estimator": estimator_contract,
    "discretization-lemma": discretization_lemma,
    "decomposition": decomposition_chain,
    "grid-coverage": grid_coverage,
    "lp-solver": lp_solver,
    "budget-identities": budget_identities,
    "submodularity": submodularity,
    "sviridenko-bound": sviridenko_bound,
}


def run_suite(name: str, seed: int = 0) -> SuiteResult:
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name](seed=seed)
