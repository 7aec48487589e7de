import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from curvknap.decomposition import decompose
from curvknap.driver import (
    CSV_COLUMNS,
    brute_force,
    dispatch,
    greedy_cost_benefit,
    knapsack_curvature,
    run_algorithm,
    sviridenko_greedy,
)
from curvknap.errors import BudgetExceededError, CapabilityError, DomainError
from curvknap.instances import generate
from curvknap.multilinear import RngStream
from curvknap.oracles import LinearFunction, TableFunction, total_curvature


def knapsack_dp(values, w, scale=1000):
    """0/1 knapsack over integer weights round(w * scale)."""
    iw = [int(round(x * scale)) for x in w]
    best = [0.0] * (scale + 1)
    for v, c in zip(values, iw):
        for cap in range(scale, c - 1, -1):
            best[cap] = max(best[cap], best[cap - c] + v)
    return best[scale]


def test_brute_force_example(pair_table):
    rep = brute_force(pair_table, [0.5, 0.5])
    assert rep.chosen == (0, 1) and rep.objective == 1.5
    rep = brute_force(pair_table, [0.5, 0.6])
    assert rep.chosen == (0,) and rep.objective == 1.0


def test_brute_force_tie_goes_to_smallest_mask():
    rep = brute_force(TableFunction([0.0, 1.0, 1.0, 1.0]), [0.6, 0.6])
    assert rep.chosen == (0,)


def test_everything_too_heavy():
    f = LinearFunction([1.0, 2.0])
    for algo in (brute_force, greedy_cost_benefit, sviridenko_greedy):
        rep = algo(f, [1.5, 1.1])
        assert rep.chosen == () and rep.objective == 0.0
    rep = knapsack_curvature(decompose(f, 0.5), [1.5, 1.1], 0.5)
    assert rep.chosen == ()


def test_brute_force_size_limit():
    with pytest.raises(CapabilityError):
        brute_force(LinearFunction(np.ones(21)), np.ones(21))


@given(st.integers(0, 2**32 - 1))
def test_modular_brute_force_matches_dp(seed):
    gen = np.random.default_rng(seed)
    n = int(gen.integers(1, 11))
    values = np.round(gen.uniform(0, 1, n), 3)
    w = np.round(gen.uniform(0.05, 0.7, n), 3)
    assert brute_force(LinearFunction(values), w).objective == pytest.approx(knapsack_dp(values, w))


def test_greedy_equal_weights_takes_top_values():
    rep = greedy_cost_benefit(LinearFunction([0.1, 0.9, 0.5, 0.7]), [0.3] * 4)
    assert rep.chosen == (1, 2, 3)


def test_greedy_singleton_guard():
    # ratio greedy takes the light element and then cannot fit the heavy one
    f = LinearFunction([0.2, 1.0])
    assert greedy_cost_benefit(f, [0.01, 1.0]).chosen == (1,)


def test_greedy_takes_weightless_elements_first():
    assert greedy_cost_benefit(LinearFunction([0.1, 5.0]), [0.0, 1.0]).chosen == (0, 1)


def test_sviridenko_matches_brute_force_on_two_elements(pair_table):
    for w in ([0.5, 0.5], [0.5, 0.6], [1.2, 0.9]):
        assert sviridenko_greedy(pair_table, w).objective == brute_force(pair_table, w).objective


@pytest.mark.parametrize("seed", range(10))
def test_sviridenko_guarantee(seed):
    inst = generate("explicit", 9, RngStream(seed))
    opt = brute_force(inst.f, inst.w).objective
    assert sviridenko_greedy(inst.f, inst.w).objective >= (1 - 1 / math.e) * opt - 1e-9


def test_dispatch_routes_saturated_functions():
    # f(S) = min(|S|, 1) has curvature 1
    f = TableFunction([0.0, 1.0, 1.0, 1.0])
    rep = dispatch(f, [0.4, 0.4], 0.1)
    assert rep.algorithm == "dispatch:sviridenko"
    assert rep.diagnostics["c_f"] == 1.0


def test_dispatch_routes_linear_functions():
    rep = dispatch(LinearFunction([0.5, 0.4, 0.3]), [0.4, 0.4, 0.4], 0.1, RngStream(0))
    assert rep.algorithm == "dispatch:curvature"
    assert rep.objective == pytest.approx(0.9)


def test_dispatch_boundary_goes_to_sviridenko():
    eps = 0.2
    c = 1 - math.e * eps
    # two elements with f(a) = f(b) = 1 and f(ab) = 2 - c has curvature exactly c
    f = TableFunction([0.0, 1.0, 1.0, 2.0 - c])
    assert total_curvature(f) == pytest.approx(c, abs=1e-15)
    eps_hit = (1 - total_curvature(f)) / math.e
    assert dispatch(f, [0.4, 0.4], eps_hit).algorithm == "dispatch:sviridenko"


def test_dispatch_rejects_bad_epsilon(pair_table):
    with pytest.raises(DomainError):
        dispatch(pair_table, [0.5, 0.5], 1.0)


def test_single_element_instance():
    f = LinearFunction([1.0])
    for mode in ("known-O", "enumerate", "heuristic"):
        rep = knapsack_curvature(decompose(f, 0.5), [0.5], 0.5, mode, RngStream(0))
        assert rep.chosen == (0,) and rep.objective == 1.0
        assert rep.mode == mode


@pytest.mark.parametrize("kind,n", [("explicit", 1), ("coverage", 2)])
def test_enumerate_smoke(kind, n):
    inst = generate(kind, n, RngStream(n))
    opt = brute_force(inst.f, inst.w).objective
    rep = knapsack_curvature(decompose(inst.f, 0.5), inst.w, 0.5, "enumerate", RngStream(0))
    assert rep.weight <= 1.0
    assert rep.objective <= opt + 1e-12
    assert 0 < rep.diagnostics["profiles_rejected"] < rep.diagnostics["profiles_tried"]


@pytest.mark.parametrize("n", [3, 4])
def test_enumerate_refuses_beyond_budget(n):
    inst = generate("explicit", n, RngStream(n))
    with pytest.raises(BudgetExceededError):
        knapsack_curvature(decompose(inst.f, 0.5), inst.w, 0.5, "enumerate", RngStream(0))


def test_enumerate_budget():
    inst = generate("coverage", 4, RngStream(0))
    with pytest.raises(BudgetExceededError, match="known-O"):
        knapsack_curvature(decompose(inst.f, 0.25), inst.w, 0.25, "enumerate", budget=1000)


def test_known_o_size_limit():
    inst = generate("coverage", 13, RngStream(0))
    with pytest.raises(CapabilityError):
        knapsack_curvature(decompose(inst.f, 0.25), inst.w, 0.25, "known-O")


def test_unknown_mode(pair_table):
    with pytest.raises(DomainError):
        knapsack_curvature(decompose(pair_table, 0.5), [0.5, 0.5], 0.5, "guess")


def test_epsilon_is_normalized():
    inst = generate("coverage", 6, RngStream(3))
    rep = knapsack_curvature(decompose(inst.f, 0.3), inst.w, 0.3, "known-O", RngStream(0))
    assert rep.diagnostics["epsilon"] == 0.25
    assert rep.trace["states"][0].e_history.shape[1] == 4


def test_heuristic_mode_is_feasible():
    for seed in range(5):
        inst = generate("coverage", 10, RngStream(seed))
        rep = knapsack_curvature(decompose(inst.f, 0.25), inst.w, 0.25, "heuristic", RngStream(seed))
        assert rep.weight <= 1.0
        assert rep.objective >= inst.f(())


def test_reports_are_deterministic():
    for name in ("brute", "greedy", "sviridenko", "curvature", "dispatch"):
        a, b = (generate("budget", 8, RngStream(5)) for _ in range(2))
        a = run_algorithm(name, a.f, a.w, 0.25, seed=7)
        b = run_algorithm(name, b.f, b.w, 0.25, seed=7)
        assert a.to_json() == b.to_json()
        assert a.seed == 7


def test_report_fields():
    inst = generate("coverage", 6, RngStream(2))
    rep = run_algorithm("curvature", inst.f, inst.w, 0.25, seed=1)
    doc = rep.to_dict()
    assert set(doc) == {"chosen_set", "objective", "weight", "feasible", "algorithm", "mode", "seed", "diagnostics"}
    for key in ("v_g", "v_ell", "m", "G_hat", "L", "W", "profiles_tried", "profiles_rejected", "oracle_calls"):
        assert key in doc["diagnostics"]
    assert doc["objective"] == pytest.approx(inst.f(rep.chosen))
    row = rep.csv_row("x", 0.25)
    assert tuple(row) == CSV_COLUMNS


def test_unknown_algorithm(pair_table):
    with pytest.raises(DomainError):
        run_algorithm("simplex", pair_table, [0.5, 0.5], 0.5)
