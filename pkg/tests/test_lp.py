import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from curvknap.errors import DomainError
from curvknap.lp import BoxLp2, residuals, simplex_box_lp, solve_box_lp, vertex_enumeration_solve


def test_inactive_rows():
    sol = solve_box_lp(BoxLp2((0, 1), [1.0, 1.0], [1.0, 0.0], [0.0, 1.0], 0.0, -0.5))
    assert sol.feasible and sol.method == "trivial"
    assert sol.objective == 0.0
    assert np.all(sol.v == 0)


def test_two_separate_rows():
    sol = solve_box_lp(BoxLp2((0, 1), [1.0, 1.0], [1.0, 0.0], [0.0, 1.0], 0.5, 0.5))
    assert sol.v == pytest.approx([0.5, 0.5])
    assert sol.objective == pytest.approx(1.0)


def test_cheapest_per_unit_wins():
    sol = solve_box_lp(BoxLp2((0, 1), [1.0, 2.0], [1.0, 1.0], [1.0, 1.0], 1.0, 1.0))
    assert sol.v == pytest.approx([1.0, 0.0])
    assert sol.objective == pytest.approx(1.0)


def test_single_active_row_is_fractional_knapsack():
    sol = solve_box_lp(BoxLp2((0, 1, 2), [1.0, 1.0, 3.0], [1.0, 2.0, 3.0], [0.0, 0.0, 0.0], 2.5, 0.0))
    assert sol.method == "ratio"
    assert sol.v == pytest.approx([0.5, 1.0, 0.0])


def test_infeasible_when_support_cannot_cover():
    sol = solve_box_lp(BoxLp2((0,), [1.0, 1.0], [1.0, 5.0], [1.0, 1.0], 2.0, 0.0))
    assert not sol.feasible and not sol


def test_coordinates_off_support_stay_zero():
    sol = solve_box_lp(BoxLp2((1, 2), np.ones(4), np.ones(4), np.ones(4), 1.5, 1.0))
    assert sol.v[0] == 0 and sol.v[3] == 0
    assert sol.objective == pytest.approx(1.5)


def test_empty_support():
    assert solve_box_lp(BoxLp2((), [1.0], [1.0], [1.0], 0.0, 0.0)).feasible
    assert not solve_box_lp(BoxLp2((), [1.0], [1.0], [1.0], 0.1, 0.0)).feasible


def test_validation():
    with pytest.raises(DomainError):
        BoxLp2((0,), [-1.0], [1.0], [1.0], 0.0, 0.0)
    with pytest.raises(DomainError):
        BoxLp2((0,), [1.0], [1.0, 2.0], [1.0], 0.0, 0.0)
    with pytest.raises(DomainError):
        BoxLp2((3,), [1.0], [1.0], [1.0], 0.0, 0.0)


def random_lp(seed: int, rounded: bool = False) -> BoxLp2:
    gen = np.random.default_rng(seed)
    n = int(gen.integers(1, 9))
    s = int(gen.integers(1, min(n, 6) + 1))
    sup = tuple(sorted(gen.choice(n, s, replace=False).tolist()))
    w, th, el = gen.random(n), gen.random(n), gen.random(n)
    if rounded:
        w, th, el = np.round(w, 1), np.round(th, 1), np.round(el, 1)
    a = gen.uniform(-0.1, 1.1) * th[list(sup)].sum()
    b = gen.uniform(-0.1, 1.1) * el[list(sup)].sum()
    return BoxLp2(sup, w, th, el, a, b)


@given(st.integers(0, 2**32 - 1), st.booleans())
def test_matches_vertex_enumeration(seed, rounded):
    lp = random_lp(seed, rounded)
    got, ref = solve_box_lp(lp), vertex_enumeration_solve(lp)
    assert got.feasible == ref.feasible
    if got.feasible:
        assert got.objective == pytest.approx(ref.objective, abs=1e-6)
        assert min(residuals(lp, got.v)) >= -1e-8
        assert got.v.min() >= 0 and got.v.max() <= 1


@given(st.integers(0, 2**32 - 1))
def test_relaxing_a_row_never_costs_more(seed):
    lp = random_lp(seed)
    base = solve_box_lp(lp)
    if not base.feasible:
        return
    for a, b in ((lp.a * 0.5, lp.b), (lp.a, lp.b * 0.5), (lp.a - 0.1, lp.b - 0.1)):
        looser = solve_box_lp(BoxLp2(lp.support, lp.w, lp.theta, lp.ell, a, b))
        assert looser.feasible
        assert looser.objective <= base.objective + 1e-9


@given(st.integers(0, 2**32 - 1))
def test_simplex_agrees_on_two_active_rows(seed):
    lp = random_lp(seed)
    idx = list(lp.support)
    if not (lp.a > 0 and lp.b > 0) or not vertex_enumeration_solve(lp).feasible:
        return
    v = simplex_box_lp(lp.w[idx], lp.theta[idx], lp.ell[idx], lp.a, lp.b)
    assert v is not None
    assert float(lp.w[idx] @ v) == pytest.approx(vertex_enumeration_solve(lp).objective, abs=1e-6)
