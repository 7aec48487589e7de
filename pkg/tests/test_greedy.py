import numpy as np
import pytest

from conftest import coupled_run
from curvknap.decomposition import decompose
from curvknap.errors import CapabilityError, DomainError
from curvknap.greedy import (
    CopiedGroundSet,
    ExpectationProbe,
    collapse_point,
    guessing_continuous_greedy,
    inclusion_probabilities,
    multilinear_value,
    small_elements,
)
from curvknap.driver import brute_force
from curvknap.grids import GuessProfile, OptimumGuesser, build_grid
from curvknap.instances import generate
from curvknap.multilinear import RngStream, exact_multilinear
from curvknap.oracles import LinearFunction


@pytest.fixture(scope="module")
def coupled():
    """Known-optimum runs on a few n=8 coverage instances at eps = 1/4."""
    out = []
    for seed in range(4):
        inst = generate("coverage", 8, RngStream(seed))
        out.append((inst,) + coupled_run(inst, 0.25, seed))
    return out


@pytest.fixture(scope="module")
def all_small():
    """Runs with every element small and guesses snapped from the optimum,
    so the small-element LP carries the whole solution."""
    out = []
    eps = 0.25
    for seed in range(4):
        inst = generate("coverage", 8, RngStream(seed))
        d = decompose(inst.f, eps)
        O = list(brute_force(inst.f, inst.w).chosen)
        dmax = max(float(d.g.table()[[1 << e for e in range(8)]].max()), float(d.ell.coeffs.max()))
        grid = build_grid(eps, 8, dmax)
        guesser = OptimumGuesser([], O, d.ell.coeffs, 0.0, 0.0, grid, None, 4)
        state = guessing_continuous_greedy(d, inst.w, (), range(8), 0, guesser, eps, eps, RngStream(seed), d=dmax)
        out.append((inst, d, O, state))
    return out


def test_copied_layout():
    c = CopiedGroundSet(n=3, m=2, small=(0, 2))
    assert c.size == 8
    assert c.index(1, 2) == 5
    assert c.small_index(2) == 7
    assert [c.base(k) for k in range(8)] == [0, 1, 2, 0, 1, 2, 0, 2]
    rows = np.zeros((1, 8), dtype=bool)
    rows[0, [1, 4, 7]] = True
    assert c.collapse_rows(rows).tolist() == [[False, True, True]]
    with pytest.raises(DomainError):
        c.index(2, 0)


def test_collapse_of_two_half_copies():
    p = inclusion_probabilities(np.array([[0.5, 0.0], [0.5, 0.0]]), np.zeros(2))
    assert p == pytest.approx([0.75, 0.0])


def test_collapse_of_one_copy_is_bernoulli():
    p = inclusion_probabilities(np.array([[0.25, 0.0]]), np.zeros(2))
    assert p == pytest.approx([0.25, 0.0])


def test_collapse_without_copies_is_identity():
    z = np.array([0.2, 0.0, 0.7])
    assert inclusion_probabilities(np.zeros((0, 3)), z) == pytest.approx(z)


def _linear_decomposition(coeffs):
    return decompose(LinearFunction(coeffs), 0.5)


def test_small_elements_unconstrained_lp():
    d = _linear_decomposition([1.0, 1.0])
    sol, theta = small_elements(d.g, d.ell.coeffs, [0.3, 0.3], (0, 1), 0.0, 0.0, np.zeros(2), 0.5, 0.5, 1.0)
    assert sol.feasible
    assert np.all(sol.v == 0)
    assert theta == pytest.approx(d.g.table()[[1, 2]])


def test_linear_g_without_large_elements():
    # g = f/4 and l = 3f/4 for linear f; the guesses ask for the whole optimum
    f_coeffs = np.array([0.4, 0.3, 0.2, 0.1])
    d = _linear_decomposition(f_coeffs)
    w = np.array([0.5, 0.5, 0.5, 0.5])
    O = [0, 1]
    dmax = float(max(d.g.table()[1], d.ell.coeffs.max()))
    eps = 0.5
    gamma = float(d.g(O))
    lam = float(d.ell.coeffs[O].sum())
    prof = GuessProfile(gamma, lam, 0, np.zeros((0, 2)), [], [gamma, gamma * 0.5], lam)
    state = guessing_continuous_greedy(d, w, (), range(4), 0, prof, eps, eps, RngStream(0), d=dmax)
    assert state.ok and state.t == 2
    assert state.z == pytest.approx(eps * sum(state.v_history))
    L = state.linear_value(d.ell.coeffs)
    assert L >= (1 - eps) * lam - eps * dmax - 1e-9
    assert state.linear_value(w) <= float(w[O].sum()) + 1e-9


def test_rejects_when_no_candidate():
    d = _linear_decomposition([0.4, 0.3])
    prof = GuessProfile(1.0, 1.0, 1, [[5.0, 5.0]], [0.0], [0.0, 0.0], 0.0)
    state = guessing_continuous_greedy(d, [0.1, 0.1], (0, 1), (), 1, prof, 0.5, 0.5, RngStream(0))
    assert state.status == "rejected" and not state.ok
    assert "no candidate" in state.reason
    assert state.e_history[0, 0] == -1


def test_rejects_infeasible_small_lp():
    d = _linear_decomposition([0.4, 0.3])
    prof = GuessProfile(1.0, 1.0, 0, np.zeros((0, 2)), [], [0.0, 0.0], 99.0)
    state = guessing_continuous_greedy(d, [0.1, 0.1], (), (0, 1), 0, prof, 0.5, 0.5, RngStream(0))
    assert state.status == "rejected"
    assert "infeasible" in state.reason


def test_requires_integral_inverse_epsilon():
    d = _linear_decomposition([0.4, 0.3])
    prof = GuessProfile(1.0, 1.0, 0, np.zeros((0, 3)), [], [0.0] * 3, 0.0)
    with pytest.raises(DomainError):
        guessing_continuous_greedy(d, [0.1, 0.1], (), (0, 1), 0, prof, 0.3, 0.3, RngStream(0))
    with pytest.raises(DomainError):
        guessing_continuous_greedy(d, [0.1, 0.1], (), (0, 1), 0, prof, 0.5, 0.5, RngStream(0), mode="magic")


def test_exact_mode_size_limit():
    inst = generate("coverage", 17, RngStream(0))
    d = decompose(inst.f, 0.5)
    prof = GuessProfile(0.0, 0.0, 0, np.zeros((0, 2)), [], [0.0, 0.0], 0.0)
    with pytest.raises(CapabilityError):
        guessing_continuous_greedy(d, inst.w, (), range(17), 0, prof, 0.5, 0.5, RngStream(0))


def test_runs_complete(coupled):
    for inst, d, O, rep in coupled:
        state = rep.trace["states"][0]
        assert state.ok, state.reason
        assert state.t == 4


def test_support_and_mass(coupled):
    for inst, d, O, rep in coupled:
        state = rep.trace["states"][0]
        small = np.zeros(d.n, dtype=bool)
        small[list(state.small)] = True
        assert np.all(state.z[~small] == 0)
        for t in range(state.t + 1):
            y, z = state.point_after(t)
            assert y.sum(axis=1) == pytest.approx(np.full(state.m, 0.25 * t))
        assert state.y.sum(axis=1) == pytest.approx(np.ones(state.m))


def test_collapsed_value_matches_multilinear(coupled):
    inst, d, O, rep = coupled[0]
    state = rep.trace["states"][0]
    hat, p = collapse_point(state)
    assert hat.shape == (state.m * d.n + len(state.small),)
    assert multilinear_value(d.g, state) == pytest.approx(exact_multilinear(d.g, p))
    assert rep.diagnostics["G_hat"] == pytest.approx(exact_multilinear(d.g, p))


def test_per_step_telescoping(coupled):
    """Each round adds at most eps*w(O) weight and at least
    eps(1-eps) l(O) - 2 eps^2 d of linear value."""
    for inst, d, O, rep in coupled:
        state = rep.trace["states"][0]
        eps, dmax = state.epsilon, state.d
        wO = float(inst.w[list(O)].sum())
        lO = float(d.ell.coeffs[list(O)].sum())
        prev_w = prev_l = 0.0
        for t in range(1, state.t + 1):
            y, z = state.point_after(t)
            W = float(y.sum(axis=0) @ inst.w + z @ inst.w)
            L = float(y.sum(axis=0) @ d.ell.coeffs + z @ d.ell.coeffs)
            assert W - prev_w <= eps * wO + 1e-9
            assert L - prev_l >= eps * (1 - eps) * lO - 2 * eps**2 * dmax - 1e-9
            prev_w, prev_l = W, L


def test_large_picks_are_no_heavier_than_their_optimum_element(coupled):
    for inst, d, O, rep in coupled:
        state = rep.trace["states"][0]
        guesser = rep.trace["guessers"][0]
        for i, o in enumerate(guesser.ref_large):
            picks = state.e_history[i]
            assert np.all(inst.w[picks] <= inst.w[o] + 1e-12)


def test_small_lp_lemma(all_small):
    """Per round: W(v) <= w(O_S), L(v) >= (1-eps) l(O_S) - eps d and
    v.theta >= (1-eps)^3 E[g_R(O_S)] - 3 eps d, all with exact expectations."""
    moved = 0
    for inst, d, O_S, state in all_small:
        assert state.ok, state.reason
        eps, dmax = state.epsilon, state.d
        ell = d.ell.coeffs
        for t, v in enumerate(state.v_history):
            probe = ExpectationProbe(d.g, state.small_points[t], "exact", dmax, None, d.g.table())
            theta = probe.marginals(range(d.n))
            moved += bool(v.any())
            assert float(inst.w @ v) <= float(inst.w[O_S].sum()) + 1e-9
            assert float(ell @ v) >= (1 - eps) * float(ell[O_S].sum()) - eps * dmax - 1e-9
            assert float(theta @ v) >= (1 - eps) ** 3 * probe.subset(O_S) - 3 * eps * dmax - 1e-9
    assert moved > 0


def test_small_only_run_accumulates_its_directions(all_small):
    for inst, d, O_S, state in all_small:
        assert state.z == pytest.approx(0.25 * sum(state.v_history))
        assert state.linear_value(inst.w) <= float(inst.w[O_S].sum()) + 1e-9


def test_guesses_are_good(coupled):
    """Issued guesses sit below the truth and within the grid slack."""
    for inst, d, O, rep in coupled:
        gs = rep.trace["guessers"][0]
        eps, dmax = 0.25, rep.trace["states"][0].d
        if gs.m:
            assert np.all(gs.gamma_large <= gs.truth_large + 1e-9)
            assert np.all(gs.gamma_large >= (1 - eps) * gs.truth_large - eps * dmax / gs.m - 1e-9)
        assert np.all(gs.gamma_small <= gs.truth_small + 1e-9)
        assert np.all(gs.gamma_small >= (1 - eps) * gs.truth_small - eps * dmax - 1e-9)


def test_weight_of_final_point_at_most_optimum(coupled):
    for inst, d, O, rep in coupled:
        assert rep.diagnostics["W"] <= float(inst.w[list(O)].sum()) + 1e-9


def test_sampled_mode_runs_and_is_reproducible():
    inst = generate("coverage", 6, RngStream(1))
    a = coupled_run(inst, 0.5, seed=3, estimator="sampled")[2]
    b = coupled_run(inst, 0.5, seed=3, estimator="sampled")[2]
    assert a.chosen == b.chosen
    assert a.diagnostics["estimator"] == "sampled"
    assert a.weight <= 1.0
