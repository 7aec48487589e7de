import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from curvknap.instances import curvature_suite
from curvknap.oracles import LinearFunction, TableFunction

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def pair_table():
    """f(empty)=0, f(a)=f(b)=1, f(ab)=1.5."""
    return TableFunction([0.0, 1.0, 1.0, 1.5])


@pytest.fixture
def pair_linear():
    return LinearFunction([0.3, 0.4])


@pytest.fixture(scope="session")
def suite():
    return curvature_suite(seed=0)


def random_point(gen: np.random.Generator, n: int) -> np.ndarray:
    x = gen.random(n)
    x[gen.random(n) < 0.2] = 0.0
    x[gen.random(n) < 0.1] = 1.0
    return x


def coupled_run(inst, epsilon: float = 0.25, seed: int = 0, estimator: str = "exact"):
    """Known-optimum run of the curvature pipeline: (decomposition, O, report)."""
    from curvknap.decomposition import decompose
    from curvknap.driver import brute_force, knapsack_curvature
    from curvknap.multilinear import RngStream

    d = decompose(inst.f, epsilon)
    O = brute_force(inst.f, inst.w).chosen
    rep = knapsack_curvature(d, inst.w, epsilon, "known-O", RngStream(seed), estimator=estimator, optimum=O)
    return d, O, rep
