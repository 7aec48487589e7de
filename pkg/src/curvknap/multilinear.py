"""Multilinear extension: exact evaluation, sampling and mean estimation."""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .errors import CapabilityError, DomainError
from .oracles import ATOL, MAX_TABLE_N, SetFunction, mask_of

MAX_CHECK_N = 12


def _key(k) -> int:
    if isinstance(k, str):
        return zlib.crc32(k.encode())
    return int(k) & 0xFFFFFFFF


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream identified by (seed, stream).

    Streams are split by name or index with :meth:`child`; a child's id is a
    64-bit hash of the parent id and the key, so the draws of one stream do
    not depend on which other streams exist or in which order they are used.
    Generators are Philox (counter based).
    """

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(self.stream,))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, *keys) -> "RngStream":
        ss = np.random.SeedSequence(
            entropy=int(self.seed), spawn_key=(self.stream, *(_key(k) for k in keys))
        )
        lo, hi = ss.generate_state(2, dtype=np.uint32)
        return RngStream(self.seed, int(lo) | (int(hi) << 32))


def as_point(x, n: int | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or (n is not None and x.shape[0] != n):
        raise DomainError(f"expected a point with {n} coordinates")
    if np.any(x < -ATOL) or np.any(x > 1 + ATOL) or not np.all(np.isfinite(x)):
        raise DomainError("fractional point coordinates must lie in [0, 1]")
    return np.clip(x, 0.0, 1.0)


def sample_sets(x, gen: np.random.Generator, size: int) -> np.ndarray:
    """``size`` independent draws of R(x) as a boolean matrix."""
    x = as_point(x)
    return gen.random((size, x.shape[0])) < x


def sample_set(x, rng: RngStream) -> frozenset[int]:
    """One draw of R(x): each element included independently w.p. x(e)."""
    row = sample_sets(x, rng.generator(), 1)[0]
    return frozenset(np.flatnonzero(row).tolist())


def subset_probabilities(x) -> np.ndarray:
    """Pr[R(x) = S] for every bitmask S (element 0 in the lowest bit)."""
    x = as_point(x)
    p = np.ones(1)
    for xe in x:
        p = np.concatenate([p * (1.0 - xe), p * xe])
    return p


def _table(f: SetFunction | np.ndarray) -> np.ndarray:
    if isinstance(f, SetFunction):
        if f.n > MAX_TABLE_N:
            raise CapabilityError(f"exact evaluation is limited to n <= {MAX_TABLE_N}")
        return f.table()
    return np.asarray(f, dtype=float)


def exact_multilinear(f: SetFunction | np.ndarray, x) -> float:
    """F(x) = E[f(R(x))] summed over all 2^n subsets."""
    T = _table(f)
    P = subset_probabilities(x)
    if P.shape != T.shape:
        raise DomainError("point and oracle disagree on the ground set size")
    return float(P @ T)


def exact_marginals(f: SetFunction | np.ndarray, x, probs: np.ndarray | None = None) -> np.ndarray:
    """E[f_R(x)(e)] for every element e, computed exactly."""
    T = _table(f)
    n = T.shape[0].bit_length() - 1
    P = subset_probabilities(x) if probs is None else probs
    idx = np.arange(T.shape[0])
    return np.array([P @ (T[idx | (1 << e)] - T) for e in range(n)])


def exact_set_marginal(f: SetFunction | np.ndarray, x, S: Iterable[int], probs=None) -> float:
    """E[f(R(x) + S) - f(R(x))] computed exactly."""
    T = _table(f)
    P = subset_probabilities(x) if probs is None else probs
    idx = np.arange(T.shape[0])
    return float(P @ (T[idx | mask_of(S)] - T))


def partial_derivative(f: SetFunction | np.ndarray, x, e: int) -> float:
    """Slope of F at x along 1_e: (F(x v 1_e) - F(x)) / (1 - x_e)."""
    x = as_point(x)
    if x[e] >= 1.0:
        raise DomainError("the partial derivative is undefined at x_e = 1")
    up = x.copy()
    up[e] = 1.0
    return (exact_multilinear(f, up) - exact_multilinear(f, x)) / (1.0 - x[e])


def sample_count(alpha: float, beta: float, delta: float) -> int:
    """Draws needed so that |mean - mu| <= alpha*mu + beta*d w.p. >= 1 - delta."""
    for name, v in (("alpha", alpha), ("beta", beta), ("delta", delta)):
        if not 0 < v < 1:
            raise DomainError(f"{name} must lie in (0, 1), got {v}")
    return math.ceil(3.0 * math.log(2.0 / delta) / (alpha * beta))


def estimate_mean(
    sampler: Callable[[np.random.Generator, int], np.ndarray],
    d: float,
    alpha: float,
    beta: float,
    delta: float,
    rng: RngStream,
) -> float:
    """Average ``sample_count(alpha, beta, delta)`` draws of a [0, d] variable.

    ``sampler(gen, k)`` must return ``k`` independent draws.
    """
    if d <= 0:
        raise DomainError("the range bound d must be positive")
    N = sample_count(alpha, beta, delta)
    draws = np.asarray(sampler(rng.generator(), N), dtype=float)
    if draws.shape != (N,):
        raise DomainError(f"sampler returned shape {draws.shape}, expected ({N},)")
    if not np.all(np.isfinite(draws)):
        raise DomainError("sampler produced a non-finite draw")
    return float(draws.mean())


def marginal_draws(f: SetFunction, sets: np.ndarray, elements) -> np.ndarray:
    """Matrix of f_R(e) for each sampled set R (rows) and element e (columns)."""
    base = f.evaluate_many(sets)
    out = np.empty((sets.shape[0], len(elements)))
    for j, e in enumerate(elements):
        up = sets.copy()
        up[:, e] = True
        out[:, j] = f.evaluate_many(up) - base
    return out


def estimate_marginals(
    f: SetFunction,
    x,
    elements,
    alpha: float,
    beta: float,
    delta: float,
    d: float,
    rng: RngStream,
) -> np.ndarray:
    """Estimate E[f_R(x)(e)] for several elements from one shared batch of draws.

    Every estimate individually carries the guarantee of :func:`estimate_mean`;
    sharing the draws only correlates the errors, which the union bound used
    downstream does not care about.
    """
    if d <= 0:
        raise DomainError("the range bound d must be positive")
    elements = list(elements)
    N = sample_count(alpha, beta, delta)
    sets = sample_sets(x, rng.generator(), N)
    draws = marginal_draws(f, sets, elements)
    if not np.all(np.isfinite(draws)):
        raise DomainError("oracle produced a non-finite marginal")
    return draws.mean(axis=0)


def estimate_marginal_over_random_set(
    f: SetFunction,
    x,
    e: int,
    alpha: float,
    beta: float,
    delta: float,
    d: float,
    rng: RngStream,
) -> float:
    """Estimate E[f_R(x)(e)] to within alpha*mu + beta*d w.p. >= 1 - delta."""
    x = as_point(x, f.n)

    def draw(gen, k):
        sets = gen.random((k, f.n)) < x
        return marginal_draws(f, sets, [e])[:, 0]

    return estimate_mean(draw, d, alpha, beta, delta, rng)


def check_discretization_lemma(f: SetFunction | np.ndarray, x, y, epsilon: float, atol: float = ATOL) -> bool:
    """Check F(x + eps*y) - F(x) >= eps * sum_e y(e) E[f_R(x + eps*y)(e)] exactly."""
    T = _table(f)
    n = T.shape[0].bit_length() - 1
    if n > MAX_CHECK_N:
        raise CapabilityError(f"exact lemma checks are limited to n <= {MAX_CHECK_N}")
    x = as_point(x, n)
    y = as_point(y, n)
    if epsilon <= 0:
        raise DomainError("epsilon must be positive")
    moved = x + epsilon * y
    if np.any(moved > 1 + ATOL):
        raise DomainError("x + eps*y leaves the unit cube")
    moved = np.clip(moved, 0.0, 1.0)
    lhs = exact_multilinear(T, moved) - exact_multilinear(T, x)
    rhs = epsilon * float(y @ exact_marginals(T, moved))
    return lhs >= rhs - atol
