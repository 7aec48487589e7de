"""Budget allocation over a bipartite channel/customer influence graph.

Channel ``a`` can be bought up to ``c(a)`` times at weight ``w(a)`` per copy;
a customer adjacent to channels with ``k_a`` bought copies stays inactive
with probability prod_a p(a)^k_a. The objective is the expected number of
activated customers, a monotone submodular function of the bought copies.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError
from .multilinear import RngStream
from .oracles import SetFunction, indicator


@dataclass(frozen=True)
class Channel:
    id: str
    weight: float
    capacity: int
    prob: float


@dataclass(frozen=True)
class Customer:
    id: str
    neighbors: tuple[str, ...]


@dataclass(frozen=True)
class BudgetInstance:
    channels: tuple[Channel, ...]
    customers: tuple[Customer, ...]

    def __post_init__(self):
        ids = [c.id for c in self.channels]
        if len(set(ids)) != len(ids):
            raise DomainError("channel ids must be unique")
        if not self.channels:
            raise DomainError("a budget instance needs at least one channel")
        for c in self.channels:
            if not 0.0 <= c.prob <= 1.0:
                raise DomainError(f"channel {c.id}: probability {c.prob} outside [0, 1]")
            if not 0.0 <= c.weight <= 1.0:
                raise DomainError(f"channel {c.id}: weight {c.weight} outside [0, 1]")
            if int(c.capacity) != c.capacity or c.capacity < 1:
                raise DomainError(f"channel {c.id}: capacity must be a positive integer")
        known = set(ids)
        for b in self.customers:
            if not b.neighbors:
                raise DomainError(f"customer {b.id} has no neighboring channel")
            missing = set(b.neighbors) - known
            if missing:
                raise DomainError(f"customer {b.id} names unknown channels {sorted(missing)}")

    @property
    def n(self) -> int:
        return sum(c.capacity for c in self.channels)

    def adjacency(self) -> np.ndarray:
        """Customers x channels boolean matrix."""
        pos = {c.id: k for k, c in enumerate(self.channels)}
        adj = np.zeros((len(self.customers), len(self.channels)), dtype=bool)
        for j, b in enumerate(self.customers):
            adj[j, [pos[a] for a in b.neighbors]] = True
        return adj

    def element_channels(self) -> np.ndarray:
        """Channel position of every ground element (channels in order, copies consecutive)."""
        return np.repeat(np.arange(len(self.channels)), [c.capacity for c in self.channels])

    def element_weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.channels])[self.element_channels()]

    def to_dict(self) -> dict:
        return {
            "type": "budget",
            "channels": [
                {"id": c.id, "weight": float(c.weight), "capacity": int(c.capacity), "prob": float(c.prob)}
                for c in self.channels
            ],
            "customers": [{"id": b.id, "neighbors": list(b.neighbors)} for b in self.customers],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "BudgetInstance":
        try:
            channels = tuple(
                Channel(str(c["id"]), float(c["weight"]), int(c["capacity"]), float(c["prob"]))
                for c in doc["channels"]
            )
            customers = tuple(
                Customer(str(b["id"]), tuple(str(a) for a in b["neighbors"])) for b in doc["customers"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"malformed budget description: {exc}") from exc
        return cls(channels, customers)


class BudgetFunction(SetFunction):
    """f(S) = sum_b (1 - prod_{a in N(b)} p(a)^|S n E_a|), with 0^0 = 1."""

    kind = "budget"

    def __init__(self, instance: BudgetInstance):
        super().__init__(instance.n)
        self.instance = instance
        self.adj = instance.adjacency()
        self.probs = np.array([c.prob for c in instance.channels])
        self.channel_of = instance.element_channels()
        onehot = np.zeros((self.n, len(instance.channels)))
        onehot[np.arange(self.n), self.channel_of] = 1.0
        self._onehot = onehot

    def counts(self, rows: np.ndarray) -> np.ndarray:
        """|S n E_a| for every row and channel."""
        return np.atleast_2d(rows).astype(float) @ self._onehot

    def _stay_inactive(self, counts: np.ndarray) -> np.ndarray:
        """Rows x customers matrix of prod_{a in N(b)} p(a)^k_a."""
        powers = self.probs[None, :] ** counts  # numpy gives 0.0 ** 0 == 1.0
        out = np.ones((counts.shape[0], self.adj.shape[0]))
        for j, nb in enumerate(self.adj):
            out[:, j] = powers[:, nb].prod(axis=1)
        return out

    def _values_many(self, rows):
        if not self.adj.shape[0]:
            return np.zeros(rows.shape[0])
        return (1.0 - self._stay_inactive(self.counts(rows))).sum(axis=1)

    def _value(self, s):
        return float(self._values_many(indicator(s, self.n)[None, :])[0])

    def to_dict(self) -> dict:
        return self.instance.to_dict()


def budget_eval(f: BudgetFunction, S: Iterable[int]) -> float:
    return f(S)


def budget_marginal(f: BudgetFunction, S: Iterable[int], e: int) -> float:
    """sum over customers b next to a of (1 - p(a)) prod_{a'} p(a')^|S n E_a'|."""
    S = set(S)
    if not 0 <= e < f.n:
        raise DomainError(f"element {e} out of range")
    if e in S:
        return 0.0
    a = f.channel_of[e]
    stay = f._stay_inactive(f.counts(indicator(S, f.n)[None, :]))[0]
    return float((1.0 - f.probs[a]) * stay[f.adj[:, a]].sum())


def budget_curvature_bound(instance: BudgetInstance) -> float:
    """1 - min over channels a and customers b next to a of
    p(a)^(c(a)-1) prod_{a' in N(b) - a} p(a')^c(a').

    Channels without customers contribute nothing. A zero probability in a
    product makes the bound 1, which is valid but says nothing.
    """
    adj = instance.adjacency()
    p = np.array([c.prob for c in instance.channels])
    c = np.array([ch.capacity for ch in instance.channels], dtype=float)
    full = p ** c
    best = np.inf
    for a in range(len(instance.channels)):
        for j in np.flatnonzero(adj[:, a]):
            others = [k for k in np.flatnonzero(adj[j]) if k != a]
            val = p[a] ** (c[a] - 1) * float(np.prod(full[others]))
            best = min(best, val)
    return 0.0 if best == np.inf else float(1.0 - best)


def generate_budget_instance(
    n_channels: int,
    n_customers: int,
    rng: RngStream,
    capacity: int | tuple[int, int] = 2,
    prob_range: tuple[float, float] = (0.2, 0.8),
    weight_range: tuple[float, float] = (0.1, 0.5),
    density: float = 0.5,
) -> BudgetInstance:
    """Random bipartite instance; customers left without a neighbor redraw their edges."""
    if n_channels < 1 or n_customers < 0:
        raise DomainError("need at least one channel and a nonnegative customer count")
    if not 0 < density <= 1:
        raise DomainError("density must lie in (0, 1]")
    lo_p, hi_p = prob_range
    lo_w, hi_w = weight_range
    if not (0 <= lo_p <= hi_p <= 1 and 0 <= lo_w <= hi_w <= 1):
        raise DomainError("probability and weight ranges must lie inside [0, 1]")
    lo_c, hi_c = (capacity, capacity) if isinstance(capacity, int) else capacity
    if lo_c < 1 or hi_c < lo_c:
        raise DomainError("capacities must be positive")
    gen = rng.generator()
    channels = tuple(
        Channel(
            f"a{k}",
            float(gen.uniform(lo_w, hi_w)),
            int(gen.integers(lo_c, hi_c + 1)),
            float(gen.uniform(lo_p, hi_p)),
        )
        for k in range(n_channels)
    )
    customers = []
    for j in range(n_customers):
        nb = np.flatnonzero(gen.random(n_channels) < density)
        while nb.size == 0:
            nb = np.flatnonzero(gen.random(n_channels) < density)
        customers.append(Customer(f"b{j}", tuple(channels[k].id for k in nb)))
    return BudgetInstance(channels, tuple(customers))


def budget_vectors(instance: BudgetInstance) -> Iterable[tuple[int, ...]]:
    """Every budget vector b with 0 <= b(a) <= c(a)."""
    return itertools.product(*(range(c.capacity + 1) for c in instance.channels))


def budget_vector_value(instance: BudgetInstance, b: Sequence[int]) -> float:
    """Direct objective of a budget vector, independent of the copy encoding."""
    p = {c.id: c.prob for c in instance.channels}
    k = {c.id: int(x) for c, x in zip(instance.channels, b)}
    return float(sum(1.0 - np.prod([p[a] ** k[a] for a in cust.neighbors]) for cust in instance.customers))
