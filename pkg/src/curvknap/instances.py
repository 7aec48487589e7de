"""Problem instances: the JSON file format and random generators."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .budget import (
    BudgetFunction,
    BudgetInstance,
    budget_vector_value,
    budget_vectors,
    generate_budget_instance,
)
from .errors import DomainError
from .multilinear import RngStream
from .oracles import CoverageFunction, SetFunction, TableFunction, all_masks, total_curvature


@dataclass
class Instance:
    """maximize f(S) subject to w(S) <= 1."""

    f: SetFunction
    w: np.ndarray
    epsilon: float = 0.25
    name: str = ""

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        if self.w.shape != (self.f.n,):
            raise DomainError(f"expected {self.f.n} weights, got {self.w.shape[0]}")
        if np.any(self.w < 0) or np.any(self.w > 1) or not np.all(np.isfinite(self.w)):
            raise DomainError("weights must lie in [0, 1]")
        if not 0 < self.epsilon < 1:
            raise DomainError(f"epsilon must lie in (0, 1), got {self.epsilon}")

    @property
    def n(self) -> int:
        return self.f.n

    def to_dict(self) -> dict:
        return {
            "ground_set": self.n,
            "weights": [float(v) for v in self.w],
            "function": self.f.to_dict(),
            "epsilon": float(self.epsilon),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())


def function_from_dict(doc: dict) -> SetFunction:
    kind = doc.get("type")
    if kind == "explicit":
        return TableFunction(doc["values"])
    if kind == "coverage":
        universe = int(doc["universe"])
        weights = doc["item_weights"]
        if len(weights) != universe:
            raise DomainError("coverage item weights do not match the universe size")
        return CoverageFunction(weights, doc["covers"])
    if kind == "budget":
        return BudgetFunction(BudgetInstance.from_dict(doc))
    raise DomainError(f"unknown function type {kind!r}")


def instance_from_dict(doc: dict, name: str = "") -> Instance:
    try:
        n = int(doc["ground_set"])
        if n < 1:
            raise DomainError("the ground set needs at least one element")
        f = function_from_dict(doc["function"])
        if f.n != n:
            raise DomainError(f"function is defined on {f.n} elements, ground set has {n}")
        w = np.array(doc["weights"], dtype=float)
        if isinstance(f, BudgetFunction) and not np.allclose(w, f.instance.element_weights(), atol=0):
            raise DomainError("weights disagree with the channel weights of the budget description")
        return Instance(f, w, float(doc.get("epsilon", 0.25)), name)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DomainError):
            raise
        raise DomainError(f"malformed instance: {exc}") from exc


def loads(text: str, name: str = "") -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"instance is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise DomainError("instance document must be a JSON object")
    return instance_from_dict(doc, name)


def load(path: str | Path) -> Instance:
    path = Path(path)
    return loads(path.read_text(), path.stem)


def random_weights(n: int, gen: np.random.Generator, lo: float = 0.1, hi: float = 0.6) -> np.ndarray:
    return np.round(gen.uniform(lo, hi, n), 6)


def random_coverage(
    n: int,
    rng: RngStream,
    universe: int | None = None,
    density: float = 0.3,
    private: float = 0.0,
) -> CoverageFunction:
    """Random weighted coverage; ``private`` > 0 gives every element its own
    item of that relative weight, which caps the curvature below 1."""
    if n < 1:
        raise DomainError("n must be at least 1")
    gen = rng.generator()
    universe = universe or 2 * n
    weights = list(np.round(gen.uniform(0.1, 1.0, universe), 6))
    covers = [sorted(np.flatnonzero(gen.random(universe) < density).tolist()) for _ in range(n)]
    if private > 0:
        for e in range(n):
            covers[e].append(universe + e)
            weights.append(round(float(private * gen.uniform(0.5, 1.5)), 6))
    return CoverageFunction(weights, covers)


def random_submodular_table(n: int, rng: RngStream) -> TableFunction:
    """Monotone submodular table: coverage plus a concave function of a modular
    one plus a linear part, with random mixing weights."""
    if not 1 <= n <= 16:
        raise DomainError("tables need 1 <= n <= 16")
    gen = rng.generator()
    rows = all_masks(n).astype(float)
    cov = random_coverage(n, rng.child("cov"), density=gen.uniform(0.1, 0.5)).table()
    mod = rows @ gen.uniform(0, 1, n)
    concave = np.sqrt(mod) if gen.random() < 0.5 else np.log1p(mod)
    lin = rows @ gen.uniform(0, 1, n)
    a, b, c = gen.dirichlet(np.ones(3))
    return TableFunction(np.round(a * cov + b * concave + c * lin, 12))


def generate(kind: str, n: int, rng: RngStream, epsilon: float = 0.25, **opts) -> Instance:
    """Generate a random ``coverage``, ``explicit`` or ``budget`` instance."""
    if n < 1:
        raise DomainError("n must be at least 1")
    gen = rng.child("weights").generator()
    if kind == "coverage":
        f = random_coverage(n, rng.child("f"), opts.get("universe"), opts.get("density", 0.3), opts.get("private", 0.0))
        w = random_weights(n, gen, *opts.get("weight_range", (0.1, 0.6)))
    elif kind == "explicit":
        f = random_submodular_table(n, rng.child("f"))
        w = random_weights(n, gen, *opts.get("weight_range", (0.1, 0.6)))
    elif kind == "budget":
        cap = opts.get("capacity", 2)
        channels = max(1, math.ceil(n / cap))
        inst = generate_budget_instance(
            channels,
            opts.get("customers", 2 * channels),
            rng.child("f"),
            capacity=cap,
            prob_range=opts.get("prob_range", (0.2, 0.8)),
            weight_range=opts.get("weight_range", (0.1, 0.5)),
            density=opts.get("density", 0.5),
        )
        f = BudgetFunction(inst)
        w = inst.element_weights()
    else:
        raise DomainError(f"unknown instance kind {kind!r}")
    return Instance(f, w, epsilon)


def curvature_suite(seed: int = 0, per_kind: int = 10, n_max: int = 10,
                    band: tuple[float, float] = (0.2, 0.9)) -> list[Instance]:
    """``per_kind`` coverage and ``per_kind`` budget instances with n <= n_max
    whose curvatures spread evenly over ``band`` (one instance per sub-band)."""
    lo, hi = band
    edges = np.linspace(lo, hi, per_kind + 1)
    root = RngStream(seed, 0)
    out: list[Instance] = []
    for kind in ("coverage", "budget"):
        for k in range(per_kind):
            for attempt in range(5000):
                r = root.child(kind, k, attempt)
                gen = r.generator()
                if kind == "coverage":
                    n = int(gen.integers(6, n_max + 1))
                    inst = generate(kind, n, r, private=float(gen.uniform(0.05, 2.0)),
                                    density=float(gen.uniform(0.15, 0.45)))
                else:
                    cap = int(gen.integers(1, 4))
                    channels = int(gen.integers(max(2, math.ceil(4 / cap)), n_max // cap + 1))
                    inst = generate(kind, channels * cap, r, capacity=cap,
                                    customers=int(gen.integers(2, 7)),
                                    prob_range=(float(gen.uniform(0.1, 0.6)), 0.95))
                c = total_curvature(inst.f)
                if edges[k] <= c <= edges[k + 1]:
                    inst.name = f"{kind}-{k:02d}"
                    out.append(inst)
                    break
            else:
                raise DomainError(f"no {kind} instance found with curvature in [{edges[k]:.2f}, {edges[k+1]:.2f}]")
    return out


def budget_direct_optimum(inst: BudgetInstance) -> tuple[float, tuple[int, ...]]:
    """Best budget vector by enumerating b(a) <= c(a) directly."""
    best, arg = -1.0, ()
    for b in budget_vectors(inst):
        cost = math.fsum(c.weight * x for c, x in zip(inst.channels, b))
        if cost <= 1.0:
            v = budget_vector_value(inst, b)
            if v > best + 1e-12:
                best, arg = v, tuple(b)
    return best, arg

