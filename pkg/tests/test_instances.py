import json

import numpy as np
import pytest

from curvknap.budget import BudgetFunction
from curvknap.errors import DomainError
from curvknap.instances import Instance, curvature_suite, generate, load, loads
from curvknap.multilinear import RngStream
from curvknap.oracles import TableFunction, total_curvature


@pytest.mark.parametrize("kind", ["coverage", "explicit", "budget"])
def test_round_trip_is_byte_identical(kind, tmp_path):
    inst = generate(kind, 6, RngStream(4))
    path = tmp_path / f"{kind}.json"
    inst.save(path)
    again = load(path)
    assert again.dumps() == path.read_text()
    assert again.name == kind
    assert np.allclose(again.f.table(), inst.f.table())


def test_generation_is_reproducible():
    assert generate("coverage", 8, RngStream(1)).dumps() == generate("coverage", 8, RngStream(1)).dumps()
    assert generate("coverage", 8, RngStream(1)).dumps() != generate("coverage", 8, RngStream(2)).dumps()


def test_budget_weights_follow_channels():
    inst = generate("budget", 6, RngStream(0), capacity=2)
    assert isinstance(inst.f, BudgetFunction)
    assert np.array_equal(inst.w, inst.f.instance.element_weights())
    doc = inst.to_dict()
    doc["weights"][0] = 0.99
    with pytest.raises(DomainError):
        loads(json.dumps(doc))


@pytest.mark.parametrize("text", [
    "[]",
    "not json",
    '{"ground_set": 0, "weights": [], "function": {"type": "explicit", "values": [0]}}',
    '{"ground_set": 1, "weights": [0.5], "function": {"type": "mystery"}}',
    '{"ground_set": 2, "weights": [0.5], "function": {"type": "explicit", "values": [0, 1, 1, 2]}}',
    '{"ground_set": 1, "weights": [1.5], "function": {"type": "explicit", "values": [0, 1]}}',
    '{"weights": [0.5], "function": {"type": "explicit", "values": [0, 1]}}',
])
def test_malformed_documents(text):
    with pytest.raises(DomainError):
        loads(text)


def test_instance_validation():
    with pytest.raises(DomainError):
        Instance(TableFunction([0.0, 1.0]), [0.5], epsilon=1.5)
    with pytest.raises(DomainError):
        generate("coverage", 0, RngStream(0))
    with pytest.raises(DomainError):
        generate("lattice", 3, RngStream(0))


def test_curvature_suite_shape(suite):
    assert len(suite) == 20
    assert [i.name for i in suite[:2]] == ["coverage-00", "coverage-01"]
    curv = [total_curvature(i.f) for i in suite]
    assert all(0.2 <= c <= 0.9 for c in curv)
    assert all(i.n <= 10 for i in suite)
    assert sum(isinstance(i.f, BudgetFunction) for i in suite) == 10
    # one instance per curvature sub-band and kind
    assert curv[:10] == sorted(curv[:10]) and curv[10:] == sorted(curv[10:])
