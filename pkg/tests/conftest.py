import numpy as np
import pytest

from hbdiff.hbgraph import HbGraph


@pytest.fixture
def example_graph():
    """e1 = {v0: 2, v1: 1}, e2 = {v1: 1, v2: 1}, unit weights."""
    return HbGraph.from_members([{0: 2, 1: 1}, {1: 1, 2: 1}])


@pytest.fixture
def single_edge_graph():
    return HbGraph.from_members([{0: 1, 1: 1}])


def random_graph(seed: int, n: int = 8, extra_edges: int = 6,
                 max_multiplicity: int = 3,
                 weighted: bool = True) -> HbGraph:
    """A small connected hb-graph: a chain of pairs plus random hb-edges."""
    rng = np.random.default_rng(seed)
    members = [
        {i: int(rng.integers(1, max_multiplicity + 1)),
         i + 1: int(rng.integers(1, max_multiplicity + 1))}
        for i in range(n - 1)
    ]
    for _ in range(extra_edges):
        size = int(rng.integers(1, min(n, 5) + 1))
        vertices = rng.choice(n, size=size, replace=False)
        members.append({int(v): int(rng.integers(1, max_multiplicity + 1))
                        for v in vertices})
    weights = rng.uniform(0.5, 3.0, len(members)).tolist() if weighted \
        else None
    return HbGraph.from_members(members, weights, n=n)


@pytest.fixture
def make_graph():
    return random_graph
