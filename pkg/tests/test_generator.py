from dataclasses import replace

import numpy as np
import pytest

from hbdiff.generator import GenerationError, GeneratorConfig, batch, generate

SMALL = GeneratorConfig(n_pool=600, p=40, max_mcard=8, n_central=4)


@pytest.mark.parametrize('seed', [0, 1, 2])
def test_defaults(seed):
    generated = generate(GeneratorConfig(rng_seed=seed))
    g = generated.graph
    assert g.p == 200
    assert max(e.m_cardinality for e in g.edges) <= 20
    assert all(e.weight == 1.0 for e in g.edges)
    assert g.is_connected()
    assert len(g.isolated_vertices()) == 0


def test_group_structure():
    generated = generate(replace(SMALL, rng_seed=3))
    g = generated.graph
    assert len(generated.edge_groups) == g.p
    for edge, group in zip(g.edges, generated.edge_groups):
        members = {int(g.label(v)[1:]) for v in edge.members}
        assert len(members & set(generated.seed_pools[group])) == 2


def test_single_group_without_central_vertices():
    cfg = replace(SMALL, n_groups=1, central_prob=0.0, rng_seed=5)
    generated = generate(cfg)
    assert generated.graph.is_connected()


def test_determinism():
    cfg = replace(SMALL, rng_seed=42)
    first = generate(cfg)
    second = generate(cfg)
    assert first.graph == second.graph
    assert first.sidecar() == second.sidecar()
    assert generate(replace(cfg, rng_seed=43)).graph != first.graph


def test_fixed_pairs():
    generated = generate(replace(SMALL, fixed_pairs=True, rng_seed=1))
    g = generated.graph
    for edge, group in zip(g.edges, generated.edge_groups):
        members = {int(g.label(v)[1:]) for v in edge.members}
        assert set(generated.seed_pools[group][:2]) <= members


def test_multiplicities():
    generated = generate(replace(SMALL, multiplicity_max=3, rng_seed=2))
    multiplicities = generated.graph.incidence.multiplicities
    assert multiplicities.max() > 1
    assert multiplicities.max() <= 3
    assert np.all(generated.graph.m_cardinalities() <= 8)


def test_repair_connects_groups():
    # without central vertices the groups only meet through repairs
    cfg = replace(SMALL, n_pool=100_000, central_prob=0.0, rng_seed=0)
    generated = generate(cfg)
    assert generated.graph.is_connected()
    assert generated.repairs > 0


def test_repair_gives_up():
    cfg = replace(SMALL, n_pool=100_000, central_prob=0.0, n_central=0,
                  rng_seed=0)
    with pytest.raises(GenerationError, match='disconnected'):
        generate(cfg)


@pytest.mark.parametrize('overrides', [
    {'p': 0},
    {'seeds_per_edge': 11},
    {'max_mcard': 2},
    {'central_prob': 1.5},
    {'n_pool': 50},
    {'multiplicity_max': 0},
])
def test_invalid_config(overrides):
    with pytest.raises(GenerationError, match='invalid generator'):
        GeneratorConfig(**overrides)


def test_batch():
    graphs = batch(SMALL, 3, base_seed=10)
    assert [g.seed for g in graphs] == [10, 11, 12]
    assert batch(SMALL, 1, base_seed=11)[0].graph == graphs[1].graph
    with pytest.raises(ValueError):
        batch(SMALL, 0, base_seed=0)


def test_seeds_give_distinct_graphs():
    graphs = [generate(GeneratorConfig(rng_seed=seed)).graph
              for seed in range(10)]
    for i, first in enumerate(graphs):
        for second in graphs[i + 1:]:
            assert first != second
