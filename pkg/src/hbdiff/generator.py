"""Seeded random hb-graphs with group structure.

Collaborations (hb-edges) are drawn out of a pool of potential vertices.
The pool is split into:

    * `n_groups` disjoint seed pools of `group_seed_size` vertices; every
      collaboration belongs to one group and holds `seeds_per_edge` of its
      pool's vertices,
    * `n_central` central vertices, one of which joins a collaboration
      with probability `central_prob`, linking the groups together,
    * ordinary vertices filling each collaboration up to its size.

Only pool vertices that end up in some collaboration become vertices of the
generated hb-graph; they are renumbered densely and labelled `v<pool id>`.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
import logging
import math

import numpy as np

from hbdiff.exception import HbDiffException
from hbdiff.hbgraph import HbEdge, HbGraph

LOG = logging.getLogger(__name__)


class GenerationError(HbDiffException):
    """Raised when a generator configuration is invalid or a connected
    hb-graph cannot be produced."""
    exit_code = 6


@dataclass(frozen=True)
class GeneratorConfig:
    """Parameters of `generate`.

    Arguments:
        n_pool: number of potential vertices.
        p: number of hb-edges.
        max_mcard: largest m-cardinality of a hb-edge.
        n_groups: number of groups.
        group_seed_size: size of each group's seed pool.
        seeds_per_edge: seed-pool vertices in every hb-edge.
        n_central: number of central vertices.
        central_prob: probability that a hb-edge receives a central vertex.
        multiplicity_max: largest multiplicity of an ordinary member.
        rng_seed: seed of the random generator.
        fixed_pairs: every hb-edge of a group reuses the same first
            `seeds_per_edge` vertices of the group's pool instead of
            sampling them.
        repair_rounds: connectivity repair attempts before giving up.
    """
    n_pool: int = 10_000
    p: int = 200
    max_mcard: float = 20
    n_groups: int = 5
    group_seed_size: int = 10
    seeds_per_edge: int = 2
    n_central: int = 20
    central_prob: float = 0.5
    multiplicity_max: int = 1
    rng_seed: int = 0
    fixed_pairs: bool = False
    repair_rounds: int = 10

    def __post_init__(self):
        problems = []
        if self.p < 1:
            problems.append('p must be >= 1')
        if self.n_groups < 1 or self.group_seed_size < 1:
            problems.append('groups need at least one seed vertex')
        if not 1 <= self.seeds_per_edge <= self.group_seed_size:
            problems.append('seeds_per_edge must be in [1, group_seed_size]')
        if self.n_central < 0:
            problems.append('n_central must be >= 0')
        if self.n_central + self.n_groups * self.group_seed_size \
                > self.n_pool:
            problems.append(
                'n_central + n_groups * group_seed_size exceeds n_pool'
            )
        if self.max_mcard < self.seeds_per_edge + 1:
            problems.append('max_mcard must be >= seeds_per_edge + 1')
        if not 0.0 <= self.central_prob <= 1.0:
            problems.append('central_prob must be a probability')
        if self.multiplicity_max < 1:
            problems.append('multiplicity_max must be >= 1')
        if self.repair_rounds < 0:
            problems.append('repair_rounds must be >= 0')
        if problems:
            raise GenerationError(
                'invalid generator configuration: ' + '; '.join(problems)
            )

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GeneratedHbGraph:
    """A generated hb-graph with its group metadata.

    Pool ids (not graph vertex indices) are used for `seed_pools` and
    `central`; graph labels map vertices back to pool ids.
    """
    graph: HbGraph
    seed: int
    edge_groups: tuple[int, ...]
    seed_pools: tuple[tuple[int, ...], ...]
    central: tuple[int, ...]
    repairs: int = 0
    config: GeneratorConfig = field(default_factory=GeneratorConfig,
                                    repr=False)

    def sidecar(self) -> dict:
        return {
            'seed': self.seed,
            'edge_groups': list(self.edge_groups),
            'seed_pools': [list(pool) for pool in self.seed_pools],
            'central': list(self.central),
            'repairs': self.repairs,
            'labels': list(self.graph.labels or ()),
        }


def _compact(members: list[dict[int, int]]) -> HbGraph:
    pool_ids = sorted(set().union(*members))
    index = {v: i for i, v in enumerate(pool_ids)}
    edges = [HbEdge({index[v]: m for v, m in edge.items()}, 1.0)
             for edge in members]
    return HbGraph(len(pool_ids), edges, [f'v{v}' for v in pool_ids])


def _sample_edges(cfg: GeneratorConfig, rng: np.random.Generator,
                  central: np.ndarray, pools: np.ndarray,
                  ordinary: np.ndarray
                  ) -> tuple[list[dict[int, int]], list[int]]:
    cap = int(math.floor(cfg.max_mcard))
    members = []
    groups = []
    for _ in range(cfg.p):
        group = int(rng.integers(cfg.n_groups))
        if cfg.fixed_pairs:
            seeds = pools[group][:cfg.seeds_per_edge]
        else:
            seeds = rng.choice(pools[group], cfg.seeds_per_edge,
                               replace=False)
        edge = {int(v): 1 for v in seeds}
        target = int(rng.integers(cfg.seeds_per_edge + 1, cap + 1))
        if cfg.n_central and rng.random() < cfg.central_prob:
            edge[int(central[rng.integers(cfg.n_central)])] = 1
        budget = target - sum(edge.values())
        if budget > 0:
            draws = rng.choice(ordinary, size=min(budget, len(ordinary)),
                               replace=False)
            for v in draws:
                if budget <= 0:
                    break
                m = 1
                if cfg.multiplicity_max > 1:
                    m = int(rng.integers(
                        1, min(cfg.multiplicity_max, budget) + 1
                    ))
                edge[int(v)] = m
                budget -= m
        members.append(edge)
        groups.append(group)
    return members, groups


def _attach(edge: dict[int, int], vertex: int, cap: int,
            protected: set[int]) -> bool:
    """Add `vertex` to `edge`, dropping an ordinary member if the edge is
    full. Returns False if that is impossible."""
    if vertex in edge:
        return False
    if sum(edge.values()) + 1 > cap:
        ordinary = [v for v in edge if v not in protected]
        if not ordinary:
            return False
        dropped = ordinary[-1]
        edge[dropped] -= 1
        if edge[dropped] == 0:
            del edge[dropped]
    edge[vertex] = 1
    return True


def _repair(cfg: GeneratorConfig, rng: np.random.Generator,
            members: list[dict[int, int]], central: np.ndarray,
            protected: set[int]) -> tuple[HbGraph, int]:
    cap = int(math.floor(cfg.max_mcard))
    repairs = 0
    for attempt in range(cfg.repair_rounds + 1):
        graph = _compact(members)
        count, labels = graph.components()
        if count == 1:
            return graph, repairs
        if attempt == cfg.repair_rounds or not len(central):
            break
        edge_labels = labels[graph.n:]
        principal = int(np.bincount(edge_labels).argmax())
        assert graph.labels is not None
        linked = [c for c in central.tolist()
                  if f'v{c}' in graph.labels
                  and labels[graph.labels.index(f'v{c}')] == principal]
        choices = np.array(linked) if linked else central
        LOG.debug('seed %d: repair round %d over %d components',
                  cfg.rng_seed, attempt + 1, count)
        for component in sorted(set(edge_labels.tolist()) - {principal}):
            vertex = int(choices[rng.integers(len(choices))])
            for j in np.flatnonzero(edge_labels == component):
                if _attach(members[j], vertex, cap, protected):
                    repairs += 1
                    break
    raise GenerationError(
        f'seed {cfg.rng_seed}: hb-graph still disconnected after'
        f' {cfg.repair_rounds} repair rounds'
    )


def generate(cfg: GeneratorConfig) -> GeneratedHbGraph:
    """Generate a connected grouped hb-graph, deterministically per seed.

    Raises:
        GenerationError: if connectivity cannot be restored within
            `cfg.repair_rounds` rounds.
    """
    rng = np.random.default_rng(cfg.rng_seed)
    layout = rng.permutation(cfg.n_pool)
    pooled = cfg.n_central + cfg.n_groups * cfg.group_seed_size
    central = layout[:cfg.n_central]
    pools = layout[cfg.n_central:pooled].reshape(cfg.n_groups,
                                                 cfg.group_seed_size)
    ordinary = layout[pooled:]

    members, groups = _sample_edges(cfg, rng, central, pools, ordinary)
    protected = set(layout[:pooled].tolist())
    graph, repairs = _repair(cfg, rng, members, central, protected)
    if repairs:
        LOG.warning('seed %d: connectivity restored with %d central'
                    ' attachments', cfg.rng_seed, repairs)
    LOG.info('generated %r from seed %d', graph, cfg.rng_seed)
    return GeneratedHbGraph(
        graph=graph,
        seed=cfg.rng_seed,
        edge_groups=tuple(groups),
        seed_pools=tuple(tuple(int(v) for v in pool) for pool in pools),
        central=tuple(int(v) for v in central),
        repairs=repairs,
        config=cfg
    )


def batch(cfg: GeneratorConfig, count: int,
          base_seed: int) -> list[GeneratedHbGraph]:
    """Generate `count` graphs with seeds `base_seed .. base_seed+count-1`."""
    if count < 1:
        raise ValueError(f'count must be >= 1, got {count}')
    return [generate(replace(cfg, rng_seed=seed))
            for seed in range(base_seed, base_seed + count)]
