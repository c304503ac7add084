"""Weighted hyper-bag-graphs (hb-graphs).

A hb-graph is a family of multisets, the hb-edges, over a shared vertex
universe `0..n-1`. Each hb-edge maps its members to a positive real
multiplicity and carries a positive weight. The incidence structure is kept
sparse: a `scipy.sparse` CSR matrix `H[i, j] = m_j(v_i)` and aligned
`Incidence` arrays listing every nonzero entry once, ordered by hb-edge
then by vertex.

Graphs are immutable once constructed.
"""

from __future__ import annotations

from dataclasses import dataclass
import logging
import math
from numbers import Integral, Real
from typing import Iterator, Mapping, NamedTuple, Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from hbdiff.exception import HbDiffException

LOG = logging.getLogger(__name__)


class ValidationError(HbDiffException):
    """Raised when hb-edge or hb-graph data breaks an invariant."""
    exit_code = 3


class StructuralError(HbDiffException):
    """Raised when an operation needs a connected hb-graph.

    Diffusion is only defined when every vertex belongs to at least one
    hb-edge and the vertex/hb-edge incidence graph is connected.
    """
    exit_code = 4


class Incidence(NamedTuple):
    """Aligned arrays over the nonzero incidences of a hb-graph.

    Entry `k` says that vertex `vertices[k]` belongs to hb-edge
    `edges[k]` with multiplicity `multiplicities[k]`, the hb-edge having
    weight `weights[k]`.
    """
    vertices: np.ndarray
    edges: np.ndarray
    multiplicities: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class HbEdge:
    """A weighted multiset of vertex ids.

    Zero multiplicities are dropped on construction, so `members` only ever
    holds strictly positive values, sorted by vertex id.
    """
    members: Mapping[int, float]
    weight: float = 1.0

    def __post_init__(self):
        weight = self.weight
        if not isinstance(weight, Real) or not math.isfinite(weight) \
                or weight <= 0:
            raise ValidationError(
                f'hb-edge weight must be a positive real, got {weight!r}'
            )
        members = {}
        for v, m in self.members.items():
            if isinstance(v, bool) or not isinstance(v, Integral) or v < 0:
                raise ValidationError(
                    f'vertex id {v!r} is not a nonnegative integer'
                )
            if isinstance(m, bool) or not isinstance(m, Real) \
                    or not math.isfinite(m) or m < 0:
                raise ValidationError(
                    f'multiplicity of vertex {v} must be a nonnegative real,'
                    f' got {m!r}'
                )
            if m > 0:
                members[int(v)] = float(m)
        if not members:
            raise ValidationError(
                'hb-edge has no member with a positive multiplicity'
            )
        object.__setattr__(self, 'members', dict(sorted(members.items())))
        object.__setattr__(self, 'weight', float(weight))

    @property
    def m_cardinality(self) -> float:
        return m_cardinality(self)

    def __hash__(self):
        return hash((tuple(self.members.items()), self.weight))


def m_cardinality(edge: HbEdge) -> float:
    """Sum of the multiplicities of a hb-edge."""
    return math.fsum(edge.members.values())


class HbGraph:
    """An immutable weighted hb-graph.

    Arguments:
        n: size of the vertex universe. Vertices that belong to no hb-edge
            are allowed here but make the graph unusable for diffusion.
        edges: the hb-edges, indexed in the given order.
        labels (optional): one unique display name per vertex.
    """

    def __init__(
        self,
        n: int,
        edges: Sequence[HbEdge],
        labels: Optional[Sequence[str]] = None
    ):
        if isinstance(n, bool) or not isinstance(n, Integral) or n < 1:
            raise ValidationError(f'vertex count must be >= 1, got {n!r}')
        if not edges:
            raise ValidationError('a hb-graph needs at least one hb-edge')
        for j, edge in enumerate(edges):
            if not isinstance(edge, HbEdge):
                raise ValidationError(
                    f'hb-edge {j} is a {type(edge).__name__}, not HbEdge'
                )
            top = next(reversed(edge.members))
            if top >= n:
                raise ValidationError(
                    f'hb-edge {j} references vertex {top} but n = {n}'
                )
        if labels is not None:
            labels = tuple(str(label) for label in labels)
            if len(labels) != n:
                raise ValidationError(
                    f'expected {n} vertex labels, got {len(labels)}'
                )
            if len(set(labels)) != n:
                raise ValidationError('vertex labels must be unique')
        self.n = int(n)
        self.edges = tuple(edges)
        self.labels = labels

        sizes = [len(e.members) for e in self.edges]
        vertices = np.fromiter(
            (v for e in self.edges for v in e.members),
            dtype=np.int64, count=sum(sizes)
        )
        multiplicities = np.fromiter(
            (m for e in self.edges for m in e.members.values()),
            dtype=np.float64, count=sum(sizes)
        )
        self._weights = np.array([e.weight for e in self.edges])
        edge_index = np.repeat(np.arange(self.p, dtype=np.int64), sizes)
        self._incidence = Incidence(
            vertices=vertices,
            edges=edge_index,
            multiplicities=multiplicities,
            weights=self._weights[edge_index]
        )
        self._matrix = sparse.csr_matrix(
            (multiplicities, (vertices, edge_index)), shape=(self.n, self.p)
        )
        for array in (*self._incidence, self._weights):
            array.flags.writeable = False

    @classmethod
    def from_members(
        cls,
        members: Sequence[Mapping[int, float]],
        weights: Optional[Sequence[float]] = None,
        n: Optional[int] = None,
        labels: Optional[Sequence[str]] = None
    ) -> HbGraph:
        """Build a graph from plain `{vertex: multiplicity}` mappings.

        `n` defaults to one more than the largest referenced vertex id.
        """
        if weights is None:
            weights = [1.0] * len(members)
        if len(weights) != len(members):
            raise ValidationError(
                f'got {len(weights)} weights for {len(members)} hb-edges'
            )
        edges = [HbEdge(m, w) for m, w in zip(members, weights)]
        if n is None:
            n = 1 + max((max(e.members) for e in edges), default=-1)
        return cls(n, edges, labels)

    @property
    def p(self) -> int:
        return len(self.edges)

    @property
    def nnz(self) -> int:
        return len(self._incidence.vertices)

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    @property
    def incidence(self) -> Incidence:
        return self._incidence

    @property
    def incidence_matrix(self) -> sparse.csr_matrix:
        """The n x p multiplicity matrix H (a copy)."""
        return self._matrix.copy()

    def label(self, v: int) -> str:
        return self.labels[v] if self.labels is not None else str(v)

    def m_cardinalities(self) -> np.ndarray:
        return np.asarray(self._matrix.sum(axis=0)).ravel()

    def weighted_degrees(self) -> np.ndarray:
        """`d_w(v_i) = sum_j m_j(v_i) w(e_j)` for every vertex."""
        return self._matrix @ self._weights

    def weighted_degree(self, v: int) -> float:
        if not 0 <= v < self.n:
            raise IndexError(f'vertex {v} out of range for n = {self.n}')
        row = self._matrix.getrow(v)
        return float(row.data @ self._weights[row.indices])

    def isolated_vertices(self) -> np.ndarray:
        return np.flatnonzero(np.diff(self._matrix.indptr) == 0)

    def components(self) -> tuple[int, np.ndarray]:
        """Connected components of the vertex/hb-edge incidence graph.

        Returns:
            tuple[int, np.ndarray]: the number of components and a label
                per node, vertices first (`0..n-1`) then hb-edges
                (`n..n+p-1`).
        """
        linked = self._matrix.astype(bool).astype(np.int8)
        bipartite = sparse.bmat([[None, linked], [linked.T, None]],
                                format='csr')
        count, labels = connected_components(bipartite, directed=False)
        return int(count), labels

    def is_connected(self) -> bool:
        # an isolated vertex is a component of its own
        count, _ = self.components()
        return count == 1

    def require_connected(self):
        """Raise a StructuralError unless the graph supports diffusion."""
        isolated = self.isolated_vertices()
        if len(isolated):
            raise StructuralError(
                f'{len(isolated)} vertices belong to no hb-edge'
                f' (first: {self.label(int(isolated[0]))})'
            )
        count, _ = self.components()
        if count != 1:
            raise StructuralError(
                f'hb-graph has {count} connected components'
            )

    def incidence_triples(self) -> Iterator[tuple[int, int, float, float]]:
        inc = self._incidence
        for v, j, m, w in zip(inc.vertices, inc.edges, inc.multiplicities,
                              inc.weights):
            yield int(v), int(j), float(m), float(w)

    def __eq__(self, other):
        return isinstance(other, HbGraph) and self.n == other.n and \
            self.edges == other.edges and self.labels == other.labels

    def __repr__(self):
        return f'<HbGraph n={self.n} p={self.p} nnz={self.nnz}>'


def weighted_degree(g: HbGraph, v: int) -> float:
    return g.weighted_degree(v)


def is_connected(g: HbGraph) -> bool:
    return g.is_connected()


def incidence_triples(g: HbGraph) -> Iterator[tuple[int, int, float, float]]:
    """Yield `(vertex, edge index, multiplicity, weight)` per incidence.

    Each nonzero incidence is yielded once, ordered by hb-edge then by
    vertex.
    """
    return g.incidence_triples()
