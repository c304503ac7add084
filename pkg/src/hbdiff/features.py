"""Abstract information functions over hb-graph incidences.

A feature function scores every (vertex, hb-edge) incidence. The diffusion
uses two of them: `f_V`, read from the vertex side to decide how a vertex
spreads its value over its hb-edges, and `f_E`, read from the hb-edge side
to decide how a hb-edge hands value back to its vertices.

The following strategies are included in this module:
    * weighted_multiplicity (default on both sides): `m_j(v_i) w(e_j)`
    * multiplicity: `m_j(v_i)`
    * hbedge_weight: `w(e_j)`
    * unit: 1 on every incidence, i.e. the unbiased equi-probable diffusion

Implement custom features by defining a function that fulfills the
FeatureFunction protocol:

```python
from hbdiff.hbgraph import Incidence

def custom_feature(incidence: Incidence) -> np.ndarray:
    ...
```

The returned array is aligned with the incidence arrays and must be
strictly positive: features vanish exactly where multiplicities do.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np
from scipy import sparse

from hbdiff.hbgraph import HbGraph, Incidence, ValidationError


class FeatureFunction(Protocol):
    """Scores each incidence of a hb-graph.

    Arguments:
        incidence: the aligned incidence arrays of the graph.

    Returns:
        np.ndarray: one positive value per incidence.
    """
    def __call__(self, incidence: Incidence) -> np.ndarray: ...


def weighted_multiplicity(incidence: Incidence) -> np.ndarray:
    """The default feature: multiplicity times hb-edge weight.

    With identity biases on both sides, vertices spread their value in
    proportion to `m_j(v_i) w(e_j)` and the stationary vertex values are
    proportional to weighted degrees.
    """
    return incidence.multiplicities * incidence.weights


def multiplicity(incidence: Incidence) -> np.ndarray:
    """Ignores hb-edge weights."""
    return np.array(incidence.multiplicities)


def hbedge_weight(incidence: Incidence) -> np.ndarray:
    """Ignores multiplicities: every member of a hb-edge scores its weight."""
    return np.array(incidence.weights)


def unit(incidence: Incidence) -> np.ndarray:
    """Every incidence scores 1, giving uniform transitions."""
    return np.ones(len(incidence.vertices))


@dataclass(frozen=True)
class FeatureSpec:
    """The pair of abstract information functions used by a diffusion."""
    vertex_feature: FeatureFunction = weighted_multiplicity
    hbedge_feature: FeatureFunction = weighted_multiplicity


def evaluate(feature: FeatureFunction, graph: HbGraph) -> np.ndarray:
    """Evaluate a feature on every incidence, checking its support."""
    values = np.asarray(feature(graph.incidence), dtype=np.float64)
    if values.shape != (graph.nnz,):
        raise ValidationError(
            f'feature {getattr(feature, "__name__", feature)!r} returned'
            f' shape {values.shape}, expected ({graph.nnz},)'
        )
    if not np.all(np.isfinite(values)) or np.any(values <= 0):
        raise ValidationError(
            f'feature {getattr(feature, "__name__", feature)!r} must be'
            ' finite and positive on every incidence'
        )
    return values


def vertex_information(graph: HbGraph,
                       feature: FeatureFunction = weighted_multiplicity
                       ) -> np.ndarray:
    """`F_V(v_i) = sum_j f_V(v_i, e_j)`; the weighted degree by default."""
    values = evaluate(feature, graph)
    return np.bincount(graph.incidence.vertices, weights=values,
                       minlength=graph.n)


def hbedge_information(graph: HbGraph,
                       feature: FeatureFunction = weighted_multiplicity
                       ) -> np.ndarray:
    """`F_E(e_j) = sum_i f_E(e_j, v_i)`; `w(e_j) #_m e_j` by default."""
    values = evaluate(feature, graph)
    return np.bincount(graph.incidence.edges, weights=values,
                       minlength=graph.p)


def information_probabilities(
    graph: HbGraph,
    features: FeatureSpec = FeatureSpec()
) -> tuple[sparse.csr_matrix, sparse.csr_matrix]:
    """Unbiased transition probabilities induced by the features.

    Returns:
        tuple[csr_matrix, csr_matrix]: the n x p matrix of
            `f_V(v_i, e_j) / F_V(v_i)` and the p x n matrix of
            `f_E(e_j, v_i) / F_E(e_j)`, both row-stochastic.
    """
    graph.require_connected()
    inc = graph.incidence
    f_v = evaluate(features.vertex_feature, graph)
    f_e = evaluate(features.hbedge_feature, graph)
    to_edges = sparse.csr_matrix(
        (f_v / vertex_information(graph, features.vertex_feature)[
            inc.vertices], (inc.vertices, inc.edges)),
        shape=(graph.n, graph.p)
    )
    to_vertices = sparse.csr_matrix(
        (f_e / hbedge_information(graph, features.hbedge_feature)[
            inc.edges], (inc.edges, inc.vertices)),
        shape=(graph.p, graph.n)
    )
    return to_edges, to_vertices
