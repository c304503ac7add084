"""Bias functions and the biased transition structure of a hb-graph.

A bias function `g` reshapes feature values before they are normalized
into transition probabilities. Three families are supported:

    family      | text form  | g(x)
    -------------------------------------
    Identity    | id         | x
    Power       | pow:<a>    | x ** a
    Exponential | exp:<a>    | exp(a * x)

Positive parameters favour incidences with high feature values, negative
ones favour low values. Biases are only ever applied on the incidence
support: off-support entries stay 0, they are never `g(0)`.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
import logging
import math
from typing import Literal, Union

import numpy as np
from scipy import sparse

from hbdiff.exception import HbDiffException
from hbdiff.features import FeatureSpec, evaluate
from hbdiff.hbgraph import HbGraph

LOG = logging.getLogger(__name__)

BiasFamily = Literal['pow', 'exp']

DENSE_TRANSITION_LIMIT = 2000
"""Largest vertex count for which `transition_matrix(..., dense=True)`
materializes an ndarray."""


class BiasEvaluationError(HbDiffException):
    """Raised when a bias maps a feature value outside the positive reals.

    This happens when a power bias overflows on very large features.
    """
    exit_code = 5


def _format_parameter(value: float) -> str:
    return str(int(value)) if value.is_integer() else repr(value)


class BiasFunction(ABC):
    """Abstract base class for a bias family member.

    Two biases compare equal when they compute the same function, so
    `Identity() == Power(1.0)`.
    """

    @property
    @abstractmethod
    def family(self) -> BiasFamily:
        """The family this bias belongs to."""

    @property
    @abstractmethod
    def parameter(self) -> float:
        """The exponent of a power bias or the rate of an exponential."""

    @abstractmethod
    def __call__(self, x):
        """Evaluate `g` pointwise, without support masking."""

    @abstractmethod
    def evaluate_rows(self, values: np.ndarray,
                      indptr: np.ndarray) -> np.ndarray:
        """Evaluate `g` on the stored entries of a CSR matrix.

        Arguments:
            values: the positive feature values, row after row.
            indptr: CSR row pointers delimiting the rows in `values`.
                Every row must hold at least one value.

        Returns:
            np.ndarray: biased values, possibly rescaled by a positive
                factor per row. Row-normalized results are unaffected.
        """

    def __eq__(self, other):
        return isinstance(other, BiasFunction) and \
            self.family == other.family and \
            self.parameter == other.parameter

    def __hash__(self):
        return hash((self.family, self.parameter))

    def __repr__(self):
        return '<%s %s>' % (type(self).__name__, self)


class Power(BiasFunction):
    """`g(x) = x ** exponent`.

    An exponent of 0 maps every incidence to 1, i.e. uniform transitions
    over incident entities.
    """

    def __init__(self, exponent: float):
        if not math.isfinite(exponent):
            raise ValueError(f'power exponent must be finite: {exponent}')
        self.exponent = float(exponent)

    def __str__(self):
        return f'pow:{_format_parameter(self.exponent)}'

    @property
    def family(self) -> BiasFamily:
        return 'pow'

    @property
    def parameter(self) -> float:
        return self.exponent

    def __call__(self, x):
        return np.power(x, self.exponent)

    def evaluate_rows(self, values, indptr):
        return np.power(values, self.exponent)


class Identity(Power):
    """`g(x) = x`, the unbiased exchange-based diffusion."""

    def __init__(self):
        super().__init__(1.0)

    def __str__(self):
        return 'id'

    def __call__(self, x):
        return np.asarray(x, dtype=np.float64)

    def evaluate_rows(self, values, indptr):
        return np.array(values, dtype=np.float64)


class Exponential(BiasFunction):
    """`g(x) = exp(rate * x)`.

    Rows are evaluated with their largest exponent subtracted, so large
    features never overflow. Probabilities are invariant under that shift.
    Shifted values that underflow are held at the smallest normal float,
    so every incidence keeps a positive probability.
    """

    def __init__(self, rate: float):
        if not math.isfinite(rate):
            raise ValueError(f'exponential rate must be finite: {rate}')
        self.rate = float(rate)

    def __str__(self):
        return f'exp:{_format_parameter(self.rate)}'

    @property
    def family(self) -> BiasFamily:
        return 'exp'

    @property
    def parameter(self) -> float:
        return self.rate

    def __call__(self, x):
        return np.exp(self.rate * np.asarray(x, dtype=np.float64))

    def evaluate_rows(self, values, indptr):
        lengths = np.diff(indptr)
        if np.any(lengths == 0):
            raise ValueError('every row needs at least one value')
        exponents = self.rate * np.asarray(values, dtype=np.float64)
        row_max = np.maximum.reduceat(exponents, indptr[:-1])
        shifted = np.exp(exponents - np.repeat(row_max, lengths))
        return np.maximum(shifted, np.finfo(np.float64).tiny)


@dataclass(frozen=True)
class BiasedSystem:
    """The biased transition structure of one hb-graph.

    Attributes:
        graph: the connected hb-graph.
        features: the abstract information functions.
        bias_v: vertex bias `g_V`.
        bias_e: hb-edge bias `g_E`.
        vertex_features: `B_V`, the n x p matrix of `g_V(f_V(v_i, e_j))`.
        hbedge_features: `B_E`, the p x n matrix of `g_E(f_E(e_j, v_i))`.
        vertex_totals: `G_V`, the row sums of `B_V`.
        hbedge_totals: `G_E`, the row sums of `B_E`.
        vertex_to_hbedge: `G_V^-1 B_V`, row-stochastic.
        hbedge_to_vertex: `G_E^-1 B_E`, row-stochastic.

    For exponential biases `B_V` and `B_E` hold row-shifted values; the
    normalized matrices are exact.
    """
    graph: HbGraph
    features: FeatureSpec
    bias_v: BiasFunction
    bias_e: BiasFunction
    vertex_features: sparse.csr_matrix = field(repr=False)
    hbedge_features: sparse.csr_matrix = field(repr=False)
    vertex_totals: np.ndarray = field(repr=False)
    hbedge_totals: np.ndarray = field(repr=False)
    vertex_to_hbedge: sparse.csr_matrix = field(repr=False)
    hbedge_to_vertex: sparse.csr_matrix = field(repr=False)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def p(self) -> int:
        return self.graph.p


def _biased_rows(values: np.ndarray, rows: np.ndarray, cols: np.ndarray,
                 shape: tuple[int, int], bias: BiasFunction, side: str
                 ) -> tuple[sparse.csr_matrix, np.ndarray, sparse.csr_matrix]:
    features = sparse.csr_matrix((values, (rows, cols)), shape=shape)
    features.sort_indices()
    biased = features.copy()
    biased.data = bias.evaluate_rows(features.data, features.indptr)
    if not np.all(np.isfinite(biased.data)) or np.any(biased.data <= 0):
        raise BiasEvaluationError(
            f'{side} bias {bias} is not finite and positive on every'
            ' incidence'
        )
    totals = np.asarray(biased.sum(axis=1)).ravel()
    if not np.all(np.isfinite(totals)):
        raise BiasEvaluationError(f'{side} bias {bias} overflows row totals')
    normalized = sparse.csr_matrix(sparse.diags(1.0 / totals) @ biased)
    return biased, totals, normalized


def build_biased_system(
    g: HbGraph,
    features: FeatureSpec = FeatureSpec(),
    bias_v: BiasFunction = Identity(),
    bias_e: BiasFunction = Identity()
) -> BiasedSystem:
    """Compute the biased feature matrices and their normalizations.

    Raises:
        StructuralError: if the graph has isolated vertices or is not
            connected.
        ValidationError: if a feature is not positive on its support.
        BiasEvaluationError: if a bias overflows.
    """
    g.require_connected()
    inc = g.incidence
    b_v, g_v, to_edges = _biased_rows(
        evaluate(features.vertex_feature, g), inc.vertices, inc.edges,
        (g.n, g.p), bias_v, 'vertex'
    )
    b_e, g_e, to_vertices = _biased_rows(
        evaluate(features.hbedge_feature, g), inc.edges, inc.vertices,
        (g.p, g.n), bias_e, 'hb-edge'
    )
    LOG.debug('built biased system g_V=%s g_E=%s on %r', bias_v, bias_e, g)
    return BiasedSystem(
        graph=g,
        features=features,
        bias_v=bias_v,
        bias_e=bias_e,
        vertex_features=b_v,
        hbedge_features=b_e,
        vertex_totals=g_v,
        hbedge_totals=g_e,
        vertex_to_hbedge=to_edges,
        hbedge_to_vertex=to_vertices
    )


def vertex_transition_prob(sys: BiasedSystem, v: int, j: int) -> float:
    """Biased probability of moving from vertex `v` to hb-edge `j`.

    Pairs outside the incidence support have probability 0.
    """
    if not (0 <= v < sys.n and 0 <= j < sys.p):
        raise IndexError(f'({v}, {j}) outside a {sys.n} x {sys.p} system')
    return float(sys.vertex_to_hbedge[v, j])


def hbedge_transition_prob(sys: BiasedSystem, j: int, v: int) -> float:
    """Biased probability of moving from hb-edge `j` to vertex `v`."""
    if not (0 <= v < sys.n and 0 <= j < sys.p):
        raise IndexError(f'({j}, {v}) outside a {sys.p} x {sys.n} system')
    return float(sys.hbedge_to_vertex[j, v])


def transition_matrix(
    sys: BiasedSystem,
    dense: bool = False
) -> Union[sparse.csr_matrix, np.ndarray]:
    """The one-step vertex transition matrix `T = G_V^-1 B_V G_E^-1 B_E`.

    `T` is row-stochastic, and `T[i, k] > 0` exactly when vertices `i`
    and `k` share a hb-edge.

    Arguments:
        sys: the biased system.
        dense: return an ndarray instead of a CSR matrix. Refused for
            graphs above DENSE_TRANSITION_LIMIT vertices.
    """
    if dense and sys.n > DENSE_TRANSITION_LIMIT:
        raise ValueError(
            f'refusing to materialize a dense {sys.n} x {sys.n} transition'
            f' matrix (limit {DENSE_TRANSITION_LIMIT})'
        )
    t = sparse.csr_matrix(sys.vertex_to_hbedge @ sys.hbedge_to_vertex)
    return t.toarray() if dense else t
