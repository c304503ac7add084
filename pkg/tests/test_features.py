import numpy as np
import pytest

from hbdiff.features import (
    FeatureSpec, evaluate, hbedge_information, hbedge_weight,
    information_probabilities, multiplicity, unit, vertex_information,
    weighted_multiplicity
)
from hbdiff.hbgraph import HbGraph, ValidationError


@pytest.fixture
def weighted_graph():
    return HbGraph.from_members([{0: 2, 1: 1}, {1: 1, 2: 3}], [2.0, 0.5])


@pytest.mark.parametrize('feature,expected', [
    (weighted_multiplicity, [4.0, 2.0, 0.5, 1.5]),
    (multiplicity, [2.0, 1.0, 1.0, 3.0]),
    (hbedge_weight, [2.0, 2.0, 0.5, 0.5]),
    (unit, [1.0, 1.0, 1.0, 1.0]),
])
def test_features(weighted_graph, feature, expected):
    np.testing.assert_allclose(evaluate(feature, weighted_graph), expected)


def test_default_information(weighted_graph):
    np.testing.assert_allclose(vertex_information(weighted_graph),
                               weighted_graph.weighted_degrees())
    np.testing.assert_allclose(hbedge_information(weighted_graph),
                               [2.0 * 3, 0.5 * 4])


def test_information_probabilities(example_graph):
    to_edges, to_vertices = information_probabilities(example_graph)
    np.testing.assert_allclose(to_edges.toarray(),
                               [[1, 0], [0.5, 0.5], [0, 1]])
    np.testing.assert_allclose(to_vertices.toarray(),
                               [[2 / 3, 1 / 3, 0], [0, 0.5, 0.5]])


def test_unit_features_are_uniform(weighted_graph):
    to_edges, to_vertices = information_probabilities(
        weighted_graph, FeatureSpec(unit, unit)
    )
    np.testing.assert_allclose(to_vertices.toarray(),
                               [[0.5, 0.5, 0], [0, 0.5, 0.5]])


def test_feature_must_be_positive(example_graph):
    def zero_on_first(incidence):
        values = np.ones(len(incidence.vertices))
        values[0] = 0
        return values

    with pytest.raises(ValidationError, match='zero_on_first'):
        evaluate(zero_on_first, example_graph)


def test_feature_shape_is_checked(example_graph):
    with pytest.raises(ValidationError, match='shape'):
        evaluate(lambda incidence: np.ones(2), example_graph)
