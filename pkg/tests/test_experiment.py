import numpy as np
import orjson
import pytest

from hbdiff.bias import Exponential, Identity, Power
from hbdiff.experiment import (
    PAPER15, PAPER15_CURVES, REFERENCE, Experiment, ExperimentError,
    ExperimentSuite, SuiteError, load_suite, paper15, rank_curves, run_suite,
    suite_from_dict, write_report
)
from hbdiff.generator import GeneratorConfig
from hbdiff.hbgraph import HbGraph
from hbdiff.serde import write_hbgraph

SMALL = GeneratorConfig(n_pool=600, p=30, max_mcard=8, n_central=4)

EXP4 = Experiment(Exponential(2), Exponential(2))


def small_suite(**overrides) -> ExperimentSuite:
    values = dict(experiments=(REFERENCE, EXP4), graphs=2, iterations=30,
                  generator=SMALL, curves=((1, 2),))
    values.update(overrides)
    return ExperimentSuite(**values)


def test_paper15_table():
    assert len(PAPER15) == 15
    assert PAPER15[0] == Experiment(Identity(), Identity())
    assert PAPER15[5] == Experiment(Power(2), Identity())
    assert PAPER15[12] == Experiment(Identity(), Exponential(-2))
    assert PAPER15[14] == Experiment(Exponential(-2), Exponential(2))
    suite = paper15()
    assert suite.iterations == 200
    assert suite.curves == PAPER15_CURVES


def test_single_cell_suite():
    report = run_suite(small_suite(experiments=(REFERENCE,), graphs=1,
                                   curves=()))
    for matrix in (*report.matrices.values(), *report.jaccard.values()):
        np.testing.assert_array_equal(matrix, [[1.0]])


def test_matrices():
    report = run_suite(small_suite(
        generator=GeneratorConfig(n_pool=600, p=30, max_mcard=8,
                                  n_central=4, multiplicity_max=4)
    ))
    assert set(report.matrices) == {'strict_vertices', 'large_vertices',
                                    'strict_hbedges', 'large_hbedges'}
    for matrix in report.matrices.values():
        assert matrix.shape == (2, 2)
        np.testing.assert_array_equal(matrix, matrix.T)
        np.testing.assert_array_equal(np.diag(matrix), 1.0)
        assert np.all(np.abs(matrix) <= 1.0)
    assert report.matrices['large_vertices'][0, 1] < 1.0
    assert len(report.graphs) == 2
    assert report.diagnostics['max_conservation_residual'] <= 1e-9


def test_uniform_features_make_biases_agree():
    # unit multiplicities and weights give every incidence feature 1
    report = run_suite(paper15(graphs=2, iterations=30, generator=SMALL))
    for key in ('large_vertices', 'large_hbedges'):
        np.testing.assert_array_equal(report.matrices[key],
                                      np.ones((15, 15)))
    assert len(report.curves) == 2 * len(PAPER15_CURVES)


@pytest.mark.slow
def test_uniform_features_at_full_scale():
    report = run_suite(paper15(graphs=2))
    assert report.matrices['strict_vertices'].shape == (15, 15)
    np.testing.assert_array_equal(report.matrices['large_vertices'],
                                  np.ones((15, 15)))
    assert report.diagnostics['max_conservation_residual'] <= 1e-9


def test_determinism(tmp_path):
    suite = small_suite()
    first = write_report(run_suite(suite), tmp_path / 'first')
    second = write_report(run_suite(suite), tmp_path / 'second')
    names = sorted(p.relative_to(first) for p in first.rglob('*.csv'))
    assert names == sorted(p.relative_to(second)
                           for p in second.rglob('*.csv'))
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes()
    for name in ('config.json', 'matrices.json'):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_workers_do_not_change_results():
    serial = run_suite(small_suite())
    parallel = run_suite(small_suite(workers=2))
    for key, matrix in serial.matrices.items():
        np.testing.assert_array_equal(matrix, parallel.matrices[key])


def test_report_layout(tmp_path):
    out = write_report(run_suite(small_suite()), tmp_path / 'run')
    expected = [
        'config.json', 'diagnostics.json', 'matrices.json',
        'matrix_strict_vertices.csv', 'matrix_large_vertices.csv',
        'matrix_strict_hbedges.csv', 'matrix_large_hbedges.csv',
        'matrix_jaccard_vertices.csv', 'matrix_jaccard_hbedges.csv',
        'rankings/graph0_exp1_v.csv', 'rankings/graph1_exp2_e.csv',
        'curves/graph0_exp1_vs_exp2_v.csv',
        'curves/graph0_exp1_vs_exp2_e.csv',
    ]
    for name in expected:
        assert (out / name).is_file(), name
    config = orjson.loads((out / 'config.json').read_bytes())
    assert config['experiments'][1] == {'bias_v': 'exp:2', 'bias_e': 'exp:2'}
    diagnostics = orjson.loads((out / 'diagnostics.json').read_bytes())
    assert [g['seed'] for g in diagnostics['graphs']] == [0, 1]


def test_input_graphs(tmp_path, make_graph):
    for seed in range(2):
        write_hbgraph(make_graph(seed), tmp_path / f'in{seed}.json')
    report = run_suite(small_suite(
        inputs=(str(tmp_path / 'in0.json'), str(tmp_path / 'in1.json'))
    ))
    assert [g.name for g in report.graphs] == ['in0', 'in1']
    assert report.graphs[0].n == 8


def test_input_graphs_with_same_file_name(tmp_path, make_graph):
    paths = []
    for seed, folder in enumerate(('a', 'b')):
        (tmp_path / folder).mkdir()
        paths.append(str(tmp_path / folder / 'g.json'))
        write_hbgraph(make_graph(seed), paths[-1])
    report = run_suite(small_suite(inputs=tuple(paths)))
    assert [g.name for g in report.graphs] == ['g-0', 'g-1']
    out = write_report(report, tmp_path / 'run')
    assert (out / 'rankings' / 'g-0_exp2_v.csv').read_bytes() != \
        (out / 'rankings' / 'g-1_exp2_v.csv').read_bytes()


def test_cell_failure_names_graph_and_experiment(tmp_path):
    disconnected = HbGraph.from_members([{0: 1}, {1: 1}])
    write_hbgraph(disconnected, tmp_path / 'split.json')
    with pytest.raises(ExperimentError) as info:
        run_suite(small_suite(inputs=(str(tmp_path / 'split.json'),)))
    assert info.value.graph == 'split'
    assert info.value.experiment == 1
    assert info.value.exit_code == 4


def test_generation_failure_names_seed():
    generator = GeneratorConfig(n_pool=100_000, p=30, max_mcard=8,
                                n_central=0, central_prob=0.0)
    with pytest.raises(ExperimentError) as info:
        run_suite(small_suite(generator=generator, base_seed=3))
    assert info.value.seed == 3
    assert info.value.exit_code == 6


def test_rank_curves(make_graph):
    g = make_graph(1)
    rows = rank_curves(g, REFERENCE, REFERENCE, iterations=50)
    assert len(rows) == g.n
    assert all(r.score_a == r.score_b for r in rows)
    assert [r.position for r in rows] == list(range(1, g.n + 1))
    edges = rank_curves(g, REFERENCE, EXP4, entity='hbedges', iterations=50)
    assert len(edges) == g.p
    scores = [r.score_a for r in edges]
    assert all(x >= y - 1e-12 for x, y in zip(scores, scores[1:]))


def test_suite_from_dict():
    suite = suite_from_dict({
        'experiments': [{'bias_v': 'id', 'bias_e': 'pow:2'}],
        'graphs': 3,
        'generator': {'p': 30},
        'curves': [],
    })
    assert suite.experiments == (Experiment(Identity(), Power(2)),)
    assert suite.graphs == 3
    assert suite.generator.p == 30
    assert suite.iterations == 200


def test_load_suite(tmp_path):
    path = tmp_path / 'suite.json'
    path.write_bytes(orjson.dumps({'iterations': 10, 'tie_eps': 0}))
    suite = load_suite(str(path))
    assert suite.iterations == 10
    assert suite.experiments == PAPER15
    assert load_suite('paper15') == paper15()


@pytest.mark.parametrize('data', [
    {'experiments': []},
    {'experiments': [{'bias_v': 'id'}]},
    {'experiments': [{'bias_v': 'log:2', 'bias_e': 'id'}]},
    {'iterations': 0},
    {'unknown': 1},
    {'generator': {'colour': 'red'}},
    {'curves': [[1, 16]]},
    {'generator': {'p': 0}},
    {'generator': {'n_pool': 'many'}},
])
def test_invalid_suite(data):
    with pytest.raises(SuiteError):
        suite_from_dict(data)


@pytest.mark.slow
def test_biases_act_on_multiset_graphs():
    report = run_suite(paper15(
        graphs=3, generator=GeneratorConfig(multiplicity_max=3)
    ))
    strict = report.matrices['strict_vertices']
    large = report.matrices['large_vertices']
    assert large[0, 1:].min() < 1.0
    # a vertex-side bias and its hb-edge-side counterpart still agree
    for a, b in ((6, 12), (7, 13), (8, 10), (9, 11)):
        assert strict[a - 1, b - 1] > 0
        assert large[a - 1, b - 1] > 0
