from unittest.mock import Mock

import orjson
import pytest

from hbdiff import cli
from hbdiff.bias import Exponential, Identity, Power
from hbdiff.experiment import REFERENCE, Experiment, paper15
from hbdiff.generator import GenerationError
from hbdiff.hbgraph import HbGraph, StructuralError
from hbdiff.serde import read_hbgraph, write_hbgraph

SMALL_FLAGS = ['--n-pool', '600', '--p', '30', '--max-mcard', '8']


def parse(*argv):
    return cli.build_parser().parse_args(list(argv))


def test_run_defaults_to_paper15():
    suite = cli.suite_from_args(parse('run', '--out', 'x'))
    assert suite == paper15()


def test_run_overrides():
    suite = cli.suite_from_args(parse(
        'run', '--out', 'x', '--graphs', '3', '--seed', '7',
        '--iterations', '50', '--tie-eps', '1e-8', '--stationary',
        '--workers', '2', '--groups', '2', '--fixed-pairs'
    ))
    assert suite.graphs == 3
    assert suite.base_seed == 7
    assert suite.iterations == 50
    assert suite.tie_eps == 1e-8
    assert suite.use_stationary
    assert suite.workers == 2
    assert suite.generator.n_groups == 2
    assert suite.generator.fixed_pairs
    assert len(suite.experiments) == 15


def test_run_single_bias_pair():
    suite = cli.suite_from_args(parse('run', '--out', 'x',
                                      '--bias-v', 'exp:2'))
    assert suite.experiments == (REFERENCE,
                                 Experiment(Exponential(2), Identity()))
    assert suite.curves == ((1, 2),)


def test_bad_bias_is_a_usage_error():
    with pytest.raises(SystemExit) as info:
        parse('run', '--out', 'x', '--bias-e', 'pow:two')
    assert info.value.code == 2


@pytest.mark.parametrize('argv', [
    ['gen', '--out', 'x', '--graphs', '0'],
    ['run', '--out', 'x', '--graphs', '-1'],
    ['run', '--out', 'x', '--workers', 'two'],
    ['curves', '--seed', '0', '--out', 'x', '--iterations', '0'],
])
def test_counts_must_be_positive(argv):
    with pytest.raises(SystemExit) as info:
        parse(*argv)
    assert info.value.code == 2


def test_curves_takes_generator_flags():
    args = parse('curves', '--seed', '3', '--out', 'x',
                 '--multiplicity-max', '4', '--p', '30')
    cfg = cli._generator_config(args)
    assert cfg.multiplicity_max == 4
    assert cfg.p == 30


def test_dispatch(monkeypatch):
    handler = Mock(return_value=0)
    monkeypatch.setattr(cli, 'cmd_ingest', handler)
    assert cli.main(['-v', 'ingest', 'g.json']) == 0
    args = handler.call_args.args[0]
    assert args.format == 'hbjson'
    assert args.verbose == 1


@pytest.mark.parametrize('error,code,category', [
    (StructuralError('split'), 4, 'structural'),
    (GenerationError('stuck'), 6, 'generation'),
    (FileNotFoundError('missing.json'), 3, 'input'),
])
def test_errors_map_to_exit_codes(monkeypatch, capsys, error, code,
                                  category):
    monkeypatch.setattr(cli, 'cmd_ingest', Mock(side_effect=error))
    assert cli.main(['ingest', 'g.json']) == code
    assert capsys.readouterr().err.startswith(f'error[{category}]: ')


def test_gen(tmp_path):
    assert cli.main(['gen', '--seed', '4', '--graphs', '2',
                     '--out', str(tmp_path), *SMALL_FLAGS]) == 0
    g = read_hbgraph(tmp_path / 'graph5.json')
    assert g.p == 30
    sidecar = orjson.loads((tmp_path / 'graph4.groups.json').read_bytes())
    assert sidecar['seed'] == 4


def test_run(tmp_path):
    out = tmp_path / 'run'
    assert cli.main(['run', '--graphs', '1', '--iterations', '10',
                     '--bias-v', 'pow:2', '--bias-e', 'exp:-2',
                     '--out', str(out), *SMALL_FLAGS]) == 0
    assert (out / 'matrix_strict_vertices.csv').is_file()
    assert (out / 'curves' / 'graph0_exp1_vs_exp2_e.csv').is_file()
    config = orjson.loads((out / 'config.json').read_bytes())
    assert config['experiments'][1] == {'bias_v': 'pow:2',
                                        'bias_e': 'exp:-2'}


def test_curves(tmp_path, make_graph):
    g = make_graph(2)
    write_hbgraph(g, tmp_path / 'g.json')
    out = tmp_path / 'curves.csv'
    assert cli.main(['curves', '--input', str(tmp_path / 'g.json'),
                     '--entity', 'hbedges', '--iterations', '20',
                     '--out', str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == 'position,entity_id,score_a,score_b'
    assert len(lines) == g.p + 1


def test_ingest_cooc(tmp_path):
    source = tmp_path / 'docs.csv'
    source.write_text('a,b,a\nb,c\n')
    out = tmp_path / 'g.json'
    assert cli.main(['ingest', str(source), '--format', 'cooc_csv',
                     '--out', str(out)]) == 0
    g = read_hbgraph(out)
    assert g.edges[0].members == {0: 2.0, 1: 1.0}


def test_ingest_disconnected_graph_is_accepted(tmp_path):
    write_hbgraph(HbGraph.from_members([{0: 1}, {1: 1}]),
                  tmp_path / 'g.json')
    assert cli.main(['ingest', str(tmp_path / 'g.json')]) == 0


def test_curves_on_disconnected_graph_fails(tmp_path, capsys):
    write_hbgraph(HbGraph.from_members([{0: 1}, {1: 1}]),
                  tmp_path / 'g.json')
    code = cli.main(['curves', '--input', str(tmp_path / 'g.json'),
                     '--out', str(tmp_path / 'c.csv')])
    assert code == 4
    assert 'error[structural]' in capsys.readouterr().err


def test_suite_file(tmp_path):
    path = tmp_path / 'suite.json'
    path.write_bytes(orjson.dumps({
        'experiments': [{'bias_v': 'id', 'bias_e': 'id'},
                        {'bias_v': 'pow:0.2', 'bias_e': 'id'}],
        'iterations': 5,
    }))
    suite = cli.suite_from_args(parse('run', '--suite', str(path),
                                      '--out', 'x', '--iterations', '8'))
    assert suite.experiments[1] == Experiment(Power(0.2), Identity())
    assert suite.iterations == 8


def test_curves_on_generated_multiset_graph(tmp_path):
    out = tmp_path / 'curves.csv'
    assert cli.main(['curves', '--seed', '0', *SMALL_FLAGS,
                     '--multiplicity-max', '4', '--iterations', '20',
                     '--out', str(out)]) == 0
    rows = [line.split(',') for line in out.read_text().splitlines()[1:]]
    assert rows
    assert any(float(a) != float(b) for _, _, a, b in rows)
