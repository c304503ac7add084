"""Command line interface: `hbdiff gen|run|curves|ingest`."""

from __future__ import annotations

import argparse
from dataclasses import replace
import logging
from pathlib import Path
import sys
from typing import Optional, Sequence

from hbdiff import codec
from hbdiff.exception import HbDiffException
from hbdiff.experiment import (
    REFERENCE, Experiment, ExperimentSuite, load_suite, rank_curves,
    run_suite, write_curves_csv, write_report
)
from hbdiff.generator import GeneratorConfig, generate
from hbdiff.hbgraph import HbGraph
from hbdiff.serde import ingest, write_hbgraph, write_json

LOG = logging.getLogger(__name__)

CATEGORIES = {
    1: 'internal',
    3: 'input',
    4: 'structural',
    5: 'numerical',
    6: 'generation',
}
"""Error category printed for each exit code."""


def _bias(text: str):
    try:
        return codec.decode(text)
    except codec.BiasSyntaxError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f'not an integer: {text!r}') from e
    if value < 1:
        raise argparse.ArgumentTypeError(f'must be >= 1, got {value}')
    return value


def _generator_args(parser: argparse.ArgumentParser):
    group = parser.add_argument_group('generator')
    group.add_argument('--n-pool', type=int, help='potential vertices')
    group.add_argument('--p', type=int, help='hb-edges per graph')
    group.add_argument('--max-mcard', type=float,
                       help='largest hb-edge m-cardinality')
    group.add_argument('--groups', type=int, dest='n_groups',
                       help='number of vertex groups')
    group.add_argument('--multiplicity-max', type=int,
                       help='largest multiplicity of ordinary members')
    group.add_argument('--fixed-pairs', action='store_true', default=None,
                       help='reuse the same seed vertices in every hb-edge'
                            ' of a group')


def _generator_config(args: argparse.Namespace,
                      base: GeneratorConfig = GeneratorConfig()
                      ) -> GeneratorConfig:
    fields = ('n_pool', 'p', 'max_mcard', 'n_groups', 'multiplicity_max',
              'fixed_pairs')
    overrides = {name: getattr(args, name) for name in fields
                 if getattr(args, name) is not None}
    return replace(base, **overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='hbdiff',
        description='Biased exchange-based diffusion on hb-graphs.'
    )
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help='log progress (-v) or details (-vv)')
    commands = parser.add_subparsers(dest='command', required=True)

    gen = commands.add_parser('gen', help='generate random hb-graphs')
    gen.add_argument('--seed', type=int, default=0, help='first seed')
    gen.add_argument('--graphs', type=_positive_int, default=1,
                     help='number of graphs, one per consecutive seed')
    gen.add_argument('--out', type=Path, required=True,
                     help='output directory')
    _generator_args(gen)
    gen.set_defaults(handler=cmd_gen)

    run = commands.add_parser('run', help='run a bias experiment suite')
    run.add_argument('--suite', default='paper15',
                     help='paper15 or a suite JSON file')
    run.add_argument('--graphs', type=_positive_int)
    run.add_argument('--seed', type=int, help='seed of the first graph')
    run.add_argument('--iterations', type=_positive_int)
    run.add_argument('--tie-eps', type=float)
    run.add_argument('--bias-v', type=_bias,
                     help='vertex bias: id, pow:<a> or exp:<a>')
    run.add_argument('--bias-e', type=_bias, help='hb-edge bias')
    run.add_argument('--input', nargs='+', type=str,
                     help='hb-graph JSON files to use instead of generated'
                          ' graphs')
    run.add_argument('--stationary', action='store_true', default=None,
                     help='rank from the stationary state')
    run.add_argument('--head-k', type=_positive_int, help='Jaccard head size')
    run.add_argument('--workers', type=_positive_int)
    run.add_argument('--out', type=Path, required=True,
                     help='run directory')
    _generator_args(run)
    run.set_defaults(handler=cmd_run)

    curves = commands.add_parser(
        'curves', help='compare two rankings of one graph'
    )
    source = curves.add_mutually_exclusive_group(required=True)
    source.add_argument('--input', type=str, help='hb-graph JSON file')
    source.add_argument('--seed', type=int, help='generate the graph')
    curves.add_argument('--bias-v', type=_bias, default=codec.decode('exp:2'))
    curves.add_argument('--bias-e', type=_bias, default=codec.decode('exp:2'))
    curves.add_argument('--ref-bias-v', type=_bias, default=REFERENCE.bias_v)
    curves.add_argument('--ref-bias-e', type=_bias, default=REFERENCE.bias_e)
    curves.add_argument('--entity', choices=('vertices', 'hbedges'),
                        default='vertices')
    curves.add_argument('--iterations', type=_positive_int, default=200)
    curves.add_argument('--tie-eps', type=float, default=1e-10)
    curves.add_argument('--out', type=Path, required=True,
                        help='output CSV file')
    _generator_args(curves)
    curves.set_defaults(handler=cmd_curves)

    ingest_ = commands.add_parser('ingest', help='validate an input file')
    ingest_.add_argument('path', type=Path)
    ingest_.add_argument('--format', choices=('hbjson', 'cooc_csv'),
                         default='hbjson')
    ingest_.add_argument('--out', type=Path,
                         help='write the hb-graph as JSON')
    ingest_.set_defaults(handler=cmd_ingest)
    return parser


def cmd_gen(args: argparse.Namespace) -> int:
    cfg = _generator_config(args)
    args.out.mkdir(parents=True, exist_ok=True)
    for seed in range(args.seed, args.seed + args.graphs):
        generated = generate(replace(cfg, rng_seed=seed))
        write_hbgraph(generated.graph, args.out / f'graph{seed}.json')
        write_json(generated.sidecar(), args.out / f'graph{seed}.groups.json')
    LOG.info('wrote %d graphs to %s', args.graphs, args.out)
    return 0


def suite_from_args(args: argparse.Namespace) -> ExperimentSuite:
    """The suite named by `--suite`, overridden by the other flags."""
    suite = load_suite(args.suite)
    overrides: dict = {}
    if args.bias_v is not None or args.bias_e is not None:
        pair = Experiment(args.bias_v or REFERENCE.bias_v,
                          args.bias_e or REFERENCE.bias_e)
        overrides.update(experiments=(REFERENCE, pair), curves=((1, 2),))
    for flag, name in (('graphs', 'graphs'), ('seed', 'base_seed'),
                       ('iterations', 'iterations'), ('tie_eps', 'tie_eps'),
                       ('stationary', 'use_stationary'),
                       ('head_k', 'head_k'), ('workers', 'workers')):
        if getattr(args, flag) is not None:
            overrides[name] = getattr(args, flag)
    if args.input:
        overrides['inputs'] = tuple(args.input)
    overrides['generator'] = _generator_config(args, suite.generator)
    return replace(suite, **overrides)


def cmd_run(args: argparse.Namespace) -> int:
    report = run_suite(suite_from_args(args))
    write_report(report, args.out)
    return 0


def cmd_curves(args: argparse.Namespace) -> int:
    graph: HbGraph
    if args.input is not None:
        graph = ingest(args.input)
    else:
        cfg = replace(_generator_config(args), rng_seed=args.seed)
        graph = generate(cfg).graph
    rows = rank_curves(
        graph,
        Experiment(args.ref_bias_v, args.ref_bias_e),
        Experiment(args.bias_v, args.bias_e),
        entity=args.entity,
        iterations=args.iterations,
        tie_eps=args.tie_eps
    )
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_curves_csv(rows, args.out)
    LOG.info('wrote %d rows to %s', len(rows), args.out)
    return 0


def cmd_ingest(args: argparse.Namespace) -> int:
    graph = ingest(args.path, args.format)
    connected = graph.is_connected()
    LOG.info('n=%d p=%d connected=%s', graph.n, graph.p, connected)
    if not connected:
        LOG.warning('%s is not connected; diffusion will refuse it',
                    args.path)
    if args.out is not None:
        write_hbgraph(graph, args.out)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=(logging.WARNING, logging.INFO,
               logging.DEBUG)[min(args.verbose, 2)],
        format='%(asctime)s %(levelname)s %(name)s: %(message)s'
    )
    try:
        return args.handler(args)
    except HbDiffException as e:
        print(f'error[{CATEGORIES.get(e.exit_code, "internal")}]: {e}',
              file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f'error[input]: {e}', file=sys.stderr)
        return 3
