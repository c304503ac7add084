"""Bias experiments over sets of hb-graphs.

A suite pairs a list of (vertex bias, hb-edge bias) experiments with a set
of hb-graphs, generated from consecutive seeds or read from files. Every
(graph, experiment) cell runs the diffusion and ranks vertices and
hb-edges; rankings of one graph are then compared pairwise and the
resulting matrices are averaged over the graphs.

Suite files are JSON, every key optional:

```json
{"experiments": [{"bias_v": "id", "bias_e": "id"},
                 {"bias_v": "exp:2", "bias_e": "id"}],
 "iterations": 200, "graphs": 20, "base_seed": 0, "tie_eps": 1e-10,
 "use_stationary": false, "head_k": 20, "curves": [[1, 2]],
 "inputs": [], "generator": {"p": 200, "max_mcard": 20}}
```
"""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
import logging
from pathlib import Path
import time
from typing import Any, Literal, NamedTuple, Optional, Sequence

import fastjsonschema
import numpy as np

from hbdiff import codec
from hbdiff.bias import (
    BiasFunction, Exponential, Identity, Power, build_biased_system
)
from hbdiff.diffusion import (
    DEFAULT_TIE_EPS, Ranking, extract_ranking, run,
    stationary_by_power_iteration
)
from hbdiff.exception import HbDiffException
from hbdiff.features import FeatureSpec
from hbdiff.generator import GenerationError, GeneratorConfig, generate
from hbdiff.hbgraph import HbGraph
from hbdiff.metrics import correlation_matrices, jaccard_matrix, mean_matrix
from hbdiff.serde import (
    PathLike, ingest, loads_json, write_csv, write_json,
    write_matrix_csv, write_ranking_csv
)

LOG = logging.getLogger(__name__)

Entity = Literal['vertices', 'hbedges']

ENTITY_SUFFIX = {'vertices': 'v', 'hbedges': 'e'}

CURVE_HEADER = ('position', 'entity_id', 'score_a', 'score_b')


class SuiteError(HbDiffException):
    """Raised when a suite definition is invalid."""
    exit_code = 3


class ExperimentError(HbDiffException):
    """Raised when one (graph, experiment) cell of a suite fails.

    Attributes:
        graph: name of the graph being processed.
        seed: its generator seed, if it was generated.
        experiment: 1-based experiment index, if the failure happened
            while running one.
    """

    def __init__(self, message: str, graph: str,
                 seed: Optional[int] = None,
                 experiment: Optional[int] = None,
                 exit_code: int = 1):
        super().__init__(message)
        self.graph = graph
        self.seed = seed
        self.experiment = experiment
        self.exit_code = exit_code


@dataclass(frozen=True)
class Experiment:
    bias_v: BiasFunction
    bias_e: BiasFunction

    def __str__(self):
        return f'g_V={self.bias_v} g_E={self.bias_e}'

    def to_dict(self) -> dict:
        return {'bias_v': codec.encode(self.bias_v),
                'bias_e': codec.encode(self.bias_e)}


REFERENCE = Experiment(Identity(), Identity())
"""Experiment 1, the unbiased reference ranking."""

PAPER15 = (
    REFERENCE,
    Experiment(Power(2), Power(2)),
    Experiment(Power(0.2), Power(0.2)),
    Experiment(Exponential(2), Exponential(2)),
    Experiment(Exponential(-2), Exponential(-2)),
    Experiment(Power(2), Identity()),
    Experiment(Exponential(2), Identity()),
    Experiment(Power(0.2), Identity()),
    Experiment(Exponential(-2), Identity()),
    Experiment(Identity(), Power(2)),
    Experiment(Identity(), Exponential(2)),
    Experiment(Identity(), Power(0.2)),
    Experiment(Identity(), Exponential(-2)),
    Experiment(Exponential(2), Exponential(-2)),
    Experiment(Exponential(-2), Exponential(2)),
)
"""The fifteen bias experiments: same bias on both sides (1-5), vertex
side only (6-9), hb-edge side only (10-13) and opposite exponentials
(14-15)."""

PAPER15_CURVES = ((1, 4), (1, 2), (1, 5), (1, 3))
"""Reference ranking against exp:2, pow:2, exp:-2 and pow:0.2 on both
sides."""


@dataclass(frozen=True)
class ExperimentSuite:
    """What to run.

    Arguments:
        experiments: the bias pairs, indexed from 1 in reports.
        iterations: full diffusion steps per cell.
        graphs: number of generated graphs; ignored when `inputs` is set.
        base_seed: seed of the first generated graph.
        generator: generator parameters; `rng_seed` is overridden per
            graph.
        inputs: hb-graph JSON files to use instead of generated graphs.
        tie_eps: relative tolerance of ranking ties.
        use_stationary: rank from the stationary vectors instead of the
            values after `iterations` steps.
        head_k: head size of the Jaccard comparison.
        curves: 1-based experiment pairs whose rankings of the first graph
            are exported side by side.
        workers: worker processes; 1 runs everything in-process.
    """
    experiments: tuple[Experiment, ...] = PAPER15
    iterations: int = 200
    graphs: int = 20
    base_seed: int = 0
    generator: GeneratorConfig = GeneratorConfig()
    inputs: tuple[str, ...] = ()
    tie_eps: float = DEFAULT_TIE_EPS
    use_stationary: bool = False
    head_k: int = 20
    curves: tuple[tuple[int, int], ...] = ()
    workers: int = 1

    def __post_init__(self):
        if not self.experiments:
            raise SuiteError('a suite needs at least one experiment')
        if self.iterations < 1:
            raise SuiteError('iterations must be >= 1')
        if self.graphs < 1 and not self.inputs:
            raise SuiteError('graphs must be >= 1')
        if self.head_k < 1:
            raise SuiteError('head_k must be >= 1')
        if self.tie_eps < 0:
            raise SuiteError('tie_eps must be >= 0')
        if self.workers < 1:
            raise SuiteError('workers must be >= 1')
        for pair in self.curves:
            if not all(1 <= k <= len(self.experiments) for k in pair):
                raise SuiteError(
                    f'curve {pair} refers to a missing experiment'
                )

    def to_dict(self) -> dict:
        return {
            'experiments': [e.to_dict() for e in self.experiments],
            'iterations': self.iterations,
            'graphs': self.graphs,
            'base_seed': self.base_seed,
            'generator': self.generator.to_dict(),
            'inputs': list(self.inputs),
            'tie_eps': self.tie_eps,
            'use_stationary': self.use_stationary,
            'head_k': self.head_k,
            'curves': [list(pair) for pair in self.curves],
            'workers': self.workers,
        }


def paper15(**overrides) -> ExperimentSuite:
    """The fifteen-experiment preset with its four rank-curve pairs."""
    overrides.setdefault('curves', PAPER15_CURVES)
    return ExperimentSuite(experiments=PAPER15, **overrides)


_BIAS = {'type': 'string', 'pattern': r'^\s*(id|pow:.+|exp:.+)\s*$'}

SUITE_SCHEMA = {
    '$schema': 'http://json-schema.org/draft-07/schema#',
    'type': 'object',
    'properties': {
        'experiments': {
            'type': 'array',
            'minItems': 1,
            'items': {
                'type': 'object',
                'properties': {'bias_v': _BIAS, 'bias_e': _BIAS},
                'required': ['bias_v', 'bias_e'],
                'additionalProperties': False
            }
        },
        'iterations': {'type': 'integer', 'minimum': 1},
        'graphs': {'type': 'integer', 'minimum': 1},
        'base_seed': {'type': 'integer'},
        'tie_eps': {'type': 'number', 'minimum': 0},
        'use_stationary': {'type': 'boolean'},
        'head_k': {'type': 'integer', 'minimum': 1},
        'workers': {'type': 'integer', 'minimum': 1},
        'inputs': {'type': 'array', 'items': {'type': 'string'}},
        'curves': {
            'type': 'array',
            'items': {
                'type': 'array',
                'items': {'type': 'integer', 'minimum': 1},
                'minItems': 2,
                'maxItems': 2
            }
        },
        'generator': {'type': 'object'}
    },
    'additionalProperties': False
}

_validate_suite = fastjsonschema.compile(SUITE_SCHEMA)


def suite_from_dict(data: Any, source: str = '<dict>') -> ExperimentSuite:
    """Build a suite from its JSON form; missing keys take defaults."""
    try:
        _validate_suite(data)
    except fastjsonschema.JsonSchemaValueException as e:
        raise SuiteError(f'{source}: {e.message}') from e
    values = dict(data)
    if 'experiments' in values:
        values['experiments'] = tuple(
            Experiment(codec.decode(e['bias_v']), codec.decode(e['bias_e']))
            for e in values['experiments']
        )
    if 'generator' in values:
        try:
            values['generator'] = GeneratorConfig(**values['generator'])
        except (TypeError, GenerationError) as e:
            raise SuiteError(f'{source}: bad generator settings: {e}') from e
    if 'inputs' in values:
        values['inputs'] = tuple(values['inputs'])
    if 'curves' in values:
        values['curves'] = tuple(tuple(pair) for pair in values['curves'])
    return ExperimentSuite(**values)


def load_suite(name: str) -> ExperimentSuite:
    """`paper15` or the path of a suite JSON file."""
    if name == 'paper15':
        return paper15()
    path = Path(name)
    return suite_from_dict(loads_json(path.read_bytes(), str(path)),
                           str(path))


class CellResult(NamedTuple):
    vertex_ranking: Ranking
    hbedge_ranking: Ranking
    max_residual: float


def run_cell(graph: HbGraph, experiment: Experiment, iterations: int,
             tie_eps: float = DEFAULT_TIE_EPS,
             use_stationary: bool = False) -> CellResult:
    """Diffuse with one bias pair and rank vertices and hb-edges.

    The hb-edge scores are the record of the last first phase, or the
    stationary `pi_E` with `use_stationary`.
    """
    system = build_biased_system(graph, FeatureSpec(), experiment.bias_v,
                                 experiment.bias_e)
    result = run(graph, system, iterations)
    if use_stationary:
        stationary = stationary_by_power_iteration(system)
        vertex_scores, hbedge_scores = stationary.pi_v, stationary.pi_e
    else:
        vertex_scores = result.state.alpha
        hbedge_scores = result.state.epsilon
    return CellResult(
        vertex_ranking=extract_ranking(vertex_scores, tie_eps, graph.labels),
        hbedge_ranking=extract_ranking(hbedge_scores, tie_eps),
        max_residual=result.max_residual
    )


class CurveRow(NamedTuple):
    position: int
    entity_id: str
    score_a: float
    score_b: float


def curve_rows(a: Ranking, b: Ranking) -> list[CurveRow]:
    """Scores under `a` and `b`, listed in the order of ranking `a`."""
    return [
        CurveRow(position, a.label(int(entity)), float(a.scores[entity]),
                 float(b.scores[entity]))
        for position, entity in enumerate(a.order, start=1)
    ]


def rank_curves(
    g: HbGraph,
    exp_a: Experiment,
    exp_b: Experiment,
    entity: Entity = 'vertices',
    iterations: int = 200,
    tie_eps: float = DEFAULT_TIE_EPS,
    use_stationary: bool = False
) -> list[CurveRow]:
    """Compare the ranking of one experiment against another on a graph.

    Returns one row per vertex (or hb-edge) following the ranking of
    `exp_a`, with the scores both experiments give it.
    """
    cells = [run_cell(g, e, iterations, tie_eps, use_stationary)
             for e in (exp_a, exp_b)]
    if entity == 'vertices':
        return curve_rows(cells[0].vertex_ranking, cells[1].vertex_ranking)
    return curve_rows(cells[0].hbedge_ranking, cells[1].hbedge_ranking)


@dataclass
class GraphResult:
    name: str
    seed: Optional[int]
    n: int
    p: int
    nnz: int
    vertex_rankings: list[Ranking] = field(default_factory=list, repr=False)
    hbedge_rankings: list[Ranking] = field(default_factory=list, repr=False)
    max_residual: float = 0.0


@dataclass
class ExperimentReport:
    """Rankings and aggregated comparison matrices of a suite run.

    `matrices` is keyed `<strict|large>_<vertices|hbedges>` and
    `jaccard` by entity; rows and columns follow experiment order.
    """
    suite: ExperimentSuite
    graphs: list[GraphResult]
    matrices: dict[str, np.ndarray]
    jaccard: dict[str, np.ndarray]
    curves: dict[tuple[int, int, str], list[CurveRow]]
    diagnostics: dict[str, Any]


def _input_names(paths: Sequence[str]) -> list[str]:
    """File stems, suffixed with the input position where they collide."""
    stems = [Path(path).stem for path in paths]
    counts = Counter(stems)
    names = [stem if counts[stem] == 1 else f'{stem}-{i}'
             for i, stem in enumerate(stems)]
    if len(set(names)) != len(names):
        names = [f'input{i}' for i in range(len(paths))]
    return names


def _graph_sources(suite: ExperimentSuite
                   ) -> list[tuple[str, Optional[int], HbGraph]]:
    if suite.inputs:
        return [(name, None, ingest(path)) for name, path
                in zip(_input_names(suite.inputs), suite.inputs)]
    sources: list[tuple[str, Optional[int], HbGraph]] = []
    for seed in range(suite.base_seed, suite.base_seed + suite.graphs):
        try:
            generated = generate(replace(suite.generator, rng_seed=seed))
        except HbDiffException as e:
            raise ExperimentError(
                f'graph{seed}: generation failed: {e}', f'graph{seed}',
                seed=seed, exit_code=e.exit_code
            ) from e
        sources.append((f'graph{seed}', seed, generated.graph))
    return sources


def _cell_failure(e: HbDiffException, name: str, seed: Optional[int],
                  index: int) -> ExperimentError:
    return ExperimentError(
        f'{name}, experiment {index}: {e}', name, seed=seed,
        experiment=index, exit_code=e.exit_code
    )


def _run_cells(suite: ExperimentSuite,
               sources: Sequence[tuple[str, Optional[int], HbGraph]]
               ) -> list[list[CellResult]]:
    cells = [(gi, ei) for gi in range(len(sources))
             for ei in range(len(suite.experiments))]
    results: list[list[CellResult]] = [[] for _ in sources]

    def collect(gi, ei, outcome):
        name, seed, _ = sources[gi]
        try:
            results[gi].append(outcome())
        except HbDiffException as e:
            raise _cell_failure(e, name, seed, ei + 1) from e

    def task(gi, ei):
        return partial(run_cell, sources[gi][2], suite.experiments[ei],
                       suite.iterations, suite.tie_eps,
                       suite.use_stationary)

    if suite.workers == 1:
        for gi, ei in cells:
            collect(gi, ei, task(gi, ei))
        return results
    with ProcessPoolExecutor(max_workers=suite.workers) as executor:
        futures = [executor.submit(task(gi, ei)) for gi, ei in cells]
        # submission order keeps the reduction order fixed
        for (gi, ei), future in zip(cells, futures):
            collect(gi, ei, future.result)
    return results


def run_suite(suite: ExperimentSuite) -> ExperimentReport:
    """Run every experiment of a suite on every graph and aggregate.

    Raises:
        ExperimentError: naming the graph (and seed) and experiment of the
            first failing cell.
    """
    started = time.perf_counter()
    LOG.info('running %d experiments on %s', len(suite.experiments),
             f'{len(suite.inputs)} input graphs' if suite.inputs
             else f'{suite.graphs} generated graphs')
    sources = _graph_sources(suite)
    cells = _run_cells(suite, sources)

    graphs = []
    for (name, seed, graph), row in zip(sources, cells):
        graphs.append(GraphResult(
            name=name, seed=seed, n=graph.n, p=graph.p, nnz=graph.nnz,
            vertex_rankings=[c.vertex_ranking for c in row],
            hbedge_rankings=[c.hbedge_ranking for c in row],
            max_residual=max(c.max_residual for c in row)
        ))

    matrices: dict[str, np.ndarray] = {}
    jaccard: dict[str, np.ndarray] = {}
    for entity in ('vertices', 'hbedges'):
        per_graph = [g.vertex_rankings if entity == 'vertices'
                     else g.hbedge_rankings for g in graphs]
        computed = [correlation_matrices(rankings) for rankings in per_graph]
        for variant in ('strict', 'large'):
            matrices[f'{variant}_{entity}'] = mean_matrix(
                [m[variant] for m in computed]
            )
        jaccard[entity] = mean_matrix([
            jaccard_matrix(rankings, min(suite.head_k, len(rankings[0])))
            for rankings in per_graph
        ])

    curves: dict[tuple[int, int, str], list[CurveRow]] = {}
    first = graphs[0]
    for a, b in suite.curves:
        curves[(a, b, 'vertices')] = curve_rows(
            first.vertex_rankings[a - 1], first.vertex_rankings[b - 1])
        curves[(a, b, 'hbedges')] = curve_rows(
            first.hbedge_rankings[a - 1], first.hbedge_rankings[b - 1])

    elapsed = time.perf_counter() - started
    diagnostics = {
        'runtime_seconds': elapsed,
        'max_conservation_residual': max(g.max_residual for g in graphs),
        'graphs': [
            {'name': g.name, 'seed': g.seed, 'n': g.n, 'p': g.p,
             'nnz': g.nnz, 'max_conservation_residual': g.max_residual}
            for g in graphs
        ],
    }
    LOG.info('suite finished in %.1fs, max conservation residual %.2e',
             elapsed, diagnostics['max_conservation_residual'])
    return ExperimentReport(suite=suite, graphs=graphs, matrices=matrices,
                            jaccard=jaccard, curves=curves,
                            diagnostics=diagnostics)


def write_report(report: ExperimentReport, out_dir: PathLike) -> Path:
    """Write a report in its run directory layout.

    Everything but the runtime in `diagnostics.json` is a deterministic
    function of the suite.
    """
    out = Path(out_dir)
    (out / 'rankings').mkdir(parents=True, exist_ok=True)
    (out / 'curves').mkdir(exist_ok=True)
    write_json(report.suite.to_dict(), out / 'config.json')
    for key, matrix in report.matrices.items():
        write_matrix_csv(matrix, out / f'matrix_{key}.csv')
    for entity, matrix in report.jaccard.items():
        write_matrix_csv(matrix, out / f'matrix_jaccard_{entity}.csv')
    write_json({
        **{key: m.tolist() for key, m in report.matrices.items()},
        **{f'jaccard_{key}': m.tolist()
           for key, m in report.jaccard.items()},
    }, out / 'matrices.json')
    for graph in report.graphs:
        for k, (vertex, hbedge) in enumerate(
                zip(graph.vertex_rankings, graph.hbedge_rankings), start=1):
            write_ranking_csv(
                vertex, out / 'rankings' / f'{graph.name}_exp{k}_v.csv')
            write_ranking_csv(
                hbedge, out / 'rankings' / f'{graph.name}_exp{k}_e.csv')
    first = report.graphs[0].name
    for (a, b, entity), rows in report.curves.items():
        write_curves_csv(
            rows, out / 'curves' /
            f'{first}_exp{a}_vs_exp{b}_{ENTITY_SUFFIX[entity]}.csv')
    write_json(report.diagnostics, out / 'diagnostics.json')
    LOG.info('report written to %s', out)
    return out


def write_curves_csv(rows: Sequence[CurveRow], path: PathLike):
    write_csv(path, CURVE_HEADER,
              ((r.position, r.entity_id, repr(r.score_a), repr(r.score_b))
               for r in rows))
