from .bias import (
    BiasedSystem, BiasFunction, Exponential, Identity, Power,
    build_biased_system, transition_matrix
)
from .diffusion import (
    DiffusionState, Ranking, extract_ranking, run,
    stationary_by_power_iteration
)
from .exception import HbDiffException
from .experiment import (
    Experiment, ExperimentReport, ExperimentSuite, paper15, rank_curves,
    run_suite
)
from .features import FeatureSpec
from .generator import GeneratorConfig, generate
from .hbgraph import HbEdge, HbGraph
from .metrics import pair_counts, tau_large, tau_strict
from .serde import ingest

__version__ = '0.1.0'

__all__ = [
    'BiasedSystem',
    'BiasFunction',
    'DiffusionState',
    'Experiment',
    'ExperimentReport',
    'ExperimentSuite',
    'Exponential',
    'FeatureSpec',
    'GeneratorConfig',
    'HbDiffException',
    'HbEdge',
    'HbGraph',
    'Identity',
    'Power',
    'Ranking',
    'build_biased_system',
    'extract_ranking',
    'generate',
    'ingest',
    'pair_counts',
    'paper15',
    'rank_curves',
    'run',
    'run_suite',
    'stationary_by_power_iteration',
    'tau_large',
    'tau_strict',
    'transition_matrix'
]
