"""Exchange-based diffusion on a biased hb-graph.

Each full step runs two phases. Vertices first hand all of their value to
their hb-edges, following `G_V^-1 B_V`; hb-edges then hand it all back,
following `G_E^-1 B_E`. The total value stays 1 throughout, and the vertex
values converge to the stationary vector `pi_V` of
`T = G_V^-1 B_V G_E^-1 B_E` when the hb-graph is connected.

The hb-edge values observed between the two phases are kept on the state
as the hb-edge record: at integer times hb-edges hold nothing, but the
record tells how the value was spread over them.
"""

from __future__ import annotations

from dataclasses import dataclass
import logging
from typing import Literal, NamedTuple, Optional, Sequence

import numpy as np

from hbdiff.bias import BiasedSystem
from hbdiff.exception import HbDiffException
from hbdiff.hbgraph import HbGraph

LOG = logging.getLogger(__name__)

Phase = Literal['vertices', 'hbedges']
"""Which side of the hb-graph holds the value."""

CONSERVATION_TOLERANCE = 1e-9
ZERO_PHASE_TOLERANCE = 1e-12
DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 10_000
DEFAULT_TIE_EPS = 1e-10


class NumericalError(HbDiffException):
    """Raised when a diffusion produces non-finite or inconsistent values.

    Attributes:
        step: the full step during which the failure was detected, if any.
    """
    exit_code = 5

    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message)
        self.step = step

    def __reduce__(self):
        return type(self), (str(self), self.step)


class ConvergenceError(HbDiffException):
    """Raised when power iteration exhausts its iteration budget.

    Attributes:
        residual: L1 distance between the last two iterates.
    """
    exit_code = 5

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual

    def __reduce__(self):
        return type(self), (str(self), self.residual)


@dataclass(frozen=True)
class DiffusionState:
    """Values held by vertices and hb-edges.

    Attributes:
        t: number of completed full steps.
        alpha: vertex values; all zero between the two phases.
        epsilon: hb-edge values of the last first phase. They are live
            while `phase` is 'hbedges' and a record afterwards.
        phase: which side currently holds the value.
    """
    t: int
    alpha: np.ndarray
    epsilon: np.ndarray
    phase: Phase = 'vertices'

    @property
    def vertex_information(self) -> float:
        return float(self.alpha.sum())

    @property
    def hbedge_information(self) -> float:
        return float(self.epsilon.sum()) if self.phase == 'hbedges' else 0.0

    @property
    def total_information(self) -> float:
        return self.vertex_information + self.hbedge_information


class RunResult(NamedTuple):
    """Outcome of `run`.

    `residuals` holds `|I(H) - 1|` after every half-step.
    """
    state: DiffusionState
    residuals: np.ndarray
    max_residual: float
    steps: int
    converged: bool


class Stationary(NamedTuple):
    pi_v: np.ndarray
    pi_e: np.ndarray
    iterations: int
    residual: float


def init_state(g: HbGraph,
               initial: Optional[Sequence[float]] = None) -> DiffusionState:
    """Start a diffusion with every vertex holding `1 / n`.

    Arguments:
        g: the hb-graph, which must be connected.
        initial (optional): any probability vector over the vertices to
            start from instead of the uniform one.
    """
    g.require_connected()
    if initial is None:
        alpha = np.full(g.n, 1.0 / g.n)
    else:
        alpha = np.array(initial, dtype=np.float64)
        if alpha.shape != (g.n,):
            raise ValueError(
                f'initial values have shape {alpha.shape}, expected ({g.n},)'
            )
        if not np.all(np.isfinite(alpha)) or np.any(alpha < 0) or \
                abs(alpha.sum() - 1.0) > CONSERVATION_TOLERANCE:
            raise ValueError('initial values must be a probability vector')
    return DiffusionState(t=0, alpha=alpha, epsilon=np.zeros(g.p))


def _check_emptied(leftover: np.ndarray, step: int, side: str):
    worst = float(np.abs(leftover).max(initial=0.0))
    if worst > ZERO_PHASE_TOLERANCE:
        raise NumericalError(
            f'{side} keep {worst:.3e} after handing over their value',
            step=step
        )


def half_step_v_to_e(state: DiffusionState, sys: BiasedSystem,
                     debug: bool = False) -> DiffusionState:
    """First phase: vertices share all their value with their hb-edges.

    The vertex values are set to exactly zero. With `debug`, the value
    left on each vertex is also computed by subtraction and checked
    against ZERO_PHASE_TOLERANCE.
    """
    if state.phase != 'vertices':
        raise ValueError('hb-edges hold the value, run half_step_e_to_v')
    epsilon = sys.vertex_to_hbedge.T @ state.alpha
    if debug:
        shares = np.asarray(sys.vertex_to_hbedge.sum(axis=1)).ravel()
        _check_emptied(state.alpha * (1.0 - shares), state.t + 1, 'vertices')
    return DiffusionState(t=state.t, alpha=np.zeros_like(state.alpha),
                          epsilon=epsilon, phase='hbedges')


def half_step_e_to_v(state: DiffusionState, sys: BiasedSystem,
                     debug: bool = False) -> DiffusionState:
    """Second phase: hb-edges give all their value back to their vertices.

    The hb-edge values are kept on the new state as the record of the
    first phase.
    """
    if state.phase != 'hbedges':
        raise ValueError('vertices hold the value, run half_step_v_to_e')
    alpha = sys.hbedge_to_vertex.T @ state.epsilon
    if debug:
        shares = np.asarray(sys.hbedge_to_vertex.sum(axis=1)).ravel()
        _check_emptied(state.epsilon * (1.0 - shares), state.t + 1,
                       'hb-edges')
    return DiffusionState(t=state.t + 1, alpha=alpha, epsilon=state.epsilon,
                          phase='vertices')


def full_step(sys: BiasedSystem,
              alpha: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Apply `T` to vertex values in factored form.

    Returns:
        tuple[np.ndarray, np.ndarray]: the vertex values after the step
            and the hb-edge values between the two phases.
    """
    epsilon = sys.vertex_to_hbedge.T @ alpha
    return sys.hbedge_to_vertex.T @ epsilon, epsilon


def _residual(state: DiffusionState, step: int) -> float:
    values = state.epsilon if state.phase == 'hbedges' else state.alpha
    if not np.all(np.isfinite(values)):
        raise NumericalError(
            f'non-finite {state.phase} values at step {step}', step=step
        )
    return abs(state.total_information - 1.0)


def run(
    g: HbGraph,
    sys: BiasedSystem,
    iterations: int,
    convergence_tol: Optional[float] = None,
    debug: bool = False,
    initial: Optional[Sequence[float]] = None
) -> RunResult:
    """Run the diffusion for a number of full steps.

    Arguments:
        g: the hb-graph `sys` was built for.
        sys: the biased system.
        iterations: maximum number of full steps.
        convergence_tol (optional): stop as soon as a full step changes
            the vertex values by at most this much in L1 distance.
        debug: check the zero phases by explicit subtraction.
        initial (optional): starting vertex values, uniform by default.

    Raises:
        NumericalError: if a non-finite value appears.
    """
    if iterations < 1:
        raise ValueError(f'iterations must be >= 1, got {iterations}')
    if sys.graph is not g and sys.graph != g:
        raise ValueError('the biased system was built for another graph')
    state = init_state(g, initial)
    residuals = []
    converged = False
    for step in range(1, iterations + 1):
        previous = state.alpha
        state = half_step_v_to_e(state, sys, debug)
        residuals.append(_residual(state, step))
        state = half_step_e_to_v(state, sys, debug)
        residuals.append(_residual(state, step))
        if convergence_tol is not None and \
                np.abs(state.alpha - previous).sum() <= convergence_tol:
            converged = True
            break
    history = np.array(residuals)
    max_residual = float(history.max())
    if max_residual > CONSERVATION_TOLERANCE:
        LOG.warning('conservation residual %.3e exceeds %.0e', max_residual,
                    CONSERVATION_TOLERANCE)
    LOG.debug('diffusion g_V=%s g_E=%s ran %d steps, max residual %.3e',
              sys.bias_v, sys.bias_e, state.t, max_residual)
    return RunResult(state=state, residuals=history,
                     max_residual=max_residual, steps=state.t,
                     converged=converged)


def stationary_by_power_iteration(
    sys: BiasedSystem,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    initial: Optional[Sequence[float]] = None
) -> Stationary:
    """Find the stationary vertex and hb-edge values by power iteration.

    Iterates `alpha <- alpha T` until a step moves `alpha` by at most `tol`
    in L1 distance. The hb-edge vector is `pi_E = pi_V G_V^-1 B_V`.

    Raises:
        ConvergenceError: if `max_iter` steps do not reach `tol`.
    """
    pi = init_state(sys.graph, initial).alpha
    residual = float('inf')
    for iteration in range(1, max_iter + 1):
        following, _ = full_step(sys, pi)
        residual = float(np.abs(following - pi).sum())
        pi = following
        if not np.isfinite(residual):
            raise NumericalError(
                f'non-finite values after {iteration} power iterations',
                step=iteration
            )
        if residual <= tol:
            break
    else:
        raise ConvergenceError(
            f'power iteration did not reach {tol:.1e} within {max_iter}'
            f' iterations (last residual {residual:.3e})',
            residual=residual
        )
    pi_v = pi / pi.sum()
    pi_e = sys.vertex_to_hbedge.T @ pi_v
    LOG.debug('power iteration converged after %d steps (residual %.3e)',
              iteration, residual)
    return Stationary(pi_v=pi_v, pi_e=pi_e / pi_e.sum(),
                      iterations=iteration, residual=residual)


@dataclass(frozen=True)
class Ranking:
    """Entities ordered by decreasing score, with explicit ties.

    Attributes:
        order: entity ids, best first. Tied entities appear by id.
        scores: score of each entity, indexed by id.
        groups: tie group of each entity, indexed by id; group 0 holds the
            best entities.
        labels (optional): display names indexed by id.
    """
    order: np.ndarray
    scores: np.ndarray
    groups: np.ndarray
    labels: Optional[tuple[str, ...]] = None

    def __len__(self):
        return len(self.order)

    @property
    def tie_groups(self) -> list[list[int]]:
        bounds = np.flatnonzero(np.diff(self.groups[self.order])) + 1
        return [chunk.tolist() for chunk in np.split(self.order, bounds)]

    def rank_of(self, entity: int) -> int:
        """Zero-based position of an entity in the ranking."""
        return int(np.flatnonzero(self.order == entity)[0])

    def top(self, k: int) -> np.ndarray:
        """The first `k` entities, extended to the end of the tie group
        reaching position `k`."""
        if not 1 <= k <= len(self):
            raise ValueError(f'k must be in [1, {len(self)}], got {k}')
        last_group = self.groups[self.order[k - 1]]
        return self.order[self.groups[self.order] <= last_group]

    def label(self, entity: int) -> str:
        return self.labels[entity] if self.labels is not None \
            else str(entity)


def extract_ranking(
    scores: Sequence[float],
    tie_eps: float = DEFAULT_TIE_EPS,
    labels: Optional[Sequence[str]] = None
) -> Ranking:
    """Rank entities by decreasing score.

    Scores are scanned from the highest down; a score joins the current tie
    group while it is within `tie_eps * max(1, |leader|)` of the group's
    first score, and opens a new group otherwise.

    Raises:
        NumericalError: if a score is NaN or infinite.
    """
    values = np.array(scores, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise NumericalError('cannot rank non-finite scores')
    ids = np.arange(len(values))
    by_score = np.lexsort((ids, -values))
    position_groups = np.zeros(len(values), dtype=np.int64)
    group = 0
    leader = values[by_score[0]] if len(values) else 0.0
    for position, entity in enumerate(by_score):
        score = values[entity]
        if leader - score > tie_eps * max(1.0, abs(leader)):
            group += 1
            leader = score
        position_groups[position] = group
    groups = np.empty_like(position_groups)
    groups[by_score] = position_groups
    order = by_score[np.lexsort((by_score, position_groups))]
    return Ranking(
        order=order,
        scores=values,
        groups=groups,
        labels=tuple(labels) if labels is not None else None
    )
