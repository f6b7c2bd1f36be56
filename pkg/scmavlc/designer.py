"""Codebook optimization by beta-continuation of the log-sum-exp objective.

Each start draws a random feasible stacked vector, then walks the beta
schedule. At every beta the projected-gradient inner solver is repeated in
rounds until the objective moves by less than ``inner_tol``; the result warm
starts the next beta. The best start by final objective wins.
"""
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .exceptions import ConfigError, ConvergenceError, DomainError
from .metrics import (
    StackedVector,
    logsumexp_objective,
    objective_and_gradient,
    pairwise_report,
)
from .model import (
    EPSILON_FLOOR,
    MAX_POINTS,
    CodebookSet,
    SystemParams,
    build_factor_graph,
    enumerate_superimposed,
)
from .util import immutable, init_slots

logger = logging.getLogger(__name__)

#: Slack allowed on the per-user power budget.
POWER_TOLERANCE = 1e-6

#: Objectives closer than this are ties, resolved by lowest start index.
TIE_TOLERANCE = 1e-9

LOOP_NESTING = (
    "per beta: inner solver rounds until |delta f| < inner_tol, then advance beta"
)

#: Largest move of one gradient step, as a fraction of sqrt(Pe).
MAX_MOVE_FRACTION = 0.25

#: Codewords of one user closer than this fraction of sqrt(Pe) have collapsed.
COLLAPSE_TOLERANCE = 1e-6

_ARMIJO = 1e-4
_MAX_BACKTRACKS = 40
_BISECTION_STEPS = 200


@immutable
class DesignConfig:
    """Knobs of the design loop.

    :param beta_schedule: Strictly increasing positive sharpness values.
    :param inner_tol: Round-to-round objective change that ends a beta stage.
    :param starts: Number of random starts.
    :param seed: Base seed; start ``s`` uses the stream ``(seed, s)``.
    :param epsilon_floor: Lower bound for every designed entry.
    :param max_inner_iters: Iteration cap of one inner solve.
    :param max_rounds: Cap on inner-solve rounds per beta.
    :param step_tol: Relative step/decrease below which an inner solve stops.
    :raises ConfigError: On an invalid combination.
    """

    __slots__ = (
        "beta_schedule",
        "inner_tol",
        "starts",
        "seed",
        "epsilon_floor",
        "max_inner_iters",
        "max_rounds",
        "step_tol",
    )

    def __init__(
        self,
        beta_schedule=range(1, 31),
        inner_tol=1e-3,
        starts=8,
        seed=0,
        epsilon_floor=EPSILON_FLOOR,
        max_inner_iters=500,
        max_rounds=20,
        step_tol=1e-10,
    ):
        schedule = tuple(float(beta) for beta in beta_schedule)
        if not schedule:
            raise ConfigError("beta_schedule is empty")
        if schedule[0] <= 0 or any(b >= a for a, b in zip(schedule[1:], schedule)):
            raise ConfigError(
                "beta_schedule must be positive and strictly increasing", schedule
            )
        if not inner_tol > 0:
            raise ConfigError("inner_tol must be positive", inner_tol)
        if int(starts) < 1:
            raise ConfigError("starts must be >= 1", starts)
        if not epsilon_floor >= 0:
            raise ConfigError("epsilon_floor must be >= 0", epsilon_floor)
        if int(max_inner_iters) < 1 or int(max_rounds) < 1:
            raise ConfigError(
                "iteration caps must be >= 1", max_inner_iters, max_rounds
            )
        init_slots(
            self,
            beta_schedule=schedule,
            inner_tol=float(inner_tol),
            starts=int(starts),
            seed=int(seed),
            epsilon_floor=float(epsilon_floor),
            max_inner_iters=int(max_inner_iters),
            max_rounds=int(max_rounds),
            step_tol=float(step_tol),
        )

    def replace(self, **changes):
        values = {name: getattr(self, name) for name in self.__slots__}
        values.update(changes)
        return DesignConfig(**values)

    def as_dict(self):
        values = {name: getattr(self, name) for name in self.__slots__}
        values["beta_schedule"] = list(self.beta_schedule)
        return values

    def __eq__(self, other):
        if isinstance(other, DesignConfig):
            return self.as_dict() == other.as_dict()
        return NotImplemented

    __hash__ = None

    def __repr__(self):
        return "DesignConfig(%s)" % ", ".join(
            "%s=%r" % item for item in self.as_dict().items()
        )


@immutable
class DesignResult:
    """Outcome of :func:`design`.

    :ivar set: The designed :class:`~scmavlc.model.CodebookSet`.
    :ivar objective_trace: ``(start, beta, round, iteration, f)`` tuples.
    :ivar final_d_min: Minimum RED of the designed constellation.
    :ivar active_constraints: Tight power budgets and floor entries.
    :ivar wall_time: Seconds spent in :func:`design`.
    """

    __slots__ = (
        "set",
        "objective_trace",
        "final_d_min",
        "active_constraints",
        "wall_time",
        "best_start",
        "start_objectives",
        "config",
    )

    def __init__(
        self,
        set,
        objective_trace,
        final_d_min,
        active_constraints,
        wall_time,
        best_start=0,
        start_objectives=(),
        config=None,
    ):
        init_slots(
            self,
            set=set,
            objective_trace=tuple(objective_trace),
            final_d_min=float(final_d_min),
            active_constraints=active_constraints,
            wall_time=float(wall_time),
            best_start=int(best_start),
            start_objectives=tuple(start_objectives),
            config=config,
        )

    def stage_summary(self, start=None):
        """Rounds, iterations and last objective per beta of one start."""
        start = self.best_start if start is None else start
        stages = {}
        for s, beta, round_no, iteration, f in self.objective_trace:
            if s != start:
                continue
            stage = stages.setdefault(
                beta, {"beta": beta, "rounds": 0, "iterations": 0}
            )
            stage["rounds"] = max(stage["rounds"], round_no + 1)
            stage["iterations"] += 1 if iteration > 0 else 0
            stage["objective"] = f
        return list(stages.values())

    def report(self):
        """JSON-ready summary of the run."""
        return {
            "final_d_min": self.final_d_min,
            "best_start": self.best_start,
            "start_objectives": list(self.start_objectives),
            "beta_stages": self.stage_summary(),
            "loop_nesting": LOOP_NESTING,
            "active_constraints": self.active_constraints,
            "wall_time": self.wall_time,
            "params": self.set.params.as_dict(),
            "config": None if self.config is None else self.config.as_dict(),
        }


def _user_powers(stacked):
    M = stacked.shape[1]
    return np.sum(stacked.user_blocks() ** 2, axis=1) / M


def _project_block(block, Pe, M, floor):
    clamped = np.maximum(block, floor)
    p = float(np.sum(clamped ** 2) / M)
    if p <= Pe:
        return clamped
    t = math.sqrt(Pe / p)
    if (t * clamped >= floor).all():
        return t * clamped
    # Entries re-hit the floor; find the largest shrink that meets the budget.
    lo, hi = 0.0, t
    for _ in range(_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if np.sum(np.maximum(floor, mid * block) ** 2) / M <= Pe:
            lo = mid
        else:
            hi = mid
    return np.maximum(floor, lo * block)


def project_feasible(stacked, params, epsilon_floor=EPSILON_FLOOR):
    """Euclidean projection onto entries >= floor and per-user power <= Pe.

    Each user's block becomes ``max(floor, t * block)`` for the largest
    ``t <= 1`` meeting the budget. Without re-clamping this is the plain
    rescale by ``sqrt(Pe / p_j)``.

    :type stacked: :class:`~scmavlc.metrics.StackedVector`
    :raises DomainError: If even the all-floor block exceeds ``Pe``.
    :rtype: :class:`~scmavlc.metrics.StackedVector`
    """
    J, M, N = stacked.shape
    if N * epsilon_floor ** 2 > params.Pe:
        raise DomainError(
            "Pe", params.Pe, ">= N * epsilon_floor^2 = %r" % (N * epsilon_floor ** 2)
        )
    blocks = [
        _project_block(block, params.Pe, M, epsilon_floor)
        for block in stacked.user_blocks()
    ]
    return stacked.replace(np.concatenate(blocks))


def is_feasible(stacked, params, epsilon_floor=EPSILON_FLOOR):
    if (stacked.L < epsilon_floor - 1e-12).any():
        return False
    return bool((_user_powers(stacked) <= params.Pe + POWER_TOLERANCE).all())


def _template(params):
    graph = build_factor_graph(params.K, params.J, params.N)
    books = [np.zeros((params.N, params.M)) for _ in range(params.J)]
    return CodebookSet(params, graph, books)


def random_init(
    params, seed, epsilon_floor=EPSILON_FLOOR, template=None, max_points=MAX_POINTS
):
    """Uniform draw on [floor, sqrt(Pe)] per entry, projected feasible.

    :param seed: Anything :func:`numpy.random.default_rng` accepts.
    """
    template = _template(params) if template is None else template
    stacked = StackedVector.from_codebook_set(template, max_points)
    rng = np.random.default_rng(seed)
    high = max(math.sqrt(params.Pe), epsilon_floor)
    L = rng.uniform(epsilon_floor, high, size=stacked.L.size)
    return project_feasible(stacked.replace(L), params, epsilon_floor)


def separate_collapsed(stacked, params, rng, epsilon_floor=EPSILON_FLOOR):
    """Re-draw codewords that coincide with an earlier codeword of their user.

    Coincident codewords give zero-distance pairs whose gradient vanishes,
    so descent alone never pulls them apart. Each repeat is replaced by a
    uniform draw on [floor, sqrt(Pe)] and the result projected feasible.

    :param rng: A :class:`numpy.random.Generator`.
    :returns: ``(stacked, redrawn)`` with the number of codewords replaced.
    """
    J, M, N = stacked.shape
    tolerance = COLLAPSE_TOLERANCE * math.sqrt(params.Pe)
    high = max(math.sqrt(params.Pe), epsilon_floor)
    words = stacked.L.reshape(J, M, N).copy()
    redrawn = 0
    for block in words:
        for m in range(1, M):
            if (np.abs(block[:m] - block[m]).max(axis=1) <= tolerance).any():
                block[m] = rng.uniform(epsilon_floor, high, size=N)
                redrawn += 1
    if not redrawn:
        return stacked, 0
    separated = project_feasible(stacked.replace(words.ravel()), params, epsilon_floor)
    return separated, redrawn


def inner_solve(L0, beta, params, config, trace=None):
    """Projected gradient descent at fixed ``beta`` with Armijo backtracking.

    The step length doubles after every accepted step and halves during
    backtracking, but never moves the point by more than
    ``MAX_MOVE_FRACTION * sqrt(Pe)``. Only non-increasing iterates are
    accepted.

    :param trace: Optional list receiving ``(iteration, f)`` per accepted step.
    :returns: ``(f_v, L)``, the objective at the returned point and the point.
    :raises ConvergenceError: If no feasible finite iterate is produced.
    """
    varsigma2 = params.varsigma2
    L = project_feasible(L0, params, config.epsilon_floor)
    f, grad = objective_and_gradient(L, beta, varsigma2)
    if not math.isfinite(f) or not is_feasible(L, params, config.epsilon_floor):
        raise ConvergenceError(
            "inner solve at beta=%r found no feasible iterate" % beta, 1
        )

    max_move = MAX_MOVE_FRACTION * math.sqrt(params.Pe)
    step = 1.0
    for iteration in range(1, config.max_inner_iters + 1):
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm == 0.0:
            break
        step = min(step, max_move / grad_norm)
        accepted = False
        for _ in range(_MAX_BACKTRACKS):
            candidate = project_feasible(
                L.replace(L.L - step * grad), params, config.epsilon_floor
            )
            move = candidate.L - L.L
            f_new = logsumexp_objective(candidate, beta, varsigma2)
            if f_new <= f + _ARMIJO * float(grad @ move) and f_new <= f:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break

        decrease = f - f_new
        moved = float(np.linalg.norm(move))
        L = candidate
        f, grad = objective_and_gradient(L, beta, varsigma2)
        if trace is not None:
            trace.append((iteration, f))
        step *= 2.0
        if moved <= config.step_tol * (1.0 + float(np.linalg.norm(L.L))):
            break
        if decrease <= config.step_tol * (1.0 + abs(f)):
            break
    return f, L


def _run_start(start, params, config, template, max_points):
    trace = []
    L = random_init(
        params, [config.seed, start], config.epsilon_floor, template, max_points
    )
    rng = np.random.default_rng([config.seed, start, 1])
    f = None
    for beta in config.beta_schedule:
        f_prev = logsumexp_objective(L, beta, params.varsigma2)
        trace.append((start, beta, 0, 0, f_prev))
        for round_no in range(config.max_rounds):
            steps = []
            f, L = inner_solve(L, beta, params, config, steps)
            trace.extend((start, beta, round_no, i, value) for i, value in steps)
            L, redrawn = separate_collapsed(L, params, rng, config.epsilon_floor)
            if redrawn:
                logger.debug(
                    "start %d beta %g: re-drew %d collapsed codeword(s)",
                    start,
                    beta,
                    redrawn,
                )
                f = f_prev = logsumexp_objective(L, beta, params.varsigma2)
                continue
            if abs(f - f_prev) < config.inner_tol:
                break
            f_prev = f
        logger.debug(
            "start %d beta %g: %d round(s), objective %.6g",
            start,
            beta,
            round_no + 1,
            f,
        )
    return f, L, trace


def _active_constraints(stacked, params, epsilon_floor):
    powers = _user_powers(stacked)
    at_floor = np.isclose(stacked.user_blocks(), epsilon_floor, rtol=0, atol=1e-9)
    tight = np.flatnonzero(powers >= params.Pe - POWER_TOLERANCE)
    return {
        "power": [int(j) + 1 for j in tight],
        "floor_entries": [int(n) for n in at_floor.sum(axis=1)],
    }


def design(params, config=None, workers=1, max_points=MAX_POINTS):
    """Design a codebook set for ``params``.

    :type params: :class:`~scmavlc.model.SystemParams`
    :type config: :class:`DesignConfig`
    :param workers: Threads running independent starts.
    :raises CapacityError: If M^J exceeds ``max_points``.
    :raises ConvergenceError: If no start yields a feasible point.
    :rtype: :class:`DesignResult`
    """
    config = DesignConfig() if config is None else config
    if not isinstance(params, SystemParams):
        raise ConfigError("params must be SystemParams", params)
    started = time.perf_counter()
    template = _template(params)
    StackedVector.from_codebook_set(template, max_points)

    def run(start):
        try:
            return _run_start(start, params, config, template, max_points)
        except (ConvergenceError, FloatingPointError) as exc:
            logger.warning("start %d failed: %s", start, exc)
            return None

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, range(config.starts)))
    else:
        outcomes = [run(start) for start in range(config.starts)]

    best, trace, start_objectives = None, [], []
    for start, outcome in enumerate(outcomes):
        if outcome is None:
            start_objectives.append(None)
            continue
        f, L, start_trace = outcome
        trace.extend(start_trace)
        start_objectives.append(f)
        feasible = is_feasible(L, params, config.epsilon_floor)
        if feasible and (best is None or f < best[0] - TIE_TOLERANCE):
            best = (f, L, start)
    if best is None:
        raise ConvergenceError("design produced no feasible codebook", config.starts)

    f, L, best_start = best
    codebook_set = L.to_codebook_set(template)
    d_min = pairwise_report(
        enumerate_superimposed(codebook_set, max_points), params.varsigma2
    ).d_min
    logger.info(
        "best start %d: objective %.6g, d_min %.6g", best_start, f, d_min
    )
    for start, value in enumerate(start_objectives):
        logger.info("start %d final objective %s", start, value)
    return DesignResult(
        codebook_set,
        trace,
        d_min,
        _active_constraints(L, params, config.epsilon_floor),
        time.perf_counter() - started,
        best_start,
        start_objectives,
        config,
    )


def scaling_sanity(params, config=None, seeds=range(5), workers=1):
    """Compare designs at ``Pe`` and ``2 * Pe`` over matched seeds.

    Local optimization is not globally monotone, so a drop in ``d_min`` after
    doubling the power is reported and logged, never raised.

    :returns: A dict with one ``{"seed", "d_min", "d_min_doubled"}`` row per
        seed and the list of seeds whose ``d_min`` decreased.
    """
    config = DesignConfig() if config is None else config
    doubled = params.replace(Pe=2.0 * params.Pe)
    rows, violations = [], []
    for seed in seeds:
        seeded = config.replace(seed=seed)
        base = design(params, seeded, workers).final_d_min
        scaled = design(doubled, seeded, workers).final_d_min
        rows.append({"seed": seed, "d_min": base, "d_min_doubled": scaled})
        if scaled < base:
            violations.append(seed)
            logger.warning(
                "seed %d: d_min fell from %.6g to %.6g when Pe doubled to %g",
                seed,
                base,
                scaled,
                doubled.Pe,
            )
    return {"Pe": params.Pe, "rows": rows, "violations": violations}
