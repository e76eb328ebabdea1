# This is free software, licensed under the LGPL v3. See the file "COPYING" for
# details.
"""Pseudo-transient baseline: integrate the transient equation with implicit
Euler steps until the steady residual passes the steady convergence test.

The time step grows by 1.5 after a step that needed at most `numit_inc`
Newton iterations and is halved when Newton fails; a failed step is repeated
from the same old state. Once the steady test holds, one full Newton step on the
steady problem removes the remaining time stepping error; it is kept only if
it lowers the steady residual."""

import dataclasses
import enum
import logging
import typing

import numpy as np

from . import linsolve, newton as newton_module
from .errors import ConfigurationError, LinearSolverError

log = logging.getLogger(__name__)


class InitialState(enum.Enum):
    Linear = "linear"
    Constant = "constant"

    @classmethod
    def from_string(cls, name):
        for state in cls:
            if state.value == str(name).strip().lower():
                return state
        raise ValueError(
            "unknown initial state %s, expected one of %s"
            % (name, ", ".join(s.value for s in cls))
        )


def _default_newton():
    return newton_module.NewtonConfig(line_search=False)


# pylint: disable=too-many-instance-attributes
@dataclasses.dataclass(frozen=True)
class PseudoTransientConfig:
    """Time steps in days. The steady tolerances are those of `newton`.
    `final_newton_step` switches the closing steady Newton step on or off."""

    dt_init: float = 1e-2
    dt_min: float = 1e-8
    dt_max: float = 1e6
    growth: float = 1.5
    shrink: float = 0.5
    numit_inc: int = 15
    max_steps: int = 10000
    initial_state: InitialState = InitialState.Linear
    initial_head: typing.Optional[float] = None
    final_newton_step: bool = True
    newton: newton_module.NewtonConfig = dataclasses.field(
        default_factory=_default_newton
    )

    def __post_init__(self):
        if not 0 < self.dt_min <= self.dt_init <= self.dt_max:
            raise ConfigurationError(
                _("time steps must satisfy 0 < dt_min <= dt_init <= dt_max")
            )
        if not self.growth >= 1:
            raise ConfigurationError(
                _("the time step growth factor must be at least 1")
            )
        if not 0 < self.shrink < 1:
            raise ConfigurationError(
                _("the time step shrink factor must lie in (0, 1)")
            )
        if not 0 <= self.numit_inc < self.newton.maxit:
            raise ConfigurationError(_("numit_inc must be smaller than maxit"))
        if int(self.max_steps) < 1:
            raise ConfigurationError(_("max_steps must be at least 1"))


class PseudoTransientStatus(enum.Enum):
    SteadyStateReached = "steady state reached"
    StepFloorReached = "time step floor reached"
    MaxStepsExceeded = "maximum number of time steps exceeded"


class TimeStepRecord(typing.NamedTuple):
    """One attempted time step. Steady norms are None for failed steps."""

    attempt: int
    time: float
    dt: float
    outcome: newton_module.NewtonOutcome
    norm2: typing.Optional[float]
    norm_inf: typing.Optional[float]

    @property
    def accepted(self):
        return self.outcome.converged


@dataclasses.dataclass
class PseudoTransientOutcome:
    status: PseudoTransientStatus
    state: np.ndarray
    records: list
    initial_norm: float
    time: float = 0.0
    final_step: typing.Optional[newton_module.NewtonOutcome] = None

    @property
    def reached_steady_state(self):
        return self.status is PseudoTransientStatus.SteadyStateReached

    @property
    def successful_steps(self):
        return sum(1 for r in self.records if r.accepted)

    @property
    def failed_steps(self):
        return sum(1 for r in self.records if not r.accepted)

    @property
    def newton_iterations(self):
        return sum(r.outcome.iterations for r in self.records) + (
            self.final_step.iterations if self.final_step else 0
        )

    @property
    def time_steps(self):
        return [r.dt for r in self.records]


def initial_state(problem, config):
    """Initial head of the time stepping: the linear (q = 0) solution or a
    constant head."""
    if config.initial_state is InitialState.Constant:
        return problem.constant_state(config.initial_head)
    return problem.solve_linear(None, config.newton.linear)[0]


def steady_norms(problem, h):
    return newton_module.residual_norms(problem.steady(1.0).residual(h))


def final_newton_step(problem, h, config, correction=newton_module.identity_correction):
    """One undamped Newton step on the steady problem (q = 1) from `h`.
    Returns a NewtonOutcome with one iteration, or None if the step fails or
    does not lower the steady residual."""
    steady = problem.steady(1.0)
    norm2, norm_inf = newton_module.residual_norms(steady.residual(h))
    system = steady.jacobian_system(h)
    try:
        solve = linsolve.solve_linear_system(system.matrix, system.rhs, config.linear)
    except LinearSolverError as error:
        log.warning("final Newton step skipped: %s", error)
        return None
    candidate = np.asarray(correction(h + solve.solution), dtype=float)
    new_norm2, new_norm_inf = newton_module.residual_norms(steady.residual(candidate))
    if not new_norm2 < norm2:
        log.info(
            "final Newton step rejected: steady |F|_2 %.6e -> %.6e", norm2, new_norm2
        )
        return None
    records = [
        newton_module.IterationRecord(0, norm2, norm_inf, None, 0),
        newton_module.IterationRecord(
            1, new_norm2, new_norm_inf, 1.0, solve.iterations
        ),
    ]
    return newton_module.NewtonOutcome(
        newton_module.NewtonStatus.Converged, candidate, 1, records
    )


# pylint: disable=too-many-arguments,too-many-locals
def pseudo_transient_solve(
    problem,
    initial,
    config=None,
    newton=newton_module.newton_solve,
    correction=newton_module.identity_correction,
    callback=None,
):
    """pseudo_transient_solve(problem, initial, config=None)
    `problem` provides `steady(q)` and `transient(h_old, dt)`. Each time step
    is solved by Newton from the previous solution; afterwards the steady
    residual (q = 1) is tested with the same test Newton uses, against the
    steady residual of `initial`. `callback(record, state)` is called after
    every accepted step."""
    config = config or PseudoTransientConfig()
    h = np.array(getattr(initial, "h", initial), dtype=float)
    norm2, norm_inf = steady_norms(problem, h)
    norm0 = norm2
    records = []
    time = 0.0

    def finish(status, final_step=None):
        log.info(
            "pseudo-transient: %s after %d steps (%d failed), t=%g",
            status.value,
            sum(1 for r in records if r.accepted),
            sum(1 for r in records if not r.accepted),
            time,
        )
        return PseudoTransientOutcome(status, h, records, norm0, time, final_step)

    if newton_module.is_converged(norm2, norm_inf, norm0, config.newton):
        return finish(PseudoTransientStatus.SteadyStateReached)
    dt = config.dt_init
    while len(records) < config.max_steps:
        outcome = newton(
            problem.transient(h, dt), h, config.newton, correction=correction
        )
        if not outcome.converged:
            records.append(
                TimeStepRecord(len(records) + 1, time, dt, outcome, None, None)
            )
            log.info("time step dt=%g failed: %s", dt, outcome.status.value)
            if dt * config.shrink < config.dt_min:
                return finish(PseudoTransientStatus.StepFloorReached)
            dt *= config.shrink
            continue
        h = outcome.state
        time += dt
        norm2, norm_inf = steady_norms(problem, h)
        record = TimeStepRecord(len(records) + 1, time, dt, outcome, norm2, norm_inf)
        records.append(record)
        log.info(
            "time step dt=%g accepted (%d Newton iterations), steady |F|_2=%.6e",
            dt,
            outcome.iterations,
            norm2,
        )
        if callback is not None:
            callback(record, h)
        if newton_module.is_converged(norm2, norm_inf, norm0, config.newton):
            final = None
            if config.final_newton_step:
                final = final_newton_step(problem, h, config.newton, correction)
            if final is not None:
                h = final.state
            return finish(PseudoTransientStatus.SteadyStateReached, final)
        if outcome.iterations <= config.numit_inc:
            dt = min(dt * config.growth, config.dt_max)
    return finish(PseudoTransientStatus.MaxStepsExceeded)
