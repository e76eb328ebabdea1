# This is free software, licensed under the LGPL v3. See the file "COPYING" for
# details.
"""Nonlinearity continuation: start from the linear problem (q = 0, relative
permeability replaced by one) and walk q up to the full problem (q = 1),
solving each member of the family by Newton's method from the last accepted
state.

A problem family provides `solve_linear(initial, linear_config)` returning
(state, linear iterations, number of linear solves) for q = 0 and
`at(q, kind)` returning a residual/Jacobian provider for `newton_solve`."""

import dataclasses
import enum
import logging
import typing

import numpy as np

from . import newton as newton_module
from .constitutive import ContinuationFunctionKind
from .errors import ConfigurationError

log = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class ContinuationConfig:
    """`kind` selects the continuation function; None keeps the one the
    problem family was built with."""

    kind: typing.Optional[ContinuationFunctionKind] = None
    dq_min: float = 1e-4
    growth: float = 2.0
    shrink: float = 0.5
    dq_initial: float = 1.0

    def __post_init__(self):
        if not 0 < self.dq_min < 1:
            raise ConfigurationError(_("dq_min must lie in (0, 1)"))
        if not self.growth >= 1:
            raise ConfigurationError(_("the step growth factor must be at least 1"))
        if not 0 < self.shrink < 1:
            raise ConfigurationError(_("the step shrink factor must lie in (0, 1)"))
        if not self.dq_initial > 0:
            raise ConfigurationError(_("the initial step must be positive"))


class ContinuationStatus(enum.Enum):
    Solved = "solved"
    StepFloorReached = "continuation step floor reached"


class StepRecord(typing.NamedTuple):
    """One attempt to advance from `q_from` by `dq`."""

    attempt: int
    q_from: float
    q: float
    dq: float
    outcome: newton_module.NewtonOutcome

    @property
    def accepted(self):
        return self.outcome.converged


@dataclasses.dataclass
class ContinuationOutcome:
    status: ContinuationStatus
    state: np.ndarray
    records: list
    linear_state: np.ndarray
    linear_iterations: int = 0
    linear_solves: int = 1

    @property
    def solved(self):
        return self.status is ContinuationStatus.Solved

    @property
    def successful_steps(self):
        return sum(1 for r in self.records if r.accepted)

    @property
    def failed_steps(self):
        return sum(1 for r in self.records if not r.accepted)

    @property
    def newton_iterations(self):
        return sum(r.outcome.iterations for r in self.records)

    @property
    def q_path(self):
        """Accepted parameter values, starting with the linear problem."""
        return [0.0] + [r.q for r in self.records if r.accepted]

    @property
    def attempts(self):
        return [(r.q, r.dq) for r in self.records]


def q_schedule_step(q, dq_last, growth=2.0):
    """Next step: double the last accepted step without passing q = 1."""
    if not 0.0 <= q < 1.0:
        raise ValueError("continuation parameter q=%r outside [0, 1)" % q)
    if not dq_last > 0:
        raise ValueError("last step must be positive, got %r" % dq_last)
    return min(1.0 - q, growth * dq_last)


# pylint: disable=too-many-arguments,too-many-locals
def continuation_solve(
    family,
    newton_config=None,
    config=None,
    initial=None,
    newton=newton_module.newton_solve,
    correction=newton_module.identity_correction,
    callback=None,
):
    """continuation_solve(family, newton_config=None, config=None, initial=None)
    Solve the linear problem, then advance q with dq = min(1-q, 2*dq_last).
    A failed Newton solve halves dq and retries from the last accepted state;
    the walk gives up once dq <= dq_min. `callback(record)` is called after
    each attempt. Linear solver errors at q = 0 propagate."""
    newton_config = newton_config or newton_module.NewtonConfig()
    config = config or ContinuationConfig()
    h, linear_iterations, linear_solves = family.solve_linear(
        initial, newton_config.linear
    )
    linear_state = np.array(h, dtype=float)
    log.info(
        "linear problem solved: %d linear iterations in %d solve(s)",
        linear_iterations,
        linear_solves,
    )
    records = []

    def finish(status):
        return ContinuationOutcome(
            status, h, records, linear_state, linear_iterations, linear_solves
        )

    q = 0.0
    dq_last = config.dq_initial
    while q < 1.0:
        dq = q_schedule_step(q, dq_last, config.growth)
        while True:
            q_next = 1.0 if q + dq >= 1.0 - 1e-12 else q + dq
            member = family.at(q_next, config.kind)
            outcome = newton(member, h, newton_config, correction=correction)
            record = StepRecord(len(records) + 1, q, q_next, dq, outcome)
            records.append(record)
            if callback is not None:
                callback(record)
            if outcome.converged:
                log.info(
                    "continuation step to q=%g accepted (%d Newton iterations)",
                    q_next,
                    outcome.iterations,
                )
                h = outcome.state
                q, dq_last = q_next, dq
                break
            log.info(
                "continuation step to q=%g failed: %s", q_next, outcome.status.value
            )
            dq *= config.shrink
            if dq <= config.dq_min:
                log.warning(
                    "continuation step fell below %g at q=%g", config.dq_min, q
                )
                return finish(ContinuationStatus.StepFloorReached)
    return finish(ContinuationStatus.Solved)
