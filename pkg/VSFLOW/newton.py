# This is free software, licensed under the LGPL v3. See the file "COPYING" for
# details.
"""Newton iteration with backtracking line search.

A problem handed to `newton_solve` provides `residual(h)` returning F(h) and
`jacobian_system(h)` returning an object with `matrix` (dF/dh) and `rhs`
(-F(h)). The iteration stops when

    ||r_k||_2 < eps_rel * ||r_0||_2    or    ||r_k||_inf < eps_abs

with r_0 the residual of the initial state of this solve."""

import dataclasses
import enum
import logging
import math
import typing

import numpy as np

from . import linsolve
from .errors import ConfigurationError, LinearSolverError

log = logging.getLogger(__name__)


class NewtonStatus(enum.Enum):
    Converged = "converged"
    LineSearchFailed = "line search failed"
    MaxIterExceeded = "maximum number of iterations exceeded"
    LinearSolveFailed = "linear solve failed"


@dataclasses.dataclass(frozen=True)
class NewtonConfig:
    """Tolerances and limits of one Newton solve. `relaxation`, if set, is a
    fixed step length used instead of the line search."""

    eps_rel: float = 1e-5
    eps_abs: float = 1e-5
    maxit: int = 25
    gamma: float = 0.25
    omega_min: float = 0.25 ** 7
    line_search: bool = True
    line_search_start: int = 5
    relaxation: typing.Optional[float] = None
    linear: linsolve.LinearSolverConfig = dataclasses.field(
        default_factory=linsolve.LinearSolverConfig
    )

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ConfigurationError(_("gamma must lie in (0, 1)"))
        if not 0 < self.omega_min <= 1:
            raise ConfigurationError(_("the minimal step length must lie in (0, 1]"))
        if int(self.maxit) < 1:
            raise ConfigurationError(_("maxit must be at least 1"))
        if not (self.eps_rel > 0 and self.eps_abs > 0):
            raise ConfigurationError(_("eps_rel and eps_abs must be positive"))
        if self.line_search_start < 0:
            raise ConfigurationError(_("line_search_start must not be negative"))
        if self.relaxation is not None and not 0 < self.relaxation <= 1:
            raise ConfigurationError(_("relaxation must lie in (0, 1]"))

    def omega_sequence(self):
        """Step lengths tried by the line search: 1, gamma, gamma^2, ... down
        to omega_min."""
        omega = 1.0
        while omega >= self.omega_min * (1.0 - 1e-12):
            yield omega
            omega *= self.gamma


class IterationRecord(typing.NamedTuple):
    k: int
    norm2: float
    norm_inf: float
    omega: typing.Optional[float]
    linear_iterations: int


@dataclasses.dataclass
class NewtonOutcome:
    status: NewtonStatus
    state: np.ndarray
    iterations: int
    records: list
    message: str = ""

    @property
    def converged(self):
        return self.status is NewtonStatus.Converged

    @property
    def norms(self):
        return [record.norm2 for record in self.records]

    @property
    def omegas(self):
        return [record.omega for record in self.records[1:]]

    @property
    def linear_iterations(self):
        return sum(record.linear_iterations for record in self.records)

    @property
    def initial_norm(self):
        return self.records[0].norm2


class LineSearchResult(typing.NamedTuple):
    omega: float
    state: np.ndarray
    residual: np.ndarray
    trials: int


def residual_norms(residual):
    residual = np.asarray(residual, dtype=float)
    if not residual.size:
        return 0.0, 0.0
    return float(np.linalg.norm(residual)), float(np.max(np.abs(residual)))


def is_converged(norm2, norm_inf, norm0, config):
    """Relative l2 test against the initial norm or absolute max-norm test."""
    return norm2 < config.eps_rel * norm0 or norm_inf < config.eps_abs


def identity_correction(state):
    """Default post-update correction: leaves the state untouched."""
    return state


def line_search(problem, state, direction, base_norm, gamma=0.25, omega_min=0.25 ** 7):
    """line_search(problem, state, direction, base_norm, gamma, omega_min)
    Try state + omega*direction for omega = 1, gamma, gamma^2, ... and accept
    the first omega with ||F||_2 < base_norm. Returns a LineSearchResult
    carrying the residual already evaluated or None if omega would drop below
    omega_min."""
    direction = np.asarray(direction, dtype=float)
    if not np.all(np.isfinite(direction)):
        raise ValueError("line search direction is not finite")
    config = NewtonConfig(gamma=gamma, omega_min=omega_min)
    trials = 0
    for omega in config.omega_sequence():
        trials += 1
        candidate = state + omega * direction
        residual = np.asarray(problem.residual(candidate), dtype=float)
        norm2 = np.linalg.norm(residual)
        if np.isfinite(norm2) and norm2 < base_norm:
            return LineSearchResult(omega, candidate, residual, trials)
        log.debug("line search: omega=%g rejected, |F|=%.6e", omega, norm2)
    return None


# pylint: disable=too-many-arguments,too-many-locals,too-many-return-statements
def newton_solve(
    problem,
    initial,
    config=None,
    correction=identity_correction,
    linear_solver=linsolve.solve_linear_system,
):
    """newton_solve(problem, initial, config=None, correction=identity_correction)
    Solve F(h) = 0 from `initial`. Line search (if enabled) is applied from
    iteration `line_search_start` on; before, the full Newton step is taken.
    `correction` is applied to every accepted state. Never raises for
    solver failures, the NewtonOutcome status tells what happened."""
    config = config or NewtonConfig()
    h = np.array(getattr(initial, "h", initial), dtype=float)
    residual = np.asarray(problem.residual(h), dtype=float)
    norm2, norm_inf = residual_norms(residual)
    norm0 = norm2
    records = [IterationRecord(0, norm2, norm_inf, None, 0)]
    log.debug("Newton k=0: |F|_2=%.6e |F|_inf=%.6e", norm2, norm_inf)

    def outcome(status, iterations, message=""):
        if message:
            log.info("Newton: %s after %d iterations", message, iterations)
        return NewtonOutcome(status, h, iterations, records, message)

    if not np.isfinite(norm2):
        message = _("non-finite initial residual")
        return outcome(NewtonStatus.MaxIterExceeded, 0, message)
    if is_converged(norm2, norm_inf, norm0, config):
        return outcome(NewtonStatus.Converged, 0)

    for k in range(config.maxit):
        system = problem.jacobian_system(h)
        try:
            solve = linear_solver(system.matrix, system.rhs, config.linear)
        except LinearSolverError as error:
            return outcome(NewtonStatus.LinearSolveFailed, k, str(error))
        direction = solve.solution
        if not np.all(np.isfinite(direction)):
            return outcome(
                NewtonStatus.LinearSolveFailed, k, _("non-finite Newton direction")
            )
        if config.relaxation is not None:
            omega = config.relaxation
            candidate = h + omega * direction
            new_residual = np.asarray(problem.residual(candidate), dtype=float)
        elif config.line_search and k >= config.line_search_start:
            searched = line_search(
                problem, h, direction, norm2, config.gamma, config.omega_min
            )
            if searched is None:
                return outcome(
                    NewtonStatus.LineSearchFailed,
                    k,
                    _("no step length reduces the residual"),
                )
            omega, candidate, new_residual = searched[:3]
        else:
            omega = 1.0
            candidate = h + direction
            new_residual = np.asarray(problem.residual(candidate), dtype=float)

        corrected = correction(candidate)
        if correction is not identity_correction:
            corrected = np.asarray(corrected, dtype=float)
            new_residual = np.asarray(problem.residual(corrected), dtype=float)
        h = corrected
        residual = new_residual
        norm2, norm_inf = residual_norms(residual)
        records.append(IterationRecord(k + 1, norm2, norm_inf, omega, solve.iterations))
        log.debug(
            "Newton k=%d: |F|_2=%.6e |F|_inf=%.6e omega=%g lin=%d",
            k + 1,
            norm2,
            norm_inf,
            omega,
            solve.iterations,
        )
        if not np.isfinite(norm2):
            message = _("non-finite residual")
            return outcome(NewtonStatus.MaxIterExceeded, k + 1, message)
        if is_converged(norm2, norm_inf, norm0, config):
            checked = residual_norms(problem.residual(h))
            if is_converged(*checked, norm0, config):
                return outcome(NewtonStatus.Converged, k + 1)
            log.warning(
                "Newton k=%d: re-evaluated residual |F|_2=%.6e is not converged",
                k + 1,
                checked[0],
            )
            norm2, norm_inf = checked
    return outcome(
        NewtonStatus.MaxIterExceeded,
        config.maxit,
        _("no convergence within %d iterations") % config.maxit,
    )


def estimate_order(norms):
    """Observed convergence order p from the last three residual norms,
    assuming r_{k+1} = C r_k^p. Returns None if it cannot be estimated."""
    norms = [float(n) for n in norms]
    if len(norms) < 3:
        return None
    first, second, third = norms[-3:]
    if min(first, second, third) <= 0 or first == second:
        return None
    try:
        return math.log(third / second) / math.log(second / first)
    except (ValueError, ZeroDivisionError):
        return None
