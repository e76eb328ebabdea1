# vim: set expandtab sts=4 ts=4 sw=4:
# This is free software, licensed under the LGPL v3. See the file "COPYING" for
# details.
"""For documentation about this module, please refer to its class Master."""

import dataclasses
import logging
import os
import time

import numpy as np

from . import common, errors, factories, newton, report, vtk
from .config import Strategy
from .constitutive import ContinuationFunctionKind
from .continuation import continuation_solve
from .pseudotransient import InitialState, pseudo_transient_solve

log = logging.getLogger(__name__)

HEAD_FILE = "head.vtk"
CSV_FILE = "convergence.csv"
SUMMARY_FILE = "summary.txt"
COMPARISON_FILE = "comparison.txt"

# exit codes of failing strategies
EXIT_LINEAR = errors.LinearSolverError.exit_code
EXIT_NEWTON = 3
EXIT_CONTINUATION = 4
EXIT_PSEUDO_TRANSIENT = 5


class Master:
    """m = Master(problem_config, output_directory)
m.run()

Build the discretized problem of a configuration, solve it with the configured
strategy and write head.vtk (head, saturation and water content per cell),
convergence.csv and summary.txt to the output directory. `run` returns 0; a
strategy which does not converge raises SolverFailure (carrying the exit code)
after all files have been written. The ConvergenceReport and the final state
are available as attributes afterwards."""

    def __init__(self, problem_config, output_dir, correction=None):
        self._config = problem_config
        self._output_dir = output_dir
        self._correction = correction or newton.identity_correction
        self.report = None
        self.state = None
        self.problem = None

    def __output(self, name):
        return os.path.join(self._output_dir, name)

    def __initial_state(self, problem, solver, rep):
        if solver.initial_state is InitialState.Constant:
            return problem.constant_state(solver.initial_head)
        h, iterations, _solves = problem.solve_linear(None, solver.linear_config())
        norms = newton.residual_norms(problem.steady(0.0).residual(h))
        rep.add_linear(iterations, *norms)
        return h

    def __new_report(self, solver):
        kind = solver.kind.value if solver.strategy is Strategy.Continuation else None
        correction = None
        if self._correction is not newton.identity_correction:
            correction = getattr(self._correction, "__name__", repr(self._correction))
        return report.ConvergenceReport(
            solver.strategy.value, kind, solver.kr_scheme.value, correction
        )

    # pylint: disable=too-many-locals
    def __solve(self, problem, solver, rep):
        """Dispatch to the strategy; returns (state, status, exit code, message)."""
        correction = self._correction
        if solver.strategy is Strategy.Continuation:
            outcome = continuation_solve(
                problem,
                solver.newton_config(),
                solver.continuation_config(),
                correction=correction,
            )
            linear_residual = problem.steady(0.0).residual(outcome.linear_state)
            rep.add_linear(
                outcome.linear_iterations, *newton.residual_norms(linear_residual)
            )
            for record in outcome.records:
                rep.add_newton("continuation", record.q, record.outcome)
            rep.q_path = outcome.q_path
            if outcome.solved:
                return outcome.state, outcome.status.value, 0, None
            return (
                outcome.state,
                outcome.status.value,
                EXIT_CONTINUATION,
                _("continuation step fell below %g") % solver.dq_min,
            )
        if solver.strategy is Strategy.PseudoTransient:
            pt_config = solver.pseudo_transient_config()
            initial = self.__initial_state(problem, solver, rep)
            outcome = pseudo_transient_solve(
                problem, initial, pt_config, correction=correction
            )
            for record in outcome.records:
                rep.add_newton("pseudo_transient", record.dt, record.outcome)
            if outcome.final_step is not None:
                rep.add_newton("final_newton", 1.0, outcome.final_step)
            if outcome.reached_steady_state:
                return outcome.state, outcome.status.value, 0, None
            return outcome.state, outcome.status.value, EXIT_PSEUDO_TRANSIENT, (
                outcome.status.value
            )
        initial = self.__initial_state(problem, solver, rep)
        outcome = newton.newton_solve(
            problem.steady(1.0), initial, solver.newton_config(), correction=correction
        )
        rep.add_newton("newton", 1.0, outcome)
        if outcome.converged:
            return outcome.state, outcome.status.value, 0, None
        code = EXIT_NEWTON
        if outcome.status is newton.NewtonStatus.LinearSolveFailed:
            code = EXIT_LINEAR
        message = outcome.message or outcome.status.value
        return outcome.state, outcome.status.value, code, message

    def run(self):
        start = time.perf_counter()
        solver = self._config.solver
        os.makedirs(self._output_dir, exist_ok=True)
        problem = factories.build_problem(self._config)
        self.problem = problem
        rep = self.__new_report(solver)
        self.report = rep
        try:
            state, status, code, message = self.__solve(problem, solver, rep)
        except errors.LinearSolverError as error:
            rep.finish(_("linear solve failed"), time.perf_counter() - start,
                       error.exit_code, str(error))
            rep.write_csv(self.__output(CSV_FILE))
            rep.write_summary(self.__output(SUMMARY_FILE))
            raise errors.SolverFailure(str(error), error.exit_code) from error
        self.state = state
        rep.final_norms = newton.residual_norms(problem.steady(1.0).residual(state))
        rep.fluxes = problem.flux_report(state)
        rep.floor_cells = problem.floor_active_cells(state)
        if rep.floor_cells:
            common.WarningRegistry().register_warning(
                _("relative permeability floor active in %d cells") % rep.floor_cells
            )
        rep.finish(status, time.perf_counter() - start, code, message)
        vtk.write_vtk(
            self.__output(HEAD_FILE),
            problem.mesh,
            {
                "head": state,
                "saturation": problem.saturation(state),
                "water_content": problem.water_content(state),
            },
            title="vsflow %s" % rep.describe_strategy(),
        )
        rep.write_csv(self.__output(CSV_FILE))
        rep.write_summary(self.__output(SUMMARY_FILE))
        log.info("%s: %s, %s steps, %d Newton iterations", rep.describe_strategy(),
                 status, rep.steps, rep.newton_iterations)
        if code:
            raise errors.SolverFailure(message, code, rep)
        return 0


#: the runs of a comparison: label, output sub directory, solver overrides
COMPARISON_RUNS = (
    ("Continuation (power)", "continuation_power",
     dict(strategy=Strategy.Continuation, kind=ContinuationFunctionKind.Power)),
    ("Continuation (linear)", "continuation_linear",
     dict(strategy=Strategy.Continuation, kind=ContinuationFunctionKind.Linear)),
    ("Pseudo-transient", "pseudo_transient", dict(strategy=Strategy.PseudoTransient)),
)


def compare(problem_config, output_dir, correction=None):
    """Solve the same problem with continuation (both kinds) and the
    pseudo-transient method. Every run writes into its own sub directory;
    the table goes to comparison.txt. Returns (table, [(label, report,
    state)...]); failing runs are listed with their step counts as well."""
    os.makedirs(output_dir, exist_ok=True)
    results = []
    for label, directory, overrides in COMPARISON_RUNS:
        solver = dataclasses.replace(problem_config.solver, **overrides)
        run_config = dataclasses.replace(problem_config, solver=solver)
        master = Master(run_config, os.path.join(output_dir, directory), correction)
        try:
            master.run()
        except errors.SolverFailure as failure:
            log.warning("%s failed: %s", label, failure.message)
            common.WarningRegistry().register_warning(
                _("run did not converge"), method=label, reason=failure.message
            )
        results.append((label, master.report, master.state))
    table = report.format_comparison(
        [(label, rep) for label, rep, _state in results if rep is not None]
    )
    states = [s for _l, _r, s in results if s is not None]
    if len(states) > 1:
        spread = max(float(np.max(np.abs(s - states[0]))) for s in states[1:])
        table += "max head difference between the runs: %.3e m\n" % spread
    with open(os.path.join(output_dir, COMPARISON_FILE), "w", encoding="utf-8") as f:
        f.write(table)
    return table, results
