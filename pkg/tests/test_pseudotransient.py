# pylint: disable=too-many-public-methods,import-error,too-few-public-methods,missing-docstring,unused-variable,multiple-imports
import unittest

import numpy as np
import scipy.sparse as sps

from VSFLOW import discretization as disc, errors, mesh, pseudotransient as pt
from VSFLOW.constitutive import MediumProperties
from VSFLOW.newton import NewtonConfig, NewtonOutcome, NewtonStatus
from VSFLOW.pseudotransient import PseudoTransientConfig, PseudoTransientStatus


def tank():
    """Saturated unit cube draining through a fixed head of 2 m on one side;
    leakage coefficient 2/0.1 = 20 per day."""
    grid = mesh.build_box_grid((1, 1, 1), (1, 1, 1), [(0, 1, "tank")])
    bcs = disc.BoundaryConditions(grid)
    bcs.set_side("xmin", disc.DirichletHead(2.0))
    medium = MediumProperties.isotropic(1.0, 0.3, s_stor=0.1)
    return disc.RichardsProblem(grid, {"tank": medium}, bcs)


class Decay:
    """Steady residual equal to the state; time steps are delegated to a
    scripted Newton."""

    def steady(self, q):
        return self

    def residual(self, h):
        return np.asarray(h, dtype=float)

    def jacobian_system(self, h):
        n = len(h)
        return disc.SparseSystem(sps.identity(n, format="csr"), -self.residual(h))

    def transient(self, h_old, dt):
        return dt


class ScriptedNewton:
    """Plays back (iterations, converged) pairs; a converged step divides the
    state by 100."""

    def __init__(self, script):
        self.script = list(script)
        self.time_steps = []

    def __call__(self, dt, h, config, correction=None):
        self.time_steps.append(dt)
        iterations, converged = self.script.pop(0) if self.script else (1, True)
        if converged:
            return NewtonOutcome(NewtonStatus.Converged, h / 100, iterations, [])
        return NewtonOutcome(NewtonStatus.MaxIterExceeded, h, iterations, [])


class TestTank(unittest.TestCase):
    def test_implicit_euler_recurrence(self):
        problem = tank()
        steps = []

        def check(record, state):
            steps.append((record.dt, float(state[0])))

        outcome = pt.pseudo_transient_solve(problem, [5.0], callback=check)
        self.assertTrue(outcome.reached_steady_state)
        self.assertAlmostEqual(outcome.state[0], 2.0, delta=5e-5)
        previous = 5.0
        for dt, head in steps:
            self.assertAlmostEqual(
                head, (previous + 40 * dt) / (1 + 20 * dt), delta=1e-10
            )
            previous = head
        self.assertEqual(outcome.successful_steps, len(steps))

    def test_time_step_grows_after_easy_steps(self):
        outcome = pt.pseudo_transient_solve(tank(), [5.0])
        dts = outcome.time_steps
        for first, second in zip(dts, dts[1:]):
            self.assertAlmostEqual(second, 1.5 * first)
        self.assertEqual(dts[0], 1e-2)
        self.assertTrue(all(r.outcome.iterations == 1 for r in outcome.records))

    def test_steady_initial_state(self):
        outcome = pt.pseudo_transient_solve(tank(), [2.0])
        self.assertEqual(outcome.status, PseudoTransientStatus.SteadyStateReached)
        self.assertEqual(outcome.records, [])
        self.assertEqual(outcome.newton_iterations, 0)

    def test_initial_states(self):
        problem = tank()
        config = PseudoTransientConfig(
            initial_state=pt.InitialState.Constant, initial_head=3.5
        )
        np.testing.assert_array_equal(pt.initial_state(problem, config), [3.5])
        linear = pt.initial_state(problem, PseudoTransientConfig())
        np.testing.assert_allclose(linear, [2.0])


class TestTimeStepControl(unittest.TestCase):
    def test_scripted_adaptation(self):
        newton = ScriptedNewton([(3, True), (20, True), (25, False), (2, True)])
        outcome = pt.pseudo_transient_solve(Decay(), [1.0], newton=newton)
        self.assertEqual(outcome.status, PseudoTransientStatus.SteadyStateReached)
        np.testing.assert_allclose(
            outcome.time_steps, [0.01, 0.015, 0.015, 0.0075]
        )
        self.assertEqual(outcome.successful_steps, 3)
        self.assertEqual(outcome.failed_steps, 1)
        # 50 in the time steps, one in the closing steady step
        self.assertEqual(outcome.newton_iterations, 51)
        self.assertAlmostEqual(outcome.state[0], 0.0, delta=1e-15)
        self.assertAlmostEqual(outcome.time, 0.0325)
        self.assertIsNone(outcome.records[2].norm2)

    def test_failed_step_is_retried_from_the_old_state(self):
        seen = []

        def newton(dt, h, config, correction=None):
            seen.append(float(h[0]))
            if len(seen) == 2:
                return NewtonOutcome(NewtonStatus.LineSearchFailed, h * 7, 4, [])
            return NewtonOutcome(NewtonStatus.Converged, h / 100, 1, [])

        pt.pseudo_transient_solve(Decay(), [1.0], newton=newton)
        self.assertEqual(seen[:3], [1.0, 0.01, 0.01])

    def test_step_floor(self):
        config = PseudoTransientConfig(dt_min=1e-3)
        newton = ScriptedNewton([(25, False)] * 10)
        outcome = pt.pseudo_transient_solve(Decay(), [1.0], config, newton=newton)
        self.assertEqual(outcome.status, PseudoTransientStatus.StepFloorReached)
        np.testing.assert_allclose(outcome.time_steps, [0.01, 0.005, 0.0025, 0.00125])
        self.assertEqual(outcome.state[0], 1.0)

    def test_max_steps_and_dt_max(self):
        config = PseudoTransientConfig(dt_max=0.02, max_steps=5)

        def stalled(dt, h, config, correction=None):
            return NewtonOutcome(NewtonStatus.Converged, h, 1, [])

        outcome = pt.pseudo_transient_solve(Decay(), [1.0], config, newton=stalled)
        self.assertEqual(outcome.status, PseudoTransientStatus.MaxStepsExceeded)
        np.testing.assert_allclose(
            outcome.time_steps, [0.01, 0.015, 0.02, 0.02, 0.02]
        )

    def test_invalid_configuration(self):
        with self.assertRaises(errors.ConfigurationError):
            PseudoTransientConfig(dt_init=1e-9)
        with self.assertRaises(errors.ConfigurationError):
            PseudoTransientConfig(numit_inc=30)
        with self.assertRaises(errors.ConfigurationError):
            PseudoTransientConfig(shrink=1.5)

    def test_line_search_is_off_by_default(self):
        self.assertFalse(PseudoTransientConfig().newton.line_search)
        config = PseudoTransientConfig(newton=NewtonConfig(line_search=True))
        self.assertTrue(config.newton.line_search)


class TestFinalNewtonStep(unittest.TestCase):
    def test_closing_step_solves_the_tank_exactly(self):
        outcome = pt.pseudo_transient_solve(tank(), [5.0])
        self.assertIsNotNone(outcome.final_step)
        self.assertEqual(outcome.final_step.iterations, 1)
        self.assertAlmostEqual(outcome.state[0], 2.0, delta=1e-10)
        norm2, _norm_inf = pt.steady_norms(tank(), outcome.state)
        self.assertLess(norm2, outcome.final_step.initial_norm)

    def test_closing_step_can_be_switched_off(self):
        config = PseudoTransientConfig(final_newton_step=False)
        outcome = pt.pseudo_transient_solve(tank(), [5.0], config)
        self.assertIsNone(outcome.final_step)
        self.assertEqual(
            outcome.newton_iterations,
            sum(r.outcome.iterations for r in outcome.records),
        )
        self.assertNotEqual(outcome.state[0], 2.0)

    def test_step_that_raises_the_residual_is_rejected(self):
        problem = tank()
        sloppy = lambda state: state + 1.0
        self.assertIsNone(
            pt.final_newton_step(problem, np.array([2.0001]), NewtonConfig(), sloppy)
        )
        step = pt.final_newton_step(problem, np.array([2.0001]), NewtonConfig())
        self.assertAlmostEqual(step.state[0], 2.0, delta=1e-12)
