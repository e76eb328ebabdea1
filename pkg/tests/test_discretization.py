# pylint: disable=too-many-public-methods,import-error,too-few-public-methods,missing-docstring,unused-variable,multiple-imports
import unittest

import numpy as np

from VSFLOW import constitutive, discretization as disc, errors, mesh
from VSFLOW.constitutive import ContinuationFunctionKind as Kind, MediumProperties
from VSFLOW.discretization import KrScheme


def box(extents, counts, medium):
    grid = mesh.build_box_grid(extents, counts, [(0, extents[2], "r")])
    return grid, {"r": medium}


def column(nx=10):
    """Horizontal column of unit cells with heads 1 and 0 at its ends."""
    grid, media = box((nx, 1, 1), (nx, 1, 1), MediumProperties.isotropic(1.0, 0.3))
    bcs = disc.BoundaryConditions(grid)
    bcs.set_side("xmin", disc.DirichletHead(1.0))
    bcs.set_side("xmax", disc.DirichletHead(0.0))
    profile = 1.0 - (np.arange(nx) + 0.5) / nx
    return grid, media, bcs, profile


def slice_problem(kind=Kind.Power, kr_scheme=KrScheme.Upwind, seepage=True):
    """5x1x5 vertical slice with a seepage face above z = 2 on the right."""
    medium = MediumProperties(1.0, 1.0, 0.5, 0.3, s_stor=0.01)
    grid, media = box((5, 0.25, 5), (5, 1, 5), medium)
    bcs = disc.BoundaryConditions(grid)
    bcs.set_side("xmin", disc.DirichletHead(4.3))
    bcs.set_side("xmax", disc.DirichletHead(1.7), z_high=2.0)
    if seepage:
        bcs.set_side("xmax", disc.Seepage(), z_low=2.0)
    sources = disc.SourceField(np.linspace(0.0, 0.02, grid.num_cells))
    return disc.RichardsProblem(grid, media, bcs, sources, kind, kr_scheme)


def random_state(problem, seed, margin=0.02):
    """Heads away from the kinks of the constitutive model, of the upwind
    selection and of the boundary switches."""
    rng = np.random.default_rng(seed)
    layers = np.arange(5.0)
    kinks = np.concatenate([layers + 1, layers + 0.01, layers + 0.5, [4.3, 1.7]])
    faces = problem.mesh.face_cells
    for _attempt in range(1000):
        h = np.empty(problem.num_cells)
        for cell in range(problem.num_cells):
            value = rng.uniform(0.2, 5.8)
            while np.min(np.abs(kinks - value)) < margin:
                value = rng.uniform(0.2, 5.8)
            h[cell] = value
        if np.min(np.abs(h[faces[:, 0]] - h[faces[:, 1]])) > margin:
            return h
    raise AssertionError("no admissible state found")


def finite_difference_jacobian(residual, h):
    columns = []
    for j in range(len(h)):
        eps = 1e-6 * max(1.0, abs(h[j]))
        step = np.zeros_like(h)
        step[j] = eps
        columns.append((residual(h + step) - residual(h - step)) / (2 * eps))
    return np.column_stack(columns)


class TestBoundaryConditions(unittest.TestCase):
    def test_default_is_no_flow(self):
        grid, media = box((1, 1, 1), (1, 1, 1), MediumProperties.isotropic(1, 0.3))
        bcs = disc.BoundaryConditions(grid)
        self.assertEqual(len(bcs), 6)
        self.assertTrue(all(c == disc.NO_FLOW for c in bcs))
        self.assertFalse(bcs.is_well_posed())

    def test_z_range_selects_by_face_centroid(self):
        grid, media = box((1, 1, 4), (1, 1, 4), MediumProperties.isotropic(1, 0.3))
        bcs = disc.BoundaryConditions(grid)
        self.assertEqual(bcs.set_side("xmax", disc.DirichletHead(2.0), z_high=2.0), 2)
        self.assertEqual(bcs.set_side("xmax", disc.Seepage(), z_low=2.0), 2)
        codes, heads, fluxes = bcs.arrays()
        self.assertEqual(sorted(codes[grid.bface_tag == "xmax"]), [1, 1, 2, 2])
        self.assertTrue(bcs.is_well_posed())
        self.assertEqual(list(bcs.dirichlet_heads()), [2.0, 2.0])

    def test_unsupported_condition(self):
        grid, media = box((1, 1, 1), (1, 1, 1), MediumProperties.isotropic(1, 0.3))
        with self.assertRaises(TypeError):
            disc.BoundaryConditions(grid).set_side("xmin", 3.0)

    def test_ill_posed_problem_is_rejected(self):
        grid, media = box((1, 1, 1), (1, 1, 1), MediumProperties.isotropic(1, 0.3))
        with self.assertRaises(errors.ConfigurationError):
            disc.RichardsProblem(grid, media, disc.BoundaryConditions(grid))


class TestSteadyResidual(unittest.TestCase):
    def setUp(self):
        # two cells of 1 x 1/6 x 6 m: unit face, centres 1 m apart
        self.grid, self.media = box(
            (2, 1 / 6, 6), (2, 1, 1), MediumProperties(2.0, 1.0, 1.0, 0.3)
        )
        self.bcs = disc.BoundaryConditions(self.grid)

    def residual(self, q=1.0, kind=Kind.Power, kr_scheme=KrScheme.Upwind):
        return disc.assemble_steady_residual(
            self.grid, self.media, self.bcs, None, [3.0, 1.0], q, kind, kr_scheme
        )

    def test_upwind_two_cell_flux(self):
        np.testing.assert_allclose(self.residual(), [2.0, -2.0], rtol=1e-12)

    def test_central_two_cell_flux(self):
        kr_mean = 0.5 * (0.5 + 1 / 6)
        expected = kr_mean * 2.0 * 2.0
        np.testing.assert_allclose(
            self.residual(kr_scheme=KrScheme.Central), [expected, -expected]
        )

    def test_linear_problem_ignores_permeability(self):
        for kind in Kind:
            np.testing.assert_allclose(self.residual(0.0, kind), [4.0, -4.0])

    def test_flux_is_antisymmetric(self):
        res = self.residual(0.37, Kind.Linear)
        self.assertEqual(res[0], -res[1])

    def test_sources_enter_with_cell_volume(self):
        sources = disc.SourceField([0.5, 0.0])
        res = disc.assemble_steady_residual(
            self.grid, self.media, self.bcs, sources, [1.0, 1.0], 1.0
        )
        np.testing.assert_allclose(res, [-0.5, 0.0])

    def test_wrong_state_length(self):
        with self.assertRaises(ValueError):
            disc.assemble_steady_residual(
                self.grid, self.media, self.bcs, None, [1.0], 1.0
            )

    def test_linear_profile_has_zero_residual(self):
        grid, media, bcs, profile = column()
        res = disc.assemble_steady_residual(grid, media, bcs, None, profile, 0.0)
        self.assertLess(np.max(np.abs(res)), 1e-12)

    def test_no_flow_constant_state_is_steady(self):
        grid, media = box((3, 1, 3), (3, 1, 3), MediumProperties.isotropic(1, 0.3))
        bcs = disc.BoundaryConditions(grid)
        res = disc.assemble_steady_residual(grid, media, bcs, None, np.full(9, 1.7), 1)
        np.testing.assert_array_equal(res, np.zeros(9))
        report = disc.boundary_flux_report(grid, media, bcs, None, np.full(9, 1.7))
        self.assertTrue(all(v == 0.0 for v in report.by_tag.values()))
        self.assertEqual(report.source, 0.0)

    def test_discrete_conservation(self):
        problem = slice_problem()
        for seed in range(3):
            h = random_state(problem, seed)
            res = problem.steady(0.6).residual(h)
            report = problem.flux_report(h, 0.6)
            scale = sum(abs(v) for v in report.by_tag.values()) + abs(report.source)
            self.assertAlmostEqual(
                np.sum(res), report.net_outflow - report.source, delta=1e-10 * scale
            )

    def test_seepage_faces_never_take_inflow(self):
        problem = slice_problem()
        codes, _heads, _fluxes = problem.bcs.arrays()
        for seed in range(5):
            h = random_state(problem, seed)
            report = problem.flux_report(h)
            self.assertGreaterEqual(report.by_kind["seepage"], 0.0)
            active = problem.seepage_active(h)
            self.assertFalse(np.any(active & (codes != 2)))


class TestFluxReport(unittest.TestCase):
    def test_column_end_fluxes(self):
        grid, media, bcs, profile = column()
        report = disc.boundary_flux_report(grid, media, bcs, None, profile, 0.0)
        self.assertAlmostEqual(report.by_tag["xmin"], -0.1, delta=1e-12)
        self.assertAlmostEqual(report.by_tag["xmax"], 0.1, delta=1e-12)
        self.assertAlmostEqual(report.by_kind["dirichlet"], 0.0, delta=1e-12)
        self.assertAlmostEqual(report.inflow, 0.1, delta=1e-12)
        self.assertAlmostEqual(report.net_outflow, 0.0, delta=1e-12)

    def test_prescribed_flux(self):
        grid, media = box((1, 1, 1), (1, 1, 1), MediumProperties.isotropic(1, 0.3))
        bcs = disc.BoundaryConditions(grid)
        bcs.set_side("zmax", disc.NeumannFlux(-0.25))
        report = disc.boundary_flux_report(grid, media, bcs, None, [0.5])
        self.assertEqual(report.by_tag["zmax"], -0.25)
        self.assertEqual(report.by_kind["neumann"], -0.25)


class TestJacobian(unittest.TestCase):
    def check_against_finite_differences(self, provider, h):
        system = provider.jacobian_system(h)
        jacobian = system.matrix.toarray()
        fd = finite_difference_jacobian(provider.residual, h)
        scale = np.max(np.abs(jacobian))
        np.testing.assert_allclose(jacobian, fd, rtol=1e-5, atol=1e-6 * scale)
        np.testing.assert_allclose(system.rhs, -provider.residual(h))

    def test_steady_jacobian_matches_finite_differences(self):
        cases = [
            (Kind.Power, KrScheme.Upwind, 1.0),
            (Kind.Power, KrScheme.Upwind, 0.5),
            (Kind.Linear, KrScheme.Upwind, 0.5),
            (Kind.Power, KrScheme.Central, 1.0),
            (Kind.Linear, KrScheme.Central, 0.25),
        ]
        for seed, (kind, scheme, q) in enumerate(cases):
            problem = slice_problem(kind, scheme)
            h = random_state(problem, seed)
            with self.subTest(kind=kind, scheme=scheme, q=q):
                self.check_against_finite_differences(problem.steady(q), h)

    def test_transient_jacobian_matches_finite_differences(self):
        problem = slice_problem()
        h_old = random_state(problem, 11)
        h = random_state(problem, 12)
        self.check_against_finite_differences(problem.transient(h_old, 0.1), h)

    def test_sparsity_follows_the_face_stencil(self):
        problem = slice_problem()
        matrix = problem.steady(1.0).jacobian_system(random_state(problem, 3)).matrix
        neighbours = {(i, i) for i in range(problem.num_cells)}
        for first, second in problem.mesh.face_cells:
            neighbours |= {(first, second), (second, first)}
        rows, cols = matrix.nonzero()
        self.assertTrue(set(zip(rows, cols)) <= neighbours)

    def test_linear_jacobian_is_symmetric_and_state_independent(self):
        problem = slice_problem(seepage=False)
        linear = problem.steady(0.0)
        first = linear.jacobian_system(random_state(problem, 4)).matrix.toarray()
        second = linear.jacobian_system(random_state(problem, 5)).matrix.toarray()
        np.testing.assert_allclose(first, first.T, atol=1e-12)
        np.testing.assert_allclose(first, second, atol=1e-12)
        self.assertTrue(np.all(np.diag(first) > 0))

    def test_column_jacobian_is_tridiagonal(self):
        grid, media, bcs, profile = column()
        matrix = disc.assemble_jacobian_system(
            grid, media, bcs, None, profile, 0.0
        ).matrix.toarray()
        self.assertTrue(np.allclose(np.triu(matrix, 2), 0.0))
        self.assertTrue(np.allclose(np.tril(matrix, -2), 0.0))
        self.assertEqual(matrix[0, 0], 3.0)


class TestTransientResidual(unittest.TestCase):
    def setUp(self):
        self.grid, self.media = box(
            (1, 1, 1), (1, 1, 1), MediumProperties.isotropic(1, 0.3, s_stor=1e-4)
        )
        self.bcs = disc.BoundaryConditions(self.grid)

    def test_specific_storage_of_a_saturated_cell(self):
        res = disc.assemble_transient_residual(
            self.grid, self.media, self.bcs, None, [4.0], [2.0], 1.0
        )
        self.assertAlmostEqual(res[0], 2e-4, delta=1e-15)

    def test_equilibrium_stays_at_rest(self):
        grid, media = box((3, 1, 3), (3, 1, 3), MediumProperties.isotropic(1, 0.3))
        bcs = disc.BoundaryConditions(grid)
        bcs.set_side("xmin", disc.DirichletHead(1.7))
        state = np.full(9, 1.7)
        res = disc.assemble_transient_residual(
            grid, media, bcs, None, state, state, 0.5
        )
        np.testing.assert_array_equal(res, np.zeros(9))

    def test_large_time_step_approaches_steady_residual(self):
        problem = slice_problem()
        h_old = random_state(problem, 21)
        h = random_state(problem, 22)
        steady = problem.steady(1.0).residual(h)
        transient = problem.transient(h_old, 1e12).residual(h)
        np.testing.assert_allclose(transient, steady, atol=1e-9)

    def test_unsaturated_storage_change(self):
        res = disc.assemble_transient_residual(
            self.grid, self.media, self.bcs, None, [0.5], [0.25], 0.5
        )
        # water content 0.15 vs 0.075, saturation 0.5
        expected = (0.15 - 0.075) / 0.5 + 0.5 * 0.25 * 1e-4 / 0.5
        self.assertAlmostEqual(res[0], expected, delta=1e-14)

    def test_time_step_must_be_positive(self):
        with self.assertRaises(ValueError):
            disc.assemble_transient_residual(
                self.grid, self.media, self.bcs, None, [1.0], [1.0], 0.0
            )


class TestSingleCell(unittest.TestCase):
    """A 1 x 1 x 1 mesh has boundary faces only."""

    def setUp(self):
        self.grid, self.media = box(
            (1, 1, 1), (1, 1, 1), MediumProperties.isotropic(1, 0.3, s_stor=1e-4)
        )
        self.bcs = disc.BoundaryConditions(self.grid)

    def test_saturated_storage_without_interior_faces(self):
        res = disc.assemble_transient_residual(
            self.grid, self.media, self.bcs, None, [5.0], [3.0], 1.0
        )
        self.assertEqual(res.dtype, np.float64)
        self.assertAlmostEqual(res[0], 2e-4, delta=1e-15)

    def test_dirichlet_face_takes_upstream_permeability(self):
        # half transmissibility 2, boundary head 2 saturates the outer side
        self.bcs.set_side("xmin", disc.DirichletHead(2.0))
        problem = disc.RichardsProblem(self.grid, self.media, self.bcs)
        steady = problem.steady(1.0)
        self.assertAlmostEqual(steady.residual([0.5])[0], -3.0, delta=1e-12)
        jacobian = steady.jacobian_system([0.5]).matrix.toarray()
        self.assertAlmostEqual(jacobian[0, 0], 2.0, delta=1e-12)
        report = problem.flux_report([0.5], 1.0)
        self.assertAlmostEqual(report.by_tag["xmin"], -3.0, delta=1e-12)


class TestRichardsProblem(unittest.TestCase):
    def test_linear_solve_reproduces_column_profile(self):
        grid, media, bcs, profile = column()
        problem = disc.RichardsProblem(grid, media, bcs)
        h, iterations, passes = problem.solve_linear()
        np.testing.assert_allclose(h, profile, atol=1e-8)
        self.assertEqual(passes, 1)
        self.assertGreater(iterations, 0)

    def test_linear_solve_settles_seepage_faces(self):
        problem = slice_problem()
        h, iterations, passes = problem.solve_linear()
        residual = problem.steady(0.0).residual(h)
        self.assertLess(np.max(np.abs(residual)), 1e-7)
        self.assertLessEqual(passes, disc.MAX_SEEPAGE_PASSES)

    def test_default_initial_head_is_mean_dirichlet_head(self):
        problem = slice_problem()
        self.assertAlmostEqual(problem.default_initial_head(), (5 * 4.3 + 2 * 1.7) / 7)
        np.testing.assert_allclose(
            problem.constant_state(), problem.default_initial_head()
        )

    def test_continuation_parameter_is_checked(self):
        with self.assertRaises(ValueError):
            slice_problem().at(1.5)

    def test_floor_active_cells(self):
        grid, media, bcs, profile = column()
        problem = disc.RichardsProblem(grid, media, bcs)
        self.assertEqual(problem.floor_active_cells(np.full(10, -100.0)), 10)
        self.assertEqual(problem.floor_active_cells(profile), 0)
        np.testing.assert_allclose(problem.saturation(np.full(10, 2.0)), 1.0)
        np.testing.assert_allclose(
            problem.water_content(np.full(10, 0.5)),
            constitutive.water_content(0.5, grid.cells[0], media["r"]),
        )
