# pylint: disable=too-many-public-methods,import-error,too-few-public-methods,missing-docstring,unused-variable,multiple-imports
import unittest

import numpy as np

from VSFLOW import errors, mesh

single = lambda: mesh.build_box_grid((1, 1, 1), (1, 1, 1), [(0, 1, "r")])


class TestBuildBoxGrid(unittest.TestCase):
    def test_single_cell_has_six_boundary_faces(self):
        m = single()
        self.assertEqual(m.num_cells, 1)
        self.assertEqual(m.num_interior_faces, 0)
        self.assertEqual(m.num_boundary_faces, 6)
        self.assertEqual(sorted(set(m.bface_tag)), sorted(mesh.SIDES))

    def test_two_cells_share_one_face(self):
        m = mesh.build_box_grid((2, 1, 1), (2, 1, 1), [(0, 1, "r")])
        self.assertEqual(m.num_cells, 2)
        self.assertEqual(m.num_interior_faces, 1)
        self.assertEqual(m.num_boundary_faces, 10)
        self.assertEqual(tuple(m.face_cells[0]), (0, 1))

    def test_dam_grid_has_1600_cells_of_quarter_metre(self):
        m = mesh.build_box_grid((10, 0.25, 10), (40, 1, 40), [(0, 10, "dam")])
        self.assertEqual(m.num_cells, 1600)
        np.testing.assert_allclose(m.volumes, 0.25 ** 3)
        np.testing.assert_allclose(m.z_max - m.z_min, 0.25)

    def test_total_volume_equals_box_volume(self):
        m = mesh.build_box_grid((3.0, 2.0, 7.0), (3, 4, 7), [(0, 7, "r")])
        self.assertAlmostEqual(m.total_volume() / 42.0, 1.0, delta=1e-12)

    def test_cell_numbering_runs_x_fastest(self):
        m = mesh.build_box_grid((2, 2, 2), (2, 2, 2), [(0, 2, "r")])
        np.testing.assert_allclose(m.centroids[1], (1.5, 0.5, 0.5))
        np.testing.assert_allclose(m.centroids[2], (0.5, 1.5, 0.5))
        np.testing.assert_allclose(m.centroids[4], (0.5, 0.5, 1.5))

    def test_regions_are_assigned_by_centroid_z(self):
        layers = [(0, 1, "bottom"), (1, 3, "top")]
        m = mesh.build_box_grid((1, 1, 3), (1, 1, 3), layers)
        self.assertEqual(list(m.cell_region), ["bottom", "top", "top"])

    def test_overlapping_layers_are_rejected(self):
        with self.assertRaises(errors.ConfigurationError):
            mesh.build_box_grid((1, 1, 2), (1, 1, 2), [(0, 1.5, "a"), (1, 2, "b")])

    def test_gap_between_layers_is_rejected(self):
        with self.assertRaises(errors.ConfigurationError):
            mesh.build_box_grid((1, 1, 2), (1, 1, 2), [(0, 0.5, "a"), (1, 2, "b")])

    def test_layers_must_cover_the_domain_height(self):
        with self.assertRaises(errors.ConfigurationError):
            mesh.build_box_grid((1, 1, 2), (1, 1, 2), [(0, 1, "a")])

    def test_zero_cell_count_is_rejected(self):
        with self.assertRaises(errors.ConfigurationError):
            mesh.build_box_grid((1, 1, 1), (0, 1, 1), [(0, 1, "a")])

    def test_face_normals_have_unit_length(self):
        m = mesh.build_box_grid((2, 3, 4), (2, 3, 2), [(0, 4, "r")])
        for face in m.faces:
            self.assertAlmostEqual(np.linalg.norm(face.normal), 1.0, delta=1e-12)
            self.assertTrue(all(d > 0 for d in face.distances))

    def test_cell_geometry_bounds_centroid(self):
        m = mesh.build_box_grid((1, 1, 2), (1, 1, 4), [(0, 2, "r")])
        for cell in m.cells:
            self.assertLess(cell.z_min, cell.z_max)
            self.assertTrue(cell.z_min <= cell.centroid[2] <= cell.z_max)

    def test_arrays_are_read_only(self):
        m = single()
        with self.assertRaises(ValueError):
            m.volumes[0] = 2.0


class TestCellFaces(unittest.TestCase):
    def test_interior_faces_appear_twice_with_opposite_orientation(self):
        m = mesh.build_box_grid((3, 2, 2), (3, 2, 2), [(0, 2, "r")])
        seen = {}
        for cell in range(m.num_cells):
            for face, sign in m.cell_faces(cell):
                seen.setdefault(face, []).append(sign)
        for face in range(m.num_interior_faces):
            self.assertEqual(sorted(seen[face]), [-1, 1])
        for face in range(m.num_interior_faces, len(m.faces)):
            self.assertEqual(seen[face], [1])

    def test_divergence_of_constant_field_vanishes(self):
        m = mesh.build_box_grid((2, 3, 1), (2, 3, 2), [(0, 1, "r")])
        field = np.array([0.3, -1.2, 2.5])
        faces = m.faces
        for cell in range(m.num_cells):
            total = 0.0
            for index, sign in m.cell_faces(cell):
                face = faces[index]
                total += sign * face.area * np.dot(field, face.normal)
            self.assertAlmostEqual(total, 0.0, delta=1e-12)

    def test_every_cell_of_a_box_has_six_faces(self):
        m = mesh.build_box_grid((2, 2, 2), (2, 2, 2), [(0, 2, "r")])
        for cell in range(m.num_cells):
            self.assertEqual(len(m.cell_faces(cell)), 6)


class TestTransmissibilityGeometry(unittest.TestCase):
    def test_unit_cube_pair_has_half_metre_distances(self):
        m = mesh.build_box_grid((2, 1, 1), (2, 1, 1), [(0, 1, "r")])
        geometry = mesh.face_transmissibility_geometry(m, 0)
        self.assertEqual(geometry.distances, (0.5, 0.5))
        self.assertEqual(geometry.axis, 0)

    def test_boundary_face_of_unit_cube(self):
        m = single()
        geometry = mesh.face_transmissibility_geometry(m, m.boundary_faces["zmax"][0])
        self.assertEqual(geometry.distances, (0.5,))
        self.assertEqual(geometry.axis, 2)

    def test_dam_cells_have_eighth_metre_distances(self):
        m = mesh.build_box_grid((10, 0.25, 10), (40, 1, 40), [(0, 10, "dam")])
        for face in (0, m.num_interior_faces - 1):
            geometry = mesh.face_transmissibility_geometry(m, face)
            np.testing.assert_allclose(geometry.distances, (0.125, 0.125))

    def test_face_objects_are_accepted(self):
        m = single()
        geometry = mesh.face_transmissibility_geometry(m, m.faces[0])
        self.assertEqual(geometry.distances, (0.5,))

    def test_unknown_face_raises(self):
        with self.assertRaises(errors.MeshError):
            mesh.face_transmissibility_geometry(single(), 6)


class TestVtkNodes(unittest.TestCase):
    def test_single_cell_has_eight_points(self):
        m = single()
        self.assertEqual(m.points().shape, (8, 3))
        self.assertEqual(list(m.cell_nodes()[0]), [0, 1, 3, 2, 4, 5, 7, 6])
