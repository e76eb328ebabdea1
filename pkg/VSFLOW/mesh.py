# This is free software, licensed under the LGPL v3. See the file "COPYING" for
# details.
"""Structured hexahedral grids over a box domain.

The grid is axis aligned, so every face normal is a coordinate axis and the
two-point flux approximation is consistent on it. Quasi two-dimensional
problems are modelled with a single cell layer along one axis.

Cells are numbered with x running fastest: ``c = i + nx * (j + ny * k)``.
Interior faces come first (x, y, then z direction), followed by the boundary
faces grouped by box side."""

import collections
import dataclasses
import typing

import numpy as np

from .errors import ConfigurationError, MeshError

SIDES = ("xmin", "xmax", "ymin", "ymax", "zmin", "zmax")
AXES = "xyz"


@dataclasses.dataclass(frozen=True)
class CellGeometry:
    """Geometry of one cell. `z_min` and `z_max` are the minimal and maximal
    vertical node coordinates used by the water content model."""

    centroid: tuple
    volume: float
    z_min: float
    z_max: float


@dataclasses.dataclass(frozen=True)
class Face:
    """An oriented face. Interior faces point from ``cells[0]`` to
    ``cells[1]``, boundary faces point out of the domain."""

    area: float
    normal: tuple
    centroid: tuple
    cells: tuple
    distances: tuple
    axis: int
    tag: typing.Optional[str] = None

    @property
    def is_boundary(self):
        return self.tag is not None


class TransmissibilityGeometry(typing.NamedTuple):
    """Cell-center-to-face distances and the axis whose diagonal conductivity
    entry has to be sampled on either side."""

    distances: tuple
    axis: int


# pylint: disable=too-many-instance-attributes
class Mesh:
    """Immutable structured grid. Besides the per-cell and per-face objects,
    the mesh keeps flat numpy arrays which the assembly works on:

    - cells: ``centroids`` (n, 3), ``volumes``, ``z_min``, ``z_max``,
      ``cell_region``
    - interior faces: ``face_cells`` (ni, 2), ``face_area``, ``face_axis``,
      ``face_dist`` (ni, 2)
    - boundary faces: ``bface_cell``, ``bface_area``, ``bface_axis``,
      ``bface_dist``, ``bface_centroid`` (nb, 3), ``bface_tag``,
      ``bface_sign``

    `cells` is the tuple (ijk, centroids, volumes, cell_region) computed by
    build_box_grid.
    """

    def __init__(self, extents, counts, coords, cells, interior, boundary):
        self.extents = tuple(extents)
        self.counts = tuple(counts)
        self.coords = tuple(coords)
        self._ijk, self.centroids, self.volumes, cell_region = cells
        self.z_min = self.coords[2][self._ijk[2]]
        self.z_max = self.coords[2][self._ijk[2] + 1]
        self.cell_region = np.asarray(cell_region, dtype=object)

        (
            self.face_cells,
            self.face_area,
            self.face_axis,
            self.face_dist,
            self.face_centroid,
        ) = interior
        (
            self.bface_cell,
            self.bface_area,
            self.bface_axis,
            self.bface_dist,
            self.bface_centroid,
            self.bface_tag,
            self.bface_sign,
        ) = boundary
        for array in vars(self).values():
            if isinstance(array, np.ndarray):
                array.setflags(write=False)
        offset = len(self.face_area)
        self.boundary_faces = {
            side: [offset + int(i) for i in np.flatnonzero(self.bface_tag == side)]
            for side in SIDES
        }
        self.__cells = None
        self.__faces = None
        self.__cell_faces = None

    @property
    def num_cells(self):
        return len(self.volumes)

    @property
    def num_interior_faces(self):
        return len(self.face_area)

    @property
    def num_boundary_faces(self):
        return len(self.bface_area)

    @property
    def cells(self):
        """List of CellGeometry, built on first access."""
        if self.__cells is None:
            self.__cells = [
                CellGeometry(tuple(c), float(v), float(lo), float(hi))
                for c, v, lo, hi in zip(
                    self.centroids, self.volumes, self.z_min, self.z_max
                )
            ]
        return self.__cells

    @property
    def faces(self):
        """List of Face objects: interior faces first, boundary faces after."""
        if self.__faces is None:
            faces = []
            for (c0, c1), area, axis, dist, centroid in zip(
                self.face_cells,
                self.face_area,
                self.face_axis,
                self.face_dist,
                self.face_centroid,
            ):
                normal = [0.0, 0.0, 0.0]
                normal[axis] = 1.0
                faces.append(
                    Face(
                        float(area),
                        tuple(normal),
                        tuple(centroid),
                        (int(c0), int(c1)),
                        (float(dist[0]), float(dist[1])),
                        int(axis),
                    )
                )
            for cell, area, axis, dist, centroid, tag, sign in zip(
                self.bface_cell,
                self.bface_area,
                self.bface_axis,
                self.bface_dist,
                self.bface_centroid,
                self.bface_tag,
                self.bface_sign,
            ):
                normal = [0.0, 0.0, 0.0]
                normal[axis] = float(sign)
                faces.append(
                    Face(
                        float(area),
                        tuple(normal),
                        tuple(centroid),
                        (int(cell),),
                        (float(dist),),
                        int(axis),
                        str(tag),
                    )
                )
            self.__faces = faces
        return self.__faces

    def cell_faces(self, cell):
        """Return the faces of `cell` as list of (face index, sign) tuples;
        sign is +1 if the face normal points out of the cell."""
        if self.__cell_faces is None:
            lookup = collections.defaultdict(list)
            for index, (c0, c1) in enumerate(self.face_cells):
                lookup[int(c0)].append((index, 1))
                lookup[int(c1)].append((index, -1))
            offset = self.num_interior_faces
            for index, cell_id in enumerate(self.bface_cell):
                lookup[int(cell_id)].append((offset + index, 1))
            self.__cell_faces = dict(lookup)
        return self.__cell_faces.get(cell, [])

    def points(self):
        """Grid nodes, x running fastest."""
        x, y, z = np.meshgrid(*self.coords, indexing="ij")
        return np.column_stack(
            [x.ravel(order="F"), y.ravel(order="F"), z.ravel(order="F")]
        )

    def cell_nodes(self):
        """Node indices per cell in VTK hexahedron order."""
        nx, ny, _nz = self.counts
        i, j, k = self._ijk
        node = lambda a, b, c: a + (nx + 1) * (b + (ny + 1) * c)
        return np.column_stack(
            [
                node(i, j, k),
                node(i + 1, j, k),
                node(i + 1, j + 1, k),
                node(i, j + 1, k),
                node(i, j, k + 1),
                node(i + 1, j, k + 1),
                node(i + 1, j + 1, k + 1),
                node(i, j + 1, k + 1),
            ]
        )

    def total_volume(self):
        return float(np.sum(self.volumes))


def check_layers(region_layers, height):
    """Sort the (z_low, z_high, region) layers and make sure that they
    partition [0, height] without overlaps or gaps."""
    if not region_layers:
        raise ConfigurationError(_("at least one region layer is required"))
    layers = sorted(
        ((float(lo), float(hi), region) for lo, hi, region in region_layers),
        key=lambda layer: layer[0],
    )
    tol = 1e-12 * max(1.0, height)
    for lo, hi, region in layers:
        if not hi > lo:
            raise ConfigurationError(
                _("layer of region %s has z_high <= z_low") % region
            )
    if abs(layers[0][0]) > tol:
        raise ConfigurationError(
            _("region layers start at z = %g, not at 0") % layers[0][0]
        )
    if abs(layers[-1][1] - height) > tol:
        raise ConfigurationError(
            _("region layers end at z = %g, but the domain height is %g")
            % (layers[-1][1], height)
        )
    for below, above in zip(layers, layers[1:]):
        if above[0] < below[1] - tol:
            raise ConfigurationError(
                _("region layers %s and %s overlap") % (below[2], above[2])
            )
        if above[0] > below[1] + tol:
            raise ConfigurationError(
                _("gap between region layers %s and %s") % (below[2], above[2])
            )
    return layers


def _assign_regions(layers, z):
    edges = np.array([layer[0] for layer in layers])
    index = np.clip(np.searchsorted(edges, z, side="right") - 1, 0, len(layers) - 1)
    regions = np.empty(len(layers), dtype=object)
    regions[:] = [layer[2] for layer in layers]
    return regions[index]


# pylint: disable=too-many-locals
def build_box_grid(extents, counts, region_layers):
    """build_box_grid((Lx, Ly, Lz), (nx, ny, nz), [(z_low, z_high, region)...])
    Build a structured grid of nx*ny*nz hexahedra over [0,Lx]x[0,Ly]x[0,Lz].
    Each cell gets the region of the layer containing its centroid; boundary
    faces are tagged with the box side they lie on."""
    extents = tuple(float(e) for e in extents)
    counts = tuple(int(c) for c in counts)
    if len(extents) != 3 or len(counts) != 3:
        raise ConfigurationError(_("extents and counts need three entries each"))
    if any(c < 1 for c in counts):
        raise ConfigurationError(_("cell counts must be at least 1: %s") % (counts,))
    if any(not e > 0 for e in extents):
        raise ConfigurationError(_("extents must be positive: %s") % (extents,))
    layers = check_layers(region_layers, extents[2])

    coords = [np.linspace(0.0, length, n + 1) for length, n in zip(extents, counts)]
    nx, ny, nz = counts
    cells = np.arange(nx * ny * nz)
    ijk = (cells % nx, (cells // nx) % ny, cells // (nx * ny))
    strides = (1, nx, nx * ny)
    centers = [0.5 * (c[1:] + c[:-1]) for c in coords]
    widths = [np.diff(c) for c in coords]
    centroids = np.column_stack([centers[a][ijk[a]] for a in range(3)])

    def area(axis, selection):
        others = [b for b in range(3) if b != axis]
        return (
            widths[others[0]][ijk[others[0]][selection]]
            * widths[others[1]][ijk[others[1]][selection]]
        )

    def shifted(selection, axis, position):
        points = centroids[selection].copy()
        points[:, axis] = position
        return points

    interior = [[] for _i in range(5)]
    for axis in range(3):
        lower = np.flatnonzero(ijk[axis] < counts[axis] - 1)
        upper = lower + strides[axis]
        plane = coords[axis][ijk[axis][lower] + 1]
        interior[0].append(np.column_stack([lower, upper]))
        interior[1].append(area(axis, lower))
        interior[2].append(np.full(len(lower), axis))
        below = plane - centers[axis][ijk[axis][lower]]
        above = centers[axis][ijk[axis][upper]] - plane
        interior[3].append(np.column_stack([below, above]))
        interior[4].append(shifted(lower, axis, plane))
    interior = [np.concatenate(part) for part in interior]
    interior[0] = interior[0].reshape(-1, 2).astype(int)
    interior[3] = interior[3].reshape(-1, 2)
    interior[4] = interior[4].reshape(-1, 3)

    boundary = [[] for _i in range(7)]
    for side in SIDES:
        axis = AXES.index(side[0])
        at_min = side.endswith("min")
        selection = np.flatnonzero(ijk[axis] == (0 if at_min else counts[axis] - 1))
        plane = coords[axis][0] if at_min else coords[axis][-1]
        boundary[0].append(selection)
        boundary[1].append(area(axis, selection))
        boundary[2].append(np.full(len(selection), axis))
        boundary[3].append(np.abs(centroids[selection, axis] - plane))
        boundary[4].append(shifted(selection, axis, plane))
        boundary[5].append(np.full(len(selection), side, dtype=object))
        boundary[6].append(np.full(len(selection), -1.0 if at_min else 1.0))
    boundary = [np.concatenate(part) for part in boundary]
    boundary[0] = boundary[0].astype(int)
    boundary[4] = boundary[4].reshape(-1, 3)

    if np.any(interior[3] <= 0) or np.any(boundary[3] <= 0):
        raise MeshError(_("degenerate cell-center-to-face distance"))
    regions = _assign_regions(layers, centroids[:, 2])
    volumes = widths[0][ijk[0]] * widths[1][ijk[1]] * widths[2][ijk[2]]
    cell_data = (ijk, centroids, volumes, regions)
    return Mesh(extents, counts, coords, cell_data, interior, boundary)


def face_transmissibility_geometry(mesh, face):
    """Return the TransmissibilityGeometry of `face` (a face index or a Face
    of `mesh`): both center-to-face distances of an interior face or the single
    distance of a boundary face, together with the face axis."""
    if isinstance(face, Face):
        distances, axis = face.distances, face.axis
    else:
        index = int(face)
        if index < 0 or index >= mesh.num_interior_faces + mesh.num_boundary_faces:
            raise MeshError(_("face %d does not belong to the mesh") % index)
        if index < mesh.num_interior_faces:
            distances = tuple(float(d) for d in mesh.face_dist[index])
            axis = int(mesh.face_axis[index])
        else:
            index -= mesh.num_interior_faces
            distances = (float(mesh.bface_dist[index]),)
            axis = int(mesh.bface_axis[index])
    if any(not d > 0 for d in distances):
        raise MeshError(_("degenerate zero cell-center-to-face distance"))
    return TransmissibilityGeometry(distances, axis)
