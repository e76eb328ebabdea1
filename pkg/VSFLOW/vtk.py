# This is free software, licensed under the LGPL v3. See the file "COPYING" for
# details.
"""Legacy ASCII VTK output of hexahedral meshes with cell data."""

import collections

import numpy as np

from .errors import MeshError

VTK_HEXAHEDRON = 12


def _scalar_name(name):
    return "".join(c if c.isalnum() or c in "_-" else "_" for c in str(name))


def write_vtk(path, mesh, fields, title="vsflow"):
    """write_vtk(path, mesh, {"head": h, ...})
    Write an unstructured grid with one SCALARS block of CELL_DATA per field.
    Every field must have one value per cell."""
    fields = collections.OrderedDict(fields)
    n = mesh.num_cells
    for name, values in fields.items():
        if np.shape(values) != (n,):
            raise MeshError(
                _("field %s has shape %s, expected %d cell values")
                % (name, np.shape(values), n)
            )
    points = mesh.points()
    cells = mesh.cell_nodes()
    with open(path, "w", encoding="utf-8") as f:
        f.write("# vtk DataFile Version 2.0\n")
        f.write("%s\n" % title.replace("\n", " ")[:255])
        f.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        f.write("POINTS %d double\n" % len(points))
        for point in points:
            f.write("%.17g %.17g %.17g\n" % tuple(point))
        f.write("\nCELLS %d %d\n" % (n, n * 9))
        for nodes in cells:
            f.write("8 %s\n" % " ".join(str(int(node)) for node in nodes))
        f.write("\nCELL_TYPES %d\n" % n)
        f.write("%d\n" % VTK_HEXAHEDRON * n)
        f.write("\nCELL_DATA %d\n" % n)
        for name, values in fields.items():
            f.write("SCALARS %s double 1\nLOOKUP_TABLE default\n" % _scalar_name(name))
            for value in np.asarray(values, dtype=float):
                f.write("%.17g\n" % value)
