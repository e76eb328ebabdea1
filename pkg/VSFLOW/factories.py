# This is free software, licensed under the LGPL v3. See the file "COPYING" for
# details.
"""Build meshes, boundary conditions and discretized problems from parsed
configurations, and give access to the bundled example problems."""

import dataclasses
import logging
import os

from . import common, config, discretization, mesh
from .config import BoundaryType
from .errors import ConfigurationError

log = logging.getLogger(__name__)

DATA_DIRECTORY = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")
#: bundled problems and their description
EXAMPLES = {
    "dam": _("homogeneous dam with seepage face, 40x1x40 cells"),
    "layered": _("three-layer anisotropic site with recharge"),
}


def example_path(name):
    if name not in EXAMPLES:
        raise ConfigurationError(
            _("unknown example %s, available: %s") % (name, ", ".join(sorted(EXAMPLES)))
        )
    return os.path.join(DATA_DIRECTORY, name + ".conf")


def example_text(name):
    with open(example_path(name), "r", encoding="utf-8") as f:
        return f.read()


def example_config(name, counts=None):
    """Parsed bundled configuration, optionally with other cell counts."""
    cfg = config.read_config(example_path(name))
    if counts is not None:
        cfg = dataclasses.replace(
            cfg,
            mesh=dataclasses.replace(cfg.mesh, counts=tuple(int(c) for c in counts)),
        )
    return cfg


def build_mesh(cfg):
    return mesh.build_box_grid(cfg.mesh.extents, cfg.mesh.counts, cfg.mesh.layers)


def boundary_condition(boundary):
    if boundary.type is BoundaryType.Dirichlet:
        return discretization.DirichletHead(boundary.head)
    if boundary.type is BoundaryType.Flux:
        return discretization.NeumannFlux(boundary.flux)
    return discretization.Seepage()


def build_boundary_conditions(grid, cfg):
    """Assign the configured conditions; uncovered faces stay no-flow."""
    bcs = discretization.BoundaryConditions(grid)
    for boundary in cfg.boundaries:
        count = bcs.set_side(
            boundary.side,
            boundary_condition(boundary),
            z_low=boundary.z_low,
            z_high=boundary.z_high,
        )
        if not count:
            common.WarningRegistry().register_warning(
                _("boundary condition does not apply to any face"),
                side=boundary.side,
                line=boundary.line,
            )
        log.debug(
            "%s boundary on %s: %d faces", boundary.type.value, boundary.side, count
        )
    if not bcs.is_well_posed():
        raise ConfigurationError(
            _("ill-posed problem: no boundary face fixes the head"), cfg.path
        )
    return bcs


def build_problem(cfg):
    """build_problem(ProblemConfig) -> RichardsProblem"""
    grid = build_mesh(cfg)
    bcs = build_boundary_conditions(grid, cfg)
    sources = discretization.SourceField.from_regions(grid, cfg.sources)
    log.info(
        "problem with %d cells, %d interior and %d boundary faces",
        grid.num_cells,
        grid.num_interior_faces,
        grid.num_boundary_faces,
    )
    return discretization.RichardsProblem(
        grid,
        cfg.regions,
        bcs,
        sources,
        kind=cfg.solver.kind,
        kr_scheme=cfg.solver.kr_scheme,
        kr_floor=cfg.solver.kr_floor,
    )


def dam_problem(counts=(40, 1, 40), **overrides):
    """The bundled dam problem; `overrides` go to ProblemConfig.with_overrides."""
    return build_problem(example_config("dam", counts).with_overrides(**overrides))
