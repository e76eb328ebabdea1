# This is free software, licensed under the LGPL v3. See the file "COPYING" for
# details.
"""Two-point flux approximation of the (continuation parameterized) steady
Richards equation and of its implicit Euler transient counterpart.

The residual of cell i is the sum of its outward face fluxes minus the source
integral. Interior face fluxes read

    flux = K(kr_face, q) * T * (h_i - h_j)

with T the harmonic average of the directional conductivities over the two
half distances. Face fluxes are evaluated on Dual numbers, so the Jacobian is
a by-product of the residual evaluation: upwind direction and seepage switch
are taken from the state the system is assembled at."""

import collections
import dataclasses
import enum
import logging
import types

import numpy as np
import scipy.sparse as sps

from . import constitutive, linsolve
from .constitutive import ContinuationFunctionKind, KR_FLOOR
from .dual import Dual, where
from .errors import ConfigurationError

log = logging.getLogger(__name__)

#: upper limit of linear solves spent on settling the seepage faces of the
#: linear (q = 0) problem
MAX_SEEPAGE_PASSES = 20


class KrScheme(enum.Enum):
    Upwind = "upwind"
    Central = "central"

    @classmethod
    def from_string(cls, name):
        for scheme in cls:
            if scheme.value == str(name).strip().lower():
                return scheme
        raise ValueError(
            "unknown relative permeability scheme %s, expected one of %s"
            % (name, ", ".join(s.value for s in cls))
        )


@dataclasses.dataclass(frozen=True)
class DirichletHead:
    head: float


@dataclasses.dataclass(frozen=True)
class NeumannFlux:
    """Prescribed flux in m/day, positive out of the domain."""

    flux: float = 0.0


@dataclasses.dataclass(frozen=True)
class Seepage:
    """Outflow at atmospheric pressure (h = z) only, no inflow."""


NO_FLOW = NeumannFlux(0.0)

_NEUMANN, _DIRICHLET, _SEEPAGE = 0, 1, 2


class BoundaryConditions:
    """One condition per boundary face; no-flow unless set otherwise.

    b = BoundaryConditions(mesh)
    b.set_side("xmin", DirichletHead(10.0))
    b.set_side("xmax", DirichletHead(2.0), z_high=2.0)
    b.set_side("xmax", Seepage(), z_low=2.0)

    A face is selected by a z range if its centroid lies in [z_low, z_high).
    """

    def __init__(self, mesh):
        self._mesh = mesh
        self._conditions = [NO_FLOW] * mesh.num_boundary_faces
        self.__arrays = None

    def set_side(self, side, condition, z_low=None, z_high=None):
        """Assign `condition` to the faces of `side`, optionally restricted to
        a z range. Returns the number of faces that were set."""
        if not isinstance(condition, (DirichletHead, NeumannFlux, Seepage)):
            raise TypeError("unsupported boundary condition %r" % (condition,))
        mesh = self._mesh
        selection = mesh.bface_tag == side
        z = mesh.bface_centroid[:, 2]
        if z_low is not None:
            selection &= z >= z_low
        if z_high is not None:
            selection &= z < z_high
        faces = np.flatnonzero(selection)
        for face in faces:
            self._conditions[face] = condition
        self.__arrays = None
        return len(faces)

    def __getitem__(self, boundary_face):
        return self._conditions[boundary_face]

    def __iter__(self):
        return iter(self._conditions)

    def __len__(self):
        return len(self._conditions)

    def is_well_posed(self):
        """At least one face must fix the head level."""
        return any(not isinstance(c, NeumannFlux) for c in self._conditions)

    def arrays(self):
        """Return (kind codes, prescribed heads, prescribed fluxes)."""
        if self.__arrays is None:
            count = len(self._conditions)
            codes = np.zeros(count, dtype=int)
            heads = np.zeros(count)
            fluxes = np.zeros(count)
            for index, condition in enumerate(self._conditions):
                if isinstance(condition, DirichletHead):
                    codes[index] = _DIRICHLET
                    heads[index] = condition.head
                elif isinstance(condition, Seepage):
                    codes[index] = _SEEPAGE
                else:
                    fluxes[index] = condition.flux
            self.__arrays = (codes, heads, fluxes)
        return self.__arrays

    def dirichlet_heads(self):
        codes, heads, _fluxes = self.arrays()
        return heads[codes == _DIRICHLET]


@dataclasses.dataclass
class HeadState:
    """Hydraulic head per cell in m."""

    h: np.ndarray

    def __post_init__(self):
        self.h = np.array(self.h, dtype=float)
        if self.h.ndim != 1:
            raise ValueError("head state must be a vector")
        if not np.all(np.isfinite(self.h)):
            raise ValueError("head state contains non-finite entries")

    @classmethod
    def constant(cls, mesh, head):
        return cls(np.full(mesh.num_cells, float(head)))

    def __len__(self):
        return len(self.h)


def as_heads(state, mesh=None):
    """Accept a HeadState or a plain vector and return a float vector."""
    heads = state.h if isinstance(state, HeadState) else np.asarray(state, dtype=float)
    if mesh is not None and len(heads) != mesh.num_cells:
        raise ValueError(
            "head state has %d entries, mesh has %d cells"
            % (len(heads), mesh.num_cells)
        )
    return heads


@dataclasses.dataclass
class SourceField:
    """Volumetric source density Q in 1/day per cell."""

    Q: np.ndarray

    def __post_init__(self):
        self.Q = np.array(self.Q, dtype=float)
        if not np.all(np.isfinite(self.Q)):
            raise ValueError("source field contains non-finite entries")

    @classmethod
    def zeros(cls, mesh):
        return cls(np.zeros(mesh.num_cells))

    @classmethod
    def from_regions(cls, mesh, rates):
        """Build a field from a {region: rate} mapping."""
        rates = {str(k): float(v) for k, v in rates.items()}
        return cls(np.array([rates.get(str(r), 0.0) for r in mesh.cell_region]))

    def integral(self, mesh):
        return float(np.sum(self.Q * mesh.volumes))


@dataclasses.dataclass
class SparseSystem:
    """Jacobian matrix (CSR) and right-hand side -F."""

    matrix: sps.csr_matrix
    rhs: np.ndarray


@dataclasses.dataclass
class FluxReport:
    """Outward boundary fluxes in m^3/day, summed per box side and per kind of
    condition, and the source integral."""

    by_tag: dict
    by_kind: dict
    source: float

    @property
    def net_outflow(self):
        return sum(self.by_tag.values())

    @property
    def inflow(self):
        return -sum(v for v in self.by_tag.values() if v < 0)


def _media_field(mesh, media):
    if isinstance(media, constitutive.MediaField):
        return media
    return constitutive.MediaField(mesh, media)


def _sources(mesh, sources):
    if sources is None:
        return SourceField.zeros(mesh)
    if isinstance(sources, SourceField):
        return sources
    return SourceField(sources)


def transmissibilities(mesh, media):
    """Geometric two-point transmissibilities of interior and boundary faces
    (m^2/day). Boundary faces use the half transmissibility of the cell."""
    c0, c1 = mesh.face_cells[:, 0], mesh.face_cells[:, 1]
    k0 = media.conductivity[c0, mesh.face_axis]
    k1 = media.conductivity[c1, mesh.face_axis]
    interior = mesh.face_area / (mesh.face_dist[:, 0] / k0 + mesh.face_dist[:, 1] / k1)
    kb = media.conductivity[mesh.bface_cell, mesh.bface_axis]
    boundary = mesh.bface_area * kb / mesh.bface_dist
    return interior, boundary


def _face_permeability(kr_first, kr_second, dh, kr_scheme):
    """Relative permeability of a face: the upstream value or the mean. For
    upwinding, `first` is upstream when dh > 0; ties take the mean."""
    mean = 0.5 * (kr_first + kr_second)
    if kr_scheme is KrScheme.Central:
        return mean
    return where(dh.value > 0, kr_first, where(dh.value < 0, kr_second, mean))


def _subset(mesh, media, cells):
    cell = types.SimpleNamespace(z_min=mesh.z_min[cells], z_max=mesh.z_max[cells])
    medium = types.SimpleNamespace(
        porosity=media.porosity[cells],
        alpha_phi=media.alpha_phi[cells],
        alpha_theta=media.alpha_theta[cells],
    )
    return cell, medium


def _scatter(cells, weights, n):
    """Sum `weights` per cell. Float even when there is nothing to sum."""
    return np.bincount(cells, weights=weights, minlength=n).astype(float)


_Assembly = collections.namedtuple(
    "_Assembly", "residual rows cols vals boundary_flux seepage_active"
)


# pylint: disable=too-many-arguments,too-many-locals
def _assemble_steady(mesh, media, bcs, sources, h, q, kind, kr_scheme, kr_floor):
    n = mesh.num_cells
    t_int, t_bnd = transmissibilities(mesh, media)
    kr = constitutive.relative_permeability(h, mesh, media, kr_floor)
    dkr = constitutive.relative_permeability_derivative(h, mesh, media, kr_floor)

    # interior faces, seeds: (first cell, second cell)
    c0, c1 = mesh.face_cells[:, 0], mesh.face_cells[:, 1]
    h0 = Dual.seed(h[c0], 0, 2)
    h1 = Dual.seed(h[c1], 1, 2)
    dh = h0 - h1
    kr_face = _face_permeability(
        h0.chain(kr[c0], dkr[c0]), h1.chain(kr[c1], dkr[c1]), dh, kr_scheme
    )
    flux = constitutive.continuation_permeability(kr_face, q, kind) * t_int * dh
    residual = _scatter(c0, flux.value, n) - _scatter(c1, flux.value, n)
    g0, g1 = flux.grad[:, 0], flux.grad[:, 1]
    rows = [c0, c0, c1, c1]
    cols = [c0, c1, c0, c1]
    vals = [g0, g1, -g0, -g1]

    # boundary faces, seed: the adjacent cell
    codes, heads, fluxes = bcs.arrays()
    cells = mesh.bface_cell
    z_face = mesh.bface_centroid[:, 2]
    seepage_active = (codes == _SEEPAGE) & (h[cells] > z_face)
    active = np.flatnonzero((codes == _DIRICHLET) | seepage_active)
    boundary_flux = np.where(codes == _NEUMANN, fluxes * mesh.bface_area, 0.0)
    if len(active):
        bcells = cells[active]
        h_b = np.where(codes[active] == _DIRICHLET, heads[active], z_face[active])
        hc = Dual.seed(h[bcells], 0, 1)
        cell, medium = _subset(mesh, media, bcells)
        kr_b = Dual.constant(
            constitutive.relative_permeability(h_b, cell, medium, kr_floor), 1
        )
        dh_b = hc - h_b
        kr_face = _face_permeability(
            hc.chain(kr[bcells], dkr[bcells]), kr_b, dh_b, kr_scheme
        )
        bflux = constitutive.continuation_permeability(kr_face, q, kind) * dh_b
        bflux = bflux * t_bnd[active]
        boundary_flux[active] = bflux.value
        rows.append(bcells)
        cols.append(bcells)
        vals.append(bflux.grad[:, 0])
    residual += _scatter(cells, boundary_flux, n)
    residual -= sources.Q * mesh.volumes
    return _Assembly(residual, rows, cols, vals, boundary_flux, seepage_active)


def _storage_terms(mesh, media, h_new, h_old, dt):
    """Implicit Euler storage per cell with its derivative (1 seed)."""
    hn = Dual.seed(h_new, 0, 1)
    theta = hn.chain(
        constitutive.water_content(h_new, mesh, media),
        constitutive.water_content_derivative(h_new, mesh, media),
    )
    theta_old = constitutive.water_content(h_old, mesh, media)
    sat = theta / media.porosity
    volume = mesh.volumes
    return (theta - theta_old) * (volume / dt) + sat * (hn - h_old) * (
        volume * media.s_stor / dt
    )


def _to_matrix(n, rows, cols, vals):
    diagonal = np.arange(n)
    rows = np.concatenate(rows + [diagonal])
    cols = np.concatenate(cols + [diagonal])
    vals = np.concatenate(vals + [np.zeros(n)])
    matrix = sps.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    matrix.sum_duplicates()
    matrix.sort_indices()
    return matrix


def assemble_steady_residual(
    mesh,
    media,
    bcs,
    sources,
    state,
    q,
    kind=ContinuationFunctionKind.Power,
    kr_scheme=KrScheme.Upwind,
    kr_floor=KR_FLOOR,
):
    """Residual (m^3/day per cell) of the steady equation with continuation
    parameter `q`."""
    media = _media_field(mesh, media)
    h = as_heads(state, mesh)
    return _assemble_steady(
        mesh, media, bcs, _sources(mesh, sources), h, q, kind, kr_scheme, kr_floor
    ).residual


def assemble_transient_residual(
    mesh,
    media,
    bcs,
    sources,
    state_new,
    state_old,
    dt,
    kind=ContinuationFunctionKind.Power,
    kr_scheme=KrScheme.Upwind,
    kr_floor=KR_FLOOR,
):
    """Implicit Euler residual: storage change over `dt` (days) plus the
    steady residual at the new state with q = 1."""
    if not dt > 0:
        raise ValueError("time step must be positive, got %r" % dt)
    media = _media_field(mesh, media)
    h_new = as_heads(state_new, mesh)
    h_old = as_heads(state_old, mesh)
    steady = _assemble_steady(
        mesh, media, bcs, _sources(mesh, sources), h_new, 1.0, kind, kr_scheme, kr_floor
    )
    return steady.residual + _storage_terms(mesh, media, h_new, h_old, dt).value


def assemble_jacobian_system(
    mesh,
    media,
    bcs,
    sources,
    state,
    q=1.0,
    kind=ContinuationFunctionKind.Power,
    kr_scheme=KrScheme.Upwind,
    kr_floor=KR_FLOOR,
    state_old=None,
    dt=None,
):
    """Assemble J = dF/dh and rhs = -F at `state`. If `state_old` and `dt` are
    given, the transient system (at q = 1) is assembled instead."""
    media = _media_field(mesh, media)
    h = as_heads(state, mesh)
    transient = state_old is not None
    if transient:
        if dt is None or not dt > 0:
            raise ValueError("transient system needs a positive time step")
        q = 1.0
    assembly = _assemble_steady(
        mesh, media, bcs, _sources(mesh, sources), h, q, kind, kr_scheme, kr_floor
    )
    residual = assembly.residual
    rows, cols, vals = list(assembly.rows), list(assembly.cols), list(assembly.vals)
    if transient:
        storage = _storage_terms(mesh, media, h, as_heads(state_old, mesh), dt)
        residual = residual + storage.value
        diagonal = np.arange(mesh.num_cells)
        rows.append(diagonal)
        cols.append(diagonal)
        vals.append(storage.grad[:, 0])
    matrix = _to_matrix(mesh.num_cells, rows, cols, vals)
    return SparseSystem(matrix, -residual)


def boundary_flux_report(
    mesh,
    media,
    bcs,
    sources,
    state,
    q=1.0,
    kind=ContinuationFunctionKind.Power,
    kr_scheme=KrScheme.Upwind,
    kr_floor=KR_FLOOR,
):
    """Signed outward flux totals per boundary side and per condition kind,
    plus the source integral."""
    media = _media_field(mesh, media)
    sources = _sources(mesh, sources)
    h = as_heads(state, mesh)
    assembly = _assemble_steady(
        mesh, media, bcs, sources, h, q, kind, kr_scheme, kr_floor
    )
    codes, _heads, _fluxes = bcs.arrays()
    by_tag = {}
    for tag in np.unique(mesh.bface_tag):
        by_tag[str(tag)] = float(np.sum(assembly.boundary_flux[mesh.bface_tag == tag]))
    by_kind = {}
    kinds = ("neumann", _NEUMANN), ("dirichlet", _DIRICHLET), ("seepage", _SEEPAGE)
    for name, code in kinds:
        by_kind[name] = float(np.sum(assembly.boundary_flux[codes == code]))
    return FluxReport(by_tag, by_kind, sources.integral(mesh))


class SteadyProblem:
    """Residual/Jacobian provider of the steady problem at fixed q."""

    def __init__(self, problem, q, kind=None):
        self.problem = problem
        self.q = constitutive.check_continuation_parameter(q)
        self.kind = problem.kind if kind is None else kind

    def residual(self, h):
        p = self.problem
        return assemble_steady_residual(
            p.mesh,
            p.media,
            p.bcs,
            p.sources,
            h,
            self.q,
            self.kind,
            p.kr_scheme,
            p.kr_floor,
        )

    def jacobian_system(self, h):
        p = self.problem
        return assemble_jacobian_system(
            p.mesh,
            p.media,
            p.bcs,
            p.sources,
            h,
            self.q,
            self.kind,
            p.kr_scheme,
            p.kr_floor,
        )


class TransientProblem:
    """Residual/Jacobian provider of one implicit Euler step from `h_old`."""

    def __init__(self, problem, h_old, dt):
        if not dt > 0:
            raise ValueError("time step must be positive, got %r" % dt)
        self.problem = problem
        self.h_old = np.array(as_heads(h_old), dtype=float)
        self.dt = float(dt)

    def residual(self, h):
        p = self.problem
        return assemble_transient_residual(
            p.mesh, p.media, p.bcs, p.sources, h, self.h_old, self.dt,
            p.kind, p.kr_scheme, p.kr_floor,
        )

    def jacobian_system(self, h):
        p = self.problem
        return assemble_jacobian_system(
            p.mesh, p.media, p.bcs, p.sources, h, 1.0, p.kind, p.kr_scheme,
            p.kr_floor, state_old=self.h_old, dt=self.dt,
        )


# pylint: disable=too-many-instance-attributes
class RichardsProblem:
    """A discretized problem: mesh, media, boundary conditions and sources
    together with the continuation function and the face relative
    permeability scheme. It hands out residual providers for the solvers:

    p = RichardsProblem(mesh, {"dam": medium}, bcs)
    steady = p.steady(q=1.0)
    steady.residual(h); steady.jacobian_system(h)
    """

    def __init__(
        self,
        mesh,
        media,
        bcs,
        sources=None,
        kind=ContinuationFunctionKind.Power,
        kr_scheme=KrScheme.Upwind,
        kr_floor=KR_FLOOR,
    ):
        if not bcs.is_well_posed():
            raise ConfigurationError(
                _("ill-posed problem: no boundary face fixes the head")
            )
        self.mesh = mesh
        self.media = _media_field(mesh, media)
        self.bcs = bcs
        self.sources = _sources(mesh, sources)
        self.kind = kind
        self.kr_scheme = kr_scheme
        self.kr_floor = kr_floor

    @property
    def num_cells(self):
        return self.mesh.num_cells

    def steady(self, q=1.0, kind=None):
        return SteadyProblem(self, q, kind)

    def at(self, q, kind=None):
        """Member of the continuation family with parameter `q`, blended by
        `kind` (default: the kind of the problem)."""
        return self.steady(q, kind)

    def transient(self, h_old, dt):
        return TransientProblem(self, h_old, dt)

    def default_initial_head(self):
        """Mean prescribed head, or the domain top without Dirichlet faces."""
        heads = self.bcs.dirichlet_heads()
        if len(heads):
            return float(np.mean(heads))
        return float(self.mesh.extents[2])

    def constant_state(self, head=None):
        if head is None:
            head = self.default_initial_head()
        return np.full(self.num_cells, float(head))

    def seepage_active(self, h):
        codes, _heads, _fluxes = self.bcs.arrays()
        z_face = self.mesh.bface_centroid[:, 2]
        return (codes == _SEEPAGE) & (as_heads(h)[self.mesh.bface_cell] > z_face)

    def solve_linear(self, initial=None, config=None):
        """Solve the q = 0 problem. It is linear for a fixed set of active
        seepage faces; the linear solve is repeated until that set settles.
        Returns (state, linear iterations, number of linear solves)."""
        h = self.constant_state() if initial is None else np.array(initial, float)
        linear = self.steady(0.0)
        iterations = 0
        active = self.seepage_active(h)
        for passes in range(1, MAX_SEEPAGE_PASSES + 1):
            system = linear.jacobian_system(h)
            result = linsolve.solve_linear_system(system.matrix, system.rhs, config)
            iterations += result.iterations
            h = h + result.solution
            now_active = self.seepage_active(h)
            if np.array_equal(now_active, active):
                return h, iterations, passes
            log.debug(
                "seepage faces changed after linear solve %d: %d active",
                passes,
                int(now_active.sum()),
            )
            active = now_active
        log.warning(
            "seepage faces of the linear problem did not settle after %d solves",
            MAX_SEEPAGE_PASSES,
        )
        return h, iterations, MAX_SEEPAGE_PASSES

    def flux_report(self, h, q=1.0):
        return boundary_flux_report(
            self.mesh, self.media, self.bcs, self.sources, h, q, self.kind,
            self.kr_scheme, self.kr_floor,
        )

    def water_content(self, h):
        return constitutive.water_content(as_heads(h), self.mesh, self.media)

    def saturation(self, h):
        return constitutive.saturation(as_heads(h), self.mesh, self.media)

    def floor_active_cells(self, h):
        active = constitutive.floor_active(
            as_heads(h), self.mesh, self.media, self.kr_floor
        )
        return int(np.sum(active))
