"""Handle problem configurations. A configuration is a line-oriented text file
made of sections introduced by `[name]` and `key = value` entries; `#` starts a
comment. The sections `[layer]`, `[region]`, `[boundary]` and `[source]` may
be repeated:

    [mesh]
    extents = 10, 0.25, 10
    counts = 40, 1, 40

    [region]
    id = dam
    k_xx = 0.864
    ...

    [boundary]
    side = xmax
    type = seepage
    z_low = 2

Parsing yields a ProblemConfig with all defaults applied; syntax errors and
unknown keys are reported with the line they occur on.
"""
# vim: set expandtab sts=4 ts=4 sw=4:
# This is free software, licensed under the LGPL v3. See the file "COPYING" for
# details.
# pylint: disable=too-few-public-methods

import dataclasses
import enum
import re
import typing

from . import constitutive, mesh
from .constitutive import ContinuationFunctionKind, MediumProperties
from .continuation import ContinuationConfig
from .discretization import KrScheme
from .errors import ConfigurationError
from .linsolve import LinearSolverConfig
from .newton import NewtonConfig
from .pseudotransient import InitialState, PseudoTransientConfig

VERSION = "1.0"

SECTION_PATTERN = re.compile(r"^\[\s*([A-Za-z_]+)\s*\]$")
ENTRY_PATTERN = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)$")


class Section(enum.Enum):
    Mesh = "mesh"
    Layer = "layer"
    Region = "region"
    Boundary = "boundary"
    Source = "source"
    Solver = "solver"


REPEATED = (Section.Layer, Section.Region, Section.Boundary, Section.Source)


class Strategy(enum.Enum):
    Newton = "newton"
    Continuation = "continuation"
    PseudoTransient = "pseudo_transient"

    @classmethod
    def from_string(cls, name):
        name = str(name).strip().lower().replace("-", "_")
        for strategy in cls:
            if strategy.value == name:
                return strategy
        raise ValueError(
            "unknown strategy %s, expected one of %s"
            % (name, ", ".join(s.value for s in cls))
        )


class BoundaryType(enum.Enum):
    Dirichlet = "dirichlet"
    Flux = "flux"
    Seepage = "seepage"

    @classmethod
    def from_string(cls, name):
        for kind in cls:
            if kind.value == str(name).strip().lower():
                return kind
        raise ValueError(
            "unknown boundary type %s, expected one of %s"
            % (name, ", ".join(k.value for k in cls))
        )


def _triple(convert):
    def parse(value):
        parts = [p.strip() for p in value.split(",")]
        if len(parts) != 3 or not all(parts):
            raise ValueError("expected three comma-separated values")
        return tuple(convert(p) for p in parts)

    return parse


def _boolean(value):
    value = value.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean (true/false)")


def _optional_float(value):
    return None if value.strip().lower() in ("", "none") else float(value)


def _name(value):
    value = value.strip()
    if not value:
        raise ValueError("empty name")
    return value


#: key -> conversion function per section
KEYS = {
    Section.Mesh: {"extents": _triple(float), "counts": _triple(int)},
    Section.Layer: {"z_low": float, "z_high": float, "region": _name},
    Section.Region: {
        "id": _name,
        "k_xx": float,
        "k_yy": float,
        "k_zz": float,
        "porosity": float,
        "alpha_phi": float,
        "alpha_theta": float,
        "s_stor": float,
    },
    Section.Boundary: {
        "side": _name,
        "type": BoundaryType.from_string,
        "head": float,
        "flux": float,
        "z_low": float,
        "z_high": float,
    },
    Section.Source: {"region": _name, "rate": float},
    Section.Solver: {
        "strategy": Strategy.from_string,
        "kind": ContinuationFunctionKind.from_string,
        "kr_scheme": KrScheme.from_string,
        "eps_rel": float,
        "eps_abs": float,
        "maxit": int,
        "line_search": _boolean,
        "line_search_start": int,
        "gamma": float,
        "omega_refinements": int,
        "relaxation": _optional_float,
        "kr_floor": float,
        "dq_min": float,
        "dt_init": float,
        "dt_min": float,
        "dt_max": float,
        "numit_inc": int,
        "max_steps": int,
        "pt_line_search": _boolean,
        "pt_final_newton": _boolean,
        "initial_state": InitialState.from_string,
        "initial_head": _optional_float,
        "lin_rel_tol": float,
        "lin_abs_tol": float,
        "lin_max_iters": int,
        "ilu_level": int,
    },
}

REQUIRED = {
    Section.Mesh: ("extents", "counts"),
    Section.Layer: ("z_low", "z_high", "region"),
    Section.Region: ("id", "k_xx", "k_yy", "k_zz", "porosity"),
    Section.Boundary: ("side", "type"),
    Section.Source: ("region", "rate"),
    Section.Solver: (),
}


# pylint: disable=too-many-instance-attributes
@dataclasses.dataclass(frozen=True)
class SolverConfig:
    """Settings of the `[solver]` section; defaults apply to missing keys."""

    strategy: Strategy = Strategy.Continuation
    kind: ContinuationFunctionKind = ContinuationFunctionKind.Power
    kr_scheme: KrScheme = KrScheme.Upwind
    eps_rel: float = 1e-5
    eps_abs: float = 1e-5
    maxit: int = 25
    line_search: bool = True
    line_search_start: int = 5
    gamma: float = 0.25
    omega_refinements: int = 7
    relaxation: typing.Optional[float] = None
    kr_floor: float = constitutive.KR_FLOOR
    dq_min: float = 1e-4
    dt_init: float = 1e-2
    dt_min: float = 1e-8
    dt_max: float = 1e6
    numit_inc: int = 15
    max_steps: int = 10000
    pt_line_search: bool = False
    pt_final_newton: bool = True
    initial_state: InitialState = InitialState.Linear
    initial_head: typing.Optional[float] = None
    lin_rel_tol: float = 1e-10
    lin_abs_tol: float = 1e-14
    lin_max_iters: int = 5000
    ilu_level: int = 0

    def __post_init__(self):
        if not 0 < self.kr_floor < 1:
            raise ConfigurationError(_("kr_floor must lie in (0, 1)"))
        if self.omega_refinements < 0:
            raise ConfigurationError(_("omega_refinements must not be negative"))
        # fail early on inconsistent numerics
        self.pseudo_transient_config()
        self.continuation_config()

    def linear_config(self):
        return LinearSolverConfig(
            self.lin_rel_tol, self.lin_abs_tol, self.lin_max_iters, self.ilu_level
        )

    def newton_config(self, line_search=None):
        return NewtonConfig(
            eps_rel=self.eps_rel,
            eps_abs=self.eps_abs,
            maxit=self.maxit,
            gamma=self.gamma,
            omega_min=self.gamma ** self.omega_refinements,
            line_search=self.line_search if line_search is None else line_search,
            line_search_start=self.line_search_start,
            relaxation=self.relaxation,
            linear=self.linear_config(),
        )

    def continuation_config(self):
        return ContinuationConfig(kind=self.kind, dq_min=self.dq_min)

    def pseudo_transient_config(self):
        return PseudoTransientConfig(
            dt_init=self.dt_init,
            dt_min=self.dt_min,
            dt_max=self.dt_max,
            numit_inc=self.numit_inc,
            max_steps=self.max_steps,
            initial_state=self.initial_state,
            initial_head=self.initial_head,
            newton=self.newton_config(line_search=self.pt_line_search),
            final_newton_step=self.pt_final_newton,
        )


@dataclasses.dataclass(frozen=True)
class MeshConfig:
    extents: tuple
    counts: tuple
    layers: tuple  # (z_low, z_high, region)


@dataclasses.dataclass(frozen=True)
class BoundaryConfig:
    side: str
    type: BoundaryType
    head: typing.Optional[float] = None
    flux: typing.Optional[float] = None
    z_low: typing.Optional[float] = None
    z_high: typing.Optional[float] = None
    line: typing.Optional[int] = None


@dataclasses.dataclass(frozen=True)
class ProblemConfig:
    mesh: MeshConfig
    regions: dict  # id -> MediumProperties
    boundaries: tuple
    sources: dict  # region -> rate in 1/day
    solver: SolverConfig = dataclasses.field(default_factory=SolverConfig)
    path: typing.Optional[str] = None

    def with_overrides(self, strategy=None, kind=None, kr_scheme=None, mesh_scale=None):
        """Return a copy with solver settings or the mesh resolution replaced.
        `mesh_scale` multiplies nz, nx and ny (if ny > 1)."""
        solver_changes = {
            k: v
            for k, v in (
                ("strategy", strategy),
                ("kind", kind),
                ("kr_scheme", kr_scheme),
            )
            if v is not None
        }
        solver = dataclasses.replace(self.solver, **solver_changes)
        grid = self.mesh
        if mesh_scale is not None:
            if int(mesh_scale) < 1:
                raise ConfigurationError(_("the mesh scale must be at least 1"))
            nx, ny, nz = grid.counts
            scale = int(mesh_scale)
            grid = dataclasses.replace(
                grid, counts=(nx * scale, ny * scale if ny > 1 else 1, nz * scale)
            )
        return dataclasses.replace(self, mesh=grid, solver=solver)


class _SectionData:
    """Entries of one section instance: key -> (raw value, line number)."""

    def __init__(self, section, line):
        self.section = section
        self.line = line
        self.entries = {}


def _tokenize(text, path):
    sections = []
    current = None
    for lnum, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        match = SECTION_PATTERN.match(line)
        if match:
            name = match.group(1).lower()
            try:
                current = _SectionData(Section(name), lnum)
            except ValueError:
                raise ConfigurationError(
                    _("unknown section [%s]") % name, path, lnum
                ) from None
            sections.append(current)
            continue
        match = ENTRY_PATTERN.match(line)
        if not match:
            raise ConfigurationError(
                _("syntax error, expected `[section]` or `key = value`"), path, lnum
            )
        if current is None:
            raise ConfigurationError(
                _("entry %s outside of any section") % match.group(1), path, lnum
            )
        key, value = match.group(1).lower(), match.group(2).strip()
        if key not in KEYS[current.section]:
            raise ConfigurationError(
                _("unknown key %s in section [%s]") % (key, current.section.value),
                path,
                lnum,
            )
        if key in current.entries:
            raise ConfigurationError(
                _("key %s given twice in section [%s]") % (key, current.section.value),
                path,
                lnum,
            )
        current.entries[key] = (value, lnum)
    return sections


def _convert(data, path):
    """Convert the raw entries of a section instance and check that all
    required keys are present."""
    values = {}
    converters = KEYS[data.section]
    for key, (raw, lnum) in data.entries.items():
        try:
            values[key] = converters[key](raw)
        except ValueError as error:
            raise ConfigurationError(
                _("invalid value for %s: %s (%s)") % (key, raw, error), path, lnum
            ) from None
    for key in REQUIRED[data.section]:
        if key not in values:
            raise ConfigurationError(
                _("missing key %s in section [%s]") % (key, data.section.value),
                path,
                data.line,
            )
    return values


def _medium(values, data, path):
    try:
        return MediumProperties(
            **{k: v for k, v in values.items() if k != "id"}
        )
    except ConfigurationError as error:
        raise ConfigurationError(
            _("region %s: %s") % (values["id"], error.message), path, data.line
        ) from None


def _boundary(values, data, path):
    side = values["side"].lower()
    if side not in mesh.SIDES:
        raise ConfigurationError(
            _("unknown side %s, expected one of %s") % (side, ", ".join(mesh.SIDES)),
            path,
            data.entries["side"][1],
        )
    kind = values["type"]
    required = {BoundaryType.Dirichlet: "head", BoundaryType.Flux: "flux"}.get(kind)
    if required and required not in values:
        raise ConfigurationError(
            _("%s boundary needs the key %s") % (kind.value, required), path, data.line
        )
    superfluous = [
        k for k in ("head", "flux") if k in values and k != required
    ]
    if superfluous:
        raise ConfigurationError(
            _("key %s is not used by a %s boundary") % (superfluous[0], kind.value),
            path,
            data.entries[superfluous[0]][1],
        )
    bounded = "z_low" in values and "z_high" in values
    if bounded and not values["z_high"] > values["z_low"]:
        raise ConfigurationError(
            _("z_high must be greater than z_low"), path, data.entries["z_high"][1]
        )
    return BoundaryConfig(
        side, kind, values.get("head"), values.get("flux"), values.get("z_low"),
        values.get("z_high"), data.line,
    )


def _check_boundary_ranges(boundaries, path):
    by_side = {}
    for boundary in boundaries:
        by_side.setdefault(boundary.side, []).append(boundary)
    for side, entries in by_side.items():
        ranges = sorted(
            (
                -float("inf") if b.z_low is None else b.z_low,
                float("inf") if b.z_high is None else b.z_high,
                b.line,
            )
            for b in entries
        )
        for (_lo, hi, _line), (lo2, _hi2, line2) in zip(ranges, ranges[1:]):
            if lo2 < hi:
                raise ConfigurationError(
                    _("boundary ranges of side %s overlap") % side, path, line2
                )


# pylint: disable=too-many-locals,too-many-branches
def parse_config(text, path=None):
    """parse_config(text, path=None) -> ProblemConfig
    Parse and validate a problem configuration. `path` is only used for error
    messages."""
    sections = _tokenize(text, path)
    by_section = {s: [d for d in sections if d.section is s] for s in Section}
    for section in Section:
        if section not in REPEATED and len(by_section[section]) > 1:
            raise ConfigurationError(
                _("section [%s] given more than once") % section.value,
                path,
                by_section[section][1].line,
            )
    if not by_section[Section.Mesh]:
        raise ConfigurationError(_("missing section [mesh]"), path)

    mesh_values = _convert(by_section[Section.Mesh][0], path)
    regions = {}
    for data in by_section[Section.Region]:
        values = _convert(data, path)
        if values["id"] in regions:
            raise ConfigurationError(
                _("region %s defined twice") % values["id"], path, data.line
            )
        regions[values["id"]] = _medium(values, data, path)
    if not regions:
        raise ConfigurationError(_("at least one [region] section is required"), path)

    layers = []
    for data in by_section[Section.Layer]:
        values = _convert(data, path)
        if values["region"] not in regions:
            raise ConfigurationError(
                _("layer refers to unknown region %s") % values["region"],
                path,
                data.entries["region"][1],
            )
        layers.append((values["z_low"], values["z_high"], values["region"]))
    extents, counts = mesh_values["extents"], mesh_values["counts"]
    if not layers:
        if len(regions) > 1:
            raise ConfigurationError(
                _("several regions need [layer] sections assigning them"), path
            )
        layers = [(0.0, extents[2], next(iter(regions)))]
    try:
        layers = mesh.check_layers(layers, extents[2])
    except ConfigurationError as error:
        raise ConfigurationError(error.message, path) from None

    boundaries = []
    for data in by_section[Section.Boundary]:
        boundaries.append(_boundary(_convert(data, path), data, path))
    _check_boundary_ranges(boundaries, path)
    if not any(b.type is not BoundaryType.Flux for b in boundaries):
        raise ConfigurationError(
            _("ill-posed problem: at least one dirichlet or seepage boundary is "
              "required"),
            path,
        )

    sources = {}
    for data in by_section[Section.Source]:
        values = _convert(data, path)
        if values["region"] not in regions:
            raise ConfigurationError(
                _("source refers to unknown region %s") % values["region"],
                path,
                data.entries["region"][1],
            )
        sources[values["region"]] = sources.get(values["region"], 0.0) + values["rate"]

    solver = SolverConfig()
    if by_section[Section.Solver]:
        data = by_section[Section.Solver][0]
        try:
            solver = SolverConfig(**_convert(data, path))
        except ConfigurationError as error:
            raise ConfigurationError(error.message, path, data.line) from None

    return ProblemConfig(
        MeshConfig(tuple(extents), tuple(counts), tuple(layers)),
        regions,
        tuple(boundaries),
        sources,
        solver,
        path,
    )


def read_config(path):
    """Read and parse the configuration file at `path`."""
    with open(path, "r", encoding="utf-8") as f:
        return parse_config(f.read(), path)
