# This is free software, licensed under the LGPL v3. See the file "COPYING" for
# details.
"""Piecewise linear water content and relative permeability model together
with the continuation functions blending the relative permeability with one.

The water content of a cell depends on the head in relation to the vertical
extent of the cell:

    theta = phi                                       h > z_max
    theta = phi * (h - z_min) / (z_max - z_min)       h_r < h <= z_max
    theta = phi * (alpha_phi - alpha_theta*(h_r - h)) h <= h_r

with h_r = z_min + alpha_phi * (z_max - z_min). The third branch is clamped at
zero and the relative permeability (saturation) is floored at `KR_FLOOR`.

All functions accept scalars or numpy arrays for the head; `cell` and
`medium` may be a CellGeometry/MediumProperties pair or any objects exposing
the same attribute names as arrays (a Mesh together with a MediaField)."""

import dataclasses
import enum

import numpy as np

from .errors import ConfigurationError

#: lower bound of the relative permeability
KR_FLOOR = 1e-6
DEFAULT_ALPHA_PHI = 0.01
DEFAULT_ALPHA_THETA = 1e-3  # 1/m


class ContinuationFunctionKind(enum.Enum):
    Power = "power"
    Linear = "linear"

    @classmethod
    def from_string(cls, name):
        for kind in cls:
            if kind.value == str(name).strip().lower():
                return kind
        raise ValueError(
            "unknown continuation function %s, expected one of %s"
            % (name, ", ".join(k.value for k in cls))
        )


@dataclasses.dataclass(frozen=True)
class MediumProperties:
    """Material of one region. Conductivities in m/day (diagonal tensor),
    alpha_theta in 1/m, specific storage in 1/m."""

    k_xx: float
    k_yy: float
    k_zz: float
    porosity: float
    alpha_phi: float = DEFAULT_ALPHA_PHI
    alpha_theta: float = DEFAULT_ALPHA_THETA
    s_stor: float = 0.0

    def __post_init__(self):
        for name in ("k_xx", "k_yy", "k_zz"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(_("%s must be positive") % name)
        if not 0 < self.porosity < 1:
            raise ConfigurationError(_("porosity must lie in (0, 1)"))
        if not 0 < self.alpha_phi < 1:
            raise ConfigurationError(_("alpha_phi must lie in (0, 1)"))
        if not self.alpha_theta > 0:
            raise ConfigurationError(_("alpha_theta must be positive"))
        if not self.s_stor >= 0:
            raise ConfigurationError(_("s_stor must not be negative"))

    @classmethod
    def isotropic(cls, k, porosity, **kwargs):
        return cls(k, k, k, porosity, **kwargs)

    def conductivity(self, axis):
        return (self.k_xx, self.k_yy, self.k_zz)[axis]


class MediaField:
    """Per-cell material arrays gathered from the region map of a mesh."""

    def __init__(self, mesh, media):
        missing = sorted(set(map(str, mesh.cell_region)) - set(map(str, media)))
        if missing:
            raise ConfigurationError(
                _("no medium defined for region(s) %s") % ", ".join(missing)
            )
        lookup = {str(k): v for k, v in media.items()}
        cell_media = [lookup[str(region)] for region in mesh.cell_region]
        gather = lambda attr: np.array([getattr(m, attr) for m in cell_media], float)
        self.conductivity = np.column_stack(
            [gather("k_xx"), gather("k_yy"), gather("k_zz")]
        )
        self.porosity = gather("porosity")
        self.alpha_phi = gather("alpha_phi")
        self.alpha_theta = gather("alpha_theta")
        self.s_stor = gather("s_stor")


def residual_head(cell, medium):
    """Head h_r below which the third (residual) branch applies."""
    return cell.z_min + medium.alpha_phi * (cell.z_max - cell.z_min)


def water_content(h, cell, medium):
    h = np.asarray(h, dtype=float)
    span = cell.z_max - cell.z_min
    h_r = residual_head(cell, medium)
    phi = medium.porosity
    theta = np.where(
        h > cell.z_max,
        phi,
        np.where(
            h > h_r,
            phi * (h - cell.z_min) / span,
            phi * (medium.alpha_phi - medium.alpha_theta * (h_r - h)),
        ),
    )
    theta = np.maximum(theta, 0.0)
    return theta if theta.ndim else float(theta)


def water_content_derivative(h, cell, medium):
    """One-sided derivative d(theta)/dh taken from the branch `h` belongs to;
    zero on the clamped side of the zero crossing."""
    h = np.asarray(h, dtype=float)
    span = cell.z_max - cell.z_min
    h_r = residual_head(cell, medium)
    phi = medium.porosity
    wet = medium.alpha_phi - medium.alpha_theta * (h_r - h) > 0
    slope = np.where(
        h > cell.z_max,
        0.0,
        np.where(h > h_r, phi / span, np.where(wet, phi * medium.alpha_theta, 0.0)),
    )
    slope = slope * np.ones_like(h)
    return slope if slope.ndim else float(slope)


def saturation(h, cell, medium):
    return water_content(h, cell, medium) / medium.porosity


def relative_permeability(h, cell, medium, kr_floor=KR_FLOOR):
    kr = np.maximum(np.asarray(saturation(h, cell, medium)), kr_floor)
    return kr if kr.ndim else float(kr)


def relative_permeability_derivative(h, cell, medium, kr_floor=KR_FLOOR):
    floored = np.asarray(saturation(h, cell, medium)) <= kr_floor
    slope = np.where(
        floored, 0.0, water_content_derivative(h, cell, medium) / medium.porosity
    )
    return slope if slope.ndim else float(slope)


def floor_active(h, cell, medium, kr_floor=KR_FLOOR):
    """Boolean mask of cells whose relative permeability sits on the floor."""
    return np.asarray(saturation(h, cell, medium)) <= kr_floor


def check_continuation_parameter(q):
    q = float(q)
    if not 0.0 <= q <= 1.0:
        raise ValueError("continuation parameter q=%r outside [0, 1]" % q)
    return q


def continuation_permeability(kr, q, kind):
    """Blend the relative permeability `kr` with one: q = 0 gives one, q = 1
    gives `kr`, both exactly. `kr` may be a float, an array or a Dual."""
    q = check_continuation_parameter(q)
    if kind is ContinuationFunctionKind.Power:
        return kr ** q
    if kind is ContinuationFunctionKind.Linear:
        return q * kr + (1.0 - q)
    raise ValueError("unknown continuation function kind %r" % (kind,))
