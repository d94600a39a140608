"""Near-field spherical-wave engine for multi-panel enclosed scenes.

Every element is an ideal isotropic point scatterer: a point source
illuminates it with ``E0/d * exp(j*k*d)``, the element applies its phase,
and re-radiates ``exp(j*k*R)/R`` toward each observation point. The total
scattered field at a point is the single-bounce sum over all elements of
all panels; the direct source-to-point path is excluded unless explicitly
requested for visualization.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .core import DualVolumeGrid, PhaseProfile, PointSource, RisArray, build_element_positions
from .errors import DegenerateGeometryError

_WALL_FRAMES = (
    # (origin anchor, normal) for walls x=0, x=L, y=0, y=L; vertical axis is +z
    ((0.0, 0.5, 0.5), (1.0, 0.0, 0.0)),
    ((1.0, 0.5, 0.5), (-1.0, 0.0, 0.0)),
    ((0.5, 0.0, 0.5), (0.0, 1.0, 0.0)),
    ((0.5, 1.0, 0.5), (0.0, -1.0, 0.0)),
)


@dataclass(frozen=True)
class Scene:
    """Cubic domain [0, side]^3 with wall-mounted panels and one point source."""

    side: float
    panels: Tuple[RisArray, ...]
    source: PointSource

    def __post_init__(self):
        if self.side <= 0:
            raise ValueError("scene side must be positive")
        if len(self.panels) < 1:
            raise ValueError("scene needs at least one panel")
        object.__setattr__(self, "panels", tuple(self.panels))
        pos = self.source.position
        if np.any(pos < 0) or np.any(pos > self.side):
            raise ValueError("source position must lie inside the domain")

    @property
    def frequency(self) -> float:
        return self.source.frequency

    @property
    def wavenumber(self) -> float:
        return self.source.wavenumber

    @property
    def n_scatterers(self) -> int:
        return sum(p.n_elements for p in self.panels)

    def element_positions(self) -> np.ndarray:
        """All element positions, panel-major then row-major, shape (N, 3)."""
        return np.vstack([build_element_positions(p) for p in self.panels])

    @classmethod
    def boxed(
        cls,
        side: float,
        rows: int,
        cols: int,
        margin: float,
        source: PointSource,
    ) -> "Scene":
        """Scene with the four vertical walls covered by identical panels.

        Each panel's lattice spans the wall shrunk by ``margin`` (fraction of
        the wall size) per side; rows run along +z.
        """
        if not 0.0 <= margin < 0.5:
            raise ValueError("margin must lie in [0, 0.5)")
        span = side * (1.0 - 2.0 * margin)
        spacing_x = span / (cols - 1) if cols > 1 else span
        spacing_y = span / (rows - 1) if rows > 1 else span
        panels = []
        axis_y = np.array([0.0, 0.0, 1.0])
        for anchor, normal in _WALL_FRAMES:
            normal = np.array(normal)
            axis_x = np.cross(axis_y, normal)
            panels.append(
                RisArray(
                    rows=rows,
                    cols=cols,
                    spacing_x=spacing_x,
                    spacing_y=spacing_y,
                    origin=np.array(anchor) * side,
                    axis_x=axis_x,
                    axis_y=axis_y,
                    normal=normal,
                )
            )
        return cls(side=side, panels=tuple(panels), source=source)


@dataclass(frozen=True, eq=False)
class VolumeFieldMap:
    """Complex scattered field on both levels of a dual grid."""

    grid: DualVolumeGrid
    coarse_values: np.ndarray
    fine_values: np.ndarray

    def __post_init__(self):
        coarse = np.asarray(self.coarse_values, dtype=complex)
        fine = np.asarray(self.fine_values, dtype=complex)
        if coarse.shape != (self.grid.n_coarse,):
            raise ValueError("coarse value count must match the grid")
        if fine.shape != (self.grid.n_fine,):
            raise ValueError("fine value count must match the grid")
        if not (np.all(np.isfinite(coarse)) and np.all(np.isfinite(fine))):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "coarse_values", coarse)
        object.__setattr__(self, "fine_values", fine)

    def coarse_slice(self, z_index: int) -> np.ndarray:
        """Magnitude on the z = const coarse plane, shape (nx, ny)."""
        nx, ny, nz = self.grid.coarse_shape
        return np.abs(self.coarse_values.reshape(nx, ny, nz)[:, :, z_index])


@dataclass(frozen=True)
class QuietZoneMetrics:
    """Zone-average field statistics, with optional suppression vs a reference."""

    avg_power: float
    avg_magnitude: float
    suppression_db: Optional[float] = None


def flatten_phases(scene: Scene, phases: Sequence[PhaseProfile]) -> np.ndarray:
    """Concatenate per-panel profiles into one flat vector (panel-major)."""
    if len(phases) != len(scene.panels):
        raise ValueError("one phase profile per panel is required")
    parts = []
    for panel, profile in zip(scene.panels, phases):
        if profile.shape != (panel.rows, panel.cols):
            raise ValueError("phase profile shape does not match its panel")
        parts.append(profile.values.ravel())
    return np.concatenate(parts)


def split_phases(scene: Scene, flat: np.ndarray) -> list:
    """Inverse of flatten_phases: per-panel PhaseProfile objects."""
    out = []
    offset = 0
    for panel in scene.panels:
        n = panel.n_elements
        out.append(PhaseProfile(flat[offset : offset + n].reshape(panel.rows, panel.cols)))
        offset += n
    return out


def illuminate(scene: Scene) -> np.ndarray:
    """Complex incident field at every element, shape (n_scatterers,)."""
    positions = scene.element_positions()
    deltas = positions - scene.source.position[None, :]
    distances = np.sqrt((deltas**2).sum(axis=1))
    zero = np.flatnonzero(distances == 0.0)
    if zero.size:
        raise DegenerateGeometryError(
            f"source coincides with element {int(zero[0])}"
        )
    k = scene.wavenumber
    return scene.source.amplitude / distances * np.exp(1j * k * distances)


def _accumulate(
    points: np.ndarray,
    positions: np.ndarray,
    amplitudes: np.ndarray,
    k: float,
    point_offset: int = 0,
) -> np.ndarray:
    """Sum spherical-wave contributions of all elements at each point."""
    if points.shape[0] == 0:
        return np.zeros(0, dtype=complex)
    deltas = points[:, None, :] - positions[None, :, :]
    radii = np.sqrt((deltas**2).sum(axis=2))
    zero = np.argwhere(radii == 0.0)
    if zero.size:
        p, n = int(zero[0, 0]), int(zero[0, 1])
        raise DegenerateGeometryError(
            f"element {n} coincides with grid point {p + point_offset}"
        )
    return (np.exp(1j * k * radii) / radii) @ amplitudes


def _block_size(n_elements: int) -> int:
    # keep the (points x elements) work array around ~50 MB
    return max(16, 2_000_000 // max(1, n_elements))


def scatter_to_grid(
    scene: Scene,
    phases: Sequence[PhaseProfile],
    incident: np.ndarray,
    grid: DualVolumeGrid,
    include_direct: bool = False,
) -> VolumeFieldMap:
    """Scattered field on both grid levels for a set of panel profiles.

    ``include_direct`` adds the source's own spherical wave at each point;
    it is intended for visualization only and is off for all quiet-zone
    statistics.
    """
    flat = flatten_phases(scene, phases)
    if incident.shape != flat.shape:
        raise ValueError("incident field count must match the scatterer count")
    positions = scene.element_positions()
    amplitudes = incident * np.exp(1j * flat)
    k = scene.wavenumber
    block = _block_size(positions.shape[0])

    coarse = np.empty(grid.n_coarse, dtype=complex)
    for start, pts in grid.coarse_blocks(block):
        coarse[start : start + pts.shape[0]] = _accumulate(
            pts, positions, amplitudes, k, point_offset=start
        )
    fine = np.empty(grid.n_fine, dtype=complex)
    for start in range(0, grid.n_fine, block):
        pts = grid.fine_points[start : start + block]
        fine[start : start + pts.shape[0]] = _accumulate(
            pts, positions, amplitudes, k, point_offset=start
        )

    if include_direct:
        coarse += _direct_field(scene, grid.coarse_points)
        fine += _direct_field(scene, grid.fine_points)
    return VolumeFieldMap(grid=grid, coarse_values=coarse, fine_values=fine)


def _direct_field(scene: Scene, points: np.ndarray) -> np.ndarray:
    deltas = points - scene.source.position[None, :]
    d = np.sqrt((deltas**2).sum(axis=1))
    zero = np.flatnonzero(d == 0.0)
    if zero.size:
        raise DegenerateGeometryError(
            f"source coincides with grid point {int(zero[0])}"
        )
    return scene.source.amplitude / d * np.exp(1j * scene.wavenumber * d)


def quiet_zone_metrics(
    field_map: VolumeFieldMap,
    reference: Optional[VolumeFieldMap] = None,
) -> QuietZoneMetrics:
    """Zone statistics over the fine grid; suppression iff a reference is given."""
    if field_map.grid.n_fine == 0:
        raise ValueError("quiet zone contains no fine-grid points")
    mags = np.abs(field_map.fine_values)
    avg_power = float(np.mean(mags**2))
    avg_magnitude = float(np.mean(mags))
    suppression = None
    if reference is not None:
        if reference.grid.n_fine != field_map.grid.n_fine:
            raise ValueError("reference map must share the same grid")
        ref_mag = float(np.mean(np.abs(reference.fine_values)))
        if ref_mag == 0.0:
            raise ValueError("reference zone magnitude is zero")
        suppression = float(20.0 * np.log10(avg_magnitude / ref_mag))
    return QuietZoneMetrics(
        avg_power=avg_power,
        avg_magnitude=avg_magnitude,
        suppression_db=suppression,
    )


def outside_zone_magnitude(field_map: VolumeFieldMap) -> float:
    """Mean field magnitude over coarse points outside the quiet zone."""
    mask = field_map.grid.coarse_outside
    if not np.any(mask):
        raise ValueError("no coarse points outside the quiet zone")
    return float(np.mean(np.abs(field_map.coarse_values[mask])))
