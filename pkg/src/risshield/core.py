"""Geometric primitives shared by the far-field and near-field engines.

Conventions used throughout the package: angles in radians, lengths in
meters, fields in V/m. Elevation theta is measured from the panel normal
(broadside), azimuth phi in the panel plane. Element lattices are centered
on the panel center and flattened row-major wherever a flat ordering is
needed.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence, Tuple

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s
TWO_PI = 2.0 * np.pi

# Relative padding on the quiet-zone sphere test so lattice points whose exact
# distance equals the radius are not dropped by floating-point rounding.
SPHERE_TOL = 1e-12


def wrap_phase(values) -> np.ndarray:
    """Canonicalize phase values into [0, 2*pi)."""
    wrapped = np.mod(np.asarray(values, dtype=float), TWO_PI)
    # np.mod rounds up to exactly 2*pi for tiny negative inputs
    return np.where(wrapped >= TWO_PI, wrapped - TWO_PI, wrapped)


def _vec3(value, name: str) -> np.ndarray:
    arr = np.array(value, dtype=float).reshape(-1)
    if arr.size != 3:
        raise ValueError(f"{name} must be a 3-vector")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RisArray:
    """One rectangular panel of phase-controlled reflecting elements.

    ``rows x cols`` elements on a uniform lattice with spacings
    ``spacing_x`` (along ``axis_x``) and ``spacing_y`` (along ``axis_y``),
    centered on ``origin``. The orientation frame must be orthonormal.
    """

    rows: int
    cols: int
    spacing_x: float
    spacing_y: float
    origin: np.ndarray = (0.0, 0.0, 0.0)
    axis_x: np.ndarray = (1.0, 0.0, 0.0)
    axis_y: np.ndarray = (0.0, 1.0, 0.0)
    normal: np.ndarray = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("rows and cols must be >= 1")
        if self.spacing_x <= 0 or self.spacing_y <= 0:
            raise ValueError("element spacings must be positive")
        object.__setattr__(self, "origin", _vec3(self.origin, "origin"))
        object.__setattr__(self, "axis_x", _vec3(self.axis_x, "axis_x"))
        object.__setattr__(self, "axis_y", _vec3(self.axis_y, "axis_y"))
        object.__setattr__(self, "normal", _vec3(self.normal, "normal"))
        for name in ("axis_x", "axis_y", "normal"):
            if abs(np.linalg.norm(getattr(self, name)) - 1.0) > 1e-12:
                raise ValueError(f"{name} must be a unit vector")
        pairs = (
            (self.axis_x, self.axis_y),
            (self.axis_x, self.normal),
            (self.axis_y, self.normal),
        )
        if any(abs(float(np.dot(a, b))) >= 1e-12 for a, b in pairs):
            raise ValueError("orientation axes must be mutually orthogonal")

    @property
    def n_elements(self) -> int:
        return self.rows * self.cols

    @cached_property
    def local_x(self) -> np.ndarray:
        """Lattice coordinates along axis_x, centered on the panel center."""
        x = self.spacing_x * (np.arange(self.cols) - (self.cols - 1) / 2.0)
        x.setflags(write=False)
        return x

    @cached_property
    def local_y(self) -> np.ndarray:
        """Lattice coordinates along axis_y, centered on the panel center."""
        y = self.spacing_y * (np.arange(self.rows) - (self.rows - 1) / 2.0)
        y.setflags(write=False)
        return y


def build_element_positions(array: RisArray) -> np.ndarray:
    """World-frame positions of all elements, row-major, shape (N, 3)."""
    x_grid, y_grid = np.meshgrid(array.local_x, array.local_y)
    flat_x = x_grid.ravel()
    flat_y = y_grid.ravel()
    return (
        array.origin[None, :]
        + flat_x[:, None] * array.axis_x[None, :]
        + flat_y[:, None] * array.axis_y[None, :]
    )


@dataclass(frozen=True, eq=False)
class PhaseProfile:
    """Per-element reflection phases in radians, wrapped to [0, 2*pi)."""

    values: np.ndarray

    def __post_init__(self):
        values = wrap_phase(self.values)
        if values.ndim != 2:
            raise ValueError("phase profile must be a 2-D matrix")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    @classmethod
    def constant(cls, rows: int, cols: int, value: float) -> "PhaseProfile":
        return cls(np.full((rows, cols), value, dtype=float))

    def __eq__(self, other):
        if not isinstance(other, PhaseProfile):
            return NotImplemented
        return np.array_equal(self.values, other.values)


@dataclass(frozen=True)
class PlaneWaveSource:
    """Uniform plane wave illuminating a panel from direction (theta, phi)."""

    amplitude: float
    wavelength: float
    theta: float
    phi: float

    def __post_init__(self):
        if self.amplitude <= 0:
            raise ValueError("amplitude must be positive")
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")
        if not 0.0 <= self.theta < np.pi / 2:
            raise ValueError("incidence theta must lie in [0, pi/2)")
        if not 0.0 <= self.phi < TWO_PI:
            raise ValueError("incidence phi must lie in [0, 2*pi)")

    @property
    def wavenumber(self) -> float:
        return TWO_PI / self.wavelength


@dataclass(frozen=True)
class PointSource:
    """Omnidirectional spherical-wave emitter inside a scene."""

    amplitude: float
    frequency: float
    position: np.ndarray

    def __post_init__(self):
        if self.amplitude <= 0:
            raise ValueError("amplitude must be positive")
        if self.frequency <= 0:
            raise ValueError("frequency must be positive")
        object.__setattr__(self, "position", _vec3(self.position, "position"))

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency

    @property
    def wavenumber(self) -> float:
        return TWO_PI * self.frequency / SPEED_OF_LIGHT


def _check_uniform(samples: np.ndarray, name: str) -> float:
    if samples.ndim != 1 or samples.size < 1:
        raise ValueError(f"{name} samples must be a non-empty 1-D array")
    if samples.size == 1:
        return 0.0
    steps = np.diff(samples)
    if np.any(steps <= 0):
        raise ValueError(f"{name} samples must be strictly ascending")
    if float(np.ptp(steps)) > 1e-12:
        raise ValueError(f"{name} samples must be uniformly spaced")
    return float(steps[0])


@dataclass(frozen=True, eq=False)
class AngularGrid:
    """Uniform (theta, phi) sampling of the far-field hemisphere."""

    theta: np.ndarray
    phi: np.ndarray
    resolution: float

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        step_t = _check_uniform(theta, "theta")
        step_p = _check_uniform(phi, "phi")
        for step in (step_t, step_p):
            if step and abs(step - self.resolution) > 1e-12:
                raise ValueError("sample spacing must match the stated resolution")
        if theta[0] < 0 or theta[-1] > np.pi / 2 + 1e-12:
            raise ValueError("theta samples must lie in [0, pi/2]")
        if phi[0] < 0 or phi[-1] >= TWO_PI:
            raise ValueError("phi samples must lie in [0, 2*pi)")
        theta.setflags(write=False)
        phi.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)

    @classmethod
    def from_resolution(cls, resolution: float = np.pi / 180.0) -> "AngularGrid":
        """Full hemisphere grid: theta 0..pi/2 inclusive, phi 0..2*pi exclusive."""
        if resolution <= 0:
            raise ValueError("resolution must be positive")
        n_theta = int(round((np.pi / 2) / resolution))
        n_phi = int(round(TWO_PI / resolution))
        if abs(n_theta * resolution - np.pi / 2) > 1e-9 or abs(n_phi * resolution - TWO_PI) > 1e-9:
            raise ValueError("resolution must evenly divide pi/2 and 2*pi")
        theta = np.arange(n_theta + 1) * resolution
        phi = np.arange(n_phi) * resolution
        return cls(theta=theta, phi=phi, resolution=resolution)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.theta.size, self.phi.size)


@dataclass(frozen=True, eq=False)
class AngularFieldMap:
    """Complex scattered field sampled on an AngularGrid."""

    grid: AngularGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != self.grid.shape:
            raise ValueError("field values must match the grid shape")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)

    def argmax_cell(self) -> Tuple[int, int]:
        """Grid indices of the strongest-magnitude direction."""
        flat = int(np.argmax(np.abs(self.values)))
        return np.unravel_index(flat, self.values.shape)


def _fine_axes(
    side: float,
    counts: Sequence[int],
    center: np.ndarray,
    radius: float,
    refinement: int,
) -> list:
    """Refined lattice coordinates per axis, clipped to the sphere's bounding box."""
    axes = []
    for i, n in enumerate(counts):
        full = np.linspace(0.0, side, (n - 1) * refinement + 1)
        lo = np.searchsorted(full, center[i] - radius, side="left")
        hi = np.searchsorted(full, center[i] + radius, side="right")
        axes.append(full[lo:hi])
    return axes


def _fine_points(
    side: float,
    counts: Sequence[int],
    center: np.ndarray,
    radius: float,
    refinement: int,
) -> np.ndarray:
    ax, ay, az = _fine_axes(side, counts, center, radius, refinement)
    if min(ax.size, ay.size, az.size) == 0:
        return np.empty((0, 3), dtype=float)
    gx, gy, gz = np.meshgrid(ax, ay, az, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])
    d2 = ((pts - center[None, :]) ** 2).sum(axis=1)
    return pts[d2 <= radius * radius * (1.0 + SPHERE_TOL)]


@dataclass(frozen=True, eq=False)
class DualVolumeGrid:
    """Coarse room lattice plus a refined lattice restricted to the quiet zone.

    The coarse lattice spans [0, side]^3 uniformly. The fine lattice divides
    every coarse cell ``refinement`` times per axis and keeps only points
    inside the quiet-zone sphere (and the domain). Quiet-zone statistics are
    evaluated on the fine points only; coarse points inside the sphere are
    excluded from outside-zone statistics via ``coarse_outside``.
    """

    side: float
    counts: Tuple[int, int, int]
    center: np.ndarray
    radius: float
    refinement: int
    coarse_axes: Tuple[np.ndarray, np.ndarray, np.ndarray]
    fine_points: np.ndarray

    @property
    def coarse_shape(self) -> Tuple[int, int, int]:
        return self.counts

    @property
    def n_coarse(self) -> int:
        nx, ny, nz = self.counts
        return nx * ny * nz

    @property
    def n_fine(self) -> int:
        return self.fine_points.shape[0]

    @property
    def coarse_spacing(self) -> np.ndarray:
        return np.array([self.side / (n - 1) for n in self.counts])

    @property
    def fine_spacing(self) -> np.ndarray:
        return self.coarse_spacing / self.refinement

    @cached_property
    def coarse_points(self) -> np.ndarray:
        """Full coarse lattice, shape (n_coarse, 3), x-major ('ij') order."""
        gx, gy, gz = np.meshgrid(*self.coarse_axes, indexing="ij")
        return np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])

    @cached_property
    def coarse_outside(self) -> np.ndarray:
        """Boolean mask of coarse points lying outside the quiet-zone sphere."""
        ax, ay, az = self.coarse_axes
        d2 = (
            ((ax - self.center[0]) ** 2)[:, None, None]
            + ((ay - self.center[1]) ** 2)[None, :, None]
            + ((az - self.center[2]) ** 2)[None, None, :]
        )
        return (d2 > self.radius * self.radius * (1.0 + SPHERE_TOL)).ravel()

    def coarse_blocks(self, block: int) -> Iterator[Tuple[int, np.ndarray]]:
        """Yield (start_index, points) chunks of the coarse lattice."""
        total = self.n_coarse
        pts = self.coarse_points
        for start in range(0, total, block):
            yield start, pts[start : start + block]


def build_dual_grid(
    side: float,
    counts: Sequence[int],
    center,
    radius: float,
    refinement: int = 1,
) -> DualVolumeGrid:
    """Construct the two-level sampling of a cubic domain with a quiet zone.

    The quiet-zone sphere may be clipped by the domain boundary (e.g. a zone
    centered on the floor plane keeps only its upper half).
    """
    if side <= 0:
        raise ValueError("domain side must be positive")
    counts = tuple(int(n) for n in counts)
    if len(counts) != 3 or any(n < 2 for n in counts):
        raise ValueError("counts must be three integers >= 2")
    center = _vec3(center, "quiet-zone center")
    if np.any(center < 0) or np.any(center > side):
        raise ValueError("quiet-zone center must lie inside the domain")
    if radius <= 0:
        raise ValueError("quiet-zone radius must be positive")
    if radius >= side:
        raise ValueError("quiet-zone radius must be smaller than the domain side")
    if int(refinement) != refinement or refinement < 1:
        raise ValueError("refinement must be an integer >= 1")
    refinement = int(refinement)
    axes = tuple(np.linspace(0.0, side, n) for n in counts)
    fine = _fine_points(side, counts, center, radius, refinement)
    return DualVolumeGrid(
        side=side,
        counts=counts,
        center=center,
        radius=radius,
        refinement=refinement,
        coarse_axes=axes,
        fine_points=fine,
    )


def choose_refinement(
    side: float,
    counts: Sequence[int],
    center,
    radius: float,
    target_points: int,
    max_refinement: int = 12,
) -> int:
    """Refinement factor whose fine-point count is closest to a target.

    Ties prefer the smaller factor.
    """
    if target_points < 1:
        raise ValueError("target_points must be >= 1")
    center = _vec3(center, "quiet-zone center")
    best = 1
    best_err = None
    for ref in range(1, max_refinement + 1):
        count = _fine_points(side, counts, center, radius, ref).shape[0]
        err = abs(count - target_points)
        if best_err is None or err < best_err:
            best, best_err = ref, err
    return best
