"""Far-field scattering engine for phase-controlled panels.

The panel is treated as an ensemble of secondary point radiators. The field
in direction (theta, phi) is the coherent sum over elements of
``exp(j*(phase_n + psi_inc_n + psi_out_n))`` scaled by an element pattern
``amplitude * cos(theta)**(2*rho)``, where ``psi_inc`` is the lattice phase
of the incident plane wave and ``psi_out`` the same lattice phase evaluated
at the observation direction. A steering profile that conjugates both terms
aligns all element phasors and attains the coherent maximum
``amplitude * n_elements * cos(theta)**(2*rho)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import AngularFieldMap, AngularGrid, PhaseProfile, PlaneWaveSource, RisArray


@dataclass(frozen=True)
class FarFieldConfig:
    """Element pattern exponent (rho) and field normalization (V/m)."""

    pattern_exponent: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self):
        if self.pattern_exponent < 0:
            raise ValueError("pattern exponent must be >= 0")
        if self.amplitude <= 0:
            raise ValueError("amplitude must be positive")


@dataclass(frozen=True)
class PoiSample:
    """Field magnitude observed at one exact direction of interest."""

    theta: float
    phi: float
    magnitude: float

    def __post_init__(self):
        if self.magnitude < 0:
            raise ValueError("magnitude must be >= 0")


def _lattice_phase(array: RisArray, wavenumber: float, theta, phi) -> np.ndarray:
    """Per-element lattice phase k*sin(theta)*(x*cos(phi) + y*sin(phi)).

    ``theta``/``phi`` may be scalars or 1-D arrays of equal length K; the
    result has shape (K, n_elements), flattened row-major, and is unwrapped.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    u = wavenumber * np.sin(theta) * np.cos(phi)
    v = wavenumber * np.sin(theta) * np.sin(phi)
    flat_x = np.tile(array.local_x, array.rows)
    flat_y = np.repeat(array.local_y, array.cols)
    return u[:, None] * flat_x[None, :] + v[:, None] * flat_y[None, :]


def incident_phase(array: RisArray, src: PlaneWaveSource) -> np.ndarray:
    """Unwrapped incident-wave phase per element, shape (rows, cols)."""
    phase = _lattice_phase(array, src.wavenumber, src.theta, src.phi)
    return phase.reshape(array.rows, array.cols)


def steering_phase(array: RisArray, wavelength: float, theta: float, phi: float) -> np.ndarray:
    """Lattice phase toward an observation direction, shape (rows, cols)."""
    phase = _lattice_phase(array, 2.0 * np.pi / wavelength, theta, phi)
    return phase.reshape(array.rows, array.cols)


def element_phasors(
    array: RisArray,
    src: PlaneWaveSource,
    cfg: FarFieldConfig,
    theta,
    phi,
) -> np.ndarray:
    """Per-direction, per-element complex factors, shape (K, n_elements).

    Row k holds ``amplitude * cos(theta_k)**(2*rho) *
    exp(j*(psi_inc + psi_out(theta_k, phi_k)))``; the field of a profile is
    the matrix product with ``exp(j*phases)``.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    psi_inc = incident_phase(array, src).ravel()
    psi_out = _lattice_phase(array, src.wavenumber, theta, phi)
    pattern = cfg.amplitude * np.cos(theta) ** (2.0 * cfg.pattern_exponent)
    return pattern[:, None] * np.exp(1j * (psi_inc[None, :] + psi_out))


def field_at_directions(
    array: RisArray,
    phase: PhaseProfile,
    src: PlaneWaveSource,
    cfg: FarFieldConfig,
    theta,
    phi,
) -> np.ndarray:
    """Complex field at exact directions (no grid quantization), shape (K,)."""
    _check_shape(array, phase)
    phasors = element_phasors(array, src, cfg, theta, phi)
    return phasors @ np.exp(1j * phase.values.ravel())


def _check_shape(array: RisArray, phase: PhaseProfile) -> None:
    if phase.shape != (array.rows, array.cols):
        raise ValueError(
            f"phase profile shape {phase.shape} does not match "
            f"array {array.rows}x{array.cols}"
        )


def scattered_field(
    array: RisArray,
    phase: PhaseProfile,
    src: PlaneWaveSource,
    grid: AngularGrid,
    cfg: FarFieldConfig,
) -> AngularFieldMap:
    """Total scattered field over a full angular grid.

    Exploits the separable lattice: only K*(rows+cols) complex exponentials
    are evaluated instead of K*rows*cols, and the element sum becomes one
    dense matrix product.
    """
    _check_shape(array, phase)
    k = src.wavenumber
    weights = np.exp(1j * (phase.values + incident_phase(array, src)))
    sin_t = np.sin(grid.theta)
    u = (k * sin_t[:, None] * np.cos(grid.phi)[None, :]).ravel()
    v = (k * sin_t[:, None] * np.sin(grid.phi)[None, :]).ravel()
    col_factors = np.exp(1j * np.outer(u, array.local_x))  # (K, cols)
    row_factors = np.exp(1j * np.outer(v, array.local_y))  # (K, rows)
    partial = col_factors @ weights.T  # (K, rows)
    values = (partial * row_factors).sum(axis=1)
    pattern = cfg.amplitude * np.cos(grid.theta) ** (2.0 * cfg.pattern_exponent)
    values = values.reshape(grid.shape) * pattern[:, None]
    return AngularFieldMap(grid=grid, values=values)


def field_at_poi(
    array: RisArray,
    phase: PhaseProfile,
    src: PlaneWaveSource,
    cfg: FarFieldConfig,
    direction,
) -> PoiSample:
    """Field magnitude at one exact direction of interest."""
    theta_d, phi_d = float(direction[0]), float(direction[1])
    if not 0.0 <= theta_d <= np.pi / 2:
        raise ValueError("direction theta must lie in [0, pi/2]")
    if not 0.0 <= phi_d < 2.0 * np.pi:
        raise ValueError("direction phi must lie in [0, 2*pi)")
    value = field_at_directions(array, phase, src, cfg, theta_d, phi_d)[0]
    return PoiSample(theta=theta_d, phi=phi_d, magnitude=float(np.abs(value)))


def coherence_bound(array: RisArray, cfg: FarFieldConfig, theta: float) -> float:
    """Upper bound on |field| in a direction: all element phasors aligned."""
    return float(
        cfg.amplitude
        * array.n_elements
        * np.cos(theta) ** (2.0 * cfg.pattern_exponent)
    )
