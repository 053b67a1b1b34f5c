"""
Scalar paraxial beam propagation for the optical uplink.

Fields live on square grids in meters. Short hops inside the atmosphere
use the Fresnel transfer function (angular spectrum); the long vacuum leg
to the satellite uses a separable matrix Fresnel transform straight onto
a small receiver window, so the receiver sampling is independent of the
transmitter grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from simulation_errors import ConfigurationError, DomainError

POWER_TOL = 1e-4


@dataclass(frozen=True)
class UplinkGeometry:
    """Satellite altitude H (m) and zenith angle θ_z (rad); slant path L = H / cos θ_z."""
    H: float = 500e3
    theta_z: float = 0.0

    def __post_init__(self):
        if self.H <= 0.0:
            raise DomainError(f"Altitude must be positive, got {self.H}.")
        if not 0.0 <= self.theta_z < math.pi / 2:
            raise DomainError(f"Zenith angle must lie in [0, π/2), got {self.theta_z}.")

    @classmethod
    def from_degrees(cls, theta_z_deg: float, H: float = 500e3) -> UplinkGeometry:
        return cls(H=H, theta_z=math.radians(theta_z_deg))

    @property
    def L(self) -> float:
        return self.H / math.cos(self.theta_z)

    def slant_length(self, altitude: float) -> float:
        """Path length from the ground to `altitude` along the slant."""
        return min(altitude, self.H) / math.cos(self.theta_z)


@dataclass(frozen=True)
class BeamParams:
    """Transmitter waist w0, wavelength and receiver aperture radius ra, all in meters."""
    w0: float = 0.035
    wavelength: float = 1064e-9
    ra: float = 0.15

    def __post_init__(self):
        if min(self.w0, self.wavelength, self.ra) <= 0.0:
            raise DomainError(f"Beam parameters must be positive, got {self}.")
        if self.w0 < 10.0 * self.wavelength:
            raise DomainError(f"Waist {self.w0} m is outside the paraxial regime for λ = {self.wavelength} m.")

    @property
    def k(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def z_R(self) -> float:
        return math.pi * self.w0 ** 2 / self.wavelength

    def width_at(self, z: float) -> float:
        """w(z) = w0 sqrt(1 + (z / z_R)²)."""
        return self.w0 * math.sqrt(1.0 + (z / self.z_R) ** 2)


@dataclass(frozen=True)
class GridSpec:
    """n x n samples with spacing dx; n must be a power of two."""
    n: int = 1024
    dx: float = 3e-3

    def __post_init__(self):
        if self.n < 2 or self.n & (self.n - 1):
            raise DomainError(f"Grid size must be a power of two, got {self.n}.")
        if self.dx <= 0.0:
            raise DomainError(f"Grid spacing must be positive, got {self.dx}.")

    @property
    def side(self) -> float:
        return self.n * self.dx

    def coordinates(self) -> NDArray[np.float64]:
        return (np.arange(self.n) - self.n // 2) * self.dx


@dataclass(frozen=True, eq=False)
class FieldGrid:
    """Complex field samples values[iy, ix] on coordinates (arange(n) - n//2) * dx, plus an optional centre offset."""
    values: NDArray[np.complex128]
    dx: float
    origin: tuple[float, float] = (0.0, 0.0)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.n, self.dx)

    def coordinates(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        base = self.grid.coordinates()
        return base + self.origin[0], base + self.origin[1]

    def intensity(self) -> NDArray[np.float64]:
        return np.abs(self.values) ** 2

    def power(self) -> float:
        return float(self.intensity().sum() * self.dx ** 2)

    def centroid(self) -> tuple[float, float]:
        x, y = self.coordinates()
        weights = self.intensity()
        total = weights.sum()
        return float((weights.sum(axis=0) @ x) / total), float((weights.sum(axis=1) @ y) / total)

    def beam_radius(self) -> float:
        """Second-moment radius 2 sqrt(⟨(x - x̄)²⟩); equals w for a Gaussian exp(-2r²/w²)."""
        x, _ = self.coordinates()
        cx, _ = self.centroid()
        weights = self.intensity().sum(axis=0)
        return float(2.0 * np.sqrt(weights @ (x - cx) ** 2 / weights.sum()))

    def with_values(self, values: NDArray[np.complex128]) -> FieldGrid:
        return FieldGrid(values, self.dx, self.origin)


def gaussian_beam_field(beam: BeamParams, grid: GridSpec) -> FieldGrid:
    """
    Unit-power fundamental Gaussian at the waist,
    ψ(r) = sqrt(2/π) / w0 · exp(-r² / w0²).

    Raises:
        ConfigurationError: If the grid spans less than 6·w0 or the sampled
            power misses 1 by more than 1e-4.
    """
    if grid.side < 6.0 * beam.w0:
        raise ConfigurationError(f"Grid side {grid.side:.4g} m is smaller than 6·w0 = {6 * beam.w0:.4g} m.")
    x = grid.coordinates()
    r2 = x[None, :] ** 2 + x[:, None] ** 2
    values = (math.sqrt(2.0 / math.pi) / beam.w0) * np.exp(-r2 / beam.w0 ** 2)
    field = FieldGrid(values.astype(complex), grid.dx)
    if abs(field.power() - 1.0) > POWER_TOL:
        raise ConfigurationError(f"Sampled beam power {field.power():.6f} deviates from 1; refine dx.")
    return field


def max_transfer_step(grid: GridSpec, beam: BeamParams) -> float:
    """Largest dz for which the Fresnel transfer function is adequately sampled: n dx² / λ."""
    return grid.n * grid.dx ** 2 / beam.wavelength


def _suggested_grid(dz: float, grid: GridSpec, beam: BeamParams) -> dict:
    needed = beam.wavelength * dz / grid.dx ** 2
    return {"n": 1 << max(1, math.ceil(math.log2(needed))), "dx": grid.dx, "max_step": max_transfer_step(grid, beam)}


def angular_spectrum_step(field: FieldGrid, dz: float, beam: BeamParams) -> FieldGrid:
    """
    One transfer-function step, H(f) = exp(-iπλ dz |f|²).

    Raises:
        ConfigurationError: If dz exceeds n dx² / λ; `details` carries a suggested grid.
    """
    grid = field.grid
    if dz > max_transfer_step(grid, beam) * (1.0 + 1e-12):
        raise ConfigurationError(
            f"Step {dz:.4g} m exceeds the transfer-function sampling bound {max_transfer_step(grid, beam):.4g} m.",
            details={"suggested_grid": _suggested_grid(dz, grid, beam)},
        )
    f = np.fft.fftfreq(grid.n, grid.dx)
    f2 = f[None, :] ** 2 + f[:, None] ** 2
    transfer = np.exp(-1j * math.pi * beam.wavelength * dz * f2)
    shifted = np.fft.ifftshift(field.values)
    values = np.fft.fftshift(np.fft.ifft2(np.fft.fft2(shifted) * transfer))
    return field.with_values(values)


def fresnel_kernel(x_out: NDArray, x_in: NDArray, dz: float, beam: BeamParams, dx_in: float) -> NDArray[np.complex128]:
    """1-D Fresnel kernel K[m, p] = exp(ik (x_out_m - x_in_p)² / 2dz) dx_in / sqrt(iλ dz)."""
    phase = beam.k * (x_out[:, None] - x_in[None, :]) ** 2 / (2.0 * dz)
    return np.exp(1j * phase) * (dx_in / np.sqrt(1j * beam.wavelength * dz))


def fresnel_to_window(field: FieldGrid, dz: float, beam: BeamParams, dx_out: float, n_out: int,
                      center: tuple[float, float] = (0.0, 0.0)) -> FieldGrid:
    """
    Matrix Fresnel transform onto an n_out x n_out window of spacing dx_out
    centred at `center`: U_out = K_y @ U_in @ K_xᵀ.
    """
    x_in, y_in = field.coordinates()
    base = (np.arange(n_out) - n_out // 2) * dx_out
    kx = fresnel_kernel(base + center[0], x_in, dz, beam, field.dx)
    ky = fresnel_kernel(base + center[1], y_in, dz, beam, field.dx)
    return FieldGrid(ky @ field.values @ kx.T, dx_out, center)


def vacuum_propagate(field: FieldGrid, dz: float, beam: BeamParams, dx_out: float | None = None,
                     n_out: int | None = None) -> FieldGrid:
    """
    Free-space propagation by dz meters.

    Without `dx_out` the field stays on its grid (angular spectrum, subject
    to the sampling bound). With `dx_out` a matrix Fresnel transform
    resamples onto an n_out-point window (n_out defaults to the input size).

    Raises:
        DomainError: If dz < 0.
        ConfigurationError: If the angular-spectrum bound is violated.
    """
    if dz < 0.0:
        raise DomainError(f"Propagation distance must be >= 0, got {dz}.")
    if dz == 0.0:
        return field
    if dx_out is None:
        return angular_spectrum_step(field, dz, beam)
    return fresnel_to_window(field, dz, beam, dx_out, n_out or field.n)


def absorbing_boundary(grid: GridSpec, order: int = 16, fraction: float = 0.47) -> NDArray[np.float64]:
    """Super-Gaussian edge mask exp(-(r / (fraction · side))^order)."""
    x = grid.coordinates()
    r = np.sqrt(x[None, :] ** 2 + x[:, None] ** 2)
    return np.exp(-((r / (fraction * grid.side)) ** order))


def aperture_power(field: FieldGrid, ra: float, center: tuple[float, float] = (0.0, 0.0)) -> float:
    """
    Power collected by a circular aperture of radius ra. Edge pixels are
    weighted by their linearly interpolated coverage.
    """
    x, y = field.coordinates()
    r = np.sqrt((x[None, :] - center[0]) ** 2 + (y[:, None] - center[1]) ** 2)
    coverage = np.clip((ra - r) / field.dx + 0.5, 0.0, 1.0)
    return float((field.intensity() * coverage).sum() * field.dx ** 2)


def diffraction_transmissivity(geometry: UplinkGeometry, beam: BeamParams) -> float:
    """Turbulence-free aperture transmissivity 1 - exp(-2 ra² / w(L)²)."""
    return float(-np.expm1(-2.0 * beam.ra ** 2 / beam.width_at(geometry.L) ** 2))


def diffraction_loss_dB(geometry: UplinkGeometry, beam: BeamParams) -> float:
    return float(-10.0 * np.log10(diffraction_transmissivity(geometry, beam)))
