"""
Turbulence along the slant uplink: Hufnagel-Valley Cn² profile, the slab
plan for split-step propagation, and von Kármán phase screens generated
by the FFT method with subharmonic augmentation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, asdict

import numpy as np
from numpy.typing import NDArray
from scipy import integrate, special

from beam_propagation import GridSpec, UplinkGeometry
from simulation_errors import ConfigurationError, DomainError

ATMOSPHERE_TOP = 20e3
RYTOV_LIMIT = 0.1
MAX_SCREENS = 64
PROFILE_SAMPLES = 40001


@dataclass(frozen=True)
class TurbulenceProfile:
    """
    Hufnagel-Valley parameters: ground Cn² A (m^-2/3), outer and inner
    scales (m), ground wind Vg and rms wind v_rms (m/s).
    """
    A: float = 9.6e-14
    L_outer: float = 5.0
    l_inner: float = 0.01
    Vg: float = 3.0
    v_rms: float = 21.0

    def __post_init__(self):
        if min(self.A, self.L_outer, self.l_inner, self.Vg, self.v_rms) <= 0.0:
            raise DomainError(f"Turbulence parameters must be positive, got {self}.")
        if self.l_inner >= self.L_outer:
            raise DomainError(f"Inner scale {self.l_inner} must be below outer scale {self.L_outer}.")


@dataclass(frozen=True)
class Slab:
    """A stretch [z_start, z_end) of slant path, represented by one screen at its midpoint."""
    z_start: float
    z_end: float
    cn2_integral: float
    r0: float
    rytov: float

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.z_start + self.z_end)

    @property
    def length(self) -> float:
        return self.z_end - self.z_start

    def as_dict(self) -> dict:
        return {**asdict(self), "midpoint": self.midpoint}


def cn2_profile(h, profile: TurbulenceProfile):
    """
    Hufnagel-Valley Cn²(h) in m^-2/3,
    0.00594 (v/27)² (1e-5 h)^10 e^(-h/1000) + 2.7e-16 e^(-h/1500) + A e^(-h/100).
    Accepts scalars or arrays.
    """
    h = np.asarray(h, dtype=float)
    if np.any(h < 0.0):
        raise DomainError("Altitude must be >= 0.")
    value = (0.00594 * (profile.v_rms / 27.0) ** 2 * (1e-5 * h) ** 10 * np.exp(-h / 1000.0)
             + 2.7e-16 * np.exp(-h / 1500.0)
             + profile.A * np.exp(-h / 100.0))
    return float(value) if value.ndim == 0 else value


def fried_parameter(cn2_integral: float, k: float) -> float:
    """Plane-wave r0 = (0.423 k² ∫Cn² dz)^(-3/5); infinite without turbulence."""
    if cn2_integral <= 0.0:
        return math.inf
    return (0.423 * k * k * cn2_integral) ** (-3.0 / 5.0)


def rytov_variance(cn2_integral: float, k: float, dz: float) -> float:
    """Plane-wave scintillation index of a slab, 1.23 k^(7/6) ∫Cn² dz · dz^(5/6)."""
    return 1.23 * k ** (7.0 / 6.0) * cn2_integral * dz ** (5.0 / 6.0)


class _PathProfile:
    """Cumulative integrals of Cn² and of the uplink Rytov weight along the slant path."""

    def __init__(self, geometry: UplinkGeometry, profile: TurbulenceProfile, top: float):
        self.length = geometry.slant_length(top)
        self.z = np.linspace(0.0, self.length, PROFILE_SAMPLES)
        cn2 = cn2_profile(self.z * math.cos(geometry.theta_z), profile)
        # Spherical-wave weighting toward a distant receiver.
        weight = cn2 * (self.z * (1.0 - self.z / geometry.L)) ** (5.0 / 6.0)
        self.cn2_cumulative = integrate.cumulative_trapezoid(cn2, self.z, initial=0.0)
        self.weight_cumulative = integrate.cumulative_trapezoid(weight, self.z, initial=0.0)

    def cn2_between(self, z0: float, z1: float) -> float:
        c0, c1 = np.interp([z0, z1], self.z, self.cn2_cumulative)
        return float(c1 - c0)

    def equal_weight_bounds(self, n_slabs: int) -> list[float]:
        targets = np.linspace(0.0, self.weight_cumulative[-1], n_slabs + 1)
        bounds = np.interp(targets, self.weight_cumulative, self.z)
        bounds[0], bounds[-1] = 0.0, self.length
        return [float(b) for b in bounds]


def _make_slab(path: _PathProfile, z0: float, z1: float, k: float) -> Slab:
    integral = path.cn2_between(z0, z1)
    return Slab(z_start=z0, z_end=z1, cn2_integral=integral, r0=fried_parameter(integral, k),
                rytov=rytov_variance(integral, k, z1 - z0))


def plan_slabs(geometry: UplinkGeometry, profile: TurbulenceProfile, k: float, n_screens: int = 10,
               top: float = ATMOSPHERE_TOP, rytov_limit: float = RYTOV_LIMIT,
               max_screens: int = MAX_SCREENS) -> list[Slab]:
    """
    Splits the atmospheric part of the slant path into `n_screens` slabs of
    equal Rytov weight, then bisects every slab whose scintillation index
    reaches `rytov_limit`.

    Raises:
        ConfigurationError: If the limit still fails with `max_screens`
            slabs; `details['rytov']` lists the per-slab indices.
    """
    if n_screens < 1:
        raise DomainError(f"n_screens must be >= 1, got {n_screens}.")
    path = _PathProfile(geometry, profile, top)
    bounds = path.equal_weight_bounds(n_screens)
    slabs = [_make_slab(path, z0, z1, k) for z0, z1 in zip(bounds[:-1], bounds[1:])]
    while any(s.rytov >= rytov_limit for s in slabs):
        if len(slabs) >= max_screens:
            raise ConfigurationError(
                f"Split-step plan needs more than {max_screens} screens to keep every slab below "
                f"a scintillation index of {rytov_limit}.",
                details={"rytov": [s.rytov for s in slabs], "slabs": [s.as_dict() for s in slabs]},
            )
        refined = []
        for s in slabs:
            if s.rytov >= rytov_limit:
                mid = s.midpoint
                refined += [_make_slab(path, s.z_start, mid, k), _make_slab(path, mid, s.z_end, k)]
            else:
                refined.append(s)
        slabs = refined
    return slabs


def von_karman_psd(f: NDArray | float, r0: float, L_outer: float, l_inner: float):
    """
    Modified von Kármán phase PSD in spatial frequency f (cycles/m):
    0.023 r0^(-5/3) (f² + 1/L0²)^(-11/6) exp(-(f/fm)²), fm = 5.92 / (2π l0).
    """
    f = np.asarray(f, dtype=float)
    fm = 5.92 / (2.0 * math.pi * l_inner)
    return 0.023 * r0 ** (-5.0 / 3.0) * (f * f + 1.0 / L_outer ** 2) ** (-11.0 / 6.0) * np.exp(-(f / fm) ** 2)


def make_phase_screen(cn2_integral: float, grid: GridSpec, profile: TurbulenceProfile, rng: np.random.Generator,
                      wavelength: float = 1064e-9, subharmonics: int = 3) -> NDArray[np.float64]:
    """
    Zero-mean phase screen (rad) for a slab with the given ∫Cn² dz.

    High frequencies come from filtering complex white noise with the von
    Kármán PSD; `subharmonics` levels of 3x3 sub-grid frequencies add the
    low-order tilt the FFT grid under-samples.
    """
    if cn2_integral < 0.0:
        raise DomainError(f"Slab Cn² integral must be >= 0, got {cn2_integral}.")
    if cn2_integral == 0.0:
        return np.zeros((grid.n, grid.n))
    if grid.dx > profile.l_inner:
        warnings.warn(f"Grid spacing {grid.dx} m does not resolve the inner scale {profile.l_inner} m.",
                      RuntimeWarning, stacklevel=2)
    r0 = fried_parameter(cn2_integral, 2.0 * math.pi / wavelength)
    n, side = grid.n, grid.side
    df = 1.0 / side

    f = np.fft.fftfreq(n, grid.dx)
    psd = von_karman_psd(np.hypot(f[None, :], f[:, None]), r0, profile.L_outer, profile.l_inner)
    psd[0, 0] = 0.0
    noise = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    high = np.real(np.fft.ifft2(noise * np.sqrt(psd) * df)) * n * n

    x = grid.coordinates()
    low = np.zeros((n, n), dtype=complex)
    for level in range(1, subharmonics + 1):
        df_level = df / 3.0 ** level
        f_level = np.array([-1.0, 0.0, 1.0]) * df_level
        psd_level = von_karman_psd(np.hypot(f_level[None, :], f_level[:, None]), r0,
                                   profile.L_outer, profile.l_inner)
        psd_level[1, 1] = 0.0
        coeffs = (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))) * np.sqrt(psd_level) * df_level
        waves = np.exp(2j * math.pi * np.outer(x, f_level))
        low += waves @ coeffs @ waves.T
    low = np.real(low)
    return high + low - low.mean()


def structure_function_theory(r: float, r0: float, L_outer: float, l_inner: float) -> float:
    """D(r) = 2 ∫ Φ(f) (1 - J0(2π f r)) 2π f df for the von Kármán PSD."""
    fm = 5.92 / (2.0 * math.pi * l_inner)

    def integrand(f):
        return von_karman_psd(f, r0, L_outer, l_inner) * (1.0 - special.j0(2.0 * math.pi * f * r)) * 2.0 * math.pi * f

    breaks = [0.0, 1.0 / L_outer, 1.0 / r, fm, 8.0 * fm]
    breaks = sorted(set(b for b in breaks if b <= 8.0 * fm))
    total = sum(integrate.quad(integrand, a, b, limit=400)[0] for a, b in zip(breaks[:-1], breaks[1:]))
    return 2.0 * total


def structure_function_empirical(screens: NDArray[np.float64], lag: int) -> float:
    """Mean squared phase difference at a pixel lag, over both axes and every screen."""
    screens = np.asarray(screens)
    if screens.ndim == 2:
        screens = screens[None]
    dx_term = (screens[:, :, lag:] - screens[:, :, :-lag]) ** 2
    dy_term = (screens[:, lag:, :] - screens[:, :-lag, :]) ** 2
    return float(0.5 * (dx_term.mean() + dy_term.mean()))
