import math
from dataclasses import asdict, dataclass, field

import numpy as np

from beam_propagation import (BeamParams, FieldGrid, GridSpec, UplinkGeometry, absorbing_boundary, angular_spectrum_step,
                              aperture_power, diffraction_loss_dB, gaussian_beam_field, max_transfer_step,
                              vacuum_propagate)
from channel_models import (DEFAULT_EPS_A, ChannelRealization, EmpiricalChannel, loss_extremes_dB, loss_histogram,
                            loss_statistics_dB)
from random_streams import PHASE_SCREEN, StreamFactory, block_ranges, parallel_map
from turbulence_helper import (ATMOSPHERE_TOP, MAX_SCREENS, RYTOV_LIMIT, Slab, TurbulenceProfile, fried_parameter,
                               make_phase_screen, plan_slabs)

REALIZATION_BLOCK = 25


@dataclass(frozen=True)
class UplinkScenario:
    """
    Everything one uplink realization depends on.

    The atmosphere ends at `top` altitude; beyond it a single matrix
    Fresnel transform carries the field to an n_rx x n_rx receiver window
    spanning `rx_span` aperture diameters.
    """
    geometry: UplinkGeometry = field(default_factory=UplinkGeometry)
    beam: BeamParams = field(default_factory=BeamParams)
    profile: TurbulenceProfile = field(default_factory=TurbulenceProfile)
    grid: GridSpec = field(default_factory=GridSpec)
    n_screens: int = 10
    turbulence: bool = True
    top: float = ATMOSPHERE_TOP
    rytov_limit: float = RYTOV_LIMIT
    max_screens: int = MAX_SCREENS
    n_rx: int = 128
    rx_span: float = 1.1
    eps_A: float = DEFAULT_EPS_A

    @property
    def receiver_dx(self) -> float:
        return 2.0 * self.rx_span * self.beam.ra / self.n_rx

    def plan(self) -> list[Slab]:
        if not self.turbulence:
            return []
        return plan_slabs(self.geometry, self.profile, self.beam.k, self.n_screens, self.top,
                          self.rytov_limit, self.max_screens)


@dataclass(frozen=True)
class EnsembleSummary:
    n: int
    mean_loss_dB: float
    fading_dB: float
    min_loss_dB: float
    max_loss_dB: float
    diffraction_loss_dB: float
    histogram_counts: list
    histogram_edges: list

    def as_dict(self) -> dict:
        return asdict(self)


def _atmospheric_hop(field: FieldGrid, dz: float, beam: BeamParams, mask: np.ndarray) -> FieldGrid:
    # Sub-steps keep every transfer function within its sampling bound.
    n_steps = max(1, math.ceil(dz / max_transfer_step(field.grid, beam)))
    for _ in range(n_steps):
        field = angular_spectrum_step(field, dz / n_steps, beam)
        field = field.with_values(field.values * mask)
    return field


def simulate_uplink_T(scenario: UplinkScenario, rng: np.random.Generator,
                      slabs: list[Slab] | None = None) -> ChannelRealization:
    """
    One transmissivity sample: launch the waist, hop to each slab midpoint
    and apply its screen, then Fresnel-transform to the satellite and
    integrate the intensity over the receiver aperture.

    Args:
        scenario (UplinkScenario): Geometry, beam, turbulence and grids.
        rng (np.random.Generator): Stream for this realization's screens.
        slabs (list[Slab] | None): Precomputed plan; computed when None.

    Raises:
        ConfigurationError: If the slab plan cannot satisfy the scintillation limit.
    """
    beam = scenario.beam
    field = gaussian_beam_field(beam, scenario.grid)
    z = 0.0
    if scenario.turbulence:
        slabs = scenario.plan() if slabs is None else slabs
        mask = absorbing_boundary(scenario.grid)
        for slab in slabs:
            field = _atmospheric_hop(field, slab.midpoint - z, beam, mask)
            screen = make_phase_screen(slab.cn2_integral, scenario.grid, scenario.profile, rng, beam.wavelength)
            field = field.with_values(field.values * np.exp(1j * screen))
            z = slab.midpoint
    receiver = vacuum_propagate(field, scenario.geometry.L - z, beam, dx_out=scenario.receiver_dx, n_out=scenario.n_rx)
    T = min(1.0, max(0.0, aperture_power(receiver, beam.ra)))
    return ChannelRealization.from_source(T, scenario.eps_A)


def _simulate_block(task) -> list[float]:
    scenario, seed, start, end = task
    factory = StreamFactory(seed)
    slabs = scenario.plan()
    return [simulate_uplink_T(scenario, factory.stream(PHASE_SCREEN, 0, i), slabs).T for i in range(start, end)]


def summarize_ensemble(samples, scenario: UplinkScenario, bins: int = 40) -> EnsembleSummary:
    mean_loss, fading = loss_statistics_dB(samples)
    low, high = loss_extremes_dB(samples)
    counts, edges = loss_histogram(samples, bins)
    return EnsembleSummary(
        n=len(samples), mean_loss_dB=mean_loss, fading_dB=fading, min_loss_dB=low, max_loss_dB=high,
        diffraction_loss_dB=diffraction_loss_dB(scenario.geometry, scenario.beam),
        histogram_counts=[int(c) for c in counts], histogram_edges=[float(e) for e in edges],
    )


def run_ensemble(scenario: UplinkScenario, n_realizations: int, factory: StreamFactory,
                 threads: int = 1) -> EmpiricalChannel:
    """
    Independent realizations in fixed blocks; realization i always draws
    from the stream (PHASE_SCREEN, 0, i), so the samples do not depend on
    `threads`.
    """
    if n_realizations < 1:
        raise ValueError(f"n_realizations must be >= 1, got {n_realizations}.")
    tasks = [(scenario, factory.seed, start, end) for start, end in block_ranges(n_realizations, REALIZATION_BLOCK)]
    samples = [T for block in parallel_map(_simulate_block, tasks, threads) for T in block]
    label = f"phasescreen({math.degrees(scenario.geometry.theta_z):g}deg)"
    return EmpiricalChannel(np.array(samples), scenario.eps_A, label=label,
                            summary=summarize_ensemble(samples, scenario).as_dict())


class UplinkOrchestrator:
    """
    Runs phase-screen ensembles for one uplink scenario and reports the
    split-step diagnostics alongside the samples.
    """

    def __init__(self, scenario: UplinkScenario, threads: int = 1, verbose: bool = True):
        """
        Args:
            scenario (UplinkScenario): The uplink to simulate.
            threads (int): Worker processes for the ensemble. Defaults to 1.
            verbose (bool): Print progress banners. Defaults to True.
        """
        if threads < 1:
            raise ValueError(f"threads must be >= 1, got {threads}.")
        self.scenario = scenario
        self.threads = threads
        self.verbose = verbose
        self.slabs: list[Slab] = []
        if self.verbose:
            print(f"✅ Uplink orchestrator initialized (θz = {math.degrees(scenario.geometry.theta_z):g}°, "
                  f"L = {scenario.geometry.L / 1e3:.1f} km, {threads} worker(s)).")

    def initialize_plan(self) -> list[Slab]:
        """Phase 1: Plans the slabs and checks their scintillation indices."""
        if self.verbose:
            print("\n--- 🌍 Phase 1: Planning Split-Step Slabs ---")
        self.slabs = self.scenario.plan()
        if self.verbose:
            if self.slabs:
                worst = max(s.rytov for s in self.slabs)
                print(f"✅ {len(self.slabs)} screens planned (largest slab scintillation index {worst:.3g}).")
            else:
                print("ℹ️ Turbulence disabled. Diffraction-only propagation.")
        return self.slabs

    def diagnostics(self) -> dict:
        """Per-slab turbulence figures and the grid settings, as a JSON-ready dict."""
        scenario = self.scenario
        total = sum(s.cn2_integral for s in self.slabs)
        return {
            "geometry": {"H": scenario.geometry.H, "theta_z": scenario.geometry.theta_z, "L": scenario.geometry.L},
            "beam": asdict(scenario.beam),
            "profile": asdict(scenario.profile),
            "grid": {
                "n": scenario.grid.n, "dx": scenario.grid.dx, "side": scenario.grid.side,
                "max_transfer_step": max_transfer_step(scenario.grid, scenario.beam),
                "receiver_n": scenario.n_rx, "receiver_dx": scenario.receiver_dx,
            },
            "analytic": {
                "w_at_receiver": scenario.beam.width_at(scenario.geometry.L),
                "diffraction_loss_dB": diffraction_loss_dB(scenario.geometry, scenario.beam),
                "path_r0": fried_parameter(total, scenario.beam.k) if total > 0 else None,
            },
            "slabs": [s.as_dict() for s in self.slabs],
        }

    def run_ensemble(self, n_realizations: int, seed: int) -> EmpiricalChannel:
        """
        Phases 1-3: plan, propagate `n_realizations` independent samples, summarize.

        Returns:
            EmpiricalChannel: Samples with the ensemble summary attached.
        """
        self.initialize_plan()
        if self.verbose:
            print(f"\n--- 🔭 Phase 2: Propagating {n_realizations} Realizations ---")
        channel = run_ensemble(self.scenario, n_realizations, StreamFactory(seed), self.threads)
        if self.verbose:
            summary = channel.summary
            print("\n--- 📊 Phase 3: Ensemble Summary ---")
            print(f"  - Mean loss: {summary['mean_loss_dB']:.2f} dB, fading strength: {summary['fading_dB']:.2f} dB")
            print(f"  - Min / max loss: {summary['min_loss_dB']:.2f} / {summary['max_loss_dB']:.2f} dB")
            print(f"  - Diffraction-only loss: {summary['diffraction_loss_dB']:.2f} dB")
            print("✅ Ensemble complete.")
        return channel
