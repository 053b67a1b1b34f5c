"""
Coherent-state transfer over diversity channels.

Alice sends |α_tar/√M⟩ on every subchannel; Bob combines the M outputs
and compares the result with a scaled target |α′⟩. The per-draw fidelity
has the closed form

    F = (2/Y) exp(-2 |X α_tx - α′|² / Y),  X = Σ w_j √T_j,  Y = 2 + Σ w_j² ε_j,

with w the path weights of the combining tree. Two oracles recompute it:
the overlap integral of characteristic functions and the full Gaussian
state pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import NDArray
from scipy import integrate

from channel_models import ChannelRealization, ChannelSampler, ChannelStatistics, apply_lossy_channel
from combining import CombinerTree, apply_combiner, combine_weights, equal_weight_tree, split_equally, split_modes
from gaussian_core import (CoherentAmplitude, characteristic_function, gaussian_fidelity_to_coherent,
                           make_coherent, make_vacuum)
from random_streams import ALPHABET, StreamFactory, draw_blocked, parallel_map
from simulation_errors import DomainError, NumericalError

BPSK = "classical_bpsk"
GAUSSIAN = "quantum_gaussian"
TARGET_SCALINGS = ("printed", "compensated")


@dataclass(frozen=True)
class ModulationScheme:
    """
    BPSK alphabet {-α, +α} with probabilities (P0, P1), or Gaussian
    modulation with quadrature variance V_mod (SNU).
    """
    kind: str
    alpha: float = 0.0
    V_mod: float = 0.0
    P0: float = 0.5

    def __post_init__(self):
        if self.kind not in (BPSK, GAUSSIAN):
            raise DomainError(f"Unknown modulation kind '{self.kind}'.")
        if not 0.0 <= self.P0 <= 1.0:
            raise DomainError(f"P0 must lie in [0, 1], got {self.P0}.")
        if self.kind == BPSK and self.alpha < 0.0:
            raise DomainError(f"BPSK amplitude must be >= 0, got {self.alpha}.")
        if self.kind == GAUSSIAN and self.V_mod < 0.0:
            raise DomainError(f"V_mod must be >= 0, got {self.V_mod}.")

    @classmethod
    def bpsk(cls, alpha: float, P0: float = 0.5) -> ModulationScheme:
        return cls(kind=BPSK, alpha=alpha, P0=P0)

    @classmethod
    def gaussian(cls, V_mod: float) -> ModulationScheme:
        return cls(kind=GAUSSIAN, V_mod=V_mod)

    @property
    def P1(self) -> float:
        return 1.0 - self.P0

    @property
    def parameter(self) -> float:
        return self.alpha if self.kind == BPSK else self.V_mod


@dataclass(frozen=True)
class FidelityResult:
    f_avg: float
    stderr: float
    M: int
    scheme: ModulationScheme
    stats: ChannelStatistics
    n_channel: int
    n_alpha: int
    target_scaling: str = "printed"
    label: str = ""


def sample_alphas(scheme: ModulationScheme, rng: np.random.Generator, size: int) -> NDArray[np.complex128]:
    """
    BPSK: -α with probability P0, +α otherwise. Gaussian: Re and Im i.i.d.
    N(0, V_mod/8), so E|α|² = V_mod/4.
    """
    if scheme.kind == BPSK:
        signs = np.where(rng.random(size) < scheme.P0, -1.0, 1.0)
        return (signs * scheme.alpha).astype(complex)
    spread = np.sqrt(scheme.V_mod / 8.0)
    return spread * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def sample_alpha(scheme: ModulationScheme, rng: np.random.Generator) -> CoherentAmplitude:
    return CoherentAmplitude.from_complex(sample_alphas(scheme, rng, 1)[0])


def mean_photon_number(alpha: CoherentAmplitude | complex) -> float:
    value = alpha.as_complex() if isinstance(alpha, CoherentAmplitude) else complex(alpha)
    return abs(value) ** 2


def target_amplitude(alpha_tar, mean_sqrtT: float, target_scaling: str = "printed"):
    """
    'printed': α_tar / ⟨√T⟩. 'compensated': α_tar · ⟨√T⟩, the target after
    Bob undoes his 1/⟨√T⟩ rescaling. Works on scalars and arrays.
    """
    if not mean_sqrtT > 0.0:
        raise DomainError(f"mean_sqrtT must be > 0, got {mean_sqrtT}.")
    if target_scaling == "printed":
        return alpha_tar / mean_sqrtT
    if target_scaling == "compensated":
        return alpha_tar * mean_sqrtT
    raise DomainError(f"Unknown target scaling '{target_scaling}'; expected one of {TARGET_SCALINGS}.")


def _combination_terms(realizations: Sequence[ChannelRealization], tree: CombinerTree | None) -> tuple[float, float, NDArray]:
    M = len(realizations)
    if M < 1:
        raise DomainError("At least one channel realization is required.")
    tree = tree or equal_weight_tree(M)
    if tree.M != M:
        raise DomainError(f"Got {M} channel realizations for a tree over {tree.M} subchannels.")
    w = combine_weights(tree)
    root_T = np.sqrt([r.T for r in realizations])
    eps = np.array([r.eps for r in realizations])
    return float(w @ root_T), float(2.0 + (w * w) @ eps), w


def fidelity_closed_form(M: int, realizations: Sequence[ChannelRealization], tree: CombinerTree | None,
                         alpha_tar: CoherentAmplitude, mean_sqrtT: float, target_scaling: str = "printed") -> float:
    """
    Closed-form fidelity of one channel draw.

    Args:
        M (int): Diversity number; must match the number of realizations.
        realizations (Sequence[ChannelRealization]): One (T, ε) per subchannel.
        tree (CombinerTree | None): Combining tree; equal weights when None.
        alpha_tar (CoherentAmplitude): Alice's target amplitude.
        mean_sqrtT (float): ⟨√T⟩ of the channel law, known to Bob.
        target_scaling (str): 'printed' or 'compensated'.

    Returns:
        float: F in [0, 1].

    Raises:
        DomainError: If mean_sqrtT <= 0 or M mismatches the realizations.
    """
    if M != len(realizations):
        raise DomainError(f"M = {M} but {len(realizations)} realizations were given.")
    X, Y, _ = _combination_terms(realizations, tree)
    alpha = alpha_tar.as_complex()
    target = target_amplitude(alpha, mean_sqrtT, target_scaling)
    mismatch = X * alpha / np.sqrt(M) - target
    return float(2.0 / Y * np.exp(-2.0 * abs(mismatch) ** 2 / Y))


def _output_cf(realizations, tree, alpha_tx: CoherentAmplitude):
    """χ_DC(ξ) = Π_j χ_coh(w_j √T_j ξ; α_tx) · χ_vac(w_j sqrt(1 - T_j + ε_j) ξ)."""
    w = combine_weights(tree)
    coherent, vacuum = make_coherent(alpha_tx), make_vacuum(1)

    def chi(xi):
        value = 1.0 + 0.0j
        for weight, r in zip(w, realizations):
            value *= characteristic_function(coherent, weight * np.sqrt(r.T) * xi)
            value *= characteristic_function(vacuum, weight * np.sqrt(1.0 - r.T + r.eps) * xi)
        return value
    return chi


def _cf_moments(realizations, tree, alpha_tx: CoherentAmplitude) -> tuple[float, NDArray]:
    """Variance and mean vector of the Gaussian CF χ_DC."""
    w = combine_weights(tree)
    variance = sum(weight ** 2 * (r.T + (1.0 - r.T + r.eps)) for weight, r in zip(w, realizations))
    mean = sum(weight * np.sqrt(r.T) for weight, r in zip(w, realizations)) * alpha_tx.mean_vector()
    return float(variance), mean


def fidelity_cf_oracle(M: int, realizations: Sequence[ChannelRealization], tree: CombinerTree | None,
                       alpha_tar: CoherentAmplitude, mean_sqrtT: float, target_scaling: str = "printed",
                       method: str = "analytic") -> float:
    """
    F = (1/π) ∫ χ_DC(ξ) χ_coh(-ξ; α′) d²ξ.

    'analytic' reduces the product of Gaussian CFs to its moments and
    integrates in closed form; 'quadrature' integrates numerically on a
    box outside which the integrand is below e^-40 (suited to small
    amplitudes, the integrand oscillates with |α|).

    Raises:
        NumericalError: If the quadrature does not converge.
    """
    if M != len(realizations):
        raise DomainError(f"M = {M} but {len(realizations)} realizations were given.")
    tree = tree or equal_weight_tree(M)
    alpha_tx = alpha_tar.scaled(1.0 / np.sqrt(M))
    target = CoherentAmplitude.from_complex(target_amplitude(alpha_tar.as_complex(), mean_sqrtT, target_scaling))
    variance, mean = _cf_moments(realizations, tree, alpha_tx)
    total = variance + 1.0
    if method == "analytic":
        # ∫ exp(-½ S |k|² + i Δ·k) d²k = (2π/S) exp(-|Δ|² / (2S))
        delta = mean - target.mean_vector()
        return float(2.0 / total * np.exp(-(delta @ delta) / (2.0 * total)))
    if method != "quadrature":
        raise DomainError(f"Unknown oracle method '{method}'.")
    chi_out = _output_cf(realizations, tree, alpha_tx)
    target_state = make_coherent(target)
    half_width = np.sqrt(80.0 / total)

    def integrand(y, x):
        xi = complex(x, y)
        return (chi_out(xi) * characteristic_function(target_state, -xi)).real

    value, error = integrate.dblquad(integrand, -half_width, half_width, -half_width, half_width,
                                     epsabs=1e-11, epsrel=1e-10)
    if not np.isfinite(value) or error > 1e-7:
        raise NumericalError(f"Overlap quadrature did not converge (estimate {value}, error {error}).")
    return float(value / np.pi)


def fidelity_pipeline_oracle(M: int, realizations: Sequence[ChannelRealization], alpha_tar: CoherentAmplitude,
                             mean_sqrtT: float, target_scaling: str = "printed") -> float:
    """Fidelity from explicit states: split |α_tar⟩ equally, lossy channels, combine, overlap with |α′⟩."""
    if M != len(realizations):
        raise DomainError(f"M = {M} but {len(realizations)} realizations were given.")
    tree = equal_weight_tree(M)
    state = split_equally(make_coherent(alpha_tar), 0, M, tree)
    modes = split_modes(1, 0, M)
    for mode, r in zip(modes, realizations):
        state = apply_lossy_channel(state, mode, r.T, r.eps)
    state = apply_combiner(state, modes, tree)
    target = target_amplitude(alpha_tar.as_complex(), mean_sqrtT, target_scaling)
    return gaussian_fidelity_to_coherent(state, CoherentAmplitude.from_complex(target))


def average_fidelity(M: int, scheme: ModulationScheme, sampler: ChannelSampler, tree: CombinerTree | None,
                     n_channel: int, n_alpha: int, factory: StreamFactory, target_scaling: str = "printed",
                     mean_sqrtT: float | None = None) -> FidelityResult:
    """
    Double Monte Carlo average over channel draws and alphabet draws.

    ⟨√T⟩ defaults to the mean over all M·n_channel drawn subchannels. The
    standard error is taken across channel draws, each averaged over its
    own n_alpha alphabet draws.
    """
    if n_channel < 1 or n_alpha < 1:
        raise DomainError(f"Sample counts must be positive, got n_channel={n_channel}, n_alpha={n_alpha}.")
    if target_scaling not in TARGET_SCALINGS:
        raise DomainError(f"Unknown target scaling '{target_scaling}'.")
    tree = tree or equal_weight_tree(M)
    if tree.M != M:
        raise DomainError(f"Tree is built for {tree.M} subchannels, not {M}.")
    draws = sampler.draw(factory, M, n_channel)
    w = combine_weights(tree)
    root_T = np.sqrt(draws.T)
    X = root_T @ w
    Y = 2.0 + draws.eps @ (w * w)
    if mean_sqrtT is None:
        mean_sqrtT = float(root_T.mean())
    alphas = draw_blocked(factory, (ALPHABET,), n_channel * n_alpha,
                          lambda rng, size: sample_alphas(scheme, rng, size)).reshape(n_channel, n_alpha)
    mismatch = X[:, None] * alphas / np.sqrt(M) - target_amplitude(alphas, mean_sqrtT, target_scaling)
    per_channel = (2.0 / Y[:, None] * np.exp(-2.0 * np.abs(mismatch) ** 2 / Y[:, None])).mean(axis=1)
    stderr = float(per_channel.std(ddof=1) / np.sqrt(n_channel)) if n_channel > 1 else 0.0
    return FidelityResult(
        f_avg=float(per_channel.mean()), stderr=stderr, M=M, scheme=scheme,
        stats=draws.stats(sampler.eps_A), n_channel=n_channel, n_alpha=n_alpha,
        target_scaling=target_scaling, label=sampler.label,
    )


def _evaluate_point(task) -> FidelityResult:
    M, scheme, sampler, n_channel, n_alpha, seed, layout, target_scaling = task
    return average_fidelity(M, scheme, sampler, equal_weight_tree(M, layout), n_channel, n_alpha,
                            StreamFactory(seed), target_scaling)


def sweep_fidelity(schemes: Sequence[ModulationScheme], M_values: Sequence[int], sampler: ChannelSampler,
                   n_channel: int = 3000, n_alpha: int = 200, seed: int = 0, layout: str = "auto",
                   target_scaling: str = "printed", threads: int = 1) -> list[FidelityResult]:
    """
    Cross product M × scheme (M outer). Every point reuses the same keyed
    streams, so neighbouring points compare on common random numbers.
    """
    tasks = [(int(M), scheme, sampler, n_channel, n_alpha, seed, layout, target_scaling)
             for M in M_values for scheme in schemes]
    return parallel_map(_evaluate_point, tasks, threads)
