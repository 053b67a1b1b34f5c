"""
Fading-channel models: the lossy channel acting on Gaussian states,
log-normal loss sampling, empirical ensembles and their statistics.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from check_physicality import check_physicality
from gaussian_core import GaussianState, apply_beam_splitter, make_thermal, tensor_product, trace_out
from random_streams import CHANNEL, StreamFactory, draw_blocked
from simulation_errors import DomainError

DEFAULT_EPS_A = 0.03
UNIT_T_TOL = 1e-12


@dataclass(frozen=True)
class ChannelRealization:
    """One subchannel draw: transmissivity T and excess noise ε at the receiver (SNU)."""
    T: float
    eps: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.T <= 1.0:
            raise DomainError(f"Transmissivity must lie in [0, 1], got {self.T}.")
        if self.eps < 0.0:
            raise DomainError(f"Excess noise must be >= 0, got {self.eps}.")

    @classmethod
    def from_source(cls, T: float, eps_A: float) -> ChannelRealization:
        """ε = T·ε_A, with ε_A referred to the sender."""
        return cls(T=T, eps=T * eps_A)


@dataclass(frozen=True)
class LogNormalLossModel:
    """Loss in dB following a log-normal law with the given mean and standard deviation (dB)."""
    mu_dB: float
    sigma_dB: float

    def __post_init__(self):
        if not self.mu_dB > 0.0:
            raise DomainError(f"mu_dB must be > 0, got {self.mu_dB}.")
        if self.sigma_dB < 0.0:
            raise DomainError(f"sigma_dB must be >= 0, got {self.sigma_dB}.")

    def normal_parameters(self) -> tuple[float, float]:
        """(mean, variance) of ln(loss): ln(μ²/sqrt(μ²+σ²)) and ln(1 + σ²/μ²)."""
        mu2 = self.mu_dB ** 2
        sigma2 = self.sigma_dB ** 2
        return float(np.log(mu2 / np.sqrt(mu2 + sigma2))), float(np.log1p(sigma2 / mu2))


@dataclass(frozen=True)
class ChannelStatistics:
    """Ensemble moments driving the averaged-state formulas."""
    mean_T: float
    mean_sqrtT: float
    var_sqrtT: float
    mean_eps: float
    n_samples: int = 0

    @property
    def T_eff(self) -> float:
        return self.mean_sqrtT ** 2


@dataclass(frozen=True, eq=False)
class EmpiricalChannel:
    """
    Transmissivity samples with the sender-referred excess noise.

    `samples` is 1-D for a single ensemble, or (n, M) for per-subchannel
    columns as read from a multi-column channel file.
    """
    samples: NDArray[np.float64]
    eps_A: float = DEFAULT_EPS_A
    label: str = "empirical"
    summary: dict = field(default_factory=dict)

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.size == 0:
            raise DomainError("An empirical channel needs at least one sample.")
        if np.any(samples < 0.0) or np.any(samples > 1.0):
            raise DomainError("Empirical transmissivities must lie in [0, 1].")
        if self.eps_A < 0.0:
            raise DomainError(f"eps_A must be >= 0, got {self.eps_A}.")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def n_columns(self) -> int:
        return 1 if self.samples.ndim == 1 else self.samples.shape[1]


@check_physicality(strict=False)
def apply_lossy_channel(state: GaussianState, mode: int, real_T: float, eps: float) -> GaussianState:
    """
    Sends `mode` through a beam splitter of transmission sqrt(T) against a
    thermal ancilla of variance 1 + ε/(1 - T), then discards the ancilla.
    The single-mode variance maps as V → T·V + (1 - T) + ε.

    Raises:
        DomainError: If T is outside [0, 1], ε < 0, or T = 1 with ε > 0.
    """
    if not 0.0 <= real_T <= 1.0:
        raise DomainError(f"Transmissivity must lie in [0, 1], got {real_T}.")
    if eps < 0.0:
        raise DomainError(f"Excess noise must be >= 0, got {eps}.")
    if real_T >= 1.0 - UNIT_T_TOL:
        if eps > 0.0:
            raise DomainError(f"Thermal background is singular at T = 1 with eps = {eps} > 0.")
        return state
    ancilla = make_thermal(1.0 + eps / (1.0 - real_T))
    joint = tensor_product(state, ancilla)
    mixed = apply_beam_splitter(joint, mode, joint.n_modes - 1, np.sqrt(real_T))
    return trace_out(mixed, [joint.n_modes - 1])


def transmissivity_from_loss_dB(loss_dB: NDArray | float) -> NDArray | float:
    return 10.0 ** (-np.asarray(loss_dB) / 10.0)


def loss_dB_from_transmissivity(T: NDArray | float) -> NDArray | float:
    return -10.0 * np.log10(T)


def sample_lognormal_losses(model: LogNormalLossModel, rng: np.random.Generator, size: int) -> NDArray[np.float64]:
    """Vectorized loss draws in dB; a zero sigma gives the constant mean."""
    if model.sigma_dB == 0.0:
        return np.full(size, model.mu_dB)
    mean, variance = model.normal_parameters()
    return rng.lognormal(mean=mean, sigma=np.sqrt(variance), size=size)


def sample_lognormal_T(model: LogNormalLossModel, rng: np.random.Generator, eps_A: float = 0.0) -> ChannelRealization:
    """One log-normal draw, T = 10^(-loss/10), with ε = T·ε_A."""
    loss = sample_lognormal_losses(model, rng, 1)[0]
    return ChannelRealization.from_source(float(transmissivity_from_loss_dB(loss)), eps_A)


def compute_stats(T_samples, eps_A: float) -> ChannelStatistics:
    """
    Empirical moments ⟨T⟩, ⟨√T⟩, Var[√T] and ⟨ε⟩ = ⟨T⟩·ε_A.

    Raises:
        DomainError: If there are no samples or a sample is outside [0, 1].
    """
    T = np.asarray(T_samples, dtype=float).reshape(-1)
    if T.size == 0:
        raise DomainError("compute_stats needs at least one transmissivity sample.")
    if np.any(T < 0.0) or np.any(T > 1.0):
        raise DomainError("Transmissivity samples must lie in [0, 1].")
    root = np.sqrt(T)
    mean_T = float(T.mean())
    return ChannelStatistics(
        mean_T=mean_T,
        mean_sqrtT=float(root.mean()),
        var_sqrtT=float(root.var()),
        mean_eps=mean_T * eps_A,
        n_samples=int(T.size),
    )


def _losses_dB(T_samples) -> NDArray[np.float64]:
    T = np.asarray(T_samples, dtype=float).reshape(-1)
    if T.size == 0:
        raise DomainError("Loss statistics need at least one sample.")
    zeros = int(np.count_nonzero(T <= 0.0))
    if zeros:
        raise DomainError(f"{zeros} zero-transmissivity sample(s) have infinite loss in dB.")
    return loss_dB_from_transmissivity(T)


def loss_statistics_dB(T_samples) -> tuple[float, float]:
    """(mean loss, fading strength): mean and standard deviation of -10 log10 T."""
    loss = _losses_dB(T_samples)
    return float(loss.mean()), float(loss.std())


def loss_extremes_dB(T_samples) -> tuple[float, float]:
    loss = _losses_dB(T_samples)
    return float(loss.min()), float(loss.max())


def loss_histogram(T_samples, bins: int = 40) -> tuple[NDArray[np.int64], NDArray[np.float64]]:
    """Raw histogram (counts, bin edges) of the loss in dB."""
    return np.histogram(_losses_dB(T_samples), bins=bins)


@dataclass(frozen=True, eq=False)
class ChannelDraws:
    """Joint draws for M subchannels: T and ε arrays of shape (n, M)."""
    T: NDArray[np.float64]
    eps: NDArray[np.float64]

    @property
    def n(self) -> int:
        return self.T.shape[0]

    @property
    def M(self) -> int:
        return self.T.shape[1]

    def realizations(self, index: int) -> list[ChannelRealization]:
        return [ChannelRealization(float(t), float(e)) for t, e in zip(self.T[index], self.eps[index])]

    def stats(self, eps_A: float) -> ChannelStatistics:
        return compute_stats(self.T, eps_A)


class ChannelSampler(ABC):
    """
    Joint sampler for M subchannels. Column j draws from the stream keyed
    (CHANNEL, j, block), so a draw never depends on the worker count.
    """

    def __init__(self, eps_A: float = DEFAULT_EPS_A):
        if eps_A < 0.0:
            raise DomainError(f"eps_A must be >= 0, got {eps_A}.")
        self.eps_A = eps_A

    @property
    @abstractmethod
    def label(self) -> str:
        ...

    @abstractmethod
    def _draw_column(self, rng: np.random.Generator, column: int, size: int) -> NDArray[np.float64]:
        ...

    def draw(self, factory: StreamFactory, M: int, n: int) -> ChannelDraws:
        if M < 1 or n < 1:
            raise DomainError(f"Need M >= 1 and n >= 1, got M={M}, n={n}.")
        columns = [draw_blocked(factory, (CHANNEL, j), n, lambda rng, size, j=j: self._draw_column(rng, j, size))
                   for j in range(M)]
        T = np.column_stack(columns)
        return ChannelDraws(T=T, eps=T * self.eps_A)


class LogNormalSampler(ChannelSampler):
    def __init__(self, model: LogNormalLossModel, eps_A: float = DEFAULT_EPS_A):
        super().__init__(eps_A)
        self.model = model

    @property
    def label(self) -> str:
        return f"lognormal({self.model.mu_dB:g},{self.model.sigma_dB:g})"

    def _draw_column(self, rng, column, size):
        return transmissivity_from_loss_dB(sample_lognormal_losses(self.model, rng, size))


class EmpiricalSampler(ChannelSampler):
    """
    Resamples an EmpiricalChannel with replacement. Multi-column channels
    feed subchannel j from column j (modulo the column count).
    """

    def __init__(self, channel: EmpiricalChannel):
        super().__init__(channel.eps_A)
        self.channel = channel

    @property
    def label(self) -> str:
        return self.channel.label

    def _draw_column(self, rng, column, size):
        samples = self.channel.samples
        if samples.ndim == 2:
            samples = samples[:, column % samples.shape[1]]
        return samples[rng.integers(0, samples.shape[0], size=size)]


class DeterministicSampler(ChannelSampler):
    """Every subchannel has the same fixed transmissivity."""

    def __init__(self, T: float, eps_A: float = DEFAULT_EPS_A):
        super().__init__(eps_A)
        if not 0.0 <= T <= 1.0:
            raise DomainError(f"Transmissivity must lie in [0, 1], got {T}.")
        self.T = T

    @property
    def label(self) -> str:
        return f"deterministic({self.T:g})"

    def _draw_column(self, rng, column, size):
        return np.full(size, self.T)
