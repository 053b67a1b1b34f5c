"""
Entanglement distribution over diversity channels.

Builds the two-mode covariance matrix shared by Alice (mode A, kept) and
Bob (combined output of M fading subchannels) conditionally on a channel
draw, averaged analytically over the fading statistics, or averaged by
Monte Carlo, and evaluates logarithmic negativity and reverse coherent
information on it.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import xlogy

from channel_models import ChannelRealization, ChannelSampler, ChannelStatistics, apply_lossy_channel
from combining import CombinerTree, apply_combiner, combine_weights, equal_weight_tree, split_equally, split_modes
from gaussian_core import PHYSICALITY_TOL, make_tmsv
from random_streams import StreamFactory, parallel_map
from simulation_errors import DomainError, NumericalError, PhysicalityWarning

_Z = np.diag([1.0, -1.0])


@dataclass(frozen=True)
class TwoModeCM:
    """Standard form [[a I, c Z], [c Z, b I]]."""
    a: float
    b: float
    c: float

    def matrix(self) -> np.ndarray:
        eye = np.eye(2)
        return np.block([[self.a * eye, self.c * _Z], [self.c * _Z, self.b * eye]])

    @property
    def det(self) -> float:
        return (self.a * self.b - self.c * self.c) ** 2


@dataclass(frozen=True)
class MonteCarloCM:
    """Ensemble-averaged CM with per-element standard errors and the statistics of the draws used."""
    cm: TwoModeCM
    stderr: TwoModeCM
    stats: ChannelStatistics
    n: int


@dataclass(frozen=True)
class EntanglementResult:
    e_ln: float
    e_ln_scaled: float
    rci: float
    stats_used: ChannelStatistics
    M: int
    Vs: float
    cm: TwoModeCM = field(repr=False)
    stderr_b: float = 0.0
    label: str = ""


def _check_source(Vs: float):
    if Vs < 1.0:
        raise DomainError(f"Source variance Vs must be >= 1, got {Vs}.")


def conditional_cm(Vs: float, realizations: Sequence[ChannelRealization], tree: CombinerTree | None = None) -> TwoModeCM:
    """
    CM after splitting TMSV mode B into M subchannels, one channel draw per
    subchannel, and recombining with the same tree.

    With path weights w_j: c = sqrt(Vs² - 1) Σ w_j² sqrt(T_j) and
    b = (Σ w_j² sqrt(T_j))² (Vs - 1) + 1 + Σ w_j² ε_j. Equal weights give
    w_j² = 1/M.
    """
    _check_source(Vs)
    M = len(realizations)
    tree = tree or equal_weight_tree(M)
    if tree.M != M:
        raise DomainError(f"Got {M} channel realizations for a tree over {tree.M} subchannels.")
    w2 = combine_weights(tree) ** 2
    root_T = np.sqrt([r.T for r in realizations])
    eps = np.array([r.eps for r in realizations])
    kappa = float(w2 @ root_T)
    return TwoModeCM(a=Vs, b=kappa * kappa * (Vs - 1.0) + 1.0 + float(w2 @ eps), c=kappa * np.sqrt(Vs * Vs - 1.0))


def matrix_pipeline_cm(Vs: float, realizations: Sequence[ChannelRealization], tree: CombinerTree | None = None) -> TwoModeCM:
    """
    The same CM computed on full Gaussian states: TMSV, split, one lossy
    channel per subchannel, combine, read off the standard form.
    """
    _check_source(Vs)
    M = len(realizations)
    tree = tree or equal_weight_tree(M)
    state = split_equally(make_tmsv(Vs), 1, M, tree)
    modes = split_modes(2, 1, M)
    for mode, realization in zip(modes, realizations):
        state = apply_lossy_channel(state, mode, realization.T, realization.eps)
    state = apply_combiner(state, modes, tree)
    cov = state.cov
    return TwoModeCM(a=float(cov[0, 0]), b=float(cov[2, 2]), c=float(cov[0, 2]))


def averaged_cm_analytic(Vs: float, stats: ChannelStatistics, M: int) -> TwoModeCM:
    """
    Fading-averaged CM: b = T_eff (Vs - 1) + Var[√T] (Vs - 1) / M + ⟨ε⟩ + 1,
    c = sqrt(T_eff) sqrt(Vs² - 1).
    """
    _check_source(Vs)
    if M < 1:
        raise DomainError(f"M must be >= 1, got {M}.")
    b = (stats.T_eff + stats.var_sqrtT / M) * (Vs - 1.0) + stats.mean_eps + 1.0
    return TwoModeCM(a=Vs, b=b, c=stats.mean_sqrtT * np.sqrt(Vs * Vs - 1.0))


def averaged_cm_montecarlo(Vs: float, sampler: ChannelSampler, M: int, n: int, factory: StreamFactory,
                           tree: CombinerTree | None = None) -> MonteCarloCM:
    """
    Elementwise mean of conditional_cm over n joint draws, vectorized over
    the draws, with standard errors (zero for n = 1).
    """
    _check_source(Vs)
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}.")
    tree = tree or equal_weight_tree(M)
    draws = sampler.draw(factory, M, n)
    w2 = combine_weights(tree) ** 2
    kappa = np.sqrt(draws.T) @ w2
    b = kappa * kappa * (Vs - 1.0) + 1.0 + draws.eps @ w2
    c = kappa * np.sqrt(Vs * Vs - 1.0)

    def stderr(values):
        return float(values.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0

    return MonteCarloCM(
        cm=TwoModeCM(a=Vs, b=float(b.mean()), c=float(c.mean())),
        stderr=TwoModeCM(a=0.0, b=stderr(b), c=stderr(c)),
        stats=draws.stats(sampler.eps_A),
        n=n,
    )


def _symplectic_pair(delta: float, det: float) -> tuple[float, float]:
    discriminant = delta * delta - 4.0 * det
    if discriminant < -PHYSICALITY_TOL * max(1.0, delta * delta):
        raise NumericalError(f"Negative discriminant {discriminant:.3e} in the symplectic spectrum.")
    root = np.sqrt(max(discriminant, 0.0))
    return np.sqrt(max(delta + root, 0.0) / 2.0), np.sqrt(max(delta - root, 0.0) / 2.0)


def log_negativity(cm: TwoModeCM) -> float:
    """
    E_LN = max(0, -log2 ν₋) with ν₋ the smaller symplectic eigenvalue of the
    partial transpose: Δ = a² + b² + 2c² (sign of c flipped by transposition).
    """
    if cm.a * cm.b - cm.c * cm.c < 1.0 - PHYSICALITY_TOL:
        warnings.warn(f"CM {cm} violates ab - c² >= 1.", PhysicalityWarning, stacklevel=2)
    _, nu_minus = _symplectic_pair(cm.a ** 2 + cm.b ** 2 + 2.0 * cm.c ** 2, cm.det)
    if nu_minus <= 0.0:
        raise NumericalError("Partially transposed spectrum collapsed to zero.")
    return max(0.0, float(-np.log2(nu_minus)))


def pure_tmsv_log_negativity(Vs: float) -> float:
    """-log2(Vs - sqrt(Vs² - 1))."""
    return float(-np.log2(Vs - np.sqrt(Vs * Vs - 1.0)))


def scaled_log_negativity(cm: TwoModeCM, Vs: float) -> float:
    """E_LN relative to the pure TMSV of the same Vs, in [0, 1]."""
    if Vs <= 1.0:
        raise DomainError(f"Scaled log-negativity needs Vs > 1, got {Vs}.")
    return float(min(1.0, log_negativity(cm) / pure_tmsv_log_negativity(Vs)))


def entropy_g(x: float) -> float:
    """Von Neumann entropy of a thermal mode with symplectic eigenvalue x; g(1) = 0."""
    if x < 1.0 - PHYSICALITY_TOL:
        raise NumericalError(f"Symplectic eigenvalue {x} below 1.")
    x = max(x, 1.0)
    plus, minus = (x + 1.0) / 2.0, (x - 1.0) / 2.0
    return float((xlogy(plus, plus) - xlogy(minus, minus)) / np.log(2.0))


def rci(cm: TwoModeCM) -> float:
    """
    Reverse coherent information g(a) - g(ν₊) - g(ν₋), using the spectrum of
    the CM itself: Δ = a² + b² - 2c².
    """
    nu_plus, nu_minus = _symplectic_pair(cm.a ** 2 + cm.b ** 2 - 2.0 * cm.c ** 2, cm.det)
    return entropy_g(cm.a) - entropy_g(nu_plus) - entropy_g(nu_minus)


def pm_to_eb_variance(V_mod: float) -> float:
    """Prepare-and-measure modulation variance to the equivalent TMSV source variance."""
    if V_mod < 0.0:
        raise DomainError(f"Modulation variance must be >= 0, got {V_mod}.")
    return V_mod + 1.0


def _evaluate_point(task) -> EntanglementResult:
    Vs, M, stats, sampler, method, n, seed, layout, label = task
    tree = equal_weight_tree(M, layout)
    stderr_b = 0.0
    if method == "montecarlo":
        averaged = averaged_cm_montecarlo(Vs, sampler, M, n, StreamFactory(seed), tree)
        cm, stats, stderr_b = averaged.cm, averaged.stats, averaged.stderr.b
    else:
        cm = averaged_cm_analytic(Vs, stats, M)
    scaled = scaled_log_negativity(cm, Vs) if Vs > 1.0 else 0.0
    return EntanglementResult(
        e_ln=log_negativity(cm), e_ln_scaled=scaled, rci=rci(cm), stats_used=stats,
        M=M, Vs=Vs, cm=cm, stderr_b=stderr_b, label=label,
    )


def sweep_entanglement(Vs_values: Sequence[float], M_values: Sequence[int], stats: ChannelStatistics | None = None,
                       sampler: ChannelSampler | None = None, method: str = "analytic", n: int = 3000,
                       seed: int = 0, layout: str = "auto", threads: int = 1) -> list[EntanglementResult]:
    """
    Cross product M × Vs (M outer). The analytic path needs `stats` or a
    sampler to estimate them from n draws; the Monte Carlo path needs a sampler.
    """
    if method not in ("analytic", "montecarlo"):
        raise DomainError(f"Unknown method '{method}'.")
    if method == "montecarlo" and sampler is None:
        raise DomainError("The Monte Carlo path needs a channel sampler.")
    if not M_values or not Vs_values:
        return []
    if stats is None:
        if sampler is None:
            raise DomainError("Either channel statistics or a sampler is required.")
        stats = sampler.draw(StreamFactory(seed), 1, n).stats(sampler.eps_A)
    label = sampler.label if sampler is not None else "stats"
    tasks = [(float(Vs), int(M), stats, sampler, method, n, seed, layout, label)
             for M in M_values for Vs in Vs_values]
    return parallel_map(_evaluate_point, tasks, threads)
