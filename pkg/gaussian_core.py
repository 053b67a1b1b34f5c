"""
Gaussian-state machinery in shot-noise units (hbar = 2, vacuum variance 1).

Quadratures are ordered (q1, p1, ..., qN, pN). A state is its mean vector
and covariance matrix; every transform here acts on those moments only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import NDArray

from simulation_errors import DomainError

SYMMETRY_RTOL = 1e-12
PHYSICALITY_TOL = 1e-9

_OMEGA_BLOCK = np.array([[0.0, 1.0], [-1.0, 0.0]])
_Z = np.diag([1.0, -1.0])


@dataclass(frozen=True)
class SymplecticForm:
    """Block-diagonal symplectic form Ω = ⊕ [[0, 1], [-1, 0]]."""
    n_modes: int
    matrix: NDArray[np.float64] = field(repr=False)


def symplectic_form(n_modes: int) -> SymplecticForm:
    """Returns the symplectic form for `n_modes` modes."""
    if n_modes < 1:
        raise DomainError(f"n_modes must be >= 1, got {n_modes}.")
    return SymplecticForm(n_modes=n_modes, matrix=np.kron(np.eye(n_modes), _OMEGA_BLOCK))


@dataclass(frozen=True)
class CoherentAmplitude:
    """Complex coherent amplitude α; its mean-vector contribution is [2 Re α, 2 Im α]."""
    re: float
    im: float = 0.0

    @classmethod
    def from_complex(cls, value: complex) -> CoherentAmplitude:
        return cls(re=float(np.real(value)), im=float(np.imag(value)))

    def as_complex(self) -> complex:
        return complex(self.re, self.im)

    def mean_vector(self) -> NDArray[np.float64]:
        return np.array([2.0 * self.re, 2.0 * self.im])

    def scaled(self, factor: float) -> CoherentAmplitude:
        return CoherentAmplitude(self.re * factor, self.im * factor)


@dataclass(frozen=True, eq=False)
class GaussianState:
    """
    Immutable N-mode Gaussian state.

    Args:
        mean (NDArray): Mean vector of length 2N.
        cov (NDArray): Symmetric 2N x 2N covariance matrix.

    Raises:
        DomainError: If the shapes disagree or `cov` is not symmetric.
    """
    mean: NDArray[np.float64]
    cov: NDArray[np.float64]

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float)
        size = mean.shape[0]
        if size == 0 or size % 2 or cov.shape != (size, size):
            raise DomainError(f"Inconsistent shapes: mean {mean.shape}, cov {cov.shape}.")
        scale = max(1.0, float(np.max(np.abs(cov))))
        if np.max(np.abs(cov - cov.T)) > SYMMETRY_RTOL * scale:
            raise DomainError("Covariance matrix is not symmetric.")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n_modes(self) -> int:
        return self.mean.shape[0] // 2


def make_vacuum(n_modes: int = 1) -> GaussianState:
    if n_modes < 1:
        raise DomainError(f"n_modes must be >= 1, got {n_modes}.")
    return GaussianState(np.zeros(2 * n_modes), np.eye(2 * n_modes))


def make_coherent(alpha: CoherentAmplitude) -> GaussianState:
    if not (np.isfinite(alpha.re) and np.isfinite(alpha.im)):
        raise DomainError(f"Coherent amplitude must be finite, got {alpha}.")
    return GaussianState(alpha.mean_vector(), np.eye(2))


def make_thermal(variance: float) -> GaussianState:
    """Single-mode thermal state with quadrature variance V = 2n̄ + 1."""
    if variance < 1.0:
        raise DomainError(f"Thermal variance must be >= 1 (vacuum), got {variance}.")
    return GaussianState(np.zeros(2), variance * np.eye(2))


def make_tmsv(Vs: float) -> GaussianState:
    """
    Two-mode squeezed vacuum with quadrature variance Vs on each mode.

    Args:
        Vs (float): Source variance, Vs = cosh(2r) >= 1.

    Returns:
        GaussianState: Zero-mean state with cov [[Vs I, c Z], [c Z, Vs I]],
            c = sqrt(Vs^2 - 1).
    """
    if Vs < 1.0:
        raise DomainError(f"TMSV variance Vs must be >= 1, got {Vs}.")
    c = np.sqrt(Vs * Vs - 1.0)
    cov = np.block([[Vs * np.eye(2), c * _Z], [c * _Z, Vs * np.eye(2)]])
    return GaussianState(np.zeros(4), cov)


def tensor_product(*states: GaussianState) -> GaussianState:
    """Joins independent states; modes keep their order."""
    if not states:
        raise DomainError("tensor_product needs at least one state.")
    mean = np.concatenate([s.mean for s in states])
    cov = np.zeros((mean.size, mean.size))
    offset = 0
    for s in states:
        size = s.mean.size
        cov[offset:offset + size, offset:offset + size] = s.cov
        offset += size
    return GaussianState(mean, cov)


def beam_splitter_symplectic(eta: float) -> NDArray[np.float64]:
    """
    Real beam-splitter matrix B(η) = [[η I, s I], [s I, -η I]], s = sqrt(1 - η²).

    Raises:
        DomainError: If η is outside [0, 1].
    """
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"Beam-splitter coefficient must lie in [0, 1], got {eta}.")
    s = np.sqrt(1.0 - eta * eta)
    eye = np.eye(2)
    return np.block([[eta * eye, s * eye], [s * eye, -eta * eye]])


def _quadrature_indices(modes: Iterable[int]) -> list[int]:
    return [q for m in modes for q in (2 * m, 2 * m + 1)]


def expand_symplectic(matrix: NDArray[np.float64], modes: Sequence[int], n_modes: int) -> NDArray[np.float64]:
    """Embeds a symplectic acting on `modes` into the full 2N x 2N space."""
    full = np.eye(2 * n_modes)
    idx = _quadrature_indices(modes)
    full[np.ix_(idx, idx)] = matrix
    return full


def _check_modes(state: GaussianState, modes: Sequence[int]):
    for m in modes:
        if not 0 <= m < state.n_modes:
            raise DomainError(f"Mode index {m} out of range for a {state.n_modes}-mode state.")
    if len(set(modes)) != len(modes):
        raise DomainError(f"Mode indices must be distinct, got {list(modes)}.")


def apply_symplectic(state: GaussianState, matrix: NDArray[np.float64], modes: Sequence[int]) -> GaussianState:
    """x̄ → S x̄, V → S V Sᵀ with S acting on `modes`."""
    _check_modes(state, modes)
    full = expand_symplectic(matrix, modes, state.n_modes)
    cov = full @ state.cov @ full.T
    return GaussianState(full @ state.mean, 0.5 * (cov + cov.T))


def apply_beam_splitter(state: GaussianState, mode_i: int, mode_j: int, eta: float) -> GaussianState:
    """
    Mixes modes i and j on B(η). Mode i carries the transmitted output
    η·a_i + s·a_j, mode j carries s·a_i - η·a_j.
    """
    return apply_symplectic(state, beam_splitter_symplectic(eta), [mode_i, mode_j])


def trace_out(state: GaussianState, modes: Iterable[int]) -> GaussianState:
    """
    Discards `modes` by deleting their rows and columns.

    Raises:
        DomainError: On invalid indices or when every mode would be traced out.
    """
    drop = sorted(set(modes))
    _check_modes(state, drop)
    keep = [m for m in range(state.n_modes) if m not in drop]
    if not keep:
        raise DomainError("Cannot trace out every mode of a state.")
    idx = _quadrature_indices(keep)
    return GaussianState(state.mean[idx], state.cov[np.ix_(idx, idx)])


def symplectic_eigenvalues(cov: NDArray[np.float64]) -> NDArray[np.float64]:
    """
    Symplectic spectrum of a covariance matrix, ascending, with multiplicity.

    Moduli of the eigenvalues of iΩV come in equal pairs; every second
    entry of the sorted moduli is kept.

    Raises:
        DomainError: If `cov` is not square, of even size, and symmetric.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2:
        raise DomainError(f"Covariance must be a square matrix of even size, got {cov.shape}.")
    scale = max(1.0, float(np.max(np.abs(cov))))
    if np.max(np.abs(cov - cov.T)) > SYMMETRY_RTOL * scale:
        raise DomainError("Covariance matrix is not symmetric.")
    omega = symplectic_form(cov.shape[0] // 2).matrix
    moduli = np.sort(np.abs(np.linalg.eigvals(1j * omega @ cov)))
    return moduli[::2]


def is_physical(state: GaussianState, tolerance: float = PHYSICALITY_TOL) -> bool:
    """V + iΩ >= 0, tested through the smallest symplectic eigenvalue."""
    return bool(symplectic_eigenvalues(state.cov)[0] >= 1.0 - tolerance)


def purity(state: GaussianState) -> float:
    """Tr ρ² = 1 / sqrt(det V)."""
    return float(1.0 / np.sqrt(np.linalg.det(state.cov)))


def characteristic_function(state: GaussianState, xi: complex | NDArray) -> complex | NDArray:
    """
    Symmetric characteristic function of a single-mode state,
    χ(ξ) = exp(-½ kᵀVk + i x̄ᵀk) with k = (Im ξ, -Re ξ).

    For a coherent state this is exp(-|ξ|²/2 + ξα* - ξ*α); for a thermal
    state exp(-V|ξ|²/2). `xi` may be an array.
    """
    if state.n_modes != 1:
        raise DomainError("characteristic_function is defined for single-mode states.")
    xi = np.asarray(xi, dtype=complex)
    k1, k2 = xi.imag, -xi.real
    v = state.cov
    quad = v[0, 0] * k1 * k1 + 2.0 * v[0, 1] * k1 * k2 + v[1, 1] * k2 * k2
    phase = state.mean[0] * k1 + state.mean[1] * k2
    value = np.exp(-0.5 * quad + 1j * phase)
    return value if value.ndim else complex(value)


def gaussian_overlap(state_a: GaussianState, state_b: GaussianState) -> float:
    """
    Tr(ρ_a ρ_b) = 2^N / sqrt(det(V_a + V_b)) · exp(-½ Δᵀ (V_a + V_b)⁻¹ Δ).

    Equals the fidelity when one of the two states is pure.
    """
    if state_a.n_modes != state_b.n_modes:
        raise DomainError("States must have the same number of modes.")
    total = state_a.cov + state_b.cov
    delta = state_a.mean - state_b.mean
    exponent = -0.5 * delta @ np.linalg.solve(total, delta)
    return float(2.0 ** state_a.n_modes / np.sqrt(np.linalg.det(total)) * np.exp(exponent))


def gaussian_fidelity_to_coherent(state: GaussianState, alpha: CoherentAmplitude) -> float:
    """Fidelity ⟨α|ρ|α⟩ of a single-mode Gaussian state with a coherent state."""
    return gaussian_overlap(state, make_coherent(alpha))
