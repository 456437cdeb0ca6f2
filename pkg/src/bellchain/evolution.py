"""Single-excitation dynamics of the XX chain.

Units: hbar = J = 1, so ``tau`` is the dimensionless time Jt/hbar.  The
generator holds the matrix elements <1_k|H|1_j> (twice the coupling on each
edge); the propagator applies ``exp(-i * generator * tau)`` through the
eigendecomposition of the generator.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np
import scipy.linalg

from .chain_model import ChainSpec, edge_list

ORACLE_MAX_QUBITS = 10


@dataclass(frozen=True, eq=False)
class Generator:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"generator must be square, got shape {m.shape}")
        if not np.array_equal(m, m.T):
            raise ValueError("generator must be symmetric")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class SpectralPropagator:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]


@dataclass(frozen=True, eq=False)
class AmplitudeVector:
    amplitudes: np.ndarray
    tau: float = 0.0

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex).copy()
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


class StateKind(str, enum.Enum):
    PSI_PLUS = "psi_plus"
    PSI_MINUS = "psi_minus"
    PERTURBED = "perturbed"
    SINGLE_EXCITATION = "single_excitation"


@dataclass(frozen=True)
class InitialState:
    """Initial condition on Alice's qubits; every other qubit starts in |0>.

    ``delta_alpha`` and ``delta_gamma`` only matter for ``PERTURBED``:
    the sender pair is prepared in ``alpha|01> + sqrt(1-alpha^2) e^{-i gamma}|10>``
    with ``alpha = (1 + delta_alpha)/sqrt(2)`` and ``gamma = 2 pi (1 + delta_gamma)``.
    """

    kind: StateKind
    delta_alpha: float = 0.0
    delta_gamma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", StateKind(self.kind))
        if self.kind is StateKind.PERTURBED and abs(self.alpha) > 1.0:
            raise ValueError(
                f"perturbed state needs |(1 + delta_alpha)/sqrt(2)| <= 1, got alpha={self.alpha!r}"
            )

    @property
    def alpha(self) -> float:
        return (1.0 + self.delta_alpha) / math.sqrt(2.0)

    def pair_amplitudes(self) -> tuple[complex, complex]:
        """Amplitudes on (first, second) sender qubit, e.g. (c_A, c_1)."""
        h = 1.0 / math.sqrt(2.0)
        if self.kind is StateKind.PSI_PLUS:
            return complex(h), complex(h)
        if self.kind is StateKind.PSI_MINUS:
            return complex(h), complex(-h)
        if self.kind is StateKind.PERTURBED:
            a = self.alpha
            # e^{-i 2pi (1 + dg)} == e^{-i 2pi dg}; the reduced form is exact at dg = 0
            phase = np.exp(-2j * math.pi * self.delta_gamma)
            return complex(math.sqrt(max(0.0, 1.0 - a * a)) * phase), complex(a)
        return complex(1.0), complex(0.0)


PSI_PLUS = InitialState(StateKind.PSI_PLUS)
PSI_MINUS = InitialState(StateKind.PSI_MINUS)
SINGLE_EXCITATION = InitialState(StateKind.SINGLE_EXCITATION)


def perturbed(delta_alpha: float, delta_gamma: float) -> InitialState:
    return InitialState(StateKind.PERTURBED, float(delta_alpha), float(delta_gamma))


def as_initial_state(state: InitialState | StateKind | str) -> InitialState:
    if isinstance(state, InitialState):
        return state
    return InitialState(StateKind(state))


def build_generator(spec: ChainSpec) -> Generator:
    m = np.zeros((spec.dim, spec.dim))
    for a, b, strength in edge_list(spec):
        i, k = spec.index(a), spec.index(b)
        m[i, k] = m[k, i] = 2.0 * strength
    return Generator(m)


def diagonalize(g: Generator) -> SpectralPropagator:
    lam, vecs = scipy.linalg.eigh(g.matrix)
    return SpectralPropagator(lam, vecs)


def initial_amplitudes(state: InitialState | StateKind | str, spec: ChainSpec) -> AmplitudeVector:
    state = as_initial_state(state)
    c = np.zeros(spec.dim, dtype=complex)
    first, second = spec.sender_pair
    a_first, a_second = state.pair_amplitudes()
    c[spec.index(first)] = a_first
    c[spec.index(second)] = a_second
    return AmplitudeVector(c, 0.0)


def _check_dims(p: SpectralPropagator, c0: AmplitudeVector) -> None:
    if c0.amplitudes.shape != (p.dim,):
        raise ValueError(f"amplitude vector of length {c0.amplitudes.shape[0]} does not match propagator dim {p.dim}")


def evolve(p: SpectralPropagator, c0: AmplitudeVector, tau: float) -> AmplitudeVector:
    _check_dims(p, c0)
    if tau < 0:
        raise ValueError("tau must be >= 0")
    v = p.eigenvectors
    w = v.T @ c0.amplitudes
    c = v @ (np.exp(-1j * p.eigenvalues * tau) * w)
    return AmplitudeVector(c, c0.tau + tau)


def site_amplitudes(p: SpectralPropagator, c0: AmplitudeVector, rows: Sequence[int], taus) -> np.ndarray:
    """Amplitudes of selected sites at arbitrary times, shape ``(len(rows), len(taus))``."""
    _check_dims(p, c0)
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    weights = p.eigenvectors[list(rows), :] * (p.eigenvectors.T @ c0.amplitudes)
    return weights @ np.exp(-1j * np.outer(p.eigenvalues, taus))


def site_amplitude_series(
    p: SpectralPropagator,
    c0: AmplitudeVector,
    rows: Sequence[int],
    n_steps: int,
    tau_step: float,
    block: int = 128,
) -> np.ndarray:
    """Amplitudes of selected sites at ``tau_k = k * tau_step``, ``k = 0..n_steps``.

    The phase ``exp(-i lam tau_k)`` is factored as a block offset times an
    in-block offset, which turns the sampling into one matrix product per
    site and avoids evaluating ``dim * (n_steps + 1)`` exponentials.
    """
    _check_dims(p, c0)
    n = n_steps + 1
    block = max(1, min(block, n))
    n_blocks = -(-n // block)
    lam = p.eigenvalues
    weights = p.eigenvectors[list(rows), :] * (p.eigenvectors.T @ c0.amplitudes)
    inner = np.exp(-1j * np.outer(lam, np.arange(block) * tau_step))
    outer = np.exp(-1j * np.outer(np.arange(n_blocks) * (block * tau_step), lam))
    out = np.empty((len(rows), n_blocks * block), dtype=complex)
    for r, w in enumerate(weights):
        out[r] = ((outer * w) @ inner).ravel()
    return out[:, :n]


# ---------------------------------------------------------------------------
# Full 2^n Hilbert-space oracle

_PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
# sigma^y|0> = i|1>, sigma^y|1> = -i|0>
_PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_ID2 = np.eye(2, dtype=complex)


def _two_site(op: np.ndarray, i: int, j: int, n: int) -> np.ndarray:
    factors = [op if k in (i, j) else _ID2 for k in range(n)]
    return reduce(np.kron, factors)


def full_hamiltonian(spec: ChainSpec) -> np.ndarray:
    """Dense XX Hamiltonian on all qubits, built from Pauli operators.

    Qubit ``k`` (in site order) is the ``k``-th tensor factor, so ``|1_j>``
    has basis index ``1 << (n - 1 - k)``.
    """
    n = spec.dim
    if n > ORACLE_MAX_QUBITS:
        raise ValueError(f"full-space oracle limited to {ORACLE_MAX_QUBITS} qubits, chain has {n}")
    h = np.zeros((2**n, 2**n), dtype=complex)
    for a, b, strength in edge_list(spec):
        i, j = spec.index(a), spec.index(b)
        h += strength * (_two_site(_PAULI_X, i, j, n) + _two_site(_PAULI_Y, i, j, n))
    return h


def excitation_number_operator(n: int) -> np.ndarray:
    """Total Z = sum_j sigma^z_j on ``n`` qubits."""
    z = np.zeros((2**n, 2**n), dtype=complex)
    for k in range(n):
        z += reduce(np.kron, [_PAULI_Z if m == k else _ID2 for m in range(n)])
    return z


def one_excitation_indices(n: int) -> np.ndarray:
    return np.array([1 << (n - 1 - k) for k in range(n)])


def full_space_state(spec: ChainSpec, state: InitialState | StateKind | str, tau: float) -> np.ndarray:
    """Full 2^n state vector after exact evolution by ``expm(-i H tau)``."""
    n = spec.dim
    h = full_hamiltonian(spec)
    psi0 = np.zeros(2**n, dtype=complex)
    psi0[one_excitation_indices(n)] = initial_amplitudes(state, spec).amplitudes
    return scipy.linalg.expm(-1j * tau * h) @ psi0


def full_space_oracle(spec: ChainSpec, state: InitialState | StateKind | str, tau: float) -> AmplitudeVector:
    psi = full_space_state(spec, state, tau)
    idx = one_excitation_indices(spec.dim)
    c = psi[idx]
    leaked = float(np.vdot(psi, psi).real - np.vdot(c, c).real)
    if abs(leaked) > 1e-10:
        raise RuntimeError(f"norm outside the one-excitation sector: {leaked:.3e}")
    return AmplitudeVector(c, tau)
