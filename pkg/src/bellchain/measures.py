"""Receiver-pair reduced state, concurrence, entanglement of formation, fidelity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain_model import ChainSpec
from .evolution import AmplitudeVector

_SYSY = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))
_PSD_TOL = 1e-10  # clamp threshold for round-off negatives
_CLAMP_TOL = 1e-12


@dataclass(frozen=True)
class ReducedPair:
    """Two-qubit state of the receiver pair inside the one-excitation sector.

    Only the two receiver amplitudes are needed; the 4x4 density matrix in
    the basis |00>, |01>, |10>, |11> (first qubit = ``c_n`` site) is
    materialized by :meth:`matrix` for the general Wootters path.
    """

    c_n: complex
    c_b: complex

    def __post_init__(self):
        if abs(self.c_n) ** 2 + abs(self.c_b) ** 2 > 1 + 1e-10:
            raise ValueError("receiver amplitudes carry more than unit norm")

    def matrix(self) -> np.ndarray:
        cn, cb = complex(self.c_n), complex(self.c_b)
        pn, pb = abs(cn) ** 2, abs(cb) ** 2
        rho = np.zeros((4, 4), dtype=complex)
        rho[0, 0] = 1.0 - pn - pb
        rho[1, 1] = pb
        rho[2, 2] = pn
        rho[1, 2] = cb * cn.conjugate()
        rho[2, 1] = cn * cb.conjugate()
        return rho


@dataclass(frozen=True)
class TransmissionRecord:
    tau: float
    concurrence: float
    eof: float
    fidelity: float


def reduce_to_receiver_pair(c: AmplitudeVector, spec: ChainSpec) -> ReducedPair:
    first, second = spec.receiver_pair
    a = c.amplitudes
    return ReducedPair(complex(a[spec.index(first)]), complex(a[spec.index(second)]))


def concurrence_x(state: ReducedPair) -> float:
    return min(1.0, 2.0 * abs(state.c_n * state.c_b))


def concurrence_pair(c_n, c_b):
    """Vectorized ``2|c_n c_b|`` over arrays of receiver amplitudes."""
    return np.minimum(2.0 * np.abs(np.asarray(c_n) * np.asarray(c_b)), 1.0)


def wootters_general(rho: np.ndarray) -> float:
    """Wootters concurrence of an arbitrary two-qubit density matrix.

    The square roots of the eigenvalues of ``R = rho Y rho* Y`` (with
    ``Y = sigma_y x sigma_y``) are the singular values of ``tau = W^T Y W``
    for any factorization ``rho = W W^dagger``.  Taking them from an SVD of
    ``tau`` keeps rank-deficient states accurate to ~1e-15; square roots of
    eigenvalues of ``R`` turn 1e-17 noise into 1e-9 errors.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"expected a 4x4 density matrix, got shape {rho.shape}")
    if not np.allclose(rho, rho.conj().T, atol=1e-12):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-8:
        raise ValueError(f"density matrix has trace {np.trace(rho).real!r}, expected 1")
    w, v = np.linalg.eigh(rho)
    if w.min() < -_PSD_TOL:
        raise ValueError(f"density matrix is not positive semidefinite (eigenvalue {w.min():.3e})")
    factor = v * np.sqrt(np.clip(w, 0.0, None))
    lam = np.linalg.svd(factor.T @ _SYSY @ factor, compute_uv=False)
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def eof_from_concurrence(c):
    """Entanglement of formation as a function of concurrence.

    Accepts a scalar or an array.  Values within 1e-12 outside [0, 1] are
    clamped; anything further out is rejected.  ``0 log 0`` is taken as 0.
    """
    arr = np.asarray(c, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < -_CLAMP_TOL) or np.any(arr > 1.0 + _CLAMP_TOL):
        raise ValueError(f"concurrence outside [0, 1]: {c!r}")
    arr = np.clip(arr, 0.0, 1.0)
    s = np.sqrt((1.0 - arr) * (1.0 + arr))
    # small = 1 - f, written without cancellation so tiny C keeps EoF > 0
    small = arr * arr / (2.0 * (1.0 + s))
    big = 0.5 * (1.0 + s)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -(big * np.log1p(-small) + small * np.log(small)) / np.log(2.0)
    out = np.where(small > 0.0, out, 0.0)
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def bell_fidelity(state: ReducedPair, target: tuple[complex, complex] | None = None) -> float:
    """Overlap of the receiver pair with a one-excitation pure target.

    ``target`` gives the (|10>, |01>) amplitudes, i.e. the coefficients
    multiplying ``c_n`` and ``c_b``; the default is |Psi+>.
    """
    if target is None:
        return float(min(1.0, abs(state.c_n + state.c_b) ** 2 / 2.0))
    t_n, t_b = target
    return float(min(1.0, abs(np.conj(t_n) * state.c_n + np.conj(t_b) * state.c_b) ** 2))


def single_site_fidelity(c: AmplitudeVector, spec: ChainSpec) -> float:
    return float(min(1.0, abs(c.amplitudes[spec.index(spec.receiver_site)]) ** 2))
