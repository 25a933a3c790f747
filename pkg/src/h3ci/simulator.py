"""Simulated 3-qubit register.

Pure states are 8-vectors, mixed states 8x8 density matrices.  Unitaries are
exponentials of real antisymmetric matrices built from two-body operators,
so every amplitude stays real.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import expm

from .hamiltonian import gamma_tensor

DIM = 8
NORM_TOL = 1e-12


class NonSymmetricOperator(ValueError):
    pass


class PureStateNoise(ValueError):
    pass


@dataclass(frozen=True)
class RegisterState:
    """Either ``vector`` (pure) or ``density`` (mixed) is set."""

    vector: np.ndarray | None = None
    density: np.ndarray | None = None

    def __post_init__(self):
        if (self.vector is None) == (self.density is None):
            raise ValueError("exactly one of vector/density must be given")
        if self.vector is not None:
            v = np.asarray(self.vector, dtype=float).reshape(DIM)
            n = np.linalg.norm(v)
            if n == 0:
                raise ValueError("zero state vector")
            object.__setattr__(self, "vector", v / n)
        else:
            rho = np.asarray(self.density, dtype=float).reshape(DIM, DIM)
            rho = 0.5 * (rho + rho.T)
            tr = np.trace(rho)
            if tr <= 0:
                raise ValueError("density matrix must have positive trace")
            rho = rho / tr
            if np.linalg.eigvalsh(rho).min() < -1e-10:
                raise ValueError("density matrix is not positive semidefinite")
            object.__setattr__(self, "density", rho)

    @classmethod
    def pure(cls, vector) -> "RegisterState":
        return cls(vector=vector)

    @classmethod
    def mixed(cls, density) -> "RegisterState":
        return cls(density=density)

    @classmethod
    def basis(cls, index: int) -> "RegisterState":
        v = np.zeros(DIM)
        v[index] = 1.0
        return cls(vector=v)

    @property
    def mode(self) -> str:
        return "pure" if self.vector is not None else "mixed"

    @property
    def is_pure(self) -> bool:
        return self.vector is not None

    def to_density(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.vector, self.vector)
        return self.density.copy()

    def as_mixed(self) -> "RegisterState":
        return self if not self.is_pure else RegisterState(density=self.to_density())


@dataclass(frozen=True)
class NoiseModel:
    """Global depolarizing channel plus a seeded diagonal readout bias.

    ``readout_scale`` is the standard deviation (hartree) of the bias added to
    the diagonal of each measured Hamiltonian.  Bias draws are keyed, so the
    same (seed, key) always gives the same numbers regardless of call order.
    """

    depolarizing_rate: float = 0.0
    readout_scale: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.depolarizing_rate <= 1.0:
            raise ValueError("depolarizing_rate must lie in [0, 1]")
        if self.readout_scale < 0:
            raise ValueError("readout_scale must be non-negative")

    def readout_bias(self, key=()) -> np.ndarray:
        if self.readout_scale == 0.0:
            return np.zeros(DIM)
        rng = np.random.default_rng(np.random.SeedSequence([int(self.seed) & 0xFFFFFFFF, *_key_words(key)]))
        return self.readout_scale * rng.standard_normal(DIM)


def _key_words(key) -> list[int]:
    words = []
    for item in key if isinstance(key, (tuple, list)) else (key,):
        if isinstance(item, (int, np.integer)):
            words.append(int(item) & 0xFFFFFFFF)
        else:
            bits = struct.unpack("<Q", struct.pack("<d", float(item)))[0]
            words.extend([bits & 0xFFFFFFFF, bits >> 32])
    return words


def geometry_key(geometry) -> tuple:
    return (geometry.R, geometry.rho, geometry.theta)


@dataclass
class TwoBodyGenerator:
    """Real two-body generator F = sum F[p,q,s,t] (G_pqst - G_pqst^T).

    ``coefficients`` has shape (6, 6, 6, 6); entries at non-S_z-conserving
    indices multiply zero operators and are ignored.
    """

    coefficients: np.ndarray = field(default_factory=lambda: np.zeros((6, 6, 6, 6)))

    @cached_property
    def matrix(self) -> np.ndarray:
        G = gamma_tensor()
        M = np.einsum("pqst,pqstab->ab", self.coefficients, G)
        return M - M.T

    @classmethod
    def zero(cls) -> "TwoBodyGenerator":
        return cls()


def givens_terms(A: np.ndarray):
    """Split an antisymmetric matrix into its (a, b, angle) rotation terms."""
    return [(a, b, A[a, b]) for a in range(DIM) for b in range(a + 1, DIM) if A[a, b] != 0.0]


def trotter_unitary(A: np.ndarray, steps: int) -> np.ndarray:
    """First-order product formula over the Givens terms of ``A``."""
    if steps < 1:
        raise ValueError("trotter steps must be >= 1")
    U1 = np.eye(DIM)
    for a, b, x in givens_terms(A):
        c, s = np.cos(x / steps), np.sin(x / steps)
        R = np.eye(DIM)
        R[a, a] = R[b, b] = c
        R[a, b] = s
        R[b, a] = -s
        U1 = R @ U1
    return np.linalg.matrix_power(U1, steps)


def generator_unitary(gen: TwoBodyGenerator | np.ndarray, trotter_steps: int | None = None) -> np.ndarray:
    A = gen.matrix if isinstance(gen, TwoBodyGenerator) else np.asarray(gen)
    if trotter_steps is None:
        return expm(A)
    return trotter_unitary(A, trotter_steps)


def apply_unitary(state: RegisterState, U: np.ndarray) -> RegisterState:
    if state.is_pure:
        return RegisterState(vector=U @ state.vector)
    return RegisterState(density=U @ state.density @ U.T)


def apply_generator(
    state: RegisterState,
    gen: TwoBodyGenerator | np.ndarray,
    noise: NoiseModel | None = None,
    trotter_steps: int | None = None,
) -> RegisterState:
    """exp(F) applied to the state; with ``noise`` the channel follows the unitary.

    A pure input is promoted to a density matrix when noise is requested.
    """
    out = apply_unitary(state, generator_unitary(gen, trotter_steps))
    if noise is not None:
        out = apply_noise_channel(out.as_mixed(), noise)
    return out


def apply_noise_channel(state: RegisterState, noise: NoiseModel) -> RegisterState:
    if state.is_pure:
        raise PureStateNoise("noise channels act on density matrices; convert with as_mixed()")
    lam = noise.depolarizing_rate
    rho = (1.0 - lam) * state.density + lam * np.eye(DIM) / DIM
    return RegisterState(density=rho)


def _check_symmetric(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.shape != (DIM, DIM) or not np.allclose(M, M.T, atol=1e-10, rtol=0):
        raise NonSymmetricOperator("observable must be a symmetric 8x8 matrix")
    return M


def expectation(state: RegisterState, M: np.ndarray) -> float:
    M = _check_symmetric(M)
    if state.is_pure:
        return float(state.vector @ M @ state.vector)
    return float(np.trace(state.density @ M))


def readout_operators(H8: np.ndarray, noise: NoiseModel | None, key=()):
    """(H, H^2) as seen by a biased readout; the bias is diagonal in the register basis."""
    if noise is None or noise.readout_scale == 0.0:
        return H8, H8 @ H8
    Hb = H8 + np.diag(noise.readout_bias(key))
    return Hb, Hb @ Hb


def measure_2rdm(state: RegisterState) -> np.ndarray:
    """2D[p,q,s,t] = <a+_p a+_q a_t a_s> over the six spin orbitals."""
    rho = state.to_density()
    return np.einsum("pqstab,ba->pqst", gamma_tensor(), rho)


def one_rdm_from_two(D2: np.ndarray, n_electrons: int = 2) -> np.ndarray:
    return np.einsum("pqsq->ps", D2) / (n_electrons - 1)


def energy_from_rdm(D2: np.ndarray, h_so: np.ndarray, g_so: np.ndarray, E_nuc: float) -> float:
    """E = sum h 1D + 1/2 sum <pq|st> 2D + E_nuc."""
    D1 = one_rdm_from_two(D2)
    return float(np.einsum("pq,pq->", h_so, D1) + 0.5 * np.einsum("pqst,pqst->", g_so, D2) + E_nuc)
