"""STO-3G integrals over hydrogen 1s functions.

Only s-type Gaussians occur, so every integral follows from the Gaussian
product theorem and the zeroth Boys function.  ``erf`` comes from
:mod:`scipy.special` (double precision, ~1e-16 relative).
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy.special import erf

from .geometry import MolecularGeometry, to_cartesian

COINCIDENCE_TOL = 1e-6


class CoincidentNuclei(ValueError):
    pass


def _load_sto3g() -> tuple[np.ndarray, np.ndarray]:
    text = resources.files("h3ci").joinpath("data/sto3g_h.txt").read_text()
    rows = [line.split() for line in text.splitlines() if line.strip() and not line.startswith("#")]
    arr = np.array(rows, dtype=float)
    return arr[:, 0], arr[:, 1]


STO3G_EXPONENTS, STO3G_COEFFICIENTS = _load_sto3g()


@dataclass(frozen=True)
class ContractedGaussian:
    """Contracted s function; ``coefficients`` multiply normalized primitives."""

    center: np.ndarray
    exponents: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self):
        if len(self.exponents) != 3 or len(self.coefficients) != 3:
            raise ValueError("STO-3G functions have exactly 3 primitives")
        if np.any(np.asarray(self.exponents) <= 0):
            raise ValueError("exponents must be positive")

    @property
    def weights(self) -> np.ndarray:
        """Coefficients times primitive normalization (2a/pi)^(3/4)."""
        a = np.asarray(self.exponents)
        return np.asarray(self.coefficients) * (2.0 * a / np.pi) ** 0.75


def sto3g_function(center) -> ContractedGaussian:
    """Hydrogen STO-3G 1s at ``center``, renormalized to unit self-overlap."""
    c = np.zeros(3)
    c[: len(center)] = center
    g = ContractedGaussian(c, STO3G_EXPONENTS.copy(), STO3G_COEFFICIENTS.copy())
    s = _contracted_overlap(g, g)
    return ContractedGaussian(c, g.exponents, g.coefficients / np.sqrt(s))


def basis_for(geometry: MolecularGeometry) -> list[ContractedGaussian]:
    return [sto3g_function(xy) for xy in to_cartesian(geometry)]


def boys_f0(x):
    """F0(x) = int_0^1 exp(-x t^2) dt; accepts scalars or arrays."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("boys_f0 requires x >= 0")
    small = x < 1e-8
    xs = np.where(small, 1.0, x)
    out = np.where(small, 1.0 - x / 3.0 + x * x / 10.0, 0.5 * np.sqrt(np.pi / xs) * erf(np.sqrt(xs)))
    return out if out.ndim else float(out)


def _pair(ga: ContractedGaussian, gb: ContractedGaussian):
    """Primitive-pair data: exponent sum p, centre P and prefactor K*w_a*w_b."""
    a = ga.exponents[:, None]
    b = gb.exponents[None, :]
    p = a + b
    ab2 = float(np.sum((ga.center - gb.center) ** 2))
    K = np.exp(-a * b / p * ab2) * ga.weights[:, None] * gb.weights[None, :]
    P = (a[..., None] * ga.center + b[..., None] * gb.center) / p[..., None]
    return a, b, p, ab2, K, P


def _contracted_overlap(ga, gb) -> float:
    _, _, p, _, K, _ = _pair(ga, gb)
    return float(np.sum(K * (np.pi / p) ** 1.5))


def overlap_matrix(basis_a, basis_b=None) -> np.ndarray:
    """AO overlap, optionally between two different basis sets."""
    basis_b = basis_a if basis_b is None else basis_b
    return np.array([[_contracted_overlap(ga, gb) for gb in basis_b] for ga in basis_a])


def _kinetic(ga, gb) -> float:
    a, b, p, ab2, K, _ = _pair(ga, gb)
    mu = a * b / p
    return float(np.sum(K * mu * (3.0 - 2.0 * mu * ab2) * (np.pi / p) ** 1.5))


def _nuclear(ga, gb, centers, charges) -> float:
    _, _, p, _, K, P = _pair(ga, gb)
    total = 0.0
    for C, Z in zip(centers, charges):
        pc2 = np.sum((P - C) ** 2, axis=-1)
        total -= Z * float(np.sum(K * 2.0 * np.pi / p * boys_f0(p * pc2)))
    return total


def _eri(ga, gb, gc, gd) -> float:
    _, _, p, _, Kab, P = _pair(ga, gb)
    _, _, q, _, Kcd, Q = _pair(gc, gd)
    p = p[:, :, None, None]
    q = q[None, None, :, :]
    pq2 = np.sum((P[:, :, None, None, :] - Q[None, None, :, :, :]) ** 2, axis=-1)
    pref = 2.0 * np.pi**2.5 / (p * q * np.sqrt(p + q))
    val = Kab[:, :, None, None] * Kcd[None, None, :, :] * pref * boys_f0(p * q / (p + q) * pq2)
    return float(np.sum(val))


@dataclass(frozen=True)
class IntegralSet:
    S: np.ndarray
    T: np.ndarray
    V: np.ndarray
    ERI: np.ndarray  # chemists' notation (pq|rs)
    E_nuc: float
    basis: tuple = ()

    @property
    def hcore(self) -> np.ndarray:
        return self.T + self.V


def nuclear_repulsion(centers, charges=None) -> float:
    centers = np.asarray(centers, dtype=float)
    charges = np.ones(len(centers)) if charges is None else charges
    e = 0.0
    for i in range(len(centers)):
        for j in range(i):
            e += charges[i] * charges[j] / np.linalg.norm(centers[i] - centers[j])
    return float(e)


def compute_integrals(geometry: MolecularGeometry) -> IntegralSet:
    xy = to_cartesian(geometry)
    for i in range(3):
        for j in range(i):
            d = np.linalg.norm(xy[i] - xy[j])
            if d <= COINCIDENCE_TOL:
                raise CoincidentNuclei(f"atoms {j + 1} and {i + 1} are {d:.3g} bohr apart")
    basis = basis_for(geometry)
    centers = [g.center for g in basis]
    charges = [1.0, 1.0, 1.0]
    n = len(basis)

    S = overlap_matrix(basis)
    T = np.zeros((n, n))
    V = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            T[i, j] = T[j, i] = _kinetic(basis[i], basis[j])
            V[i, j] = V[j, i] = _nuclear(basis[i], basis[j], centers, charges)

    pairs = [(i, j) for i in range(n) for j in range(i + 1)]
    eri = np.zeros((n, n, n, n))
    for ij, (i, j) in enumerate(pairs):
        for kl, (k, l) in enumerate(pairs):
            if kl > ij:
                continue
            v = _eri(basis[i], basis[j], basis[k], basis[l])
            for a, b, c, d in (
                (i, j, k, l), (j, i, k, l), (i, j, l, k), (j, i, l, k),
                (k, l, i, j), (l, k, i, j), (k, l, j, i), (l, k, j, i),
            ):
                eri[a, b, c, d] = v
    return IntegralSet(S, T, V, eri, nuclear_repulsion(xy), tuple(basis))
