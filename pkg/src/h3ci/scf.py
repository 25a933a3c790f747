"""Closed-shell RHF for the two-electron system."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .integrals import IntegralSet

DEGENERACY_TOL = 1e-7


@dataclass
class ScfResult:
    C: np.ndarray
    orbital_energies: np.ndarray
    E_hf: float
    converged: bool
    iterations: int
    density: np.ndarray


class ScfNotConverged(RuntimeError):
    def __init__(self, msg: str, result: ScfResult):
        super().__init__(msg)
        self.result = result


def lowdin(S: np.ndarray) -> np.ndarray:
    """Symmetric orthogonalizer S^(-1/2)."""
    w, U = np.linalg.eigh(S)
    if w.min() <= 0:
        raise np.linalg.LinAlgError("overlap matrix is not positive definite")
    return U @ np.diag(w**-0.5) @ U.T


def fock_matrix(integrals: IntegralSet, D: np.ndarray) -> np.ndarray:
    J = np.einsum("pqrs,rs->pq", integrals.ERI, D)
    K = np.einsum("prqs,rs->pq", integrals.ERI, D)
    return integrals.hcore + J - 0.5 * K


def dipole_x_matrix(basis) -> np.ndarray:
    """AO matrix of the x coordinate, used as a probe to fix degenerate MOs."""
    n = len(basis)
    M = np.zeros((n, n))
    for i, ga in enumerate(basis):
        for j, gb in enumerate(basis):
            a = ga.exponents[:, None]
            b = gb.exponents[None, :]
            p = a + b
            ab2 = float(np.sum((ga.center - gb.center) ** 2))
            K = np.exp(-a * b / p * ab2) * ga.weights[:, None] * gb.weights[None, :]
            Px = (a * ga.center[0] + b * gb.center[0]) / p
            M[i, j] = np.sum(K * (np.pi / p) ** 1.5 * Px)
    return M


def _fix_phase(C: np.ndarray) -> np.ndarray:
    C = C.copy()
    for k in range(C.shape[1]):
        col = C[:, k]
        big = np.abs(col)
        i = int(np.flatnonzero(big >= big.max() - 1e-8)[0])
        if col[i] < 0:
            C[:, k] = -col
    return C


def canonicalize(C, eps, integrals: IntegralSet, tol: float = DEGENERACY_TOL):
    """Order MOs by energy and rotate degenerate blocks onto x-dipole eigenvectors."""
    order = np.argsort(eps, kind="stable")
    C = C[:, order].copy()
    eps = np.asarray(eps)[order].copy()
    if integrals.basis:
        probe = dipole_x_matrix(integrals.basis)
        k = 0
        n = len(eps)
        while k < n:
            m = k + 1
            while m < n and abs(eps[m] - eps[k]) < tol:
                m += 1
            if m - k > 1:
                block = C[:, k:m]
                w, U = np.linalg.eigh(block.T @ probe @ block)
                C[:, k:m] = block @ U
                eps[k:m] = np.mean(eps[k:m])
            k = m
    return _fix_phase(C), eps


def run_rhf(
    integrals: IntegralSet,
    max_iter: int = 200,
    e_tol: float = 1e-10,
    d_tol: float = 1e-8,
    damping: float = 0.0,
    D0: np.ndarray | None = None,
    n_occ: int = 1,
) -> ScfResult:
    """Roothaan iterations from the core-Hamiltonian guess (or ``D0``).

    Raises :class:`ScfNotConverged` carrying the last iterate when the energy
    and commutator thresholds are not both met within ``max_iter``.
    """
    S = integrals.S
    X = lowdin(S)
    H = integrals.hcore

    def diag(F):
        eps, Cp = np.linalg.eigh(X @ F @ X)
        return eps, X @ Cp

    if D0 is None:
        eps, C = diag(H)
        D = 2.0 * C[:, :n_occ] @ C[:, :n_occ].T
    else:
        D = np.array(D0, dtype=float)

    E_old = np.inf
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        F = fock_matrix(integrals, D)
        E = 0.5 * np.sum(D * (H + F)) + integrals.E_nuc
        comm = F @ D @ S - S @ D @ F
        if abs(E - E_old) < e_tol and np.linalg.norm(comm) < d_tol:
            converged = True
            break
        E_old = E
        eps, C = diag(F)
        D_new = 2.0 * C[:, :n_occ] @ C[:, :n_occ].T
        D = (1.0 - damping) * D_new + damping * D

    F = fock_matrix(integrals, D)
    eps, C = diag(F)
    C, eps = canonicalize(C, eps, integrals)
    result = ScfResult(C, eps, float(E), converged, it, D)
    if not converged:
        raise ScfNotConverged(f"RHF not converged after {max_iter} iterations", result)
    return result
