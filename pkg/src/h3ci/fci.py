"""Exact diagonalization over the nine S_z = 0 determinants."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import MolecularGeometry
from .hamiltonian import COMPACT_INDEX, DETERMINANT_LABELS, MolecularHamiltonian
from .integrals import overlap_matrix


def _swap_matrix() -> np.ndarray:
    """Exchange of the alpha and beta orbital labels, |ij> -> |ji>."""
    P = np.zeros((9, 9))
    for k, (i, j) in enumerate(DETERMINANT_LABELS):
        P[DETERMINANT_LABELS.index((j, i)), k] = 1.0
    return P


SPIN_SWAP = _swap_matrix()


def fix_phases(V: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude entry of each column positive (first one on ties)."""
    V = np.array(V, dtype=float)
    for k in range(V.shape[1]):
        a = np.abs(V[:, k])
        i = int(np.flatnonzero(a >= a.max() - 1e-10)[0])
        if V[i, k] < 0:
            V[:, k] *= -1.0
    return V


@dataclass
class FciResult:
    energies: np.ndarray
    vectors: np.ndarray  # columns are states
    geometry: MolecularGeometry | None = None

    @property
    def spin_parity(self) -> np.ndarray:
        """+1 for singlets, -1 for M_s = 0 triplet components."""
        return np.einsum("ak,ab,bk->k", self.vectors, SPIN_SWAP, self.vectors)

    def triplet_indices(self) -> np.ndarray:
        return np.flatnonzero(self.spin_parity < 0)

    def compact_vector(self, k: int) -> np.ndarray:
        """State k restricted to the 8 register determinants (not renormalized)."""
        return self.vectors[COMPACT_INDEX, k]


def fci_solve(H: MolecularHamiltonian) -> FciResult:
    w, V = np.linalg.eigh(H.H9)
    return FciResult(w, fix_phases(V), H.geometry)


def intersecting_pair(result: FciResult) -> tuple[int, int]:
    """Indices of the two lowest triplet roots.

    These are the components of the degenerate E' pair at D3h and stay
    continuous (no |11> admixture, no singlet intruders) away from it.
    """
    t = result.triplet_indices()
    return int(t[0]), int(t[1])


def state_indices(result: FciResult, states: str = "pair") -> tuple[int, int]:
    """Which roots play E1 and E2: the intersecting pair or energy order."""
    if states == "pair":
        return intersecting_pair(result)
    if states == "energy":
        return 1, 2
    raise ValueError(f"unknown state selection {states!r}")


def mo_overlap(HA: MolecularHamiltonian, HB: MolecularHamiltonian) -> np.ndarray:
    """<phi_i(A)|phi_j(B)> between the MO sets of two geometries."""
    S_ab = overlap_matrix(HA.integrals.basis, HB.integrals.basis)
    return HA.scf.C.T @ S_ab @ HB.scf.C


def determinant_overlap(HA: MolecularHamiltonian, HB: MolecularHamiltonian) -> np.ndarray:
    """9x9 overlaps <ij(A)|kl(B)> = <i|k><j|l> (one alpha and one beta electron)."""
    M = mo_overlap(HA, HB)
    return np.kron(M, M)


def state_overlaps(HA, A: FciResult, HB, B: FciResult) -> np.ndarray:
    """<Psi_k(A)|Psi_l(B)> for all state pairs, independent of MO phase choices."""
    return A.vectors.T @ determinant_overlap(HA, HB) @ B.vectors


def match_states(overlaps: np.ndarray) -> np.ndarray:
    """Maximum-|overlap| assignment; ``perm[k]`` is the new index of old state k."""
    rows, cols = linear_sum_assignment(-np.abs(overlaps))
    perm = np.empty(len(rows), dtype=int)
    perm[rows] = cols
    return perm


def track_states(hamiltonians, results, start: tuple[int, ...] = (1, 2)) -> list[tuple[int, ...]]:
    """Follow states along a path of geometries by overlap, not energy order.

    Returns, for every path point, the root indices carrying the states that
    were ``start`` at the first point.
    """
    current = tuple(start)
    out = [current]
    for k in range(1, len(results)):
        ov = state_overlaps(hamiltonians[k - 1], results[k - 1], hamiltonians[k], results[k])
        perm = match_states(ov)
        current = tuple(int(perm[i]) for i in current)
        out.append(current)
    return out
