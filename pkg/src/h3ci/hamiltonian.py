"""Determinant basis, compact 3-qubit mapping and operator matrices.

Spin orbitals are ordered (1a, 2a, 3a, 1b, 2b, 3b) -> 0..5.  The determinant
|ij> is a+_{i alpha} a+_{j beta} |vac>, i.e. the alpha creator stands to the
left.  The compact register drops |11> and keeps the other eight
determinants in lexicographic order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .geometry import MolecularGeometry
from .integrals import IntegralSet, compute_integrals
from .scf import ScfResult, ScfNotConverged, run_rhf

N_SPATIAL = 3
N_SPIN_ORB = 2 * N_SPATIAL
N_ELECTRONS = 2

DETERMINANT_LABELS = [(i, j) for i in range(1, 4) for j in range(1, 4)]
COMPACT_LABELS = [lab for lab in DETERMINANT_LABELS if lab != (1, 1)]
COMPACT_INDEX = [DETERMINANT_LABELS.index(lab) for lab in COMPACT_LABELS]
N_QUBITS = 3


def _occupation(label) -> int:
    i, j = label
    return (1 << (i - 1)) | (1 << (N_SPATIAL + j - 1))


_DET_BITS = [_occupation(lab) for lab in DETERMINANT_LABELS]
_BITS_TO_INDEX = {b: k for k, b in enumerate(_DET_BITS)}


def spin_of(p: int) -> int:
    return 0 if p < N_SPATIAL else 1


def _annihilate(bits: int, p: int):
    if not bits >> p & 1:
        return None, 0
    sign = -1 if bin(bits & ((1 << p) - 1)).count("1") % 2 else 1
    return bits ^ (1 << p), sign


def _create(bits: int, p: int):
    if bits >> p & 1:
        return None, 0
    sign = -1 if bin(bits & ((1 << p) - 1)).count("1") % 2 else 1
    return bits | (1 << p), sign


def _apply_string(bits: int, ops) -> tuple[int | None, int]:
    """Apply operators right-to-left; ``ops`` is a list of (kind, index)."""
    sign = 1
    for kind, p in reversed(ops):
        bits, s = (_create if kind == "+" else _annihilate)(bits, p)
        if bits is None:
            return None, 0
        sign *= s
    return bits, sign


def conserves_sz(p, q, s, t) -> bool:
    return spin_of(p) + spin_of(q) == spin_of(s) + spin_of(t)


@lru_cache(maxsize=None)
def _gamma_full() -> np.ndarray:
    """All a+_p a+_q a_t a_s as 9x9 matrices, indexed [p, q, s, t]."""
    n = N_SPIN_ORB
    G = np.zeros((n, n, n, n, 9, 9))
    for p in range(n):
        for q in range(n):
            for s in range(n):
                for t in range(n):
                    if not conserves_sz(p, q, s, t):
                        continue
                    ops = [("+", p), ("+", q), ("-", t), ("-", s)]
                    for col, bits in enumerate(_DET_BITS):
                        out, sign = _apply_string(bits, ops)
                        if out is not None and out in _BITS_TO_INDEX:
                            G[p, q, s, t, _BITS_TO_INDEX[out], col] = sign
    G.setflags(write=False)
    return G


@lru_cache(maxsize=None)
def _one_body_full() -> np.ndarray:
    """a+_p a_q as 9x9 matrices, indexed [p, q]."""
    n = N_SPIN_ORB
    E = np.zeros((n, n, 9, 9))
    for p in range(n):
        for q in range(n):
            if spin_of(p) != spin_of(q):
                continue
            for col, bits in enumerate(_DET_BITS):
                out, sign = _apply_string(bits, [("+", p), ("-", q)])
                if out is not None:
                    E[p, q, _BITS_TO_INDEX[out], col] = sign
    E.setflags(write=False)
    return E


@lru_cache(maxsize=None)
def gamma_tensor() -> np.ndarray:
    """All two-body operators projected to the compact space: shape (6,6,6,6,8,8)."""
    G = _gamma_full()[..., COMPACT_INDEX, :][..., COMPACT_INDEX]
    G = np.ascontiguousarray(G)
    G.setflags(write=False)
    return G


def two_body_operator_matrix(p: int, q: int, s: int, t: int, full: bool = False) -> np.ndarray:
    """Matrix of a+_p a+_q a_t a_s (compact 8x8, or 9x9 with ``full``)."""
    for idx in (p, q, s, t):
        if not 0 <= idx < N_SPIN_ORB:
            raise IndexError(f"spin-orbital index {idx} out of range 0..{N_SPIN_ORB - 1}")
    src = _gamma_full() if full else gamma_tensor()
    return np.array(src[p, q, s, t])


def one_body_operator_matrix(p: int, q: int, full: bool = False) -> np.ndarray:
    E = _one_body_full()[p, q]
    return np.array(E if full else E[np.ix_(COMPACT_INDEX, COMPACT_INDEX)])


def transform_to_mo(integrals: IntegralSet, C: np.ndarray | ScfResult):
    """Return MO one-electron matrix h and chemists' ERI tensor g."""
    C = C.C if isinstance(C, ScfResult) else np.asarray(C)
    h = C.T @ integrals.hcore @ C
    g = np.einsum("pqrs,pi,qj,rk,sl->ijkl", integrals.ERI, C, C, C, C, optimize=True)
    return h, g


def slater_condon_matrix(h: np.ndarray, g: np.ndarray, E_nuc: float) -> np.ndarray:
    """9x9 Hamiltonian over |ij>.

    With one alpha and one beta electron there is no exchange term:
    <ij|H|kl> = h_ik d_jl + d_ik h_jl + (ik|jl) + E_nuc d_ik d_jl.
    """
    n = N_SPATIAL
    eye = np.eye(n)
    H = np.kron(h, eye) + np.kron(eye, h)
    H += g.transpose(0, 2, 1, 3).reshape(n * n, n * n)
    H += E_nuc * np.eye(n * n)
    return 0.5 * (H + H.T)


def spin_orbital_integrals(h: np.ndarray, g: np.ndarray):
    """Spin-orbital h_pq and antisymmetry-free <pq|st> = (ps|qt) with spin deltas."""
    n = N_SPATIAL
    spin = np.array([spin_of(p) for p in range(N_SPIN_ORB)])
    sp = np.arange(N_SPIN_ORB) % n
    same = (spin[:, None] == spin[None, :]).astype(float)
    h_so = h[np.ix_(sp, sp)] * same
    # <pq|st> = (ps|qt) delta(sp,ss) delta(sq,st)
    g_so = g[np.ix_(sp, sp, sp, sp)].transpose(0, 2, 1, 3)  # (ps|qt) -> [p,q,s,t]
    g_so = g_so * same[:, None, :, None] * same[None, :, None, :]
    return h_so, g_so


def second_quantized_matrix(h, g, E_nuc, full: bool = False) -> np.ndarray:
    """Assemble H = sum h a+a + 1/2 sum <pq|st> a+_p a+_q a_t a_s over the register."""
    h_so, g_so = spin_orbital_integrals(h, g)
    E = _one_body_full()
    G = _gamma_full()
    H = np.einsum("pq,pqab->ab", h_so, E) + 0.5 * np.einsum("pqst,pqstab->ab", g_so, G)
    H += E_nuc * np.eye(9)
    if not full:
        H = H[np.ix_(COMPACT_INDEX, COMPACT_INDEX)]
    return H


@dataclass
class MolecularHamiltonian:
    h: np.ndarray
    g: np.ndarray
    E_nuc: float
    H9: np.ndarray
    H8: np.ndarray
    H8_sq: np.ndarray
    geometry: MolecularGeometry | None = None
    integrals: IntegralSet | None = field(default=None, repr=False)
    scf: ScfResult | None = field(default=None, repr=False)


def build_hamiltonian_matrices(h, g, E_nuc: float, **extra) -> MolecularHamiltonian:
    H9 = slater_condon_matrix(h, g, E_nuc)
    H8 = H9[np.ix_(COMPACT_INDEX, COMPACT_INDEX)].copy()
    # projected first, then squared: this is the operator the 3-qubit register sees
    H8_sq = H8 @ H8
    return MolecularHamiltonian(h, g, float(E_nuc), H9, H8, H8_sq, **extra)


def molecular_hamiltonian(geometry: MolecularGeometry) -> MolecularHamiltonian:
    """Integrals -> RHF -> MO transform -> register matrices."""
    ints = compute_integrals(geometry)
    try:
        scf = run_rhf(ints)
    except ScfNotConverged as exc:
        # FCI over the full determinant space does not depend on MO quality
        scf = exc.result
    h, g = transform_to_mo(ints, scf)
    return build_hamiltonian_matrices(h, g, ints.E_nuc, geometry=geometry, integrals=ints, scf=scf)


def dump_matrix(M: np.ndarray) -> str:
    """Row-major plain-text dump with 17 significant digits."""
    return "\n".join(" ".join(f"{x:.17g}" for x in row) for row in np.asarray(M)) + "\n"


def load_matrix(text: str) -> np.ndarray:
    return np.array([[float(x) for x in line.split()] for line in text.strip().splitlines()])
