"""Two-state diabatization, finite-difference derivative couplings and the
geometric phase accumulated around a closed loop.

Loops live in the (x, y) plane of atom 3 with the other two atoms fixed at
(+-R, 0).  Along a path the adiabatic vectors are re-phased to overlap
positively with the previous point; the coupling is accumulated from a
reference point where the mixing angle is fixed to zero (a gauge choice).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fci import FciResult, fci_solve, state_indices, state_overlaps
from .geometry import MolecularGeometry
from .hamiltonian import MolecularHamiltonian, molecular_hamiltonian

MIN_LOOP_POINTS = 16
MIN_SAME_STATE_OVERLAP = 0.5
CSV_HEADER = "k,x,y,E1,E2,segment_coupling,accumulated_phase"


class PhaseInconsistency(RuntimeError):
    pass


@dataclass
class DiabaticPair:
    theta_mix: float
    H11: float
    H22: float
    H12: float

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.H11, self.H12], [self.H12, self.H22]])

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    @property
    def degeneracy_discriminant(self) -> float:
        """(H11 - H22)^2 + 4 H12 H21; zero exactly at a degeneracy."""
        return (self.H11 - self.H22) ** 2 + 4.0 * self.H12 * self.H12


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def adiabatic_to_diabatic(E_I: float, E_J: float, theta_mix: float) -> DiabaticPair:
    """H^d = U diag(E_I, E_J) U^T for the 2x2 rotation U(theta_mix)."""
    if not math.isfinite(theta_mix):
        raise ValueError("theta_mix must be finite")
    U = rotation(theta_mix)
    Hd = U @ np.diag([E_I, E_J]) @ U.T
    return DiabaticPair(theta_mix, float(Hd[0, 0]), float(Hd[1, 1]), float(0.5 * (Hd[0, 1] + Hd[1, 0])))


@dataclass
class PathPoint:
    geometry: MolecularGeometry
    H: MolecularHamiltonian
    fci: FciResult
    I: int
    J: int

    @classmethod
    def at(cls, g: MolecularGeometry, states: str = "pair") -> "PathPoint":
        H = molecular_hamiltonian(g)
        res = fci_solve(H)
        I, J = state_indices(res, states)
        return cls(g, H, res, I, J)

    @property
    def energies(self) -> tuple[float, float]:
        return float(self.fci.energies[self.I]), float(self.fci.energies[self.J])


def _aligned_overlaps(A: PathPoint, B: PathPoint, signs_A=(1.0, 1.0)):
    """2x2 overlaps <K_A|L_B> over the tracked pair, with B's signs chosen so
    the same-state overlaps are positive.  Returns (S, signs_B)."""
    S_full = state_overlaps(A.H, A.fci, B.H, B.fci)
    S = S_full[np.ix_([A.I, A.J], [B.I, B.J])] * np.asarray(signs_A)[:, None]
    for k in range(2):
        if abs(S[k, k]) < MIN_SAME_STATE_OVERLAP:
            raise PhaseInconsistency(
                f"same-state overlap {abs(S[k, k]):.3f} between {A.geometry} and {B.geometry}; "
                "reduce the step"
            )
    signs_B = np.sign(np.diag(S))
    return S * signs_B[None, :], signs_B


def _reference_signs(p: PathPoint) -> np.ndarray:
    """Signs making the largest component of each reference vector positive."""
    out = []
    for k in (p.I, p.J):
        v = p.fci.vectors[:, k]
        a = np.abs(v)
        out.append(np.sign(v[int(np.flatnonzero(a >= a.max() - 1e-10)[0])]))
    return np.array(out)


def segment_coupling(S: np.ndarray) -> float:
    """Antisymmetric overlap estimate of <I|d/dR|J> . dR for one step."""
    return 0.5 * float(S[0, 1] - S[1, 0])


def derivative_coupling(gA: MolecularGeometry, gB: MolecularGeometry, states: str = "pair") -> float:
    """Coupling between the E1/E2 pair accumulated over the step gA -> gB."""
    A, B = PathPoint.at(gA, states), PathPoint.at(gB, states)
    S, _ = _aligned_overlaps(A, B)
    return segment_coupling(S)


@dataclass
class LoopSpec:
    center: tuple[float, float] = (0.0, math.sqrt(3.0))
    radius: float = 0.3
    n_points: int = 64
    R: float = 1.0
    states: str = "pair"

    def __post_init__(self):
        if self.n_points < MIN_LOOP_POINTS:
            raise ValueError(f"a loop needs at least {MIN_LOOP_POINTS} points")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if not self.R > 0:
            raise ValueError("R must be positive")

    def points(self) -> list[tuple[float, float]]:
        """n_points + 1 points; the last repeats the first so the loop is closed."""
        cx, cy = self.center
        phis = 2.0 * math.pi * np.arange(self.n_points) / self.n_points
        pts = [(cx + self.radius * math.cos(p), cy + self.radius * math.sin(p)) for p in phis]
        return pts + [pts[0]]

    def geometries(self) -> list[MolecularGeometry]:
        return [MolecularGeometry.from_cartesian_third(self.R, x, y) for x, y in self.points()]


@dataclass
class LoopPoint:
    k: int
    x: float
    y: float
    E1: float
    E2: float
    segment_coupling: float
    accumulated_phase: float


@dataclass
class LoopResult:
    phase: float  # accumulated coupling wrapped to (-pi, pi]
    unwrapped: float
    closure_signs: tuple[float, float]  # transported sign of each state back at the start
    points: list[LoopPoint] = field(default_factory=list)

    @property
    def encloses_ci(self) -> bool:
        return abs(self.phase) > 0.5 * math.pi

    @property
    def sign_flip(self) -> bool:
        return all(s < 0 for s in self.closure_signs)


def wrap_angle(a: float) -> float:
    """Map to (-pi, pi]."""
    w = math.remainder(a, 2.0 * math.pi)
    return math.pi if w == -math.pi else w


def transport_loop(loop: LoopSpec, gauge=None) -> LoopResult:
    """Parallel-transport the pair around ``loop`` and integrate the coupling.

    ``gauge`` optionally multiplies the raw vectors at each loop point by a
    sign (shape (n_points + 1, 2)); the result must not depend on it.
    """
    pts = loop.points()
    path = [PathPoint.at(g, loop.states) for g in loop.geometries()]
    if gauge is not None:
        gauge = np.asarray(gauge, dtype=float).reshape(len(path), 2)
        for p, s in zip(path, gauge):
            V = p.fci.vectors.copy()
            V[:, p.I] *= s[0]
            V[:, p.J] *= s[1]
            p.fci = FciResult(p.fci.energies, V, p.fci.geometry)
    signs = _reference_signs(path[0])
    total = 0.0
    out = [LoopPoint(0, *pts[0], *sorted(path[0].energies), 0.0, 0.0)]
    for k in range(1, len(path)):
        S, signs = _aligned_overlaps(path[k - 1], path[k], signs)
        tau = segment_coupling(S)
        total += tau
        out.append(LoopPoint(k, *pts[k], *sorted(path[k].energies), tau, total))
    # path[-1] and path[0] are the same geometry: compare transported and initial vectors
    S_close = state_overlaps(path[0].H, path[0].fci, path[-1].H, path[-1].fci)
    s0 = _reference_signs(path[0])
    closure = tuple(float(np.sign(S_close[i, j]) * s * r)
                    for i, j, s, r in ((path[0].I, path[-1].I, signs[0], s0[0]),
                                       (path[0].J, path[-1].J, signs[1], s0[1])))
    return LoopResult(wrap_angle(total), total, closure, out)


def geometric_phase(loop: LoopSpec, gauge=None) -> float:
    return transport_loop(loop, gauge).phase


def diabatize_path(geometries, states: str = "pair") -> list[DiabaticPair]:
    """Quasi-diabatic pairs along a path, theta_mix integrated from the first point (= 0)."""
    path = [PathPoint.at(g, states) for g in geometries]
    theta, signs = 0.0, _reference_signs(path[0])
    out = [adiabatic_to_diabatic(*path[0].energies, theta)]
    for k in range(1, len(path)):
        S, signs = _aligned_overlaps(path[k - 1], path[k], signs)
        theta += segment_coupling(S)
        out.append(adiabatic_to_diabatic(*path[k].energies, theta))
    return out


def write_loop_csv(result: LoopResult, path, header_lines=()) -> None:
    with open(path, "w", newline="\n") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(CSV_HEADER + "\n")
        for p in result.points:
            fh.write(f"{p.k},{p.x:.17g},{p.y:.17g},{p.E1:.17g},{p.E2:.17g},"
                     f"{p.segment_coupling:.17g},{p.accumulated_phase:.17g}\n")
