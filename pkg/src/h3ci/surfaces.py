"""Potential-energy-surface scans and degeneracy detection."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cqe import CQEConfig, initial_guess, solve
from .fci import fci_solve, state_indices
from .geometry import MolecularGeometry
from .hamiltonian import COMPACT_INDEX, molecular_hamiltonian
from .simulator import NoiseModel

MODES = ("d3h", "c2v", "xy")
SOLVERS = ("fci", "cqe", "cqe-noisy")
CSV_HEADER = "R,rho,theta,E0,E1,E2,gap,solver,converged,seed"
SEAM_TOL = 1e-8
DEGENERACY_TOL = 1e-6


class EmptyScan(ValueError):
    pass


@dataclass
class PointSolver:
    """How E1/E2 are computed at one geometry.

    ``states='pair'`` follows the two lowest triplet roots (the intersecting
    pair); ``'energy'`` takes FCI roots 1 and 2 in energy order.
    """

    solver: str = "fci"
    states: str = "pair"
    noise: NoiseModel | None = None
    cqe: CQEConfig = field(default_factory=CQEConfig)

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}")
        if self.states not in ("pair", "energy"):
            raise ValueError("states must be 'pair' or 'energy'")
        if self.solver == "cqe-noisy" and self.noise is None:
            raise ValueError("cqe-noisy needs a NoiseModel")

    def __call__(self, g: MolecularGeometry) -> "SurfaceRecord":
        return evaluate_point(g, self)


@dataclass
class ScanSpec:
    """What to scan.

    d3h: ``values`` are R, third atom at (sqrt(3) R, pi/2).
    c2v: ``values`` are rho at theta = pi/2 with fixed ``R``.
    xy:  Cartesian grid of atom 3 over ``x_values`` x ``y_values`` with fixed ``R``,
         plus any ``extra_points`` (x, y).
    """

    mode: str
    values: np.ndarray | None = None
    R: float = 1.0
    x_values: np.ndarray | None = None
    y_values: np.ndarray | None = None
    extra_points: list = field(default_factory=list)
    solver: str = "fci"
    states: str = "pair"
    noise: NoiseModel | None = None
    cqe: CQEConfig = field(default_factory=CQEConfig)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        self.point_solver()  # validates solver settings
        if self.mode == "xy":
            if self.x_values is None or self.y_values is None:
                raise ValueError("xy mode needs x_values and y_values")
            if len(self.x_values) < 2 or len(self.y_values) < 2:
                raise ValueError("xy grids need at least 2 steps per axis")
        else:
            if self.values is None or len(self.values) < 2:
                raise ValueError("a curve needs at least 2 steps")

    def point_solver(self) -> PointSolver:
        return PointSolver(self.solver, self.states, self.noise, self.cqe)

    def geometries(self) -> list[MolecularGeometry]:
        if self.mode == "d3h":
            return [MolecularGeometry(R, math.sqrt(3.0) * R, 0.5 * math.pi) for R in self.values]
        if self.mode == "c2v":
            return [MolecularGeometry(self.R, rho, 0.5 * math.pi) for rho in self.values]
        pts = [(x, y) for y in self.y_values for x in self.x_values] + [tuple(p) for p in self.extra_points]
        return [MolecularGeometry.from_cartesian_third(self.R, x, y) for x, y in pts]


@dataclass
class SurfaceRecord:
    R: float
    rho: float
    theta: float
    E0: float
    E1: float
    E2: float
    gap: float
    solver: str
    converged: bool
    seed: int | None = None
    iterations: int = 0
    variance: float = 0.0
    swapped: bool = False  # E1/E2 came out of the solver in reverse order
    failure: str = ""

    @property
    def x(self) -> float:
        return self.rho * math.cos(self.theta)

    @property
    def y(self) -> float:
        return self.rho * math.sin(self.theta)

    @property
    def failed(self) -> bool:
        return bool(self.failure)


def evaluate_point(g: MolecularGeometry, spec) -> SurfaceRecord:
    """One grid point; failures come back as NaN rows instead of exceptions.

    E0 is always the FCI ground state: |11>, which dominates it, is not on
    the register.  ``spec`` is a PointSolver or ScanSpec.  The readout bias
    is keyed by seed only, i.e. a systematic miscalibration that is the same
    at every geometry.
    """
    seed = spec.noise.seed if spec.noise is not None else None
    try:
        H = molecular_hamiltonian(g)
        ref = fci_solve(H)
        I, J = state_indices(ref, spec.states)
        E0 = float(ref.energies[0])
        if spec.solver == "fci":
            a, b = float(ref.energies[I]), float(ref.energies[J])
            return _record(g, E0, a, b, spec, seed, True, 0, 0.0)

        noise = spec.noise if spec.solver == "cqe-noisy" else None
        spin = "triplet" if spec.states == "pair" else None
        energies, iters, var, ok = [], 0, 0.0, True
        for target, want in ((0, I), (1, J)):
            res = solve(initial_guess(H, target, spin=spin), H, spec.cqe, noise=noise)
            # state identity is checked against FCI, not inferred from energy order;
            # weight is summed over the (possibly degenerate) level of the wanted root
            ov = ref.vectors[COMPACT_INDEX, :].T @ res.amplitudes
            level = np.abs(ref.energies - ref.energies[want]) < DEGENERACY_TOL
            if float(np.sum(ov[level] ** 2)) < 0.5:
                ok = False
            energies.append(res.energy)
            iters = max(iters, res.iterations)
            var = max(var, res.variance)
            ok = ok and res.converged
        return _record(g, E0, energies[0], energies[1], spec, seed, ok, iters, var)
    except Exception as exc:  # grid failures are data
        nan = float("nan")
        return SurfaceRecord(g.R, g.rho, g.theta, nan, nan, nan, nan, spec.solver, False, seed,
                             failure=f"{type(exc).__name__}: {exc}")


def _record(g, E0, a, b, spec, seed, ok, iters, var) -> SurfaceRecord:
    swapped = b < a
    E1, E2 = (b, a) if swapped else (a, b)
    return SurfaceRecord(g.R, g.rho, g.theta, E0, E1, E2, E2 - E1, spec.solver, ok, seed,
                         iters, var, swapped)


def _evaluate(args):
    g, solver = args
    return solver(g)


def scan(spec: ScanSpec, workers: int = 1) -> list[SurfaceRecord]:
    """Evaluate every grid point; output order follows ``spec.geometries()``."""
    geoms = spec.geometries()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_evaluate, [(g, spec.point_solver()) for g in geoms]))
    solver = spec.point_solver()
    return [solver(g) for g in geoms]


def write_csv(records, path, header_lines=()) -> None:
    with open(path, "w", newline="\n") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(CSV_HEADER + "\n")
        for r in records:
            seed = "" if r.seed is None else str(r.seed)
            fh.write(
                f"{r.R:.17g},{r.rho:.17g},{r.theta:.17g},{r.E0:.17g},{r.E1:.17g},{r.E2:.17g},"
                f"{r.gap:.17g},{r.solver},{int(r.converged)},{seed}\n"
            )


def read_csv(path) -> list[dict]:
    import csv

    with open(path) as fh:
        rows = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(rows))


def _parabola_vertex(x, y) -> float:
    """Vertex abscissa of the parabola through three points."""
    (x0, x1, x2), (y0, y1, y2) = x, y
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    A = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    B = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom
    if A <= 0:
        return x1
    return float(np.clip(-B / (2 * A), min(x0, x2), max(x0, x2)))


def detect_ci(coords, gaps, gap_tol: float = 1e-3) -> list[float]:
    """Degeneracy positions along a 1-D scan.

    Points whose gap is below ``SEAM_TOL`` are returned as they are (a
    degenerate seam along the whole curve); otherwise every interior local
    minimum below ``gap_tol`` is refined by a parabola through it and its two
    neighbours.
    """
    coords = np.asarray(coords, dtype=float)
    gaps = np.asarray(gaps, dtype=float)
    if len(coords) == 0:
        raise EmptyScan("no scan points")
    ok = np.isfinite(gaps)
    coords, gaps = coords[ok], gaps[ok]
    if len(coords) == 0:
        raise EmptyScan("no finite gaps in scan")
    found = []
    n = len(gaps)
    for k in range(n):
        if gaps[k] < SEAM_TOL:
            found.append(float(coords[k]))
            continue
        if gaps[k] >= gap_tol:
            continue
        left = gaps[k - 1] if k > 0 else np.inf
        right = gaps[k + 1] if k < n - 1 else np.inf
        if gaps[k] <= left and gaps[k] < right:
            if 0 < k < n - 1:
                found.append(_parabola_vertex(coords[k - 1 : k + 2], gaps[k - 1 : k + 2]))
            else:
                found.append(float(coords[k]))
    return found


def detect_ci_records(records, gap_tol: float = 1e-3, coordinate: str = "rho") -> list[float]:
    coords = [getattr(r, coordinate) for r in records]
    return detect_ci(coords, [r.gap for r in records], gap_tol)


def locate_ci_grid(records, nx: int, ny: int) -> tuple[float, float]:
    """Refined (x, y) of the smallest gap on a row-major ``ny`` x ``nx`` grid."""
    recs = records[: nx * ny]
    gaps = np.array([r.gap for r in recs]).reshape(ny, nx)
    xs = np.array([r.x for r in recs]).reshape(ny, nx)[0]
    ys = np.array([r.y for r in recs]).reshape(ny, nx)[:, 0]
    gaps = np.where(np.isfinite(gaps), gaps, np.inf)
    j, i = np.unravel_index(np.argmin(gaps), gaps.shape)
    x = xs[i] if i in (0, nx - 1) else _parabola_vertex(xs[i - 1 : i + 2], gaps[j, i - 1 : i + 2])
    y = ys[j] if j in (0, ny - 1) else _parabola_vertex(ys[j - 1 : j + 2], gaps[j - 1 : j + 2, i])
    return float(x), float(y)


def calibrate_depolarizing(
    geometries,
    target_error: float = 0.012,
    readout_scale: float = 1e-3,
    seed: int = 0,
    states: str = "pair",
    cqe: CQEConfig | None = None,
) -> NoiseModel:
    """NoiseModel whose mean |E_noisy - E_fci| over the E1/E2 pair equals ``target_error``.

    The noiseless CQE states are computed once; the noisy readout of a
    depolarized pure state is affine in the rate, so the mean error is a
    cheap monotone-ish function of it and is solved by bracketing.
    """
    from scipy.optimize import brentq

    from .simulator import readout_operators

    cqe = cqe or CQEConfig()
    base = NoiseModel(0.0, readout_scale, seed)
    samples = []  # (<psi|Hb|psi>, Tr(Hb)/8, E_fci)
    for g in geometries:
        H = molecular_hamiltonian(g)
        ref = fci_solve(H)
        I, J = state_indices(ref, states)
        Hb, _ = readout_operators(H.H8, base)
        spin = "triplet" if states == "pair" else None
        for target, want in ((0, I), (1, J)):
            psi = solve(initial_guess(H, target, spin=spin), H, cqe).amplitudes
            samples.append((psi @ Hb @ psi, np.trace(Hb) / 8.0, ref.energies[want]))
    s = np.array(samples)

    def excess(lam):
        return np.mean(np.abs((1 - lam) * s[:, 0] + lam * s[:, 1] - s[:, 2])) - target_error

    if excess(0.0) >= 0:
        raise ValueError("readout bias alone already exceeds the target error")
    if excess(1.0) <= 0:
        raise ValueError("target error unreachable even with full depolarization")
    lam = brentq(excess, 0.0, 1.0, xtol=1e-12)
    return NoiseModel(float(lam), readout_scale, seed)
