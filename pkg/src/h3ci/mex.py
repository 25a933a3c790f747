"""Minimum-energy crossing point search.

Minimizes L = E_I + lambda0 * (E_J - E_I) + sum_k lambda_k C_k(g) over a
subset of (R, rho, theta) with central-difference gradients and an
identity-Hessian step x <- x - step * grad.  Lengths are bohr, angles
radians; the trace reports theta in degrees.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import MolecularGeometry
from .surfaces import PointSolver

log = logging.getLogger(__name__)

PARAMETERS = ("R", "rho", "theta")
CSV_HEADER = "iter,theta_deg,rho_bohr,gap_hartree,L_hartree"


class SolverFailure(RuntimeError):
    def __init__(self, msg, geometry=None):
        super().__init__(msg)
        self.geometry = geometry


class NotConverged(RuntimeError):
    def __init__(self, msg, trace):
        super().__init__(msg)
        self.trace = trace


@dataclass
class MexConfig:
    free: tuple[str, ...] = ("theta", "rho")
    lambda0: float = 12.0
    constraints: list[tuple[float, Callable[[MolecularGeometry], float]]] = field(default_factory=list)
    step_size: float = 0.1
    fd_step: float = 1e-3
    max_iterations: int = 25
    gap_tol: float = 1e-3
    # halve the step while it would raise L; off gives the bare fixed-step update
    safeguard: bool = True
    max_halvings: int = 8
    solver: PointSolver = field(default_factory=PointSolver)

    def __post_init__(self):
        self.free = tuple(self.free)
        if not self.free or any(p not in PARAMETERS for p in self.free):
            raise ValueError(f"free parameters must be a non-empty subset of {PARAMETERS}")
        if len(set(self.free)) != len(self.free):
            raise ValueError("duplicate free parameter")
        if self.step_size <= 0 or self.fd_step <= 0:
            raise ValueError("step_size and fd_step must be positive")
        if self.gap_tol <= 0:
            raise ValueError("gap_tol must be positive")

    def describe(self) -> list[str]:
        return [
            f"free={','.join(self.free)}",
            f"lambda0={self.lambda0}",
            f"step_size={self.step_size}",
            f"fd_step={self.fd_step}",
            f"gap_tol={self.gap_tol}",
            f"max_iterations={self.max_iterations}",
            f"safeguard={self.safeguard}",
            f"solver={self.solver.solver}",
            f"states={self.solver.states}",
        ]


@dataclass
class MexRecord:
    iteration: int
    theta_deg: float
    rho: float
    gap: float
    L: float
    R: float


@dataclass
class MexTrace:
    records: list[MexRecord]
    final: MolecularGeometry
    converged: bool

    @property
    def iterations(self) -> int:
        return self.records[-1].iteration if self.records else 0

    def table(self) -> str:
        lines = [f"{'iter':>4} {'theta(deg)':>11} {'rho(bohr)':>10} {'dE(hartree)':>12} {'L(hartree)':>13}"]
        for r in self.records:
            lines.append(f"{r.iteration:>4d} {r.theta_deg:>11.3f} {r.rho:>10.3f} {r.gap:>12.4f} {r.L:>13.6f}")
        return "\n".join(lines)


def _energies(g: MolecularGeometry, cfg: MexConfig) -> tuple[float, float]:
    rec = cfg.solver(g)
    if rec.failed or not np.isfinite(rec.gap):
        raise SolverFailure(f"solver failed at {g}: {rec.failure}", g)
    return rec.E1, rec.E2


def lagrangian(g: MolecularGeometry, cfg: MexConfig) -> tuple[float, float, float]:
    """(L, E_I, gap) at one geometry; the gap is taken after ordering, so >= 0."""
    E_I, E_J = _energies(g, cfg)
    gap = abs(E_J - E_I)
    E_I = min(E_I, E_J)
    L = E_I + cfg.lambda0 * gap + sum(w * c(g) for w, c in cfg.constraints)
    return L, E_I, gap


def _vector(g: MolecularGeometry, free) -> np.ndarray:
    return np.array([getattr(g, p) for p in free], dtype=float)


def _geometry(g: MolecularGeometry, free, x) -> MolecularGeometry:
    return g.with_params(**dict(zip(free, (float(v) for v in x))))


def numerical_gradient(g: MolecularGeometry, cfg: MexConfig, h: float | None = None) -> np.ndarray:
    """Central differences of L over the free parameters."""
    h = cfg.fd_step if h is None else h
    x0 = _vector(g, cfg.free)
    grad = np.zeros(len(x0))
    for k in range(len(x0)):
        e = np.zeros(len(x0))
        e[k] = h
        try:
            plus = lagrangian(_geometry(g, cfg.free, x0 + e), cfg)[0]
            minus = lagrangian(_geometry(g, cfg.free, x0 - e), cfg)[0]
        except ValueError as exc:  # stencil left the valid domain
            raise SolverFailure(f"finite-difference stencil invalid at {g}: {exc}", g) from exc
        grad[k] = (plus - minus) / (2 * h)
    return grad


def optimize(start: MolecularGeometry, cfg: MexConfig | None = None, strict: bool = False) -> MexTrace:
    """Identity-Hessian descent on L until the gap falls below ``gap_tol``.

    With ``safeguard`` a step that would increase L is halved (the nominal
    step is restored every iteration).  Iteration 0 is the start point.
    """
    cfg = cfg or MexConfig()
    g = start
    records: list[MexRecord] = []
    converged = False
    L, _, gap = lagrangian(g, cfg)
    for it in range(cfg.max_iterations + 1):
        records.append(MexRecord(it, math.degrees(g.theta), g.rho, gap, L, g.R))
        if gap < cfg.gap_tol:
            converged = True
            break
        if it == cfg.max_iterations:
            break
        grad = numerical_gradient(g, cfg)
        x = _vector(g, cfg.free)
        eta = cfg.step_size
        for _ in range(cfg.max_halvings + 1):
            trial = _geometry(g, cfg.free, x - eta * grad)
            try:
                L_new, _, gap_new = lagrangian(trial, cfg)
            except ValueError:
                L_new, gap_new = math.inf, math.inf  # infeasible step
            if not cfg.safeguard or L_new <= L:
                break
            eta *= 0.5
        if not math.isfinite(L_new):
            raise SolverFailure(f"step left the valid geometry domain at iteration {it}", trial)
        g, L, gap = trial, L_new, gap_new
    trace = MexTrace(records, g, converged)
    if not converged:
        log.info("MEX search stopped after %d iterations with gap %.3e", trace.iterations, gap)
        if strict:
            raise NotConverged(f"gap {gap:.3e} above tolerance", trace)
    return trace


def write_trace_csv(trace: MexTrace, path, header_lines=()) -> None:
    with open(path, "w", newline="\n") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(CSV_HEADER + "\n")
        for r in trace.records:
            fh.write(f"{r.iteration},{r.theta_deg:.17g},{r.rho:.17g},{r.gap:.17g},{r.L:.17g}\n")
