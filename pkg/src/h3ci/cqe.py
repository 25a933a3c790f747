"""Variance-based contracted quantum eigensolver.

Each iteration applies exp(F_m) with a two-body generator whose coefficients
are minus a step times the variance gradient.  Variance minima are
eigenstates, so the solver lands on whichever eigenstate the starting
configuration resembles most, ground or excited.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .hamiltonian import COMPACT_LABELS, MolecularHamiltonian, gamma_tensor
from .simulator import (
    NoiseModel,
    RegisterState,
    TwoBodyGenerator,
    apply_noise_channel,
    apply_unitary,
    expectation,
    generator_unitary,
    measure_2rdm,
    readout_operators,
)

log = logging.getLogger(__name__)

VARIANCE_FLOOR = -1e-10


class NotConverged(RuntimeError):
    def __init__(self, msg, result):
        super().__init__(msg)
        self.result = result


@dataclass
class CQEConfig:
    step_size: float = 0.1
    max_iterations: int = 500
    variance_tol: float = 1e-12
    gradient_tol: float = 1e-8
    trotter_steps: int | None = None  # None -> exact exponential
    max_halvings: int = 30

    def __post_init__(self):
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.variance_tol <= 0 or self.gradient_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.trotter_steps is not None and self.trotter_steps < 1:
            raise ValueError("trotter_steps must be >= 1")


@dataclass
class IterationRecord:
    iteration: int
    energy: float
    variance: float
    grad_norm: float


@dataclass
class CQEResult:
    energy: float
    variance: float
    state: RegisterState
    rdm2: np.ndarray
    trace: list[IterationRecord]
    converged: bool
    iterations: int
    # only set for noisy runs
    noiseless_energy: float | None = None
    noisy_variance: float | None = None
    amplitudes: np.ndarray | None = field(default=None, repr=False)


def _square_centered(H8, H8_sq, E):
    return H8_sq - 2.0 * E * H8 + E * E * np.eye(len(H8))


def variance(state: RegisterState, H8: np.ndarray, H8_sq: np.ndarray) -> float:
    """<H^2> - <H>^2, clipped to zero inside the numerical floor."""
    E = expectation(state, H8)
    var = expectation(state, H8_sq) - E * E
    if var < 0.0:
        if var < VARIANCE_FLOOR:
            log.warning("variance %.3e below floor; H8_sq may not be the square of H8", var)
        var = 0.0
    return var


def variance_gradient(state: RegisterState, H8: np.ndarray, H8_sq: np.ndarray) -> np.ndarray:
    """dVar/dF[p,q,s,t] for the real generator sum F (G - G^T).

    Built from G[pqst] = 2 <(Gamma^pq_st - D2^pq_st)(H - E)^2>; the real
    antisymmetric parameterization pairs each element with its adjoint,
    giving grad[pqst] = G[stpq] - G[pqst].
    """
    E = expectation(state, H8)
    K = _square_centered(H8, H8_sq, E)
    rho = state.to_density()
    var = float(np.trace(rho @ K))
    D2 = measure_2rdm(state)
    X = np.einsum("pqstab,bc,ca->pqst", gamma_tensor(), K, rho, optimize=True)
    G = 2.0 * (X - D2 * var)
    return G.transpose(2, 3, 0, 1) - G


def initial_guess(
    H: MolecularHamiltonian,
    target: int = 0,
    spin: str | None = None,
    n_lowest: int = 3,
) -> RegisterState:
    """Subspace-diagonalization start vector.

    Takes the ``n_lowest`` determinants of lowest diagonal energy, adds their
    alpha/beta-swapped and energy-degenerate partners, diagonalizes H8 in that
    span and returns root ``target``.  ``spin`` ('singlet' / 'triplet')
    restricts the roots counted to one spin-swap parity.
    """
    if target < 0:
        raise ValueError("target must be non-negative")
    diag = np.diag(H.H8)
    order = np.argsort(diag, kind="stable")
    chosen = set(int(k) for k in order[:n_lowest])
    for k in list(chosen):
        i, j = COMPACT_LABELS[k]
        chosen.add(COMPACT_LABELS.index((j, i)))
        chosen.update(int(m) for m in np.flatnonzero(np.abs(diag - diag[k]) < 1e-6))
    # keep adding degenerate/swap partners until closed
    while True:
        extra = set()
        for k in chosen:
            i, j = COMPACT_LABELS[k]
            extra.add(COMPACT_LABELS.index((j, i)))
            extra.update(int(m) for m in np.flatnonzero(np.abs(diag - diag[k]) < 1e-6))
        if extra <= chosen:
            break
        chosen |= extra
    idx = sorted(chosen)
    w, V = np.linalg.eigh(H.H8[np.ix_(idx, idx)])
    vecs = np.zeros((8, len(idx)))
    vecs[idx, :] = V
    if spin is not None:
        swap = np.array([COMPACT_LABELS.index((j, i)) for i, j in COMPACT_LABELS])
        parity = np.einsum("ak,ak->k", vecs[swap], vecs)
        want = {"singlet": 1.0, "triplet": -1.0}[spin]
        keep = np.flatnonzero(np.sign(np.round(parity, 8)) == want)
        vecs = vecs[:, keep]
    if target >= vecs.shape[1]:
        raise ValueError(f"subspace has only {vecs.shape[1]} roots for spin={spin!r}")
    v = vecs[:, target]
    k = int(np.argmax(np.abs(v) >= np.abs(v).max() - 1e-10))
    return RegisterState.pure(v if v[k] > 0 else -v)


def solve(
    initial: RegisterState,
    H: MolecularHamiltonian,
    cfg: CQEConfig | None = None,
    noise: NoiseModel | None = None,
    noise_key=(),
    strict: bool = False,
) -> CQEResult:
    """Iterate psi <- exp(-eta * grad . (G - G^T)) psi until the variance vanishes.

    The step is halved (up to ``max_halvings`` times) whenever it would raise
    the variance.  With ``noise`` the parameter updates still come from the
    noiseless state; reported energies are read from the depolarized density
    matrix through the biased readout.  Non-convergence returns the last
    iterate with ``converged=False`` unless ``strict``.
    """
    cfg = cfg or CQEConfig()
    if not initial.is_pure:
        raise ValueError("CQE starts from a pure register state")
    H8, H8_sq = H.H8, H.H8_sq
    psi = initial
    U_total = np.eye(8)
    trace: list[IterationRecord] = []
    var = variance(psi, H8, H8_sq)
    if noise is not None:
        H_read, H_read_sq = readout_operators(H8, noise, noise_key)

    def report(state_pure, U):
        if noise is None:
            return expectation(state_pure, H8)
        rho = _noisy_state(initial, U, noise)
        return expectation(rho, H_read)

    converged = False
    it = 0
    for it in range(cfg.max_iterations + 1):
        grad = variance_gradient(psi, H8, H8_sq)
        gnorm = float(np.linalg.norm(grad))
        trace.append(IterationRecord(it, report(psi, U_total), var, gnorm))
        if var <= cfg.variance_tol:
            converged = True
            break
        if gnorm <= cfg.gradient_tol or it == cfg.max_iterations:
            break
        eta = cfg.step_size
        for _ in range(cfg.max_halvings + 1):
            U = generator_unitary(TwoBodyGenerator(-eta * grad), cfg.trotter_steps)
            trial = apply_unitary(psi, U)
            trial_var = variance(trial, H8, H8_sq)
            if trial_var <= var:
                break
            eta *= 0.5
        else:
            log.debug("CQE line search exhausted at iteration %d", it)
            break
        psi, var, U_total = trial, trial_var, U @ U_total

    E_clean = expectation(psi, H8)
    if noise is None:
        out_state = psi
        energy = E_clean
        noisy_var = None
        clean = None
    else:
        out_state = _noisy_state(initial, U_total, noise)
        energy = expectation(out_state, H_read)
        noisy_var = max(expectation(out_state, H_read_sq) - energy**2, 0.0)
        clean = E_clean
    result = CQEResult(
        energy=energy,
        variance=var,
        state=out_state,
        rdm2=measure_2rdm(out_state),
        trace=trace,
        converged=converged,
        iterations=it,
        noiseless_energy=clean,
        noisy_variance=noisy_var,
        amplitudes=psi.vector.copy(),
    )
    if not converged:
        log.info("CQE stopped after %d iterations with variance %.3e", it, var)
        if strict:
            raise NotConverged(f"variance {var:.3e} above tolerance after {it} iterations", result)
    return result


def _noisy_state(initial: RegisterState, U: np.ndarray, noise: NoiseModel) -> RegisterState:
    # the whole ansatz runs as one circuit, so the channel acts once per preparation
    return apply_noise_channel(apply_unitary(initial.as_mixed(), U), noise)


def write_trace_csv(result: CQEResult, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("iter,energy,variance,grad_norm\n")
        for r in result.trace:
            fh.write(f"{r.iteration},{r.energy:.17g},{r.variance:.17g},{r.grad_norm:.17g}\n")
