import math

import numpy as np
import pytest

from h3ci.geometry import MolecularGeometry
from h3ci.integrals import IntegralSet, _eri, _kinetic, _nuclear, compute_integrals, nuclear_repulsion, overlap_matrix, sto3g_function
from h3ci.scf import ScfNotConverged, fock_matrix, lowdin, run_rhf


def h2_integrals(d=1.4):
    basis = (sto3g_function([0, 0, 0]), sto3g_function([d, 0, 0]))
    centers = [b.center for b in basis]
    S = overlap_matrix(basis)
    T = np.array([[_kinetic(a, b) for b in basis] for a in basis])
    V = np.array([[_nuclear(a, b, centers, [1, 1]) for b in basis] for a in basis])
    eri = np.array([[[[_eri(a, b, c, e) for e in basis] for c in basis] for b in basis] for a in basis])
    return IntegralSet(S, T, V, eri, nuclear_repulsion(centers), basis)


def test_h2_textbook_energy():
    res = run_rhf(h2_integrals())
    # total RHF energy of STO-3G H2 at 1.4 bohr: -1.1167 hartree
    assert res.E_hf == pytest.approx(-1.1167, abs=1e-4)
    assert res.orbital_energies[0] == pytest.approx(-0.578, abs=1e-3)


@pytest.mark.parametrize("g", [MolecularGeometry(1.0, 1.5, 1.2), MolecularGeometry.equilateral(1.65)])
def test_rhf_stationarity(g):
    ints = compute_integrals(g)
    res = run_rhf(ints)
    assert res.converged
    C, S = res.C, ints.S
    np.testing.assert_allclose(C.T @ S @ C, np.eye(3), atol=1e-10)
    D = res.density
    np.testing.assert_allclose(D @ S @ D, 2 * D, atol=1e-8)
    F = fock_matrix(ints, D)
    np.testing.assert_allclose(F @ C, S @ C @ np.diag(res.orbital_energies), atol=1e-7)


def test_degenerate_virtuals_are_canonical_and_deterministic():
    ints = compute_integrals(MolecularGeometry.equilateral(1.8))
    a, b = run_rhf(ints), run_rhf(ints)
    assert a.orbital_energies[1] == pytest.approx(a.orbital_energies[2], abs=1e-9)
    np.testing.assert_array_equal(a.C, b.C)
    # every MO has its largest coefficient positive
    for k in range(3):
        col = a.C[:, k]
        assert col[np.argmax(np.abs(col))] > 0


def test_non_convergence_carries_last_iterate():
    ints = compute_integrals(MolecularGeometry(1.0, 2.0, 1.0))
    with pytest.raises(ScfNotConverged) as info:
        run_rhf(ints, max_iter=1)
    assert info.value.result.C.shape == (3, 3)
    assert not info.value.result.converged


def test_lowdin_orthogonalizes():
    S = compute_integrals(MolecularGeometry(1, 1.3, 0.4)).S
    X = lowdin(S)
    np.testing.assert_allclose(X @ S @ X, np.eye(3), atol=1e-12)
