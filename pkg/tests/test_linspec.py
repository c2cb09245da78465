import math

import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from homog_eig.discretize import (CoefficientField, assemble_stiffness, assemble_weighted_mass,
                                  build_grid, project_weight, read_triplets, write_triplets)
from homog_eig.errors import NoNegativeSpectrum, NoPositiveSpectrum, NotSPD, OnNullCone
from homog_eig.linspec import PencilProblem, factor_spd, pencil_spectrum, rayleigh_quotient
from homog_eig.shoot1d import eigenvalue_1d
from homog_eig.weights import PeriodicWeight

PI2 = math.pi ** 2
SIN = PeriodicWeight.sine()


def pencil(w, eps, dim=1, n=513, c=None):
    g = build_grid(dim, [0, 1], n)
    c = CoefficientField.isotropic(2, dim) if c is None else c
    rho = project_weight(w, eps, g)
    return PencilProblem(assemble_stiffness(c, g), assemble_weighted_mass(rho, g)), g


def dense_oracle(prob):
    """Independent: scipy generalized symmetric eigensolve of B x = mu A x."""
    mu = sla.eigh(prob.B.toarray(), prob.A.toarray(), eigvals_only=True)
    mu = mu[np.abs(mu) > 1e-12 * np.abs(mu).max()]
    lam = 1 / mu
    return np.sort(lam[lam > 0]), np.sort(lam[lam < 0])[::-1]


# -- factor_spd -------------------------------------------------------------------

def test_factor_examples():
    K = sp.diags([np.full(3, 8.0), np.full(2, -4.0), np.full(2, -4.0)], [0, 1, -1])
    f = factor_spd(K)
    assert np.allclose(f.solve(K.toarray()), np.eye(3), atol=1e-12)
    L = f.dense_lower()
    assert np.allclose(L @ L.T, K.toarray(), atol=1e-12)
    assert np.allclose(factor_spd(np.eye(4)).dense_lower(), np.eye(4))
    with pytest.raises(NotSPD):
        factor_spd(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(NotSPD):
        factor_spd(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_factor_triangular_solves():
    rng = np.random.default_rng(0)
    M = rng.standard_normal((30, 30))
    A = sp.csr_matrix(np.triu(np.tril(M @ M.T + 30 * np.eye(30), 3), -3))
    f = factor_spd(A)
    b = rng.standard_normal((30, 2))
    L = f.dense_lower()
    assert np.allclose(L @ f.solve_lower(b), b)
    assert np.allclose(L.T @ f.solve_upper(b), b)
    assert np.allclose(A @ f.solve(b), b)


# -- pencil_spectrum ----------------------------------------------------------------

def test_unit_interval_examples():
    prob, _ = pencil(PeriodicWeight.constant(1.0), 1.0)
    s = pencil_spectrum(prob, 2, "+")
    assert s.eigenvalues == pytest.approx([PI2, 4 * PI2], rel=1e-4)
    assert s.complete and np.all(s.ritz_residuals <= 1e-8)
    with pytest.raises(NoNegativeSpectrum):
        pencil_spectrum(prob, 1, "-")


def test_unit_square_examples():
    prob, _ = pencil(PeriodicWeight.constant(1.0, dim=2), 1.0, dim=2, n=65)
    s = pencil_spectrum(prob, 3, "+")
    assert s.eigenvalues == pytest.approx([2 * PI2, 5 * PI2, 5 * PI2], rel=2e-3)


def test_sine_weight_pairing_and_dense_oracle():
    prob, _ = pencil(SIN, 1.0, n=201)
    pos, neg = dense_oracle(prob)
    sp_ = pencil_spectrum(prob, 5, "+")
    sn = pencil_spectrum(prob, 5, "-")
    assert sp_.eigenvalues == pytest.approx(pos[:5], rel=1e-9)
    assert sn.eigenvalues == pytest.approx(neg[:5], rel=1e-9)
    assert sp_.eigenvalues[0] == pytest.approx(-sn.eigenvalues[0], rel=1e-9)


def test_two_dimensional_indefinite_dense_oracle():
    w = PeriodicWeight.sine(0.2, 1.0, dim=2)
    prob, _ = pencil(w, 0.5, dim=2, n=21)
    pos, neg = dense_oracle(prob)
    assert pencil_spectrum(prob, 6, "+").eigenvalues == pytest.approx(pos[:6], rel=1e-9)
    assert pencil_spectrum(prob, 6, "-").eigenvalues == pytest.approx(neg[:6], rel=1e-9)


def test_a_orthonormal_vectors():
    prob, _ = pencil(SIN.shifted(0.3), 0.25)
    s = pencil_spectrum(prob, 5, "+")
    G = s.eigenvectors.T @ (prob.A @ s.eigenvectors)
    assert np.max(np.abs(G - np.eye(5))) <= 1e-8


def test_positive_weight_has_no_negative_spectrum():
    prob, _ = pencil(PeriodicWeight.sine(2.0), 0.125)
    assert prob.inertia()[1] == 0
    with pytest.raises(NoNegativeSpectrum):
        pencil_spectrum(prob, 1, "-")
    with pytest.raises(NoPositiveSpectrum):
        pencil_spectrum(prob.scaled(-1.0), 1, "+")


def test_incomplete_slice_flagged():
    # B has one positive diagonal entry: only one positive eigenvalue exists
    A = sp.diags([np.full(6, 2.0), -np.ones(5), -np.ones(5)], [0, 1, -1])
    B = sp.diags([[1.0, -1, -1, -1, -1, -1]], [0])
    s = pencil_spectrum(PencilProblem(A, B), 3, "+")
    assert s.eigenvalues.size == 1 and not s.complete


def test_mesh_convergence_monotone():
    errs = []
    for n in (33, 65, 129, 257, 513):
        prob, _ = pencil(PeriodicWeight.constant(1.0), 1.0, n=n)
        lam = pencil_spectrum(prob, 1, "+").eigenvalues[0]
        errs.append(abs(lam - PI2) / PI2)
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] <= 1e-3


def test_agreement_with_shooting():
    w = PeriodicWeight.sine(0.3)
    prob, _ = pencil(w, 0.25, n=2001)
    c = CoefficientField.isotropic(2, 1)
    for sign in "+-":
        got = pencil_spectrum(prob, 5, sign).eigenvalues
        for k in range(1, 6):
            ref = eigenvalue_1d(2.0, c, w, 0.25, k, sign, with_function=False).lam
            assert got[k - 1] == pytest.approx(ref, rel=1e-4)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.1, 10.0))
def test_homogeneity(t):
    prob, _ = pencil(SIN, 0.5, n=129)
    a = pencil_spectrum(prob, 3, "+").eigenvalues
    b = pencil_spectrum(prob.scaled(t), 3, "+").eigenvalues
    assert b == pytest.approx(a / t, rel=1e-9)


# -- rayleigh_quotient ----------------------------------------------------------------

def test_rayleigh_examples():
    g = build_grid(1, [0, 1], 5)
    prob = PencilProblem(assemble_stiffness(CoefficientField.isotropic(2, 1), g),
                         assemble_weighted_mass(np.ones(4), g))
    assert rayleigh_quotient(prob, [1.0, 0.0, 0.0]) == pytest.approx(32.0)
    s = pencil_spectrum(prob, 1, "+")
    assert rayleigh_quotient(prob, s.eigenvectors[:, 0]) == pytest.approx(s.eigenvalues[0])
    neg = PencilProblem(prob.A, assemble_weighted_mass(np.array([1.0, 1.0, -1.0, -1.0]), g))
    assert rayleigh_quotient(neg, [0.0, 0.0, 1.0]) < 0
    with pytest.raises(OnNullCone):
        rayleigh_quotient(neg, [0.0, 1.0, 0.0])


def test_spd_probe_and_triplet_cross_run(tmp_path):
    prob, _ = pencil(SIN, 0.5, n=33)
    assert prob.spd_probe()
    write_triplets(tmp_path / "A.txt", prob.A)
    write_triplets(tmp_path / "B.txt", prob.B)
    again = PencilProblem(read_triplets(tmp_path / "A.txt"), read_triplets(tmp_path / "B.txt"))
    assert pencil_spectrum(again, 2, "-").eigenvalues == \
        pytest.approx(pencil_spectrum(prob, 2, "-").eigenvalues, rel=1e-12)
