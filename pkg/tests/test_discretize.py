import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from homog_eig.discretize import (CoefficientField, DiscreteFunction, assemble_stiffness,
                                  assemble_weighted_mass, build_grid, is_symmetric,
                                  lumped_node_weights, phi_energy, project_weight,
                                  read_triplets, weighted_p_mass, write_triplets)
from homog_eig.errors import DimensionMismatch, UnresolvedWeight
from homog_eig.weights import PeriodicWeight, TrigTerm

SIN = PeriodicWeight.sine()
STEP = PeriodicWeight.piecewise([1.0, -1.0])


def tent(x):
    """min(x, 1 - x): unit slope everywhere and zero trace on (0, 1)."""
    return np.minimum(x, 1.0 - x)


# -- grids ---------------------------------------------------------------------------

def test_build_grid_examples():
    g = build_grid(1, [0, 1], 5)
    assert g.h == (0.25,) and g.n_interior == 3
    assert build_grid(2, [0, 1], 5).n_interior == 9
    g = build_grid(1, [0, 0.5], 3)
    assert g.h == (0.25,) and g.n_interior == 1


def test_build_grid_errors():
    with pytest.raises(ValueError):
        build_grid(1, [1, 1], 5)
    with pytest.raises(ValueError):
        build_grid(1, [0, 1], 2)
    with pytest.raises(DimensionMismatch):
        build_grid(2, [[0, 1], [0, 1], [0, 1]], 5)


def test_interior_index_is_bijection():
    g = build_grid(2, [[0, 1], [0, 2]], (5, 7))
    idx = g.interior_index()
    inner = idx[idx >= 0]
    assert sorted(inner) == list(range(g.n_interior))
    assert np.all(idx[0, :] == -1) and np.all(idx[:, -1] == -1)


def test_discrete_function_length_and_trace():
    g = build_grid(1, [0, 1], 5)
    with pytest.raises(DimensionMismatch):
        DiscreteFunction(g, [1.0, 2.0])
    v = DiscreteFunction(g, [1.0, 2.0, 3.0])
    assert v.full()[0] == v.full()[-1] == 0.0
    assert v(0.125) == pytest.approx(0.5)
    assert len(v.to_text().splitlines()) == 5


# -- weight projection ----------------------------------------------------------------

def test_project_weight_examples():
    g = build_grid(1, [0, 1], 3)
    assert np.all(project_weight(PeriodicWeight.constant(0.7), 0.3, g) == pytest.approx(0.7))
    # average of sin(2 pi y) over [0, 1/2]: (1/pi) / (1/2) = 2/pi
    assert project_weight(SIN, 1.0, g)[0] == pytest.approx(2 / math.pi, abs=1e-15)
    g4 = build_grid(1, [0, 1], 5)
    assert project_weight(STEP, 0.25, g4)[0] == pytest.approx(0.0, abs=1e-15)


def test_project_weight_piecewise_cell_oracle():
    # cells [j h, (j+1) h] with h = 1/8 and eps = 1/2: the step flips every 1/4
    g = build_grid(1, [0, 1], 9)
    got = project_weight(STEP, 0.5, g)
    assert np.array_equal(got, [1, 1, -1, -1, 1, 1, -1, -1])


def test_project_weight_quadrature_mode_and_budget():
    g = build_grid(2, [0, 1], 9)
    w = PeriodicWeight.trig(0.3, [TrigTerm(1.0, (1, 2), "sin")], 2)
    exact = project_weight(w, 0.25, g)
    quad = project_weight(w, 0.25, g, method="quadrature", points_per_period=64)
    assert np.max(np.abs(exact - quad)) < 1e-4
    with pytest.raises(UnresolvedWeight):
        project_weight(w, 1e-6, g, method="quadrature", budget=1024)
    with pytest.raises(ValueError):
        project_weight(w, 0.0, g)


# -- energies -----------------------------------------------------------------------

def test_phi_energy_examples():
    g = build_grid(1, [0, 1], 33)
    v = g.interpolate(tent)
    assert phi_energy(CoefficientField.isotropic(2, 1), v) == pytest.approx(1.0, abs=1e-14)
    assert phi_energy(CoefficientField.isotropic(3, 1), v) == pytest.approx(1.0, abs=1e-14)
    assert phi_energy(CoefficientField.isotropic(2, 1, 2.0), v) == pytest.approx(2.0, abs=1e-14)


def test_phi_energy_zero_iff_zero():
    g = build_grid(2, [0, 1], 6)
    c = CoefficientField.isotropic(2.5, 2)
    assert phi_energy(c, DiscreteFunction(g, np.zeros(g.n_interior))) == 0.0
    e = np.zeros(g.n_interior)
    e[5] = 1e-3
    assert phi_energy(c, DiscreteFunction(g, e)) > 0


def test_phi_energy_convergence_order():
    c = CoefficientField.isotropic(2, 1)
    hs, errs = [], []
    for n in (17, 33, 65, 129, 257):
        g = build_grid(1, [0, 1], n)
        v = g.interpolate(lambda x: np.sin(np.pi * x))
        errs.append(abs(phi_energy(c, v) - math.pi ** 2 / 2))
        hs.append(g.h[0])
    order = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert order >= 1.9


def test_weighted_p_mass_examples():
    g = build_grid(1, [0, 1], 3)
    v = DiscreteFunction(g, [1.0])
    for p in (2.0, 3.0, 1.5):
        assert weighted_p_mass(np.ones(2), v, p) == pytest.approx(2 * 0.5 ** p * 0.5)
    gg = build_grid(1, [0, 1], 17)
    u = gg.interpolate(np.sin)
    assert weighted_p_mass(np.zeros(16), u, 2.5) == 0.0
    m = weighted_p_mass(np.ones(16), u, 2.5)
    assert weighted_p_mass(-np.ones(16), u, 2.5) == -m
    with pytest.raises(DimensionMismatch):
        weighted_p_mass(np.ones(3), u, 2.0)


def test_mass_form_consistency():
    # lumped p=2 mass and the midpoint rule differ by a first-order mesh error
    errs = []
    for n in (33, 65, 129, 257):
        g = build_grid(1, [0, 1], n)
        v = g.interpolate(lambda x: np.sin(np.pi * x))
        rho = project_weight(PeriodicWeight.sine(1.5), 0.5, g)
        M = assemble_weighted_mass(rho, g)
        errs.append(abs(weighted_p_mass(rho, v, 2.0) - v.values @ M @ v.values))
        assert weighted_p_mass(rho, v, 2.0, "lumped") == pytest.approx(v.values @ M @ v.values,
                                                                        rel=1e-13)
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-3


# -- assembly -----------------------------------------------------------------------

def test_stiffness_examples():
    g = build_grid(1, [0, 1], 5)
    K = assemble_stiffness(CoefficientField.isotropic(2, 1), g).toarray()
    assert np.allclose(np.diag(K), 8) and np.allclose(np.diag(K, 1), -4)
    K2 = assemble_stiffness(CoefficientField.isotropic(2, 1, 2.0), g).toarray()
    assert np.allclose(np.diag(K2), 16) and np.allclose(np.diag(K2, 1), -8)
    # 3x3-node grid, h = 1/2, one unknown: 5-point stencil 4/h^2 times cell area h^2
    K3 = assemble_stiffness(CoefficientField.isotropic(2, 2), build_grid(2, [0, 1], 3)).toarray()
    assert K3.shape == (1, 1) and K3[0, 0] == pytest.approx(4.0)


def test_stiffness_is_five_point_stencil():
    n = 7
    g = build_grid(2, [0, 1], n)
    K = assemble_stiffness(CoefficientField.isotropic(2, 2), g).toarray()
    m = n - 2
    T = 2 * np.eye(m) - np.eye(m, k=1) - np.eye(m, k=-1)
    ref = np.kron(T, np.eye(m)) + np.kron(np.eye(m), T)  # h^2 * (1/h^2) cancel
    assert np.allclose(K, ref)


def test_stiffness_requires_p2():
    with pytest.raises(ValueError):
        assemble_stiffness(CoefficientField.isotropic(3, 1), build_grid(1, [0, 1], 5))


def test_stiffness_spd_random():
    rng = np.random.default_rng(0)
    A = PeriodicWeight.sine(2.0, 0.5, dim=2)
    c = CoefficientField(2.0, 2, ((A, 0.3), (0.3, 1.0)))
    g = build_grid(2, [0, 1], 12)
    K = assemble_stiffness(c, g)
    assert is_symmetric(K, 1e-13)
    V = rng.standard_normal((g.n_interior, 50))
    assert np.all(np.einsum("ij,ij->j", V, K @ V) > 0)


def test_mass_examples():
    g = build_grid(1, [0, 1], 5)
    M = assemble_weighted_mass(np.ones(4), g).toarray()
    assert np.allclose(M, 0.25 * np.eye(3))
    assert np.allclose(assemble_weighted_mass(-np.ones(4), g).toarray(), -M)
    field = np.array([1.0, 1.0, -1.0, -1.0])
    assert np.allclose(assemble_weighted_mass(field, g).diagonal(), [0.25, 0.0, -0.25])


def test_lumped_weights_2d_sum_to_integral():
    g = build_grid(2, [0, 1], 9)
    ones = lumped_node_weights(np.ones(g.cell_shape), g)
    # every interior node collects a quarter of four cells of area h^2
    assert np.allclose(ones, g.h[0] * g.h[1])
    rng = np.random.default_rng(1)
    w = rng.standard_normal(g.cell_shape)
    # interior weights plus the boundary shares reproduce the cell integral
    nodes = np.zeros((9, 9))
    for i in range(8):
        for j in range(8):
            nodes[i:i + 2, j:j + 2] += w[i, j] * g.h[0] * g.h[1] / 4
    assert np.allclose(lumped_node_weights(w, g).ravel(), nodes[1:-1, 1:-1].ravel())


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([1, 2]))
def test_energy_matches_stiffness_form(seed, dim):
    rng = np.random.default_rng(seed)
    if dim == 1:
        c = CoefficientField(2.0, 1, ((PeriodicWeight.sine(2.0, 0.7),),))
        g = build_grid(1, [0, 1], 40)
    else:
        a11, a22 = rng.uniform(1, 3, 2)
        a12 = rng.uniform(-0.5, 0.5)
        c = CoefficientField.constant(2, [[a11, a12], [a12, a22]])
        g = build_grid(2, [[0, 1], [0, 2]], (8, 11))
    K = assemble_stiffness(c, g)
    v = rng.standard_normal(g.n_interior)
    assert phi_energy(c, DiscreteFunction(g, v)) == pytest.approx(v @ K @ v, rel=1e-10)


def test_triplets_round_trip(tmp_path):
    g = build_grid(2, [0, 1], 6)
    K = assemble_stiffness(CoefficientField.isotropic(2, 2), g)
    path = tmp_path / "k.txt"
    write_triplets(path, K)
    back = read_triplets(path)
    assert back.shape == K.shape and abs(back - K).max() == 0.0


# -- structure conditions on the model operator ----------------------------------------

def _field(p):
    A = PeriodicWeight.sine(2.0, 0.5, dim=2)
    return CoefficientField(p, 2, ((A, 0.4), (0.4, 1.5)))


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_monotonicity_homogeneity_oddness(p):
    c = _field(p)
    rng = np.random.default_rng(5)
    x = rng.random((1000, 2))
    x1, x2 = rng.standard_normal((2, 1000, 2))
    assert np.all(np.einsum("ij,ij->i", c.a(x, x1) - c.a(x, x2), x1 - x2) >= -1e-12)
    t = rng.uniform(0.1, 5, (1000, 1))
    assert np.allclose(c.a(x, t * x1), t ** (p - 1) * c.a(x, x1), rtol=1e-12)
    assert np.allclose(c.a(x, -x1), -c.a(x, x1))


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_potential_gradient_and_bounds(p):
    c = _field(p)
    rng = np.random.default_rng(6)
    x = rng.random((200, 2))
    xi = rng.standard_normal((200, 2))
    h = 1e-6
    fd = np.stack([(c.phi(x, xi + h * e) - c.phi(x, xi - h * e)) / (2 * h) for e in np.eye(2)],
                  axis=-1)
    exact = c.potential.grad(x, xi)
    assert np.allclose(fd, exact, rtol=1e-6, atol=1e-9)
    lo, hi = c.potential.bounds()
    nrm = np.linalg.norm(xi, axis=1) ** p
    ph = c.phi(x, xi)
    assert np.all(lo * nrm <= ph * (1 + 1e-9)) and np.all(ph <= hi * nrm * (1 + 1e-9))
    assert np.all(c.phi(x, np.zeros_like(xi)) == 0)


def test_coefficient_validation():
    with pytest.raises(ValueError):
        CoefficientField.isotropic(1.0, 1)
    with pytest.raises(ValueError):
        CoefficientField.constant(2, [[1.0, 0.2], [0.3, 1.0]])
    with pytest.raises(ValueError):
        CoefficientField.constant(2, [[-1.0]]).ellipticity()
    c = CoefficientField.constant(2, [[2.0, 0.0], [0.0, 0.5]])
    assert c.ellipticity() == pytest.approx((0.5, 2.0))
    back = CoefficientField.from_dict(_field(2.0).to_dict())
    x = np.random.default_rng(0).random((10, 2))
    assert np.allclose(back.matrix_at(x), _field(2.0).matrix_at(x))
