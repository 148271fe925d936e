import numpy as np
import pytest

from framedil.algmaps import (FiniteAlgebra, LinearMapOnAlgebra, amplification_norm,
                              build_algebraic_dilation, cb_profile, dilation_operator_norms, identity_map,
                              transpose_map)
from framedil.errors import MalformedAlgebraError, MalformedInputError, ResourceError

from conftest import cgauss


def unit(k, i, j):
    e = np.zeros((k, k))
    e[i, j] = 1
    return e


def random_map(alg, v, rng):
    return LinearMapOnAlgebra(alg, v, cgauss(rng, alg.dim, v, v))


def test_algebra_constructors():
    assert FiniteAlgebra.diagonal(4).dim == 4
    assert FiniteAlgebra.upper_triangular(3).dim == 6
    m3 = FiniteAlgebra.full_matrix(3)
    assert m3.dim == 9
    assert np.abs(m3.element(m3.identity_coords) - np.eye(3)).max() == 0
    # mult table entries are exact integers for matrix units
    assert np.all(m3.mult_table == np.round(m3.mult_table.real))


def test_algebra_validation():
    with pytest.raises(MalformedAlgebraError, match="not closed"):
        FiniteAlgebra(2, [np.eye(2), unit(2, 0, 1), unit(2, 1, 0)])
    with pytest.raises(MalformedAlgebraError, match="identity"):
        FiniteAlgebra(2, [unit(2, 0, 0)])
    with pytest.raises(MalformedAlgebraError, match="dependent"):
        FiniteAlgebra(2, [np.eye(2), 2 * np.eye(2)])
    with pytest.raises(MalformedInputError):
        FiniteAlgebra(2, np.eye(3)[None])
    # a non-standard basis of the 2x2 circulants still works
    circ = FiniteAlgebra(2, [np.eye(2) + np.array([[0, 1], [1, 0]]), np.eye(2)])
    assert np.abs(circ.element(circ.identity_coords) - np.eye(2)).max() < 1e-14


def test_transpose_map_small():
    t1 = transpose_map(1)
    assert t1.values.shape == (1, 1, 1) and t1.values[0, 0, 0] == 1
    t2 = transpose_map(2)
    a = np.array([[1, 2], [3, 4]])
    assert np.abs(t2(a) - a.T).max() == 0
    assert np.abs(t2(unit(2, 0, 1)) - unit(2, 1, 0)).max() == 0


def test_dilation_identity_of_diagonal_algebra():
    phi = identity_map(FiniteAlgebra.diagonal(2))
    dil = build_algebraic_dilation(phi)
    res = dil.residuals(phi)
    assert res["factorization"] < 1e-12 and res["homomorphism"] == 0 and res["unital"] == 0
    # pi is faithful: distinct basis elements act differently
    assert np.abs(dil.pi[0] - dil.pi[1]).max() > 0.5


def test_dilation_zero_map():
    alg = FiniteAlgebra.full_matrix(2)
    phi = LinearMapOnAlgebra(alg, 3, np.zeros((4, 3, 3)))
    dil = build_algebraic_dilation(phi)
    assert dil.W_dim == 0
    assert dil.residuals(phi)["factorization"] == 0
    n = dilation_operator_norms(dil, phi)
    assert n.S_norm == 0 and n.T_norm == 0


def test_dilation_transpose_m2(rng):
    phi = transpose_map(2)
    dil = build_algebraic_dilation(phi)
    res = dil.residuals(phi)
    assert res["factorization"] <= 1e-12 and res["homomorphism"] <= 1e-10 and res["unital"] == 0
    # factorization extends linearly to arbitrary elements
    a = cgauss(rng, 2, 2)
    coords = phi.algebra.coords(a)
    assert np.abs(dil.S @ dil.pi_of(coords) @ dil.T - a.T).max() < 1e-12


@pytest.mark.parametrize("alg", [FiniteAlgebra.diagonal(3), FiniteAlgebra.upper_triangular(2),
                                 FiniteAlgebra.full_matrix(2)], ids=["D3", "T2", "M2"])
def test_dilation_random_maps(alg, rng):
    for v in (1, 2, 3):
        phi = random_map(alg, v, rng)
        dil = build_algebraic_dilation(phi)
        res = dil.residuals(phi)
        assert res["factorization"] <= 1e-12 and res["homomorphism"] <= 1e-10 and res["unital"] == 0
        # S T x = phi(1) x
        phi_one = phi(np.eye(alg.ambient))
        assert np.abs(dil.S @ dil.T - phi_one).max() < 1e-12
        assert dil.W_dim <= alg.dim * v


def test_identity_amplification():
    for k in (1, 2, 3):
        for n in (1, 2):
            est = amplification_norm(identity_map(FiniteAlgebra.full_matrix(k)), n)
            assert 1 - 1e-6 <= est <= 1


def test_transpose_level_two():
    assert amplification_norm(transpose_map(4), 2) >= 1.9


def dense_norm_diagonal(phi, grid=721):
    """max ||phi(diag(e^{i s}, e^{i t}))|| over a grid; unitaries are the extreme points of the ball."""
    th = np.linspace(0, 2 * np.pi, grid)
    s, t = np.meshgrid(th, th, indexing="ij")
    vals = np.exp(1j * s)[..., None, None] * phi.values[0] + np.exp(1j * t)[..., None, None] * phi.values[1]
    return np.linalg.svd(vals.reshape(-1, *phi.values.shape[1:]), compute_uv=False)[:, 0].max()


def test_level_one_against_dense_search(rng):
    for _ in range(3):
        phi = random_map(FiniteAlgebra.diagonal(2), 2, rng)
        est = amplification_norm(phi, 1)
        assert abs(est - dense_norm_diagonal(phi)) < 1e-4


def test_level_one_transpose_is_one():
    for k in (1, 2, 3, 5):
        assert abs(amplification_norm(transpose_map(k), 1) - 1) < 1e-6


def test_profiles():
    prof = cb_profile(identity_map(FiniteAlgebra.full_matrix(2)), 3)
    assert np.all(np.abs(np.array(prof.lower_bounds) - 1) < 1e-6)
    # positive Schur multiplier on a commutative algebra: flat at the largest weight
    w = np.array([0.3, 1.7, 0.9])
    alg = FiniteAlgebra.diagonal(3)
    phi = LinearMapOnAlgebra(alg, 3, alg.basis * w[:, None, None])
    prof = cb_profile(phi, 3)
    assert np.all(np.abs(np.array(prof.lower_bounds) - w.max()) < 1e-6)
    assert np.all(np.diff(prof.lower_bounds) >= 0)
    assert prof.to_csv().splitlines()[0] == "level,lower_bound"


def test_amplification_caps():
    with pytest.raises(ResourceError):
        amplification_norm(transpose_map(4), 17)
    with pytest.raises(ResourceError):
        cb_profile(transpose_map(8), 9)
    with pytest.raises(MalformedInputError):
        amplification_norm(transpose_map(2), 0)


def test_operator_norms_diagonal_identity():
    phi = identity_map(FiniteAlgebra.diagonal(2))
    n = dilation_operator_norms(build_algebraic_dilation(phi), phi)
    assert n.pi_ratio <= 1 + 1e-10
    assert abs(n.T_norm - 1) < 1e-6
    assert n.S_norm <= 1 + 1e-10


def test_operator_norms_transpose():
    phi = transpose_map(2)
    n = dilation_operator_norms(build_algebraic_dilation(phi), phi)
    assert all(np.isfinite([n.S_norm, n.T_norm, n.pi_ratio]))
    assert abs(n.T_norm - 1) < 1e-6
