import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csa_pce.index_sets import MultiIndexSet, total_degree
from csa_pce.orthopoly import hermite, laguerre, legendre
from csa_pce.preconditioner import (
    WeightVector,
    assemble_system,
    asymptotic_weights,
    christoffel_lambda,
    csa_weights,
    log_christoffel_lambda,
    design_matrix,
    manufactured_system,
    mc_weights,
)
from csa_pce.sampling import draw

UNI01 = MultiIndexSet(np.array([[0], [1]]))


def test_christoffel_examples():
    assert christoffel_lambda(legendre(), MultiIndexSet(np.array([[0]])), [0.3]) == 1.0
    assert christoffel_lambda(legendre(), UNI01, [0.0]) == pytest.approx(1.0)
    assert christoffel_lambda(legendre(), UNI01, [1.0]) == pytest.approx(0.25)


def test_csa_weight_examples():
    d = design_matrix(legendre(), UNI01, np.array([[1.0]]))
    assert csa_weights(d).w[0] == pytest.approx(0.5)
    d0 = design_matrix(legendre(), MultiIndexSet(np.array([[0]])), np.array([[0.1], [0.9]]))
    assert np.allclose(csa_weights(d0).w, 1.0)


@pytest.mark.parametrize("fam,d,n", [(legendre(), 2, 30), (hermite(), 2, 30), (laguerre(), 3, 8), (hermite(), 1, 400)])
def test_row_norm_identity(fam, d, n):
    iset = total_degree(d, n)
    pts = draw("CSA", [fam] * d, n, 40, 3).points
    design = design_matrix([fam] * d, iset, pts)
    A, _ = assemble_system(design, csa_weights(design), np.zeros(40))
    assert np.allclose(np.linalg.norm(A, axis=1), np.sqrt(iset.N), rtol=1e-12, atol=0)


def test_lambda_finite_far_out_and_bounded():
    iset = total_degree(1, 400)
    lam = christoffel_lambda(hermite(), iset, np.array([[25.0], [0.0], [-20.0]]))
    assert np.all(lam > 0) and np.all(lam <= 1)
    # At z = -28 lambda is below the double range, but its log is finite.
    loglam = log_christoffel_lambda(hermite(), iset, np.array([[-28.0]]))
    assert np.isfinite(loglam[0]) and loglam[0] < np.log(np.finfo(float).tiny)


@settings(max_examples=40, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.integers(0, 8))
def test_lambda_monotone_in_dictionary(x, y, n):
    z = np.array([x, y])
    small = christoffel_lambda(legendre(), total_degree(2, n), z)
    big = christoffel_lambda(legendre(), total_degree(2, n + 1), z)
    assert 0 < big <= small * (1 + 1e-14) <= 1 + 1e-14


def test_asymptotic_weights():
    w = asymptotic_weights("AsymptoticBounded", [legendre()] * 3, np.zeros((1, 3)))
    assert w.w[0] == pytest.approx(0.125)
    g = asymptotic_weights("AsymptoticGaussian", [hermite()] * 2, np.array([[0.0, 0.0], [1.0, 1.0]]))
    assert np.allclose(g.w, [1.0, np.exp(-1.0)])
    with pytest.raises(ValueError):
        asymptotic_weights("AsymptoticGaussian", [legendre()], np.zeros((1, 1)))
    with pytest.raises(ValueError):
        asymptotic_weights("AsymptoticBounded", [hermite()], np.zeros((1, 1)))


def test_assemble_examples():
    rng = np.random.default_rng(0)
    iset = total_degree(2, 2)
    pts = rng.uniform(-1, 1, (5, 2))
    design = design_matrix(legendre(), iset, pts)
    f = rng.standard_normal(5)
    A, b = assemble_system(design, mc_weights(design), f)
    assert np.array_equal(A, design.entries) or np.allclose(A, design.entries, rtol=1e-15)
    lw = rng.normal(size=5)
    A, b = assemble_system(design, WeightVector(lw, "test"), f)
    D = np.diag(np.sqrt(np.exp(lw)))
    assert np.allclose(A, D @ design.entries, rtol=1e-14, atol=1e-15)
    assert np.allclose(b, D @ f, rtol=1e-14)
    one = design_matrix(legendre(), iset, pts[:1])
    A1, _ = assemble_system(one, WeightVector(np.log([4.0]), "x"), np.zeros(1))
    assert np.allclose(A1, 2 * one.entries)
    with pytest.raises(ValueError):
        assemble_system(design, mc_weights(4), f)


def test_manufactured_system_scale_free():
    iset = total_degree(1, 300)
    pts = draw("CSA", [hermite()], 300, 30, 1).points
    design = design_matrix([hermite()], iset, pts)
    coef = np.zeros(iset.N)
    coef[[2, 250]] = [1.0, -2.0]
    A, b = manufactured_system(design, csa_weights(design), coef)
    assert np.all(np.isfinite(A)) and np.all(np.isfinite(b))
