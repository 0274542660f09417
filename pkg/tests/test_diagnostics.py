import numpy as np
import pytest
from scipy import integrate, special

from csa_pce.diagnostics import (
    QuadratureError,
    _weighted_rows,
    coherence_scan,
    coherence_value,
    gramian,
    sample_count_bound,
    sampling_domain,
)
from csa_pce.orthopoly import eval_basis, hermite, jacobi, laguerre, legendre
from csa_pce.sampling import half_equilibrium_density, whole_equilibrium_density

FAMILIES = [legendre(), jacobi(1, 1), jacobi(2, 5), hermite(), laguerre()]
IDS = ["legendre", "jacobi11", "jacobi25", "hermite", "laguerre"]


@pytest.mark.parametrize("n", [1, 2, 7, 15, 30])
def test_legendre_identity(n):
    rep = gramian(legendre(), n)
    assert np.max(np.abs(rep.R - np.eye(n + 1))) < 1e-10
    assert rep.norm1_inv_sqrt == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("fam", FAMILIES, ids=IDS)
def test_degree_zero(fam):
    assert gramian(fam, 0).R == pytest.approx(np.ones((1, 1)), abs=1e-14)


def v_n(fam, n, z):
    if fam.kind == "jacobi":
        return 1 / (np.pi * np.sqrt(1 - z * z))
    if fam.kind == "hermite":
        return whole_equilibrium_density(z, 2.0, n)
    return half_equilibrium_density(z, 1.0, n)


@pytest.mark.parametrize("fam", [jacobi(2, 5), hermite(), laguerre()], ids=["jacobi25", "hermite", "laguerre"])
def test_entries_against_adaptive_quadrature(fam):
    n = 6
    rep = gramian(fam, n)
    lo, hi = sampling_domain(fam, n)
    for k, l in [(0, 0), (2, 5), (6, 6), (1, 4)]:
        f = lambda z: (_weighted_rows(fam, n, np.array([z]))[0, k] * _weighted_rows(fam, n, np.array([z]))[0, l]
                       * v_n(fam, n, z))
        # Substitution removes the endpoint singularities of v_n.
        if fam.kind == "jacobi":
            val = integrate.quad(lambda t: f(np.cos(t)) * np.sin(t), 0, np.pi, epsabs=1e-13, limit=200)[0]
        elif fam.kind == "laguerre":
            val = integrate.quad(lambda s: f(hi * s * s) * 2 * hi * s, 0, 1, epsabs=1e-13, limit=200)[0]
        else:
            val = integrate.quad(f, lo, hi, epsabs=1e-13, limit=200)[0]
        assert rep.R[k, l] == pytest.approx(val, abs=1e-9)


def test_hermite_baseline_and_consistency():
    rep = gramian(hermite(), 20)
    assert 0 < rep.lambda_min < 1.5
    assert np.isfinite(rep.norm1_inv_sqrt)
    S, Si = rep.sqrt(), rep.inv_sqrt()
    assert np.allclose(S @ S, rep.R, atol=1e-10)
    assert np.allclose(Si @ rep.R @ Si, np.eye(21), atol=1e-9)
    two = np.linalg.norm(Si, 2)
    assert rep.norm1_inv_sqrt >= two - 1e-12 >= rep.lambda_min ** -0.5 - 2e-12
    # regression baselines recorded from this implementation
    assert rep.norm1_inv_sqrt == pytest.approx(1.128656, abs=1e-6)
    assert np.allclose(rep.R, rep.R.T)
    assert np.all(np.linalg.eigvalsh(rep.R) > 0)


def test_quadrature_cap_error():
    with pytest.raises(QuadratureError):
        gramian(hermite(), 40, max_nodes=64)


def test_json():
    import json

    d = json.loads(gramian(laguerre(), 3).to_json())
    assert len(d["R"]) == 4 and d["converged"]


def test_legendre_coherence_endpoint_value():
    # At z = 1, phi_k(1)^2 = 2k + 1 and the k = n term gives (2n + 1)/(n + 1).
    for n in (5, 20):
        L = coherence_value(legendre(), n)
        assert L >= (2 * n + 1) / (n + 1) - 1e-12
        assert L < 2.5


def test_jacobi_coherence_at_left_endpoint():
    fam = jacobi(2, 5)
    n = 30
    v = eval_basis(fam, n, -1.0).unscaled()
    at_end = (n + 1) * np.max(v**2) / np.sum(v**2)
    assert coherence_value(fam, n) >= at_end * (1 - 1e-12)


@pytest.mark.parametrize("fam", [hermite(), laguerre(), jacobi(2, 5)], ids=["hermite", "laguerre", "jacobi25"])
def test_coherence_grid_stability(fam):
    n = 40
    a = coherence_value(fam, n, 50)
    b = coherence_value(fam, n, 100)
    assert abs(a - b) / b < 5e-3
    assert a > 0


def test_coarse_grid_rejected():
    with pytest.raises(ValueError):
        coherence_value(hermite(), 10, points_per_degree=5)


def test_scan_fits_slope():
    rep = coherence_scan(legendre(), [10, 20, 40])
    assert abs(rep.fitted_exponent) < 0.1
    assert rep.degrees == [10, 20, 40] and len(rep.L_values) == 3


def test_sample_count_bound():
    assert sample_count_bound(1.0, 1.0, 1, 2) == 1
    assert sample_count_bound(1.0, 2.0, 5, 31) == int(np.ceil(2 * 5 * np.log(5) ** 3 * np.log(31)))
    g = gramian(hermite(), 20)
    assert sample_count_bound(g.norm1_inv_sqrt, 10.0, 5, 21) >= sample_count_bound(1.0, 10.0, 5, 21)
    with pytest.raises(ValueError):
        sample_count_bound(0.0, 1.0, 1, 2)
