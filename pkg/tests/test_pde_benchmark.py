import numpy as np
import pytest
from scipy import integrate

from csa_pce.experiments import dictionary
from csa_pce.pde_benchmark import (
    A_BAR,
    CollocationSolver,
    DiffusionModel,
    kl_decompose,
    qoi,
    solve_sample,
    validation_error,
)
from csa_pce.preconditioner import design_matrix
from csa_pce.sampling import draw


def test_constant_coefficient_solution():
    for P in (16, 64, 128):
        s = CollocationSolver(P)
        a = np.exp(A_BAR)
        u = s.solve(np.full(P + 1, a))
        assert np.max(np.abs(u - s.x * (1 - s.x) / (2 * a))) < 1e-10
        assert s.interpolate(u, 0.5) == pytest.approx(np.exp(-0.1) / 8, abs=1e-10)
        assert np.max(np.abs(u - u[::-1])) < 1e-10


def test_sigma_zero_qoi():
    f = kl_decompose(d=2, sigma=0.0)
    assert qoi(f, CollocationSolver(32), np.array([0.3, -2.0])) == pytest.approx(np.exp(-0.1) / 8, abs=1e-10)


def test_kl_eigenpairs():
    f = kl_decompose(0.1, 20)
    g = f.eigenvalues
    assert np.all(g > 0) and np.all(np.diff(g) <= 0)
    assert g[-1] / g[0] < 1
    W = f.quad_weights
    assert np.allclose((f.node_modes * W[:, None]).T @ f.node_modes, np.eye(20), atol=1e-8)
    # Nystrom extension reproduces nodal values.
    assert np.allclose(f.modes(f.quad_nodes), f.node_modes, atol=1e-8)


def test_kl_trace():
    from scipy.linalg import eigvalsh

    K = 256
    t, w = np.polynomial.legendre.leggauss(K)
    x, w = 0.5 * (t + 1), 0.5 * w
    C = np.exp(-((x[:, None] - x[None, :]) ** 2) / 0.01)
    lam = eigvalsh(np.sqrt(w)[:, None] * C * np.sqrt(w)[None, :])
    assert abs(lam.sum() - 1) < 1e-6
    f = kl_decompose(0.1, 20)
    assert np.allclose(f.eigenvalues, np.sort(lam)[::-1][:20], rtol=1e-10)


def test_kl_eigenvalues_stable_under_grid_doubling():
    a = kl_decompose(0.1, 20).eigenvalues
    b = kl_decompose(0.1, 20, grid=512).eigenvalues
    assert np.allclose(a, b, rtol=1e-8)


def test_kl_too_many_modes():
    with pytest.raises(ValueError):
        kl_decompose(0.1, 100)
    with pytest.raises(ValueError):
        kl_decompose(0.1, 300, grid=256)


def test_refinement_and_positivity():
    f = kl_decompose(d=2, sigma=1.0)
    z = np.array([0.7, -1.2])
    ref = DiffusionModel(f, CollocationSolver(256)).qoi(z)
    errs = [abs(DiffusionModel(f, CollocationSolver(P)).qoi(z) - ref) for P in (16, 32, 64, 128)]
    assert errs[2] < 1e-8
    m64 = DiffusionModel(f, CollocationSolver(64)).qoi(z)
    m128 = DiffusionModel(f, CollocationSolver(128)).qoi(z)
    assert abs(m64 - m128) < 1e-8
    assert errs[0] > errs[1] > min(errs[2], errs[3])
    u = solve_sample(f, CollocationSolver(64), z)
    assert np.all(u[1:-1] > 0)


def quadrature_qoi(field, z):
    """u(1/2) from the closed form u(x) = int_0^x (C - t)/a(t) dt, C = int t/a / int 1/a."""
    a = lambda t: np.exp(field.log_diffusivity(np.array([t]), z)[0])
    kw = dict(epsabs=1e-17, epsrel=1e-13, limit=200)
    C = integrate.quad(lambda t: t / a(t), 0, 1, **kw)[0] / integrate.quad(lambda t: 1 / a(t), 0, 1, **kw)[0]
    return integrate.quad(lambda t: (C - t) / a(t), 0, 0.5, **kw)[0]


def test_collocation_matches_quadrature_oracle():
    f = kl_decompose(d=2, sigma=1.0)
    rng = np.random.default_rng(6)
    for z in rng.uniform(-1, 1, (4, 2)):
        q = quadrature_qoi(f, z)
        assert DiffusionModel(f, CollocationSolver(128)).qoi(z) == pytest.approx(q, abs=1e-15)
        # without refinement the double-precision LU alone loses ~2 digits at P = 128
        assert DiffusionModel(f, CollocationSolver(128, refine=0)).qoi(z) == pytest.approx(q, abs=1e-12)


def test_nonfinite_diffusivity_raises():
    f = kl_decompose(d=2, sigma=1.0)
    with pytest.raises(FloatingPointError):
        solve_sample(f, CollocationSolver(16), np.array([1e6, 0.0]))
    with pytest.raises(ValueError):
        solve_sample(f, CollocationSolver(16), np.array([1.0, 0.0, 0.0]))


def test_validation_error_properties():
    families, iset = dictionary({"kind": "legendre"}, 2, 3)
    poly = np.zeros(iset.N)
    poly[[0, 4, 7]] = [1.0, 0.5, -0.25]

    def truth(Z):
        return design_matrix(families, iset, Z).entries @ poly

    assert validation_error(poly, families, iset, truth, Q=2000, seed=1) < 1e-10
    zero = validation_error(np.zeros(iset.N), families, iset, truth, Q=2000, seed=1)
    assert zero > 0


def test_validation_error_q_doubling():
    model = DiffusionModel(kl_decompose(d=2, sigma=1.0), CollocationSolver(48))
    families, iset = dictionary({"kind": "legendre"}, 2, 2)
    coef = np.zeros(iset.N)
    coef[0] = 0.11
    e1 = validation_error(coef, families, iset, model.qoi_batch, Q=2000, seed=3)
    e2 = validation_error(coef, families, iset, model.qoi_batch, Q=4000, seed=4)
    # standard error of an RMS estimate, from the squared errors
    from csa_pce.sampling import sample_mc

    Z = sample_mc(list(families), 2, 4000, 4).points
    sq = (model.qoi_batch(Z) - 0.11) ** 2
    se = sq.std() / np.sqrt(2000) / (2 * e1)
    assert abs(e1 - e2) < 3 * se * np.sqrt(1.5)
