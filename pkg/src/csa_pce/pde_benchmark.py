"""1-D stochastic diffusion benchmark.

    -(a(x, z) u'(x, z))' = 1 on (0, 1),  u(0) = u(1) = 0,
    log a(x, z) = a_bar + sigma_a * sum_k sqrt(gamma_k) phi_k(x) z_k,

with (gamma_k, phi_k) the leading eigenpairs of exp(-(x1 - x2)^2 / l_c^2)
and quantity of interest q(z) = u(1/2, z).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh, lu_factor, lu_solve

from .orthopoly import tensor_eval
from .sampling import sample_mc

# Benchmark constants: mean, correlation length, amplitude per truncation dimension, grid size.
A_BAR = 0.1
CORRELATION_LENGTH = 0.1
SIGMA_BY_DIM = {2: 1.0, 20: 0.017}
DEFAULT_P = 128


_PI = np.longdouble("3.14159265358979323846264338327950288")


def _cheb_lobatto_ext(P: int) -> tuple[np.ndarray, np.ndarray]:
    """Grid and differentiation matrix in extended precision.

    Node differences use t_i - t_j = 2 sin((i+j)pi/2P) sin((j-i)pi/2P) to avoid
    cancellation; the diagonal is the negative row sum.
    """
    if P < 2:
        raise ValueError("need P >= 2")
    j = np.arange(P + 1, dtype=np.longdouble)
    c = (np.where((j == 0) | (j == P), 2.0, 1.0) * (-1.0) ** np.arange(P + 1)).astype(np.longdouble)
    T = 2 * np.sin(_PI * (j[:, None] + j[None, :]) / (2 * P)) * np.sin(_PI * (j[None, :] - j[:, None]) / (2 * P))
    D = np.outer(c, 1 / c) / (T + np.eye(P + 1, dtype=np.longdouble))
    D -= np.diag(D.sum(axis=1))
    # x = (1 - t)/2 = sin^2(pi j / 2P) is ascending and d/dx = -2 d/dt.
    x = np.sin(_PI * j / (2 * P)) ** 2
    return x, -2 * D


def cheb_lobatto(P: int) -> tuple[np.ndarray, np.ndarray]:
    """Chebyshev-Gauss-Lobatto points on [0, 1] (ascending) and the differentiation matrix."""
    x, D = _cheb_lobatto_ext(P)
    return x.astype(float), D.astype(float)


@dataclass(frozen=True)
class CollocationSolver:
    """Collocation for -(a u')' = 1, u(0) = u(1) = 0.

    The double-precision LU is polished by ``refine`` steps of iterative
    refinement with residuals formed in extended precision, which keeps the
    rounding error near one ulp of u at P = 128 instead of ~1e-14.
    """

    P: int = DEFAULT_P
    refine: int = 2
    x: np.ndarray = field(init=False, repr=False)
    D: np.ndarray = field(init=False, repr=False)
    D_ext: np.ndarray = field(init=False, repr=False)
    bary_w: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x_ext, D_ext = _cheb_lobatto_ext(self.P)
        x, D = x_ext.astype(float), D_ext.astype(float)
        object.__setattr__(self, "D_ext", D_ext)
        j = np.arange(self.P + 1)
        w = (-1.0) ** j * np.where((j == 0) | (j == self.P), 0.5, 1.0)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "bary_w", w)

    def solve(self, a: np.ndarray) -> np.ndarray:
        """Solve -(a u')' = 1 with homogeneous Dirichlet data; ``a`` on the grid."""
        a = np.asarray(a, dtype=float)
        if not np.all(np.isfinite(a)) or np.any(a <= 0):
            raise FloatingPointError("diffusivity is not finite and positive on the grid")
        K = -self.D @ (a[:, None] * self.D)
        rhs = np.ones(self.P + 1)
        K[0, :] = 0.0
        K[0, 0] = 1.0
        K[-1, :] = 0.0
        K[-1, -1] = 1.0
        rhs[0] = rhs[-1] = 0.0
        lu = lu_factor(K)
        u = lu_solve(lu, rhs)
        if self.refine:
            a_ext = a.astype(np.longdouble)
            u_ext = u.astype(np.longdouble)
            for _ in range(self.refine):
                r = rhs + self.D_ext @ (a_ext * (self.D_ext @ u_ext))
                r[0], r[-1] = -u_ext[0], -u_ext[-1]
                u_ext = u_ext + lu_solve(lu, r.astype(float))
            u = u_ext.astype(float)
        return u

    def interpolate(self, u: np.ndarray, xq: float) -> float:
        """Barycentric interpolation of grid values at ``xq``."""
        diff = xq - self.x
        hit = np.flatnonzero(diff == 0)
        if hit.size:
            return float(u[hit[0]])
        t = self.bary_w / diff
        return float(t @ u / t.sum())


@dataclass(frozen=True)
class KLField:
    d: int
    correlation_length: float
    sigma: float
    mean: float
    eigenvalues: np.ndarray = field(repr=False)
    quad_nodes: np.ndarray = field(repr=False)
    quad_weights: np.ndarray = field(repr=False)
    node_modes: np.ndarray = field(repr=False)

    def kernel(self, x1, x2) -> np.ndarray:
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        return np.exp(-((x1[:, None] - x2[None, :]) ** 2) / self.correlation_length**2)

    def modes(self, x) -> np.ndarray:
        """Eigenfunctions at points ``x`` by Nystrom extension, shape (len(x), d)."""
        C = self.kernel(x, self.quad_nodes)
        return (C * self.quad_weights) @ self.node_modes / self.eigenvalues

    def log_diffusivity(self, x, z, modes=None) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.shape[-1] != self.d:
            raise ValueError(f"expected {self.d} random inputs, got {z.shape[-1]}")
        phi = self.modes(x) if modes is None else modes
        return self.mean + self.sigma * phi @ (np.sqrt(self.eigenvalues) * z)


def kl_decompose(
    correlation_length: float = CORRELATION_LENGTH,
    d: int = 2,
    sigma: float | None = None,
    mean: float = A_BAR,
    grid: int | None = None,
) -> KLField:
    """Nystrom eigenpairs of the squared-exponential kernel with Gauss-Legendre quadrature on [0, 1]."""
    if sigma is None:
        sigma = SIGMA_BY_DIM.get(d, 1.0)
    K = grid if grid is not None else max(4 * d, 256)
    if d > K:
        raise ValueError(f"d={d} exceeds the quadrature grid size {K}")
    t, w = np.polynomial.legendre.leggauss(K)
    x, w = 0.5 * (t + 1), 0.5 * w
    C = np.exp(-((x[:, None] - x[None, :]) ** 2) / correlation_length**2)
    sw = np.sqrt(w)
    lam, V = eigh(sw[:, None] * C * sw[None, :])
    order = np.argsort(lam)[::-1]
    lam, V = lam[order], V[:, order]
    floor = 1e-13 * lam[0]
    if lam[d - 1] <= floor:
        raise ValueError(f"only {int(np.sum(lam > floor))} numerically positive eigenvalues; d={d} requested")
    modes = V[:, :d] / sw[:, None]
    # Sign convention: the largest-magnitude nodal value is positive.
    pick = np.argmax(np.abs(modes), axis=0)
    modes = modes * np.sign(modes[pick, np.arange(d)])
    return KLField(d, correlation_length, float(sigma), float(mean), lam[:d].copy(), x, w, modes)


@dataclass
class DiffusionModel:
    """Forward map z -> u(., z) and the quantity of interest, with modes cached on the grid."""

    field: KLField
    solver: CollocationSolver = field(default_factory=CollocationSolver)

    def __post_init__(self):
        self._modes = self.field.modes(self.solver.x)

    def diffusivity(self, z) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.field.log_diffusivity(self.solver.x, z, self._modes))

    def solve_sample(self, z) -> np.ndarray:
        return self.solver.solve(self.diffusivity(z))

    def qoi(self, z) -> float:
        return self.solver.interpolate(self.solve_sample(z), 0.5)

    def qoi_batch(self, Z) -> np.ndarray:
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        return np.array([self.qoi(z) for z in Z])


def solve_sample(field: KLField, solver: CollocationSolver, z) -> np.ndarray:
    return DiffusionModel(field, solver).solve_sample(z)


def qoi(field: KLField, solver: CollocationSolver, z) -> float:
    return DiffusionModel(field, solver).qoi(z)


def surrogate_values(coefficients, families, index_set, Z) -> np.ndarray:
    ev = tensor_eval(families, index_set, np.atleast_2d(Z))
    return ev.unscaled() @ np.asarray(coefficients, dtype=float)


def validation_error(coefficients, families, index_set, truth, Q: int = 10_000, seed=0, Z=None, f=None) -> float:
    """RMS of surrogate minus truth over Q draws from the orthogonality density.

    ``truth`` is a callable on an (npts, d) array (for instance
    ``DiffusionModel.qoi_batch``).  Pre-drawn ``Z`` and truth values ``f`` may be
    passed to reuse one validation set across many surrogates.
    """
    if Z is None:
        Z = sample_mc(families, index_set.d, Q, seed).points
    if f is None:
        f = truth(Z)
    err = surrogate_values(coefficients, families, index_set, Z) - f
    return float(np.sqrt(np.mean(err**2)))
