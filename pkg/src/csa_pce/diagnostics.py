"""Gramian of the Christoffel-weighted basis and coherence scans (univariate)."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .orthopoly import BasisFamily, eval_basis
from .sampling import equilibrium_support

GRAMIAN_TOL = 1e-11
MAX_NODES = 2**20


class QuadratureError(RuntimeError):
    pass


@dataclass
class GramianReport:
    n: int
    family: dict
    R: np.ndarray
    norm1_inv_sqrt: float
    lambda_min: float
    quad_points_used: int
    converged: bool

    def sqrt(self) -> np.ndarray:
        return _sym_power(self.R, 0.5)

    def inv_sqrt(self) -> np.ndarray:
        return _sym_power(self.R, -0.5)

    def to_json(self) -> str:
        d = asdict(self)
        d["R"] = self.R.tolist()
        return json.dumps(d)


@dataclass
class CoherenceReport:
    family: dict
    degrees: list[int]
    L_values: list[float]
    fitted_exponent: float
    points_per_degree: int

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def _sym_power(R: np.ndarray, p: float) -> np.ndarray:
    lam, V = np.linalg.eigh(R)
    return (V * lam**p) @ V.T


def sampling_domain(family: BasisFamily, n: int) -> tuple[float, float]:
    """Support S_n of the CSA sampling density for a univariate family."""
    if family.kind == "jacobi":
        return (-1.0, 1.0)
    kind = "whole" if family.kind == "hermite" else "half"
    return equilibrium_support(kind, max(n, 1), family.alpha).interval


def equilibrium_rule(family: BasisFamily, n: int, K: int) -> tuple[np.ndarray, np.ndarray]:
    """K-point Gauss rule for the CSA density v_n (weights sum to one).

    Each rule absorbs the endpoint behaviour of v_n: Chebyshev first kind for
    the arcsine density, second kind for the semicircle, and fourth kind for
    the half-line density sqrt((4n - z)/z).
    """
    i = np.arange(1, K + 1)
    if family.kind == "jacobi":
        return np.cos((2 * i - 1) * np.pi / (2 * K)), np.full(K, 1.0 / K)
    lo, hi = sampling_domain(family, n)
    if family.kind == "hermite":
        th = i * np.pi / (K + 1)
        return hi * np.cos(th), 2.0 / (K + 1) * np.sin(th) ** 2
    th = 2 * i * np.pi / (2 * K + 1)
    t = np.cos(th)
    w = 4.0 / (2 * K + 1) * np.sin(th / 2) ** 2
    return 0.5 * hi * (1 + t), w


def _weighted_rows(family: BasisFamily, n: int, z: np.ndarray) -> np.ndarray:
    """Rows sqrt(N lambda(z)) * phi(z), each of l2 norm sqrt(N)."""
    ev = eval_basis(family, n, z)
    return np.sqrt(n + 1) * ev.normalized()


def gramian(family: BasisFamily, n: int, tol: float = GRAMIAN_TOL, max_nodes: int = MAX_NODES) -> GramianReport:
    """R_kl = integral of phi_k phi_l N lambda_N v_n over S_n, by node doubling."""
    if n > family.n_max:
        raise ValueError(f"n={n} exceeds n_max={family.n_max}")
    K = max(2 * (n + 1), 16)
    prev = None
    while True:
        z, w = equilibrium_rule(family, n, K)
        B = _weighted_rows(family, n, z)
        R = (B * w[:, None]).T @ B
        R = 0.5 * (R + R.T)
        if prev is not None and np.max(np.abs(R - prev)) < tol:
            break
        if 2 * K > max_nodes:
            change = np.inf if prev is None else float(np.max(np.abs(R - prev)))
            raise QuadratureError(
                f"Gramian for {family.kind} n={n} not converged at {K} nodes (last change {change:.2e})"
            )
        prev = R
        K *= 2
    lam, V = np.linalg.eigh(R)
    inv_sqrt = (V / np.sqrt(lam)) @ V.T
    return GramianReport(
        n=n,
        family=family.descriptor(),
        R=R,
        norm1_inv_sqrt=float(np.max(np.sum(np.abs(inv_sqrt), axis=0))),
        lambda_min=float(lam[0]),
        quad_points_used=K,
        converged=True,
    )


def _weighted_peak(family: BasisFamily, n: int, z: np.ndarray) -> np.ndarray:
    """max_k (n+1) lambda_{n+1}(z) phi_k(z)^2 at each z."""
    ev = eval_basis(family, n, z)
    v = ev.values
    return (n + 1) * np.max(v * v, axis=1) / np.sum(v * v, axis=1)


def coherence_value(family: BasisFamily, n: int, points_per_degree: int = 50, refine: bool = True) -> float:
    """L(n) = max_k sup_{z in S_n} (n+1) lambda_{n+1}(z) phi_k(z)^2."""
    G = points_per_degree * (n + 1)
    if points_per_degree < 10:
        raise ValueError("grid too coarse: need at least 10 points per degree")
    lo, hi = sampling_domain(family, n)
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    z = mid - half * np.cos(np.pi * np.arange(G) / (G - 1))
    z = np.clip(z, lo, hi)
    F = _weighted_peak(family, n, z)
    j = int(np.argmax(F))
    best = float(F[j])
    if refine:
        left, right = z[max(j - 1, 0)], z[min(j + 1, G - 1)]
        if right > left:
            res = minimize_scalar(
                lambda t: -_weighted_peak(family, n, np.array([t]))[0],
                bounds=(left, right),
                method="bounded",
                options={"xatol": 1e-12 * max(1.0, abs(hi))},
            )
            best = max(best, -float(res.fun))
    return best


def coherence_scan(family: BasisFamily, degrees, points_per_degree: int = 50, refine: bool = True) -> CoherenceReport:
    degrees = [int(n) for n in degrees]
    L = [coherence_value(family, n, points_per_degree, refine) for n in degrees]
    slope = float(np.polyfit(np.log(degrees), np.log(L), 1)[0]) if len(degrees) > 1 else float("nan")
    return CoherenceReport(family.descriptor(), degrees, L, slope, points_per_degree)


def sample_count_bound(norm1_inv_sqrt: float, L: float, s: int, N: int) -> int:
    """ceil(L |R^{-1/2}|_1^2 s log^3(max(s, 2)) log N), natural logs."""
    if norm1_inv_sqrt <= 0 or L <= 0 or s < 1 or N < 1:
        raise ValueError("inputs must be positive")
    return int(math.ceil(L * norm1_inv_sqrt**2 * s * math.log(max(s, 2)) ** 3 * math.log(N)))
