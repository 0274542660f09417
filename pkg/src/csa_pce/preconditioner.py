"""Christoffel-function preconditioning and system assembly."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .index_sets import MultiIndexSet
from .orthopoly import BasisFamily, tensor_eval


@dataclass(frozen=True)
class DesignMatrix:
    """Rows of phi_i(Z^(m)) stored as ``values[m] * exp(log_scale[m])``."""

    values: np.ndarray
    log_scale: np.ndarray
    index_set: MultiIndexSet
    points: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def entries(self) -> np.ndarray:
        """The unscaled matrix; may overflow for extreme points on unbounded domains."""
        return self.values * np.exp(self.log_scale)[:, None]


@dataclass(frozen=True)
class WeightVector:
    """Diagonal of W, kept in log form so that tiny weights do not underflow."""

    log_w: np.ndarray
    strategy: str

    @property
    def w(self) -> np.ndarray:
        return np.exp(self.log_w)

    def __len__(self) -> int:
        return len(self.log_w)


def _families(families, d):
    if isinstance(families, BasisFamily):
        return [families] * d
    return list(families)


def design_matrix(families: Sequence[BasisFamily] | BasisFamily, index_set: MultiIndexSet, points) -> DesignMatrix:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    ev = tensor_eval(_families(families, index_set.d), index_set, points)
    return DesignMatrix(ev.values, np.asarray(ev.log_scale), index_set, points)


def log_christoffel_lambda(families, index_set: MultiIndexSet, z) -> np.ndarray:
    """Natural log of lambda(z); finite even where lambda itself underflows."""
    z = np.asarray(z, dtype=float)
    single = z.ndim <= 1
    ev = tensor_eval(_families(families, index_set.d), index_set, np.atleast_2d(z).reshape(-1, index_set.d))
    ss = np.sum(ev.values**2, axis=1)
    out = -2 * np.asarray(ev.log_scale) - np.log(ss)
    return float(out[0]) if single else out


def christoffel_lambda(families, index_set: MultiIndexSet, z) -> np.ndarray:
    """lambda(z) = 1 / sum_i phi_i(z)^2 over the dictionary.

    ``z`` is one point (returns a scalar) or an ``(npts, d)`` array.  Far out
    on unbounded domains lambda drops below the double range; use
    :func:`log_christoffel_lambda` there.
    """
    return np.exp(log_christoffel_lambda(families, index_set, z))


def csa_weights(design: DesignMatrix) -> WeightVector:
    """W_mm = N * lambda(Z^(m)): the inverse squared row norms of Phi times N."""
    ss = np.sum(design.values**2, axis=1)
    if np.any(ss == 0):
        raise ValueError("design matrix has a zero row")
    N = design.shape[1]
    return WeightVector(np.log(N) - np.log(ss) - 2 * design.log_scale, "CSA")


def mc_weights(design_or_M) -> WeightVector:
    M = design_or_M if isinstance(design_or_M, int) else design_or_M.shape[0]
    return WeightVector(np.zeros(M), "MC")


def asymptotic_weights(strategy: str, families, points) -> WeightVector:
    """Weights of the asymptotic comparison strategies.

    ``AsymptoticBounded``: prod_i (1 - z_i^2)^{1/2} w(z_i) with w the
    probability density of each Jacobi coordinate.
    ``AsymptoticGaussian``: exp(-|z|^2 / 2).
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    fams = _families(families, points.shape[1])
    if strategy == "AsymptoticBounded":
        if any(f.kind != "jacobi" for f in fams):
            raise ValueError("AsymptoticBounded weights need Jacobi families")
        logk = np.zeros(points.shape[0])
        for j, f in enumerate(fams):
            zj = points[:, j]
            with np.errstate(divide="ignore"):
                logk += 0.5 * np.log1p(-zj * zj) + np.log(f.density(zj))
        return WeightVector(logk, strategy)
    if strategy == "AsymptoticGaussian":
        if any(f.kind != "hermite" for f in fams):
            raise ValueError("AsymptoticGaussian weights need Hermite families")
        return WeightVector(-0.5 * np.sum(points**2, axis=1), strategy)
    raise ValueError(f"no asymptotic weights for strategy {strategy!r}")


def weights_for(strategy: str, design: DesignMatrix, families) -> WeightVector:
    if strategy == "CSA":
        return csa_weights(design)
    if strategy == "MC":
        return mc_weights(design)
    return asymptotic_weights(strategy, families, design.points)


def assemble_system(design: DesignMatrix, weights: WeightVector, f) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(sqrt(W) Phi, sqrt(W) f)``.

    The row factor is combined in log space with the design's own scale, so
    CSA rows come out as ``sqrt(N) * values / |values|`` without ever forming
    the raw polynomial values.
    """
    f = np.asarray(f, dtype=float)
    M = design.shape[0]
    if len(weights) != M or f.shape != (M,):
        raise ValueError(f"dimension mismatch: design has {M} rows, weights {len(weights)}, data {f.shape}")
    half = 0.5 * weights.log_w
    A = design.values * np.exp(half + design.log_scale)[:, None]
    b = f * np.exp(half)
    return A, b


def manufactured_system(design: DesignMatrix, weights: WeightVector, coefficients) -> tuple[np.ndarray, np.ndarray]:
    """System for data f = Phi @ coefficients, built scale-free: b = A @ coefficients."""
    A, _ = assemble_system(design, weights, np.zeros(design.shape[0]))
    return A, A @ np.asarray(coefficients, dtype=float)
