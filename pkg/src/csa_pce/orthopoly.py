"""Orthonormal polynomial families and overflow-safe evaluation.

Every family is orthonormal with respect to a *probability* density, so the
degree-zero polynomial is identically one.  Evaluations are returned as a
scaled vector plus the natural log of the discarded common factor; ratios such
as ``phi_k / sqrt(sum_j phi_j**2)`` never depend on that factor.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_NMAX = 512
# Rescale once any |phi_k| exceeds this; leaves headroom for squaring.
OVERFLOW_GUARD = 1e100


class UnsupportedFamilyError(ValueError):
    """Raised for parameters outside the supported families."""


class DomainError(ValueError):
    """Raised when an evaluation point lies outside the family support."""


@dataclass(frozen=True)
class BasisFamily:
    """Three-term recurrence for an orthonormal family.

    ``phi_{k+1}(z) = ((z - a[k]) phi_k(z) - b[k] phi_{k-1}(z)) / b[k+1]``
    with ``phi_{-1} = 0``, ``phi_0 = 1`` and ``b[0] = 1``.
    """

    kind: str
    params: tuple[float, ...]
    a: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)

    @property
    def n_max(self) -> int:
        return len(self.a) - 1

    @property
    def support(self) -> tuple[float, float]:
        if self.kind == "jacobi":
            return (-1.0, 1.0)
        if self.kind == "hermite":
            return (-np.inf, np.inf)
        return (0.0, np.inf)

    @property
    def bounded(self) -> bool:
        return self.kind == "jacobi"

    @property
    def symmetric(self) -> bool:
        return self.kind == "hermite" or (
            self.kind == "jacobi" and self.params[0] == self.params[1]
        )

    @property
    def alpha(self) -> float | None:
        """Exponent of the exponential weight exp(-|z|**alpha), if any."""
        return {"hermite": 2.0, "laguerre": 1.0}.get(self.kind)

    def descriptor(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "jacobi":
            out["a"], out["b"] = self.params
        return out

    def density(self, z) -> np.ndarray:
        """Probability density of orthogonality at ``z`` (zero off support)."""
        from scipy import special

        z = np.asarray(z, dtype=float)
        if self.kind == "jacobi":
            a, b = self.params
            inside = np.abs(z) <= 1
            zc = np.clip(z, -1, 1)
            # (1-z)^a (1+z)^b / (2^{a+b+1} B(a+1, b+1))
            logc = (a + b + 1) * np.log(2.0) + special.betaln(a + 1, b + 1)
            with np.errstate(divide="ignore"):
                val = np.exp(a * np.log1p(-zc) + b * np.log1p(zc) - logc)
            return np.where(inside, val, 0.0)
        if self.kind == "hermite":
            return np.exp(-z * z) / np.sqrt(np.pi)
        return np.where(z >= 0, np.exp(-np.abs(z)), 0.0)


def jacobi(a: float = 0.0, b: float = 0.0, n_max: int = DEFAULT_NMAX) -> BasisFamily:
    """Jacobi family for the density proportional to (1-z)^a (1+z)^b on [-1, 1]."""
    return recurrence_table("jacobi", n_max, a=a, b=b)


def legendre(n_max: int = DEFAULT_NMAX) -> BasisFamily:
    return recurrence_table("jacobi", n_max, a=0.0, b=0.0)


def hermite(n_max: int = DEFAULT_NMAX) -> BasisFamily:
    """Hermite family for the density proportional to exp(-z**2)."""
    return recurrence_table("hermite", n_max)


def laguerre(n_max: int = DEFAULT_NMAX) -> BasisFamily:
    """Laguerre family for the density exp(-z) on [0, inf)."""
    return recurrence_table("laguerre", n_max)


def beta_family(shape1: float, shape2: float, n_max: int = DEFAULT_NMAX) -> BasisFamily:
    """Jacobi family for a Beta(shape1, shape2) variable mapped to [-1, 1]."""
    return jacobi(a=shape2 - 1.0, b=shape1 - 1.0, n_max=n_max)


def recurrence_table(kind: str, n_max: int = DEFAULT_NMAX, a: float = 0.0, b: float = 0.0) -> BasisFamily:
    """Build the closed-form orthonormal recurrence for ``kind``.

    ``kind`` is one of ``"jacobi"`` (parameters ``a, b >= -1/2``), ``"hermite"``
    or ``"laguerre"``.
    """
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    k = np.arange(n_max + 1, dtype=float)
    kind = kind.lower()
    if kind in ("legendre",):
        kind, a, b = "jacobi", 0.0, 0.0
    if kind == "jacobi":
        a, b = float(a), float(b)
        if a < -0.5 or b < -0.5:
            raise UnsupportedFamilyError(
                f"Jacobi parameters must be >= -1/2, got a={a}, b={b}"
            )
        ab = a + b
        ac = np.empty(n_max + 1)
        ac[0] = (b - a) / (ab + 2.0)
        kk = k[1:]
        ac[1:] = (b * b - a * a) / ((2 * kk + ab) * (2 * kk + ab + 2))
        beta = np.empty(n_max + 1)
        beta[0] = 1.0
        if n_max >= 1:
            beta[1] = 4.0 * (1 + a) * (1 + b) / ((2 + ab) ** 2 * (3 + ab))
        if n_max >= 2:
            kk = k[2:]
            s = 2 * kk + ab
            beta[2:] = 4 * kk * (kk + a) * (kk + b) * (kk + ab) / (s * s * (s + 1) * (s - 1))
        params = (a, b)
    elif kind == "hermite":
        ac = np.zeros(n_max + 1)
        beta = k / 2.0
        beta[0] = 1.0
        params = ()
    elif kind == "laguerre":
        ac = 2 * k + 1
        beta = k * k
        beta[0] = 1.0
        params = ()
    else:
        raise UnsupportedFamilyError(f"out of supported family: {kind!r}")
    bc = np.sqrt(beta)
    ac.setflags(write=False)
    bc.setflags(write=False)
    return BasisFamily(kind=kind, params=params, a=ac, b=bc)


@dataclass(frozen=True)
class WeightedEval:
    """``values`` times ``exp(log_scale)`` gives (phi_0(z), ..., phi_n(z)).

    For a batch of points ``values`` has shape ``(npts, n+1)`` and
    ``log_scale`` shape ``(npts,)``.
    """

    values: np.ndarray
    log_scale: np.ndarray

    def unscaled(self) -> np.ndarray:
        ls = np.asarray(self.log_scale)
        return self.values * np.exp(ls)[..., None]

    def normalized(self) -> np.ndarray:
        """Rows divided by their l2 norm."""
        return self.values / np.linalg.norm(self.values, axis=-1, keepdims=True)


def _check_support(family: BasisFamily, z: np.ndarray) -> None:
    if not np.all(np.isfinite(z)):
        raise DomainError("non-finite evaluation point")
    lo, hi = family.support
    if np.any(z < lo) or np.any(z > hi):
        raise DomainError(f"points outside support [{lo}, {hi}] of {family.kind}")


def eval_basis(family: BasisFamily, n: int, z) -> WeightedEval:
    """Evaluate phi_0..phi_n at ``z`` (scalar or 1-d array) with rescaling.

    Rows are left exact (``log_scale == 0``) unless some |phi_k| passes
    ``OVERFLOW_GUARD``; then the running recurrence is divided through and the
    factor is accumulated in ``log_scale``.
    """
    if n > family.n_max:
        raise ValueError(f"degree {n} exceeds the table cap n_max={family.n_max}")
    if n < 0:
        raise ValueError("degree must be nonnegative")
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=float))
    _check_support(family, z)
    a, b = family.a, family.b
    out = np.empty((z.size, n + 1))
    log_scale = np.zeros(z.size)
    prev = np.zeros(z.size)
    cur = np.ones(z.size)
    out[:, 0] = cur
    for k in range(n):
        nxt = ((z - a[k]) * cur - b[k] * prev) / b[k + 1]
        prev, cur = cur, nxt
        big = np.abs(cur) > OVERFLOW_GUARD
        if big.any():
            s = np.abs(cur[big])
            cur[big] /= s
            prev[big] /= s
            out[big, : k + 1] /= s[:, None]
            log_scale[big] += np.log(s)
        out[:, k + 1] = cur
    if scalar:
        return WeightedEval(out[0], log_scale[0])
    return WeightedEval(out, log_scale)


def tensor_eval(families: Sequence[BasisFamily], index_set, z) -> WeightedEval:
    """Evaluate the tensor-product basis of ``index_set`` at one or more points.

    ``z`` is a point of length d or an array of shape ``(npts, d)``.  Each
    dimension is evaluated with :func:`eval_basis` and the log-scales summed.
    """
    indices = np.asarray(index_set.indices if hasattr(index_set, "indices") else index_set)
    if indices.ndim == 1:
        indices = indices[:, None]
    d = indices.shape[1]
    if isinstance(families, BasisFamily):
        families = [families] * d
    if len(families) != d:
        raise ValueError(f"got {len(families)} families for dimension {d}")
    z = np.asarray(z, dtype=float)
    single = z.ndim <= 1
    z = np.atleast_2d(z) if z.ndim == 1 else (z.reshape(1, 1) if z.ndim == 0 else z)
    if z.shape[1] != d:
        raise ValueError(f"point dimension {z.shape[1]} does not match index set dimension {d}")
    vals = np.ones((z.shape[0], indices.shape[0]))
    log_scale = np.zeros(z.shape[0])
    for j in range(d):
        deg = int(indices[:, j].max())
        ev = eval_basis(families[j], deg, z[:, j])
        vals *= ev.values[:, indices[:, j]]
        log_scale += ev.log_scale
        # Products over many dimensions can drift; renormalize those rows.
        peak = np.max(np.abs(vals), axis=1)
        drift = (peak > OVERFLOW_GUARD) | ((peak < 1 / OVERFLOW_GUARD) & (peak > 0))
        if drift.any():
            vals[drift] /= peak[drift, None]
            log_scale[drift] += np.log(peak[drift])
    if single:
        return WeightedEval(vals[0], log_scale[0])
    return WeightedEval(vals, log_scale)


def gauss_rule(family: BasisFamily, npts: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss rule for the family's probability density via Golub-Welsch."""
    from scipy.linalg import eigh_tridiagonal

    if npts < 1 or npts > family.n_max + 1:
        raise ValueError("npts must lie in [1, n_max + 1]")
    nodes, vecs = eigh_tridiagonal(family.a[:npts], family.b[1:npts])
    return nodes, vecs[0] ** 2
