"""Samplers for the orthogonality densities and the equilibrium measures.

All samplers take a ``seed`` that may be an int, a ``numpy.random.SeedSequence``
or a ``Generator``; the same seed always gives bit-identical points.  Use
:func:`derive_seed` to get independent streams for trials and grid cells.
"""
from __future__ import annotations

import io
import json
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import integrate, interpolate, special

from .orthopoly import BasisFamily, recurrence_table

STRATEGIES = ("MC", "CSA", "AsymptoticBounded", "AsymptoticGaussian")
TABLE_SIZE = 2048


def derive_seed(master: int, *keys: int) -> np.random.SeedSequence:
    """Independent child stream for ``(master, *keys)``."""
    return np.random.SeedSequence(entropy=int(master), spawn_key=tuple(int(k) for k in keys))


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class EquilibriumSupport:
    kind: str  # "whole" | "half" | "bounded"
    alpha: float | None
    n: int
    a_n: float
    interval: tuple[float, float]


def mrs_whole(alpha: float) -> float:
    """MRS number of sqrt(w) for w = exp(-|z|^alpha) on the real line."""
    return float((np.sqrt(np.pi) * special.gamma(alpha / 2) / special.gamma(alpha / 2 + 0.5)) ** (1 / alpha))


def mrs_half(alpha: float) -> float:
    """MRS number of sqrt(w) for w = exp(-z^alpha) on [0, inf)."""
    return float((2 * np.sqrt(np.pi) * special.gamma(alpha) / special.gamma(alpha + 0.5)) ** (1 / alpha))


def equilibrium_support(kind: str, n: int = 1, alpha: float | None = None) -> EquilibriumSupport:
    if kind == "bounded":
        return EquilibriumSupport("bounded", None, n, 1.0, (-1.0, 1.0))
    if kind == "whole":
        a = n ** (1 / alpha) * mrs_whole(alpha)
        return EquilibriumSupport("whole", alpha, n, a, (-a, a))
    if kind == "half":
        a = n ** (1 / alpha) * mrs_half(alpha)
        return EquilibriumSupport("half", alpha, n, a, (0.0, a))
    raise ValueError(f"unknown support kind {kind!r}")


@dataclass(frozen=True)
class SamplerSpec:
    strategy: str
    families: tuple[dict, ...]
    d: int
    n: int = 1
    seed: int | None = None
    sampler: str = ""

    def to_dict(self) -> dict:
        out = asdict(self)
        out["families"] = [dict(f) for f in self.families]
        return out


@dataclass(frozen=True)
class SampleBatch:
    points: np.ndarray
    spec: SamplerSpec = field(compare=False)

    @property
    def M(self) -> int:
        return self.points.shape[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# " + json.dumps(self.spec.to_dict(), sort_keys=True) + "\n")
        buf.write(",".join(f"z{j + 1}" for j in range(self.points.shape[1])) + "\n")
        for row in self.points:
            buf.write(",".join(repr(float(v)) for v in row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SampleBatch":
        lines = text.splitlines()
        spec = json.loads(lines[0][2:])
        spec["families"] = tuple(spec["families"])
        rows = [[float(v) for v in ln.split(",")] for ln in lines[2:] if ln.strip()]
        return cls(np.array(rows, dtype=float).reshape(len(rows), -1), SamplerSpec(**spec))


def _batch(points, sampler, strategy="CSA", families=(), n=1, seed=None) -> SampleBatch:
    points = np.ascontiguousarray(points, dtype=float)
    seed = seed if isinstance(seed, (int, np.integer)) else None
    spec = SamplerSpec(strategy, tuple(families), points.shape[1], n, seed, sampler)
    return SampleBatch(points, spec)


def _check_M(M):
    if int(M) < 1:
        raise ValueError("M must be >= 1")


# --------------------------------------------------------------------------- bounded


def sample_arcsine(M: int, d: int, seed) -> SampleBatch:
    """Tensor-product Chebyshev (arcsine) samples z = cos(pi U) on [-1, 1]^d."""
    _check_M(M)
    u = _rng(seed).random((M, d))
    return _batch(np.cos(np.pi * u), "arcsine", seed=seed)


def sample_ball_equilibrium(d: int, M: int, seed) -> SampleBatch:
    """Equilibrium measure of the unit ball, density proportional to (1-|z|^2)^{-1/2}."""
    _check_M(M)
    rng = _rng(seed)
    w = rng.standard_normal((M, d))
    r2 = rng.beta(d / 2, 0.5, size=M)
    z = w / np.linalg.norm(w, axis=1, keepdims=True) * np.sqrt(r2)[:, None]
    return _batch(z, "ball", seed=seed)


def sample_simplex_equilibrium(d: int, M: int, seed) -> SampleBatch:
    """Equilibrium measure of the unit simplex: Dirichlet(1/2, ..., 1/2), last coordinate dropped."""
    _check_M(M)
    D = _rng(seed).dirichlet(np.full(d + 1, 0.5), size=M)
    return _batch(D[:, :d], "simplex", seed=seed)


# --------------------------------------------------------------------------- whole line


def ullman_density(t, alpha: float) -> np.ndarray:
    """Density of the sqrt(w)-weighted equilibrium measure rescaled to [-1, 1].

    Uses the form (alpha/pi) * int_0^sqrt(1-t^2) (t^2 + r^2)^{(alpha-2)/2} dr,
    which has no interior singularity.
    """
    t = np.abs(np.atleast_1d(np.asarray(t, dtype=float)))
    out = np.zeros_like(t)
    p = (alpha - 2) / 2
    for i, ti in enumerate(t):
        if ti >= 1:
            continue
        top = np.sqrt(1 - ti * ti)
        f = lambda r, ti=ti: (ti * ti + r * r) ** p
        pts = [min(ti, top)] if 0 < ti < top else None
        out[i] = alpha / np.pi * integrate.quad(f, 0, top, points=pts, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
    return out


def _ullman_cdf_half(t: float, alpha: float) -> float:
    """int_0^t of the rescaled density, for 0 <= t <= 1 (equals 1/2 at t=1)."""
    if t <= 0:
        return 0.0
    if t >= 1:
        return 0.5
    g = lambda s: s ** (alpha - 1) * np.arcsin(t / s)
    tail = integrate.quad(g, t, 1, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    return 0.5 * t**alpha + alpha / np.pi * tail


@lru_cache(maxsize=32)
def _whole_table(alpha: float) -> interpolate.PchipInterpolator:
    """Inverse CDF of the rescaled measure on [0, 1] as a monotone cubic."""
    # Nodes cluster at both ends, where the CDF is least linear.
    theta = np.linspace(0, np.pi / 2, TABLE_SIZE)
    t = np.sin(theta)
    F = np.array([_ullman_cdf_half(x, alpha) for x in t]) * 2.0
    F[0], F[-1] = 0.0, 1.0
    F = np.maximum.accumulate(F)
    keep = np.concatenate([[True], np.diff(F) > 0])
    return interpolate.PchipInterpolator(F[keep], t[keep])


def whole_equilibrium_density(z, alpha: float, n: int = 1) -> np.ndarray:
    """Sampling density v_n on [-a_n, a_n] for the weight exp(-|z|^alpha)."""
    a = n ** (1 / alpha) * mrs_whole(alpha)
    z = np.asarray(z, dtype=float)
    return ullman_density(z / a, alpha).reshape(z.shape) / a


def sample_whole_equilibrium(alpha: float, n: int, M: int, seed) -> SampleBatch:
    """CSA samples for exp(-|z|^alpha) on the real line, expanded to S_n."""
    if alpha <= 1:
        raise ValueError(f"unsupported exponent alpha={alpha}; need alpha > 1")
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_M(M)
    z = _whole_unit(alpha, M, _rng(seed)) * n ** (1 / alpha) * mrs_whole(alpha)
    return _batch(z[:, None], f"whole_equilibrium(alpha={alpha})", n=n, seed=seed)


def _whole_unit(alpha: float, M: int, rng: np.random.Generator) -> np.ndarray:
    """Draws from the rescaled measure on [-1, 1]."""
    if alpha == 2:
        # Semicircle: symmetric Beta(3/2, 3/2) on [-1, 1].
        return 2 * rng.beta(1.5, 1.5, size=M) - 1
    inv = _whole_table(float(alpha))
    u = rng.random(M)
    sign = np.where(rng.random(M) < 0.5, -1.0, 1.0)
    return sign * np.clip(inv(u), 0.0, 1.0)


# --------------------------------------------------------------------------- half line


def half_equilibrium_density(z, alpha: float, n: int = 1) -> np.ndarray:
    """Sampling density v_n on [0, a_n] for the weight exp(-z^alpha)."""
    z = np.asarray(z, dtype=float)
    if alpha == 1:
        out = np.zeros_like(z)
        inside = (z > 0) & (z < 4 * n)
        zi = z[inside]
        out[inside] = np.sqrt((4 * n - zi) / zi) / (2 * n * np.pi)
        return out
    # Z = 2^{1/alpha} n^{1/alpha} Y^2 with Y from the whole-line measure of exponent 2 alpha.
    c = (2 * n) ** (1 / alpha)
    y = np.sqrt(np.clip(z, 0, None) / c)
    aw = mrs_whole(2 * alpha)
    with np.errstate(divide="ignore"):
        dens = 2 * ullman_density(y / aw, 2 * alpha).reshape(z.shape) / aw / (2 * c * y)
    return np.where(z > 0, dens, 0.0)


def sample_half_equilibrium(alpha: float, n: int, M: int, seed) -> SampleBatch:
    """CSA samples for exp(-z^alpha) on [0, inf), expanded to S_n = [0, a_n]."""
    if alpha <= 0.5:
        raise ValueError(f"unsupported exponent alpha={alpha}; need alpha > 1/2")
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_M(M)
    rng = _rng(seed)
    if alpha == 1:
        z = 4 * n * rng.beta(0.5, 1.5, size=M)
    else:
        y = _whole_unit(2 * alpha, M, rng) * mrs_whole(2 * alpha)
        z = 2 ** (1 / alpha) * y * y * n ** (1 / alpha)
    return _batch(z[:, None], f"half_equilibrium(alpha={alpha})", n=n, seed=seed)


# --------------------------------------------------------------------------- multivariate unbounded


def sample_gaussian_csa(d: int, n: int, M: int, seed) -> SampleBatch:
    """Samples on the ball of radius sqrt(2n) with density proportional to (2n - |z|^2)^{d/2}."""
    if d < 1 or n < 1:
        raise ValueError("need d >= 1 and n >= 1")
    _check_M(M)
    rng = _rng(seed)
    y = rng.standard_normal((M, d))
    u = rng.beta(d / 2, d / 2 + 1, size=M)
    z = y / np.linalg.norm(y, axis=1, keepdims=True) * np.sqrt(2 * n * u)[:, None]
    return _batch(z, "gaussian_csa", n=n, seed=seed)


def sample_exponential_csa(d: int, n: int, M: int, seed) -> SampleBatch:
    """Truncated Dirichlet(1/2, ..., 1/2, d/2 + 1) scaled by 4n."""
    if d < 1 or n < 1:
        raise ValueError("need d >= 1 and n >= 1")
    _check_M(M)
    alpha = np.concatenate([np.full(d, 0.5), [d / 2 + 1]])
    W = _rng(seed).dirichlet(alpha, size=M)
    return _batch(4 * n * W[:, :d], "exponential_csa", n=n, seed=seed)


# --------------------------------------------------------------------------- orthogonality density


def _mc_column(family: BasisFamily, M: int, rng: np.random.Generator) -> np.ndarray:
    if family.kind == "jacobi":
        a, b = family.params
        return 2 * rng.beta(b + 1, a + 1, size=M) - 1
    if family.kind == "hermite":
        return rng.normal(0.0, np.sqrt(0.5), size=M)
    return rng.exponential(1.0, size=M)


def sample_mc(families: Sequence[BasisFamily] | BasisFamily, d: int, M: int, seed) -> SampleBatch:
    """iid draws from the orthogonality density, one family per coordinate."""
    _check_M(M)
    fams = [families] * d if isinstance(families, BasisFamily) else list(families)
    if len(fams) != d:
        raise ValueError("need one family per dimension")
    rng = _rng(seed)
    z = np.column_stack([_mc_column(f, M, rng) for f in fams])
    return _batch(z, "mc", "MC", [f.descriptor() for f in fams], seed=seed)


def sample_asymptotic_gaussian(d: int, n: int, M: int, seed) -> SampleBatch:
    """Uniform samples in the ball of radius sqrt(2n + 1)."""
    if d < 1 or n < 1:
        raise ValueError("need d >= 1 and n >= 1")
    _check_M(M)
    rng = _rng(seed)
    y = rng.standard_normal((M, d))
    u = rng.random(M)
    r = np.sqrt(2 * n + 1)
    z = y / np.linalg.norm(y, axis=1, keepdims=True) * (r * u ** (1 / d))[:, None]
    return _batch(z, "asymptotic_gaussian", "AsymptoticGaussian", n=n, seed=seed)


# --------------------------------------------------------------------------- dispatch


def family_from_descriptor(desc: dict | str, n_max: int = 512) -> BasisFamily:
    if isinstance(desc, BasisFamily):
        return desc
    if isinstance(desc, str):
        desc = {"kind": desc}
    kind = desc["kind"].lower()
    if kind == "beta":
        return recurrence_table("jacobi", n_max, a=desc["shape2"] - 1, b=desc["shape1"] - 1)
    return recurrence_table(kind, n_max, a=desc.get("a", 0.0), b=desc.get("b", 0.0))


def draw(strategy: str, families: Sequence[BasisFamily], n: int, M: int, seed) -> SampleBatch:
    """Draw M points for ``strategy`` over the tensor product of ``families``.

    ``n`` is the maximum degree of the dictionary, used by the unbounded CSA
    densities and by asymptotic Gaussian sampling.
    """
    fams = list(families)
    d = len(fams)
    kinds = {f.kind for f in fams}
    descs = [f.descriptor() for f in fams]
    if strategy == "MC":
        batch = sample_mc(fams, d, M, seed)
    elif strategy == "CSA":
        if kinds == {"jacobi"}:
            batch = sample_arcsine(M, d, seed)
        elif kinds == {"hermite"}:
            batch = sample_whole_equilibrium(2.0, n, M, seed) if d == 1 else sample_gaussian_csa(d, n, M, seed)
        elif kinds == {"laguerre"}:
            batch = sample_half_equilibrium(1.0, n, M, seed) if d == 1 else sample_exponential_csa(d, n, M, seed)
        else:
            raise ValueError(f"no CSA density for mixed families {sorted(kinds)}")
    elif strategy == "AsymptoticBounded":
        if kinds != {"jacobi"}:
            raise ValueError("AsymptoticBounded requires bounded (Jacobi) families")
        batch = sample_arcsine(M, d, seed)
    elif strategy == "AsymptoticGaussian":
        if kinds != {"hermite"}:
            raise ValueError("AsymptoticGaussian requires Hermite families")
        batch = sample_asymptotic_gaussian(d, n, M, seed)
    else:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    spec = SamplerSpec(strategy, tuple(descs), d, n, batch.spec.seed, batch.spec.sampler)
    return SampleBatch(batch.points, spec)
