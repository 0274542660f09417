"""Manufactured sparse-recovery transition studies and PDE convergence studies."""
from __future__ import annotations

import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .index_sets import MultiIndexSet, total_degree
from .l1_solver import RecoveryProblem, bpdn, solution_at
from .pde_benchmark import CollocationSolver, DiffusionModel, kl_decompose
from .preconditioner import assemble_system, design_matrix, manufactured_system, weights_for
from .sampling import derive_seed, draw, family_from_descriptor, sample_mc

log = logging.getLogger(__name__)

DEFAULT_RESOLUTION = 20
DESK_TRIALS = 20
FULL_TRIALS = 100
# Relative BPDN tolerances tried by cross-validation (epsilon = tol * |b|).
CV_TOLERANCES = (0.0,) + tuple(10.0 ** np.arange(-7.0, -0.5, 0.5))
CV_FOLDS = 5
# Stream key for the validation set; trial streams use (M index, trial).
VALIDATION_KEY = 2**31 - 1


def fmt(x) -> str:
    """Shortest round-tripping text for a float (stable across runs)."""
    return repr(float(x))


def half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def cell_centers(k: int = DEFAULT_RESOLUTION) -> list[float]:
    return [(i + 0.5) / k for i in range(k)]


def _norm_family(family) -> dict:
    if isinstance(family, str):
        family = {"kind": family}
    return json.loads(json.dumps(dict(family), sort_keys=True))


@lru_cache(maxsize=16)
def _dictionary(family_json: str, d: int, n: int):
    fam = family_from_descriptor(json.loads(family_json), n_max=max(n, 1))
    return tuple([fam] * d), total_degree(d, n)


def dictionary(family, d: int, n: int) -> tuple[tuple, MultiIndexSet]:
    return _dictionary(json.dumps(_norm_family(family), sort_keys=True), d, n)


def row_norm_deviation(A: np.ndarray) -> float:
    """max_m | |A_m|_2 / sqrt(N) - 1 |, zero for an exact Christoffel preconditioner."""
    N = A.shape[1]
    return float(np.max(np.abs(np.linalg.norm(A, axis=1) / math.sqrt(N) - 1.0)))


# --------------------------------------------------------------------------- manufactured recovery


@dataclass
class TrialConfig:
    family: dict
    d: int
    n: int
    strategy: str
    s: int
    M: int
    seed: int = 0
    epsilon: float = 0.0
    threshold: float = 0.01
    trials: int = FULL_TRIALS

    def __post_init__(self):
        self.family = _norm_family(self.family)
        N = dictionary(self.family, self.d, self.n)[1].N
        if not 0 <= self.s <= self.M <= N:
            raise ValueError(f"need 0 <= s <= M <= N, got s={self.s}, M={self.M}, N={N}")
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


@dataclass
class TrialOutcome:
    success: bool
    rel_error: float
    status: str
    flagged: bool
    row_norm_dev: float


def manufactured_trial(config: TrialConfig, trial_id: int, cell: int = 0) -> TrialOutcome:
    """Plant an s-sparse expansion, sample it, and recover it by basis pursuit."""
    families, iset = dictionary(config.family, config.d, config.n)
    N = iset.N
    ss_coef, ss_pts = derive_seed(config.seed, cell, trial_id).spawn(2)
    rng = np.random.Generator(np.random.PCG64(ss_coef))
    alpha = np.zeros(N)
    support = rng.choice(N, size=config.s, replace=False)
    alpha[support] = rng.standard_normal(config.s)

    pts = draw(config.strategy, families, config.n, config.M, ss_pts).points
    design = design_matrix(families, iset, pts)
    A, b = manufactured_system(design, weights_for(config.strategy, design, families), alpha)
    dev = row_norm_deviation(A) if config.strategy == "CSA" else float("nan")
    res = bpdn(RecoveryProblem(A, b, config.epsilon))
    na = np.linalg.norm(alpha)
    err = np.linalg.norm(res.coefficients - alpha)
    if na == 0:
        rel, ok = float(err), bool(err == 0)
    else:
        rel = float(err / na)
        ok = rel <= config.threshold
    flagged = res.status == "degenerate"
    if flagged:
        ok = False
    return TrialOutcome(ok, rel, res.status, flagged, dev)


@dataclass
class TransitionGrid:
    family: dict
    d: int
    n: int
    N: int
    strategy: str
    mn_axis: list[float]
    sm_axis: list[float]
    M: np.ndarray
    s: np.ndarray
    trials: int
    successes: np.ndarray
    flagged: np.ndarray
    max_row_norm_dev: float
    seed: int
    threshold: float = 0.01

    @property
    def cells(self) -> np.ndarray:
        return self.successes / self.trials

    @property
    def std_error(self) -> np.ndarray:
        p = self.cells
        return np.sqrt(p * (1 - p) / self.trials)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("M_over_N,s_over_M,M,s,trials,successes,success_rate,std_error,flagged\n")
        p, se = self.cells, self.std_error
        for i, mn in enumerate(self.mn_axis):
            for j, sm in enumerate(self.sm_axis):
                buf.write(
                    ",".join(
                        [fmt(mn), fmt(sm), str(self.M[i, j]), str(self.s[i, j]), str(self.trials),
                         str(self.successes[i, j]), fmt(p[i, j]), fmt(se[i, j]), str(self.flagged[i, j])]
                    )
                    + "\n"
                )
        return buf.getvalue()

    def provenance(self) -> dict:
        return {
            "grid": f"{len(self.mn_axis)}x{len(self.sm_axis)}",
            "N": self.N,
            "trials_per_cell": self.trials,
            "max_row_norm_deviation": self.max_row_norm_dev,
            "mean_success": float(self.cells.mean()),
        }


def transition_plan(family, d: int, n: int, mn_axis=None, sm_axis=None) -> list[tuple[float, float, int, int]]:
    """(M/N, s/M, M, s) per cell; M = round(M/N * N), s = round(s/M * M)."""
    N = dictionary(family, d, n)[1].N
    mn_axis = cell_centers() if mn_axis is None else mn_axis
    sm_axis = cell_centers() if sm_axis is None else sm_axis
    plan = []
    for mn in mn_axis:
        M = min(max(half_up(mn * N), 1), N)
        for sm in sm_axis:
            plan.append((float(mn), float(sm), M, min(half_up(sm * M), M)))
    return plan


def _run_cell(base: dict, cell: int, M: int, s: int, trials: int) -> tuple[int, int, float]:
    cfg = TrialConfig(M=M, s=s, trials=trials, **base)
    wins = flags = 0
    dev = 0.0
    for t in range(trials):
        out = manufactured_trial(cfg, t, cell)
        wins += out.success
        flags += out.flagged
        if not math.isnan(out.row_norm_dev):
            dev = max(dev, out.row_norm_dev)
    return wins, flags, dev


def transition_study(
    family,
    d: int,
    n: int,
    strategy: str,
    trials: int = DESK_TRIALS,
    seed: int = 0,
    mn_axis: Sequence[float] | None = None,
    sm_axis: Sequence[float] | None = None,
    threshold: float = 0.01,
    threads: int = 1,
) -> TransitionGrid:
    """Empirical recovery probability over an (M/N, s/M) grid with independent per-cell streams."""
    family = _norm_family(family)
    mn_axis = list(cell_centers() if mn_axis is None else mn_axis)
    sm_axis = list(cell_centers() if sm_axis is None else sm_axis)
    plan = transition_plan(family, d, n, mn_axis, sm_axis)
    base = dict(family=family, d=d, n=n, strategy=strategy, seed=seed, threshold=threshold)
    jobs = [(base, c, M, s, trials) for c, (_, _, M, s) in enumerate(plan)]
    if threads > 1:
        from joblib import Parallel, delayed

        results = Parallel(n_jobs=threads)(delayed(_run_cell)(*j) for j in jobs)
    else:
        results = [_run_cell(*j) for j in jobs]
    shape = (len(mn_axis), len(sm_axis))
    wins = np.array([r[0] for r in results]).reshape(shape)
    flags = np.array([r[1] for r in results]).reshape(shape)
    M = np.array([p[2] for p in plan]).reshape(shape)
    s = np.array([p[3] for p in plan]).reshape(shape)
    N = dictionary(family, d, n)[1].N
    return TransitionGrid(family, d, n, N, strategy, mn_axis, sm_axis, M, s, trials, wins, flags,
                          max(r[2] for r in results), seed, threshold)


# --------------------------------------------------------------------------- PDE convergence


@dataclass
class ConvergenceCurve:
    family: dict
    strategy: str
    d: int
    n: int
    M: list[int]
    median: list[float]
    quartile1: list[float]
    quartile3: list[float]
    errors: list[list[float]] = field(repr=False)
    selected_tolerance: list[list[float]] = field(repr=False)
    max_row_norm_dev: float = float("nan")

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("M,trials,median,quartile1,quartile3\n")
        for i, M in enumerate(self.M):
            buf.write(",".join([str(M), str(len(self.errors[i])), fmt(self.median[i]),
                                fmt(self.quartile1[i]), fmt(self.quartile3[i])]) + "\n")
        return buf.getvalue()

    def provenance(self) -> dict:
        return {
            "selected_relative_tolerances": {str(M): t for M, t in zip(self.M, self.selected_tolerance)},
            "max_row_norm_deviation": self.max_row_norm_dev,
        }


def cv_tolerance(A: np.ndarray, b: np.ndarray, tolerances=CV_TOLERANCES, folds: int = CV_FOLDS, seed=0) -> float:
    """Relative BPDN tolerance minimizing k-fold held-out weighted residual.

    Each training fold's homotopy path is computed once and read off at every
    tolerance.  Ties go to the smaller tolerance.
    """
    M = A.shape[0]
    folds = min(folds, M)
    if folds < 2:
        return 0.0
    rng = np.random.Generator(np.random.PCG64(seed))
    perm = rng.permutation(M)
    err = np.zeros(len(tolerances))
    for k in range(folds):
        test = np.sort(perm[k::folds])
        train = np.setdiff1d(np.arange(M), test)
        At, bt = A[train], b[train]
        path = bpdn(RecoveryProblem(At, bt, 0.0), record=True).path
        nb = np.linalg.norm(bt)
        for i, tol in enumerate(tolerances):
            x = solution_at(path, At, bt, tol * nb)
            err[i] += np.sum((A[test] @ x - b[test]) ** 2)
    return float(tolerances[int(np.argmin(err))])


class Validator:
    """Fixed validation set of Q draws from the orthogonality density with truth values."""

    def __init__(self, families, iset: MultiIndexSet, truth, Q: int, seed):
        self.Z = sample_mc(list(families), iset.d, Q, seed).points
        self.f = np.asarray(truth(self.Z), dtype=float)
        self.basis = design_matrix(families, iset, self.Z).entries

    def error(self, coefficients) -> float:
        return float(np.sqrt(np.mean((self.basis @ coefficients - self.f) ** 2)))


def pde_trial(model: DiffusionModel, families, iset, strategy: str, n: int, M: int, seed, validator: Validator,
              tolerance: float | None = None) -> tuple[float, float, float]:
    """One surrogate fit; returns (validation error, relative tolerance used, row-norm deviation)."""
    ss_pts, ss_cv = seed.spawn(2)
    pts = draw(strategy, families, n, M, ss_pts).points
    f = model.qoi_batch(pts)
    design = design_matrix(families, iset, pts)
    A, b = assemble_system(design, weights_for(strategy, design, families), f)
    dev = row_norm_deviation(A) if strategy == "CSA" else float("nan")
    tol = cv_tolerance(A, b, seed=ss_cv) if tolerance is None else tolerance
    res = bpdn(RecoveryProblem(A, b, tol * np.linalg.norm(b)))
    return validator.error(res.coefficients), tol, dev


def pde_study(
    family,
    strategy: str,
    d: int = 2,
    n: int = 30,
    M_values: Sequence[int] = (50, 100, 200, 400),
    trials: int = DESK_TRIALS,
    seed: int = 0,
    Q: int = 10_000,
    P: int = 128,
    sigma: float | None = None,
    tolerance: float | None = None,
    validator: Validator | None = None,
    model: DiffusionModel | None = None,
    threads: int = 1,
) -> ConvergenceCurve:
    """Median and quartiles of the validation error over repeated CSA/MC fits of u(1/2, z)."""
    family = _norm_family(family)
    families, iset = dictionary(family, d, n)
    if model is None:
        model = DiffusionModel(kl_decompose(d=d, sigma=sigma), CollocationSolver(P))
    if validator is None:
        validator = Validator(families, iset, model.qoi_batch, Q, derive_seed(seed, VALIDATION_KEY))
    jobs = [(i, t) for i in range(len(M_values)) for t in range(trials)]

    def run(i, t):
        return pde_trial(model, families, iset, strategy, n, int(M_values[i]), derive_seed(seed, i, t),
                         validator, tolerance)

    if threads > 1:
        from joblib import Parallel, delayed

        out = Parallel(n_jobs=threads, prefer="threads")(delayed(run)(i, t) for i, t in jobs)
    else:
        out = [run(i, t) for i, t in jobs]
    errs = [[out[k][0] for k, (i, _) in enumerate(jobs) if i == m] for m in range(len(M_values))]
    tols = [[out[k][1] for k, (i, _) in enumerate(jobs) if i == m] for m in range(len(M_values))]
    devs = [o[2] for o in out if not math.isnan(o[2])]
    q1, med, q3 = (np.percentile(errs, [25, 50, 75], axis=1)).tolist()
    return ConvergenceCurve(family, strategy, d, n, [int(m) for m in M_values], med, q1, q3, errs, tols,
                            max(devs) if devs else float("nan"))


def curve_json(curve: ConvergenceCurve) -> str:
    return json.dumps(asdict(curve))
