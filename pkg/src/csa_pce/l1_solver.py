"""Basis pursuit (denoising) by a least-angle homotopy with the LASSO drop rule.

The homotopy follows the LASSO path ``min 0.5|Ax - b|^2 + lam |x|_1`` from
``lam = max|A^T b|`` down to zero and stops at the first point where the
residual reaches the tolerance ``epsilon``.  Since the residual norm is
non-increasing along the path, that point solves

    min |x|_1  subject to  |Ax - b|_2 <= epsilon.

Columns are used as given (no normalization).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import get_lapack_funcs

log = logging.getLogger(__name__)

CORR_TOL = 1e-10
# Steps between exact recomputation of residual and correlations.
REFRESH = 25

_trtrs, _potrs = get_lapack_funcs(("trtrs", "potrs"), (np.zeros(1),))
# Relative residual slack accepted as "interpolating" when epsilon == 0.
RESID_RTOL = 1e-9


@dataclass
class RecoveryProblem:
    A: np.ndarray
    b: np.ndarray
    epsilon: float = 0.0
    max_steps: int | None = None
    max_active: int | None = None

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.A.ndim != 2 or self.A.shape[0] < 1 or self.A.shape[1] < 1:
            raise ValueError("A must be a nonempty 2-d array")
        if self.b.shape != (self.A.shape[0],):
            raise ValueError(f"b has shape {self.b.shape}, expected ({self.A.shape[0]},)")
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be >= 0")
        M, N = self.A.shape
        if self.max_steps is None:
            self.max_steps = 10 * min(M, N)
        if self.max_active is None:
            self.max_active = min(M, N)


@dataclass
class PathStep:
    active: tuple[int, ...]
    coefficients: np.ndarray
    residual_norm: float
    lam: float


@dataclass
class RecoveryResult:
    """Solution of the constrained problem.

    ``status`` is ``"converged"`` when ``residual_norm <= epsilon`` up to a
    relative slack of ``RESID_RTOL * |b|`` (exact zero residuals are not
    reachable in floating point), ``"step-limit"`` when a limit stopped the
    path, ``"degenerate"`` when the equiangular system became singular, and
    ``"infeasible"`` when the path ended at lam = 0 above the tolerance.
    """

    coefficients: np.ndarray
    residual_norm: float
    steps: int
    status: str
    path: list[PathStep] = field(default_factory=list, repr=False)

    @property
    def active_size(self) -> int:
        return int(np.count_nonzero(self.coefficients))


class _Cholesky:
    """Cholesky factor L (lower) of A_I^T A_I with a column buffer for A_I."""

    def __init__(self, A: np.ndarray, kmax: int):
        self.A = A
        self.L = np.zeros((kmax, kmax), order="F")
        self.AI = np.zeros((A.shape[0], kmax), order="F")
        self.k = 0

    def add(self, j: int) -> bool:
        k = self.k
        col = self.A[:, j]
        cc = float(col @ col)
        if k == 0:
            if cc <= 0:
                return False
            self.L[0, 0] = np.sqrt(cc)
        else:
            g = self.AI[:, :k].T @ col
            w, info = _trtrs(self.L[:k, :k], g, lower=1)
            diag2 = cc - float(w @ w)
            if info != 0 or diag2 <= 1e-12 * cc:
                return False
            self.L[k, :k] = w
            self.L[k, k] = np.sqrt(diag2)
        self.AI[:, k] = col
        self.k = k + 1
        return True

    def remove(self, p: int) -> None:
        """Delete position p and restore triangularity with Givens rotations."""
        k = self.k
        L = self.L
        L[p : k - 1, :k] = L[p + 1 : k, :k]
        L[k - 1, :k] = 0.0
        for j in range(p, k - 1):
            a, b = L[j, j], L[j, j + 1]
            rho = np.hypot(a, b)
            if rho == 0:
                continue
            cs, sn = a / rho, b / rho
            cj = L[j : k - 1, j].copy()
            cj1 = L[j : k - 1, j + 1]
            L[j : k - 1, j] = cs * cj + sn * cj1
            L[j : k - 1, j + 1] = -sn * cj + cs * cj1
            if L[j, j] < 0:
                L[j : k - 1, j] *= -1
        L[:, k - 1] = 0.0
        self.AI[:, p : k - 1] = self.AI[:, p + 1 : k]
        self.k = k - 1

    def healthy(self) -> bool:
        d = np.abs(np.diag(self.L[: self.k, : self.k]))
        return self.k == 0 or (d.min() > 1e-8 * d.max())

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        x, info = _potrs(self.L[: self.k, : self.k], rhs, lower=1)
        return x


def _cross_time(r0: np.ndarray, du: np.ndarray, eps: float, tmax: float) -> float | None:
    """Smallest t in [0, tmax] with |r0 - t du| = eps, if the segment reaches it."""
    uu = float(du @ du)
    ru = float(r0 @ du)
    rr = float(r0 @ r0)
    end = rr - 2 * tmax * ru + tmax * tmax * uu
    if end > eps * eps:
        return None
    if uu == 0:
        return 0.0
    disc = max(ru * ru - uu * (rr - eps * eps), 0.0)
    t = (ru - np.sqrt(disc)) / uu
    return float(min(max(t, 0.0), tmax))


def lars_lasso_path(problem: RecoveryProblem, record: bool = True) -> RecoveryResult:
    """Run the LARS-LASSO homotopy; returns the final iterate and (optionally) the path.

    Ties between entering columns go to the lowest index.  A coefficient that
    crosses zero is dropped before anything else enters.
    """
    A, b, eps = problem.A, problem.b, float(problem.epsilon)
    M, N = A.shape
    x = np.zeros(N)
    r = b.copy()
    c = A.T @ r
    path: list[PathStep] = []
    bnorm = float(np.linalg.norm(b))
    slack = RESID_RTOL * max(bnorm, 1.0)

    def snapshot(lam):
        if record:
            path.append(PathStep(tuple(active), x.copy(), float(np.linalg.norm(r)), float(lam)))

    active: list[int] = []
    lam = float(np.max(np.abs(c)))
    snapshot(lam)
    if bnorm <= eps or lam <= CORR_TOL:
        status = "converged" if bnorm <= eps + slack else "infeasible"
        return RecoveryResult(x, bnorm, 0, status, path)

    kmax = min(problem.max_active, M, N)
    chol = _Cholesky(A, kmax)
    is_active = np.zeros(N, dtype=bool)
    # Column dropped on the previous step and the sign of its correlation;
    # only its same-sign re-entry (at gamma ~ 0) is excluded.
    banned, banned_sign = -1, 0.0

    status = "step-limit"
    steps = 0
    while steps < problem.max_steps:
        steps += 1
        if not active:
            j0 = int(np.flatnonzero(np.abs(c) >= lam * (1 - 1e-14))[0])
            chol.add(j0)
            active.append(j0)
            is_active[j0] = True
        k = chol.k
        sgn = np.sign(c[active])
        dI = chol.solve(sgn)
        u = chol.AI[:, :k] @ dI
        a = A.T @ u

        gamma = lam
        event, who = "end", -1
        full = k >= kmax
        if not full:
            with np.errstate(divide="ignore", invalid="ignore"):
                g1 = (lam - c) / (1 - a)
                g2 = (lam + c) / (1 + a)
            g1[~(1 - a > 1e-14)] = np.inf
            g2[~(1 + a > 1e-14)] = np.inf
            if banned >= 0:
                if banned_sign > 0:
                    g1[banned] = np.inf
                else:
                    g2[banned] = np.inf
            g = np.minimum(g1, g2)
            g[is_active] = np.inf
            g[g <= 1e-13 * lam] = np.inf
            j = int(np.argmin(g))
            if g[j] < gamma:
                gamma, event, who = float(g[j]), "add", j
        xI = x[active]
        with np.errstate(divide="ignore", invalid="ignore"):
            gd = -xI / dI
        gd[~(gd > 1e-13 * lam)] = np.inf
        p = int(np.argmin(gd))
        if gd[p] <= gamma:
            gamma, event, who = float(gd[p]), "drop", p

        t = _cross_time(r, u, eps, gamma) if eps > 0 else None
        if t is not None:
            x[active] = xI + t * dI
            r = b - A @ x
            snapshot(lam - t)
            status = "converged"
            break

        x[active] = xI + gamma * dI
        if steps % REFRESH == 0 or event == "end":
            r = b - A @ x
            c = A.T @ r
        else:
            r -= gamma * u
            c -= gamma * a
        banned = -1

        if event == "drop":
            j = active.pop(who)
            x[j] = 0.0
            is_active[j] = False
            banned, banned_sign = j, float(np.sign(c[j]))
            chol.remove(who)
            if not chol.healthy():
                status = "degenerate"
                snapshot(lam - gamma)
                break
        elif event == "add":
            if not chol.add(who):
                status = "degenerate"
                snapshot(lam - gamma)
                break
            active.append(who)
            is_active[who] = True
        lam = float(np.max(np.abs(c[active]))) if active else lam - gamma
        snapshot(lam)

        rn = float(np.linalg.norm(r))
        if event == "end" or lam <= CORR_TOL:
            if rn <= eps + slack:
                status = "converged"
            elif full and kmax < min(M, N):
                status = "step-limit"
            else:
                status = "infeasible"
            break
        if rn <= eps:
            status = "converged"
            break

    r = b - A @ x
    rn = float(np.linalg.norm(r))
    if status == "step-limit":
        log.debug("homotopy stopped at the step limit (%d steps)", steps)
    return RecoveryResult(x, rn, steps, status, path)


def bpdn(problem: RecoveryProblem, record: bool = False) -> RecoveryResult:
    """min |x|_1 s.t. |Ax - b|_2 <= epsilon; epsilon = 0 is basis pursuit."""
    return lars_lasso_path(problem, record=record)


def bpdn_transformed(problem: RecoveryProblem, T: np.ndarray, record: bool = False) -> RecoveryResult:
    """min |T x|_1 s.t. |Ax - b|_2 <= epsilon for symmetric positive definite T.

    Solved in the variable beta = T x; the returned coefficients are x.
    """
    T = np.asarray(T, dtype=float)
    N = problem.A.shape[1]
    if T.shape != (N, N):
        raise ValueError(f"transform must be {N}x{N}")
    cond = np.linalg.cond(T)
    if not np.isfinite(cond) or cond > 1e12:
        raise ValueError(f"transform is ill-conditioned (cond = {cond:.3e})")
    B = np.ascontiguousarray(np.linalg.solve(T.T, problem.A.T).T)
    inner = RecoveryProblem(B, problem.b, problem.epsilon, problem.max_steps, problem.max_active)
    res = bpdn(inner, record=record)
    alpha = np.linalg.solve(T, res.coefficients)
    if record:
        for st in res.path:
            st.coefficients = np.linalg.solve(T, st.coefficients)
    return RecoveryResult(alpha, res.residual_norm, res.steps, res.status, res.path)


def solution_at(path: list[PathStep], A: np.ndarray, b: np.ndarray, eps: float) -> np.ndarray:
    """Coefficients on a recorded path where the residual first reaches ``eps``."""
    prev = path[0]
    if prev.residual_norm <= eps:
        return prev.coefficients.copy()
    r_prev = b - A @ prev.coefficients
    for st in path[1:]:
        delta = st.coefficients - prev.coefficients
        du = A @ delta
        t = _cross_time(r_prev, du, eps, 1.0)
        if t is not None:
            return prev.coefficients + t * delta
        prev, r_prev = st, b - A @ st.coefficients
    return prev.coefficients.copy()


def kkt_violation(A: np.ndarray, b: np.ndarray, step: PathStep) -> float:
    """Largest breach of the LASSO optimality conditions at a path point.

    Active columns must have |a_j^T r| equal to the common level and share the
    sign of their coefficient; inactive ones must not exceed the level.
    """
    r = b - A @ step.coefficients
    c = A.T @ r
    act = list(step.active)
    if not act:
        return 0.0
    level = step.lam
    worst = float(np.max(np.abs(np.abs(c[act]) - level)))
    nz = [j for j in act if step.coefficients[j] != 0]
    if nz:
        bad = np.sign(step.coefficients[nz]) != np.sign(c[nz])
        if np.any(bad & (np.abs(c[nz]) > 1e-12)):
            worst = max(worst, float(np.max(np.abs(c[nz]))))
    inact = np.setdiff1d(np.arange(A.shape[1]), act)
    if len(inact):
        worst = max(worst, float(np.max(np.abs(c[inact]))) - level)
    return worst
