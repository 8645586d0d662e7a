"""Dependence estimation: for each body grid pair, maximize the four-quadrant
bivariate probit likelihood in the dependence coefficients, holding the
marginal indices fixed (the second step of the two-step estimator). The fitted
surface is extended off the body by nearest-body-point copying.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .data import GridSpec, Sample, nearest_body_index, validate
from .exceptions import EstimationError
from .marginals import MarginalFit, fit_marginal
from .normal import EPS_RHO, FixedThresholdBvn, bvn_cdf, bvn_pdf, link_rho

__all__ = [
    "BdrFit",
    "DepResult",
    "FitConfig",
    "dep_fisher_info",
    "dep_score",
    "fit_bdr",
    "fit_dependence",
    "joint_loglik",
    "quadrant_probs",
]

CELL_FLOOR = 1e-10
TOL_GRAD = 1e-8
POLISH_GRAD = 1e-12
MAX_ITER = 200
# Link index at which |tanh| reaches the correlation clamp; used when a
# degenerate quadrant pattern pushes the dependence to the boundary.
U_SAT = float(np.arctanh(1.0 - EPS_RHO))


def _normalize_weights(weights, n):
    if weights is None:
        return np.full(n, 1.0)
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise EstimationError(f"weights must have length {n}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise EstimationError("weights must be finite and nonnegative")
    total = w.sum()
    if total <= 0:
        raise EstimationError("weights must have positive total mass")
    return w * (n / total)


def quadrant_probs(a, b, rho):
    """The four joint-indicator probabilities per observation.

    p11 + p10 + p01 + p00 = 1 up to a few ulps for every row.
    """
    p11 = bvn_cdf(a, b, rho)
    p10 = bvn_cdf(a, -b, -rho)
    p01 = bvn_cdf(-a, b, -rho)
    p00 = bvn_cdf(-a, -b, rho)
    return p11, p10, p01, p00


class _CellKernel:
    """Precomputed state for repeated likelihood evaluations at one grid pair.

    Thresholds, indicator masks, weights, and the marginal CDF values are
    fixed within a dependence fit; only the correlation changes, so each
    iterate costs one quadrature pass. The lower three cells follow from the
    joint cell and the marginals (they sum to one by construction).
    """

    def __init__(self, x_dep, a, b, below_y, below_w, w):
        self.x_dep = np.asarray(x_dep, dtype=float)
        self.n = self.x_dep.shape[0]
        a = np.broadcast_to(np.asarray(a, dtype=float), (self.n,))
        b = np.broadcast_to(np.asarray(b, dtype=float), (self.n,))
        self.bvn = FixedThresholdBvn(a, b)
        self.pa = self.bvn.pa
        self.pb = self.bvn.pb
        fin = np.isfinite(a) & np.isfinite(b)
        self._fin = fin
        self._af = np.where(fin, a, 0.0)
        self._bf = np.where(fin, b, 0.0)
        self.iy = None if below_y is None else np.asarray(below_y, dtype=float)
        self.jw = None if below_w is None else np.asarray(below_w, dtype=float)
        self.w = w

    def cells(self, dep):
        u = self.x_dep @ np.asarray(dep, dtype=float)
        rho, gprime = link_rho(u)
        p11 = self.bvn.cdf(rho)
        p10 = np.maximum(self.pa - p11, 0.0)
        p01 = np.maximum(self.pb - p11, 0.0)
        p00 = np.maximum(1.0 - self.pa - self.pb + p11, 0.0)
        return rho, gprime, p11, p10, p01, p00

    def density(self, rho):
        return np.where(self._fin, bvn_pdf(self._af, self._bf, rho), 0.0)

    def loglik_and_score(self, dep):
        rho, gprime, p11, p10, p01, p00 = self.cells(dep)
        iy, jw = self.iy, self.jw
        c11 = np.maximum(p11, CELL_FLOOR)
        c10 = np.maximum(p10, CELL_FLOOR)
        c01 = np.maximum(p01, CELL_FLOOR)
        c00 = np.maximum(p00, CELL_FLOOR)
        active = (
            iy * jw * np.log(c11)
            + iy * (1.0 - jw) * np.log(c10)
            + (1.0 - iy) * jw * np.log(c01)
            + (1.0 - iy) * (1.0 - jw) * np.log(c00)
        )
        ratio = (
            iy * jw / c11
            - iy * (1.0 - jw) / c10
            - (1.0 - iy) * jw / c01
            + (1.0 - iy) * (1.0 - jw) / c00
        )
        dens = self.density(rho)
        ll = float(np.mean(self.w * active))
        grad = self.x_dep.T @ (self.w * ratio * dens * gprime) / self.n
        return ll, grad

    def fisher_info(self, dep):
        rho, gprime, p11, p10, p01, p00 = self.cells(dep)
        recip = (
            1.0 / np.maximum(p11, CELL_FLOOR)
            + 1.0 / np.maximum(p10, CELL_FLOOR)
            + 1.0 / np.maximum(p01, CELL_FLOOR)
            + 1.0 / np.maximum(p00, CELL_FLOOR)
        )
        dens = self.density(rho)
        scale = self.w * recip * dens * dens * gprime * gprime
        return (self.x_dep * scale[:, None]).T @ self.x_dep / self.n


def _kernel(x_dep, a, b, below_y, below_w, weights):
    w = _normalize_weights(weights, np.asarray(x_dep).shape[0])
    return _CellKernel(x_dep, a, b, below_y, below_w, w)


def joint_loglik(x_dep, a, b, dep, below_y, below_w, weights=None):
    """Average four-quadrant log-likelihood at fixed marginal indices."""
    ll, _ = _kernel(x_dep, a, b, below_y, below_w, weights).loglik_and_score(dep)
    return ll


def dep_score(x_dep, a, b, dep, below_y, below_w, weights=None):
    """Analytic gradient of joint_loglik in the dependence coefficients:
    the quadrant-signed reciprocal cells times the bivariate density and the
    link derivative."""
    _, grad = _kernel(x_dep, a, b, below_y, below_w, weights).loglik_and_score(dep)
    return grad


def dep_fisher_info(x_dep, a, b, dep, weights=None):
    """Expected negative Hessian in the dependence coefficients (the sum of
    reciprocal cells times the squared density and squared link derivative)."""
    w = _normalize_weights(weights, np.asarray(x_dep).shape[0])
    return _CellKernel(x_dep, a, b, None, None, w).fisher_info(dep)


@dataclass
class DepResult:
    coef: np.ndarray
    converged: bool
    iterations: int
    grad_norm: float
    loglik: float
    boundary: bool = False


def _newton_polish(kernel: _CellKernel, dep, tol, max_iter):
    """Fisher-scoring steps with halving until the gradient is negligible.

    Far from the optimum, steps must improve the objective. Once the gradient
    is small the objective is flat at float resolution, so steps are accepted
    on gradient-norm decrease instead; this pins the optimum tightly enough
    that refits (permuted rows, different starts) agree to ~1e-12.
    """
    coef = np.array(dep, dtype=float)
    ll, grad = kernel.loglik_and_score(coef)
    grad_norm = float(np.max(np.abs(grad)))
    it = 0
    while grad_norm > tol and it < max_iter:
        it += 1
        info = kernel.fisher_info(coef)
        try:
            step = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError:
            step = grad
        if not np.all(np.isfinite(step)):
            step = grad
        t = 1.0
        accepted = False
        on_objective = grad_norm > 1e-6
        for _ in range(40):
            trial = coef + t * step
            ll_trial, grad_trial = kernel.loglik_and_score(trial)
            gn_trial = float(np.max(np.abs(grad_trial)))
            ok = (
                np.isfinite(ll_trial) and ll_trial > ll
                if on_objective
                else np.isfinite(gn_trial) and gn_trial < grad_norm
            )
            if ok:
                coef, ll, grad, grad_norm = trial, ll_trial, grad_trial, gn_trial
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
    return coef, grad_norm, ll, it


def fit_dependence(x_dep, a, b, below_y, below_w, weights=None, start=None,
                   tol_grad=TOL_GRAD, max_iter=MAX_ITER,
                   method="bfgs") -> DepResult:
    """Maximize the quadrant likelihood in the dependence coefficients.

    method "bfgs" runs a quasi-Newton pass with the analytic score, then
    polishes with Fisher-scoring steps using the expected curvature; "newton"
    uses Fisher scoring throughout. Perfectly concordant or discordant cell
    patterns have no interior maximizer, so the fit is clamped at the link
    saturation bound with a warning.
    """
    x_dep = np.asarray(x_dep, dtype=float)
    below_y = np.asarray(below_y, dtype=float)
    below_w = np.asarray(below_w, dtype=float)
    n, d = x_dep.shape
    w = _normalize_weights(weights, n)

    mass = np.array(
        [
            np.sum(w * below_y * below_w),
            np.sum(w * below_y * (1.0 - below_w)),
            np.sum(w * (1.0 - below_y) * below_w),
            np.sum(w * (1.0 - below_y) * (1.0 - below_w)),
        ]
    )
    concordant = mass[1] == 0 and mass[2] == 0
    discordant = mass[0] == 0 and mass[3] == 0
    if concordant or discordant:
        kind = "concordant" if concordant else "discordant"
        warnings.warn(
            f"perfectly {kind} indicator cells: dependence clamped at the "
            "link saturation bound",
            RuntimeWarning,
            stacklevel=2,
        )
        coef = np.zeros(d)
        coef[0] = U_SAT if concordant else -U_SAT
        ll = joint_loglik(x_dep, a, b, coef, below_y, below_w, w)
        return DepResult(coef=coef, converged=True, iterations=0,
                         grad_norm=np.nan, loglik=ll, boundary=True)

    coef0 = np.zeros(d) if start is None else np.array(start, dtype=float)
    kernel = _CellKernel(x_dep, a, b, below_y, below_w, w)

    if method == "bfgs":
        def negated(c):
            ll, grad = kernel.loglik_and_score(c)
            return -ll, -grad

        res = optimize.minimize(
            negated, coef0, jac=True, method="BFGS",
            options={"gtol": 1e-6, "maxiter": max_iter},
        )
        coef0 = res.x if np.all(np.isfinite(res.x)) else coef0
        outer = int(res.nit)
    elif method == "newton":
        outer = 0
    else:
        raise ValueError(f"unknown method {method!r}")

    coef, grad_norm, ll, inner = _newton_polish(kernel, coef0, POLISH_GRAD, max_iter)
    converged = grad_norm <= tol_grad
    if not converged:
        raise EstimationError(
            "dependence fit did not converge",
            diagnostics={
                "grad_norm": grad_norm,
                "iterations": outer + inner,
                "last_coef": coef.tolist(),
            },
        )
    return DepResult(coef=coef, converged=True, iterations=outer + inner,
                     grad_norm=grad_norm, loglik=ll)


@dataclass(frozen=True)
class FitConfig:
    """Estimation settings shared by the fit and bootstrap entry points."""

    dep_cols: tuple[int, ...] | None = None  # design columns used for dependence
    tol_grad: float = TOL_GRAD
    max_iter: int = MAX_ITER
    dep_method: str = "bfgs"
    strict: bool = False  # abort on any per-grid-point failure


@dataclass
class BdrFit:
    """Fitted model: marginal coefficient paths, tail scales, and the
    dependence coefficients on the body grid, with per-point diagnostics."""

    grid: GridSpec
    y_marginal: MarginalFit
    w_marginal: MarginalFit
    dep_coef: np.ndarray  # (n_body_y, n_body_w, d_dep)
    dep_cols: tuple[int, ...]
    failures: list[tuple[float, float, str]] = field(default_factory=list)
    dep_iterations: int = 0

    @property
    def n_failed(self) -> int:
        return len(self.failures)

    def index_y(self, y: float, x: np.ndarray) -> np.ndarray:
        return self.y_marginal.index(y, x)

    def index_w(self, w: float, x: np.ndarray) -> np.ndarray:
        return self.w_marginal.index(w, x)

    def dep_at(self, y: float, w: float) -> np.ndarray:
        """Dependence coefficients at the nearest body pair (copy rule)."""
        iy = nearest_body_index(self.grid.y_body, y)
        iw = nearest_body_index(self.grid.w_body, w)
        return self.dep_coef[iy, iw]

    def local_rho(self, y: float, w: float, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        rho, _ = link_rho(x[:, self.dep_cols] @ self.dep_at(y, w))
        return rho

    def joint_cdf(self, y: float, w: float, x: np.ndarray,
                  zero_dependence: bool = False) -> np.ndarray:
        """Conditional joint CDF at (y, w) for each covariate row."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        a = self.index_y(y, x)
        b = self.index_w(w, x)
        if zero_dependence:
            rho = np.zeros(x.shape[0])
        else:
            rho = self.local_rho(y, w, x)
        return bvn_cdf(a, b, rho)


def fit_bdr(sample: Sample, grid: GridSpec, config: FitConfig = FitConfig(),
            weights=None, fixed_r0=None, base: "BdrFit | None" = None) -> BdrFit:
    """Run the full two-step estimator over the grid.

    When `base` is given (bootstrap replicates) the dependence step holds the
    base fit's marginal indices fixed and the tail fits reuse its auxiliary
    points; otherwise the replicate's own marginals are used.

    Per-pair dependence failures are recorded on the fit and the affected
    cells carry NaN coefficients, unless config.strict is set.
    """
    validate(sample)
    dep_cols = config.dep_cols if config.dep_cols is not None else tuple(
        range(sample.d_x)
    )
    x = np.asarray(sample.x, dtype=float)
    x_dep = x[:, dep_cols]

    if fixed_r0 is None and base is not None:
        fixed_r0 = (
            (base.y_marginal.r0_lo, base.y_marginal.r0_hi),
            (base.w_marginal.r0_lo, base.w_marginal.r0_hi),
        )
    y_marg = fit_marginal(sample.y, x, grid, "y", weights=weights,
                          fixed_r0=None if fixed_r0 is None else fixed_r0[0],
                          tol_grad=config.tol_grad, max_iter=config.max_iter)
    w_marg = fit_marginal(sample.w, x, grid, "w", weights=weights,
                          fixed_r0=None if fixed_r0 is None else fixed_r0[1],
                          tol_grad=config.tol_grad, max_iter=config.max_iter)

    # Dependence maximization holds the marginal indices fixed; replicates use
    # the original (base) marginal estimates.
    idx_source = base if base is not None else None
    y_body, w_body = grid.y_body, grid.w_body
    dep = np.empty((y_body.size, w_body.size, len(dep_cols)))
    failures = []
    total_iter = 0
    warm = None
    for iy, yv in enumerate(y_body):
        a = (idx_source.y_marginal if idx_source else y_marg).index(yv, x)
        below_y = (sample.y <= yv).astype(float)
        row_start = None
        for iw, wv in enumerate(w_body):
            b = (idx_source.w_marginal if idx_source else w_marg).index(wv, x)
            below_w = (sample.w <= wv).astype(float)
            start = warm if warm is not None else None
            try:
                res = fit_dependence(
                    x_dep, a, b, below_y, below_w, weights=weights, start=start,
                    tol_grad=config.tol_grad, max_iter=config.max_iter,
                    method=config.dep_method,
                )
            except EstimationError as err:
                if config.strict:
                    raise EstimationError(
                        f"dependence fit failed at grid pair ({yv:.6g}, {wv:.6g}): {err}",
                        diagnostics=getattr(err, "diagnostics", {}),
                    ) from err
                failures.append((float(yv), float(wv), str(err)))
                dep[iy, iw] = np.nan
                warm = None
                continue
            dep[iy, iw] = res.coef
            total_iter += res.iterations
            warm = res.coef
            if iw == 0:
                row_start = res.coef
        warm = row_start  # next row warm-starts from the start of this row

    return BdrFit(
        grid=grid,
        y_marginal=y_marg,
        w_marginal=w_marg,
        dep_coef=dep,
        dep_cols=tuple(dep_cols),
        failures=failures,
        dep_iterations=total_iter,
    )
