"""Marginal distribution regression: a probit fit of 1(R <= r) on X at every
body grid point, plus the one-parameter tail-scale fits that extend the index
affinely beyond the body.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .data import GridSpec, nearest_body_index
from .exceptions import EstimationError, TailError

__all__ = [
    "MarginalFit",
    "ProbitResult",
    "fit_marginal",
    "fit_probit_dr",
    "fit_tail_scale",
    "marginal_index",
    "probit_loglik",
    "probit_score",
]

TOL_GRAD = 1e-8
MAX_ITER = 200
# Polish past the contract tolerance so refits (permuted data, warm vs cold
# starts) land on the same point to well below 1e-8.
POLISH_GRAD = 1e-12
PROB_FLOOR = 1e-10


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
    # Mean-one scaling: leaves every maximizer unchanged and keeps weighted
    # and unweighted objectives on the same scale.
    return w * (n / total)


def _clip_prob(p):
    return np.clip(p, PROB_FLOOR, 1.0 - PROB_FLOOR)


def probit_loglik(x, below, coef, weights=None, offset=None):
    """Average probit log-likelihood of the indicator `below` on design x."""
    n = x.shape[0]
    w = _normalize_weights(weights, n)
    idx = x @ coef
    if offset is not None:
        idx = idx + offset
    p = _clip_prob(special.ndtr(idx))
    return float(np.mean(w * (below * np.log(p) + (1.0 - below) * np.log1p(-p))))


def probit_score(x, below, coef, weights=None, offset=None):
    """Analytic gradient of probit_loglik with respect to coef."""
    n = x.shape[0]
    w = _normalize_weights(weights, n)
    idx = x @ coef
    if offset is not None:
        idx = idx + offset
    p = _clip_prob(special.ndtr(idx))
    lam = np.exp(-0.5 * idx * idx) / np.sqrt(2.0 * np.pi) / (p * (1.0 - p))
    return x.T @ (w * lam * (below - p)) / n


@dataclass
class ProbitResult:
    coef: np.ndarray
    converged: bool
    iterations: int
    grad_norm: float
    loglik: float


def fit_probit_dr(x, below, weights=None, warm_start=None, offset=None,
                  tol_grad=TOL_GRAD, max_iter=MAX_ITER) -> ProbitResult:
    """Maximize the (weighted) probit log-likelihood by damped Newton steps.

    Uses the expected-Hessian (Fisher scoring) curvature with step-halving
    line search. `offset` is added to the linear index but carries no free
    parameter, which is how the one-parameter tail fits reuse this routine.
    """
    x = np.asarray(x, dtype=float)
    below = np.asarray(below, dtype=float)
    n, d = x.shape
    w = _normalize_weights(weights, n)

    mass_below = np.sum(w * below)
    mass_above = np.sum(w * (1.0 - below))
    if mass_below <= 0 or mass_above <= 0:
        raise EstimationError(
            "indicator is one-sided at this threshold (no mass on one side)",
            diagnostics={"mass_below": mass_below, "mass_above": mass_above},
        )

    coef = np.zeros(d) if warm_start is None else np.array(warm_start, dtype=float)

    def evaluate(c):
        idx = x @ c
        if offset is not None:
            idx = idx + offset
        p = _clip_prob(special.ndtr(idx))
        ll = np.mean(w * (below * np.log(p) + (1.0 - below) * np.log1p(-p)))
        phi = np.exp(-0.5 * idx * idx) / np.sqrt(2.0 * np.pi)
        denom = p * (1.0 - p)
        grad = x.T @ (w * phi / denom * (below - p)) / n
        fisher = w * phi * phi / denom
        return ll, grad, fisher

    ll, grad, fisher = evaluate(coef)
    grad_norm = float(np.max(np.abs(grad)))
    # Steps must improve the objective while the gradient is large; once it is
    # small the objective is flat at float resolution, so acceptance switches
    # to gradient-norm decrease, pinning the optimum to ~1e-12.
    for it in range(1, max_iter + 1):
        if grad_norm <= POLISH_GRAD:
            break
        info = (x * fisher[:, None]).T @ x / n
        try:
            step = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError:
            step = grad  # near-singular curvature: plain ascent direction
        if not np.all(np.isfinite(step)):
            step = grad

        t = 1.0
        accepted = False
        on_objective = grad_norm > 1e-6
        for _ in range(40):
            trial = coef + t * step
            ll_trial, grad_trial, fisher_trial = evaluate(trial)
            gn_trial = float(np.max(np.abs(grad_trial)))
            ok = (
                np.isfinite(ll_trial) and ll_trial > ll
                if on_objective
                else np.isfinite(gn_trial) and gn_trial < grad_norm
            )
            if ok:
                coef, ll, grad, fisher, grad_norm = (
                    trial, ll_trial, grad_trial, fisher_trial, gn_trial
                )
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break  # no progress available at floating-point resolution

    converged = grad_norm <= tol_grad
    if not converged:
        raise EstimationError(
            "probit fit did not converge (possible separation)",
            diagnostics={
                "iterations": it,
                "grad_norm": grad_norm,
                "coef_norm": float(np.linalg.norm(coef)),
            },
        )
    return ProbitResult(coef=coef, converged=converged, iterations=it,
                        grad_norm=grad_norm, loglik=float(ll))


def _admissible_tail_points(values, anchor, direction, min_obs):
    """Auxiliary tail points, nearest first, satisfying the count condition:
    at least min_obs observations strictly between the anchor and the point,
    and at least min_obs strictly beyond the point."""
    values = np.asarray(values, dtype=float)
    if direction == "upper":
        beyond = np.sort(values[values > anchor])
        uniq = np.unique(beyond)
        between = np.searchsorted(beyond, uniq, side="left")
        outside = beyond.size - np.searchsorted(beyond, uniq, side="right")
        return list(uniq[(between >= min_obs) & (outside >= min_obs)])
    below = np.sort(values[values < anchor])
    uniq = np.unique(below)
    between = below.size - np.searchsorted(below, uniq, side="right")
    outside = np.searchsorted(below, uniq, side="left")
    keep = uniq[(between >= min_obs) & (outside >= min_obs)]
    return list(keep[::-1])


@dataclass
class TailFit:
    alpha: float
    r0: float
    iterations: int


def fit_tail_scale(values, x, coef_anchor, anchor, direction, min_obs,
                   weights=None, r0=None) -> TailFit:
    """Fit the positive tail scale by profiling the likelihood at one
    auxiliary point beyond the body.

    direction is "upper" or "lower". When r0 is given (bootstrap replicates
    reuse the point chosen by the base fit) no search is performed. Otherwise
    admissible points are tried nearest-first until one yields alpha > 0.
    """
    values = np.asarray(values, dtype=float)
    x = np.asarray(x, dtype=float)
    offset = x @ np.asarray(coef_anchor, dtype=float)

    if r0 is not None:
        candidates = [float(r0)]
    else:
        candidates = _admissible_tail_points(values, anchor, direction, min_obs)
        if not candidates:
            raise TailError(
                f"no admissible {direction}-tail point beyond anchor {anchor}: "
                f"widen the body or reduce tail_min_obs={min_obs}"
            )

    last = None
    for cand in candidates:
        below = (values <= cand).astype(float)
        design = np.full((values.shape[0], 1), cand - anchor)
        res = fit_probit_dr(design, below, weights=weights, offset=offset,
                            warm_start=np.array([1.0]))
        alpha = float(res.coef[0])
        last = (alpha, cand, res.iterations)
        if alpha > 0:
            return TailFit(alpha=alpha, r0=cand, iterations=res.iterations)
    raise TailError(
        f"tail scale non-positive at every admissible {direction}-tail point "
        f"(last alpha={last[0]:.3g} at r0={last[1]:.6g})"
    )


@dataclass
class MarginalFit:
    """Per-threshold probit coefficients on the body grid plus the two tail
    scales and the auxiliary points they were fitted at."""

    body: np.ndarray
    coef: np.ndarray  # (n_body, d_x)
    alpha_lo: float
    alpha_hi: float
    r0_lo: float
    r0_hi: float
    iterations: list[int] = field(default_factory=list)

    @property
    def anchor_lo(self) -> float:
        return float(self.body[0])

    @property
    def anchor_hi(self) -> float:
        return float(self.body[-1])

    def coef_at(self, r: float) -> np.ndarray:
        """Coefficient vector at the nearest body threshold."""
        return self.coef[nearest_body_index(self.body, r)]

    def index(self, r: float, x: np.ndarray) -> np.ndarray:
        """Linear index x'coef at threshold r, extrapolated beyond the body.

        Inside the body range the nearest fitted threshold is used; beyond it
        the index is affine in r with the fitted tail scale, so it is
        continuous at the anchors. +/-inf thresholds give +/-inf indices.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if np.isposinf(r):
            return np.full(x.shape[0], np.inf)
        if np.isneginf(r):
            return np.full(x.shape[0], -np.inf)
        if r > self.anchor_hi:
            return x @ self.coef[-1] + (r - self.anchor_hi) * self.alpha_hi
        if r < self.anchor_lo:
            return x @ self.coef[0] + (r - self.anchor_lo) * self.alpha_lo
        return x @ self.coef_at(r)


def marginal_index(fit: MarginalFit, r: float, x: np.ndarray) -> np.ndarray:
    return fit.index(r, x)


def fit_marginal(values, x, grid: GridSpec, outcome: str, weights=None,
                 warm_starts=None, fixed_r0=None, tol_grad=TOL_GRAD,
                 max_iter=MAX_ITER) -> MarginalFit:
    """Run the probit fits over one outcome's body grid, then both tail fits.

    outcome selects "y" or "w" in the grid. Fits sweep the body in ascending
    order with warm starts from the previous threshold; warm starting only
    changes the iteration count, not the solution.
    """
    body = grid.y_body if outcome == "y" else grid.w_body
    values = np.asarray(values, dtype=float)
    x = np.asarray(x, dtype=float)

    coefs = np.empty((body.size, x.shape[1]))
    iters = []
    warm = None
    for i, r in enumerate(body):
        start = warm_starts[i] if warm_starts is not None else warm
        below = (values <= r).astype(float)
        try:
            res = fit_probit_dr(x, below, weights=weights, warm_start=start,
                                tol_grad=tol_grad, max_iter=max_iter)
        except EstimationError as err:
            raise EstimationError(
                f"marginal {outcome} fit failed at grid point {r:.6g}: {err}",
                diagnostics=getattr(err, "diagnostics", {}),
            ) from err
        coefs[i] = res.coef
        iters.append(res.iterations)
        warm = res.coef

    lo_r0, hi_r0 = (fixed_r0 if fixed_r0 is not None else (None, None))
    lo = fit_tail_scale(values, x, coefs[0], float(body[0]), "lower",
                        grid.tail_min_obs, weights=weights, r0=lo_r0)
    hi = fit_tail_scale(values, x, coefs[-1], float(body[-1]), "upper",
                        grid.tail_min_obs, weights=weights, r0=hi_r0)
    return MarginalFit(
        body=body,
        coef=coefs,
        alpha_lo=lo.alpha,
        alpha_hi=hi.alpha,
        r0_lo=lo.r0,
        r0_hi=hi.r0,
        iterations=iters,
    )
