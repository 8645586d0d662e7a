"""Weighted-bootstrap inference: exchangeable weight draws, replicate fits of
the full model, ensemble application to functionals, and the IQR-based robust
standard error with percentile intervals.

One weight vector drives every sub-estimation of a replicate: the marginal
fits, the tail scales (at the base fit's auxiliary points), the dependence
fits (which hold the base marginal indices fixed), and the covariate
averaging of any functional computed from that replicate.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import GridSpec, Sample
from .dependence import BdrFit, FitConfig, fit_bdr
from .exceptions import EstimationError, InferenceError
from .normal import std_normal_quantile

__all__ = [
    "BootstrapEnsemble",
    "WeightScheme",
    "bootstrap_fit",
    "draw_weights",
    "ensemble_apply",
    "percentile_interval",
    "robust_se",
]

DEFAULT_DRAWS = 200
MAX_FAILURE_SHARE = 0.10
MIN_DRAWS_FOR_INFERENCE = 10
# Interquartile range of the standard normal, the denominator of the robust
# standard error.
_NORMAL_IQR = 2.0 * std_normal_quantile(0.75)


@dataclass(frozen=True)
class WeightScheme:
    """Exchangeable bootstrap weights.

    "exponential" draws i.i.d. unit exponentials (no zero weights, so no
    quadrant can be emptied by the reweighting); "multinomial" draws classic
    resampling counts. Weights are rescaled to mean one by default, which
    leaves every weighted maximizer unchanged relative to sum-one
    normalization while keeping the weighted objective on the unweighted
    scale; normalize="sum-one" is available for strict reproduction.
    """

    kind: str = "exponential"
    seed: int = 0
    normalize: str = "mean-one"

    def __post_init__(self):
        if self.kind not in ("exponential", "multinomial"):
            raise InferenceError(f"unknown weight scheme {self.kind!r}")
        if self.normalize not in ("mean-one", "sum-one", "none"):
            raise InferenceError(f"unknown normalization {self.normalize!r}")


def draw_weights(n: int, scheme: WeightScheme, replicate_id: int,
                 group: int = 0) -> np.ndarray:
    """Weight vector for one replicate; deterministic in (seed, replicate_id,
    group) and independent across groups and replicates."""
    if n < 1:
        raise InferenceError("need at least one observation")
    seq = np.random.SeedSequence([int(scheme.seed), int(group), int(replicate_id)])
    rng = np.random.default_rng(seq)
    if scheme.kind == "exponential":
        w = rng.standard_exponential(n)
    else:
        w = rng.multinomial(n, np.full(n, 1.0 / n)).astype(float)
    if scheme.normalize == "mean-one":
        return w * (n / w.sum())
    if scheme.normalize == "sum-one":
        return w / w.sum()
    return w


@dataclass
class BootstrapEnsemble:
    """Replicate fits keyed by replicate id, with the weight vector each one
    used (needed again when averaging functionals over covariates)."""

    scheme: WeightScheme
    n_requested: int
    draws: dict[int, BdrFit] = field(default_factory=dict)
    weights: dict[int, np.ndarray] = field(default_factory=dict)
    failed: dict[int, str] = field(default_factory=dict)

    @property
    def n_valid(self) -> int:
        return len(self.draws)

    def replicate_ids(self) -> list[int]:
        return sorted(self.draws)


def _run_replicate(args):
    sample, grid, config, scheme, base, group, rep = args
    w = draw_weights(sample.n, scheme, rep, group)
    try:
        fit = fit_bdr(sample, grid, config, weights=w, base=base)
    except EstimationError as err:
        return rep, None, None, str(err)
    if fit.n_failed:
        return rep, None, None, f"{fit.n_failed} grid cells failed"
    return rep, fit, w, None


def bootstrap_fit(sample: Sample, grid: GridSpec, config: FitConfig = FitConfig(),
                  n_draws: int = DEFAULT_DRAWS,
                  scheme: WeightScheme = WeightScheme(),
                  base: BdrFit | None = None, group: int = 0,
                  max_failure_share: float = MAX_FAILURE_SHARE,
                  workers: int = 1) -> BootstrapEnsemble:
    """Draw n_draws weighted refits of the full model.

    Each replicate reuses the base fit's tail auxiliary points and holds the
    base marginal indices fixed in the dependence step. Failed replicates are
    dropped and counted; more than max_failure_share failures aborts.

    Replicates are seeded by replicate id, so results do not depend on
    workers (the degree of parallelism).
    """
    if base is None:
        base = fit_bdr(sample, grid, config)
    ens = BootstrapEnsemble(scheme=scheme, n_requested=n_draws)
    jobs = [(sample, grid, config, scheme, base, group, rep) for rep in range(n_draws)]
    if workers > 1 and n_draws > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_replicate, jobs, chunksize=8))
    else:
        results = [_run_replicate(job) for job in jobs]
    for rep, fit, w, err in results:
        if err is not None:
            ens.failed[rep] = err
        else:
            ens.draws[rep] = fit
            ens.weights[rep] = w
    if n_draws and len(ens.failed) > max_failure_share * n_draws:
        raise InferenceError(
            f"{len(ens.failed)} of {n_draws} bootstrap replicates failed"
        )
    return ens


def ensemble_apply(ensembles: dict[int, BootstrapEnsemble],
                   fn) -> dict[int, object]:
    """Apply fn(replicate_fits_by_group, replicate_weights_by_group) across
    the replicates valid in every group's ensemble."""
    ids = None
    for ens in ensembles.values():
        cur = set(ens.draws)
        ids = cur if ids is None else ids & cur
    out = {}
    for rep in sorted(ids or ()):
        fits = {g: ens.draws[rep] for g, ens in ensembles.items()}
        wts = {g: ens.weights[rep] for g, ens in ensembles.items()}
        out[rep] = fn(fits, wts)
    return out


def _valid_draws(draws) -> np.ndarray:
    arr = np.asarray(draws, dtype=float).ravel()
    arr = arr[np.isfinite(arr)]
    if arr.size < MIN_DRAWS_FOR_INFERENCE:
        raise InferenceError(
            f"need at least {MIN_DRAWS_FOR_INFERENCE} valid draws, got {arr.size}"
        )
    return arr


def robust_se(draws) -> float:
    """Interquartile range of the draws divided by the interquartile range of
    the standard normal distribution."""
    arr = _valid_draws(draws)
    q25, q75 = np.quantile(arr, [0.25, 0.75])
    return float((q75 - q25) / _NORMAL_IQR)


def robust_se_map(draws_stack: np.ndarray) -> np.ndarray:
    """Cellwise robust_se over the leading (replicate) axis."""
    stack = np.asarray(draws_stack, dtype=float)
    if stack.shape[0] < MIN_DRAWS_FOR_INFERENCE:
        raise InferenceError(
            f"need at least {MIN_DRAWS_FOR_INFERENCE} draws, got {stack.shape[0]}"
        )
    q25, q75 = np.quantile(stack, [0.25, 0.75], axis=0)
    return (q75 - q25) / _NORMAL_IQR


def percentile_interval(draws, level: float) -> tuple[float, float]:
    """Equal-tailed empirical interval with linear interpolation between
    order statistics."""
    if not 0.0 < level < 1.0:
        raise InferenceError("level must lie in (0, 1)")
    arr = _valid_draws(draws)
    tail = (1.0 - level) / 2.0
    lo, hi = np.quantile(arr, [tail, 1.0 - tail])
    return float(lo), float(hi)
