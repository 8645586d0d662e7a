"""Functionals of the fitted model: counterfactual joint CDF surfaces, the
composition/sorting/marginals decomposition, transition matrices and their
decomposition, and the zero-dependence counterfactual.

Counterfactual surfaces average the conditional CDF over one group's
covariate rows while borrowing coefficient paths from (possibly) other
groups; the four-slot index records who supplies what.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Sample
from .dependence import BdrFit
from .exceptions import ConfigError, DataError
from .normal import bvn_cdf

__all__ = [
    "CounterfactualIndex",
    "DecompositionReport",
    "JointCdfSurface",
    "TransitionMatrix",
    "conditional_joint_cdf",
    "counterfactual_joint_cdf",
    "decompose_joint",
    "decompose_transition",
    "independence_counterfactual",
    "transition_from_fits",
    "transition_matrix",
]

SHARE_FLOOR = 1e-3

# The decomposition path: total split into composition, sorting, and the two
# marginal effects, telescoping through these five counterfactual indices.
_PATH = ("1111", "1110", "1100", "1000", "0000")
_COMPONENTS = ("composition", "sorting", "marginal_w", "marginal_y")


@dataclass(frozen=True)
class CounterfactualIndex:
    """Which group supplies each ingredient: the Y-marginal coefficients, the
    W-marginal coefficients, the dependence coefficients, and the covariate
    distribution."""

    y_group: int
    w_group: int
    dep_group: int
    x_group: int

    @classmethod
    def parse(cls, code: str) -> "CounterfactualIndex":
        if len(code) != 4 or any(c not in "01" for c in code):
            raise ConfigError(f"counterfactual index must be 4 binary digits, got {code!r}")
        return cls(*(int(c) for c in code))

    def __str__(self) -> str:
        return f"{self.y_group}{self.w_group}{self.dep_group}{self.x_group}"


@dataclass
class JointCdfSurface:
    """Counterfactual joint CDF evaluated on a rectangular threshold grid."""

    values: np.ndarray  # (n_y, n_w)
    y_values: np.ndarray
    w_values: np.ndarray
    index: CounterfactualIndex | None = None
    provenance: str = ""


def conditional_joint_cdf(fit: BdrFit, y: float, w: float, x,
                          zero_dependence: bool = False) -> np.ndarray:
    """Conditional joint CDF at one threshold pair, per covariate row."""
    return fit.joint_cdf(y, w, x, zero_dependence=zero_dependence)


def _x_average(x, x_weights):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x_weights is None:
        wts = np.full(x.shape[0], 1.0 / x.shape[0])
    else:
        wts = np.asarray(x_weights, dtype=float)
        if wts.shape != (x.shape[0],):
            raise DataError("x_weights must match the covariate row count")
        total = wts.sum()
        if total <= 0:
            raise DataError("x_weights must have positive total mass")
        wts = wts / total
    return x, wts


def _surface(y_fit: BdrFit, w_fit: BdrFit, dep_fit: BdrFit | None, x,
             y_values, w_values, x_weights=None) -> np.ndarray:
    """Average Phi2(index_y, index_w; rho) over covariate rows on a grid.

    dep_fit None means the zero-dependence counterfactual.
    """
    x, wts = _x_average(x, x_weights)
    y_values = np.asarray(y_values, dtype=float)
    w_values = np.asarray(w_values, dtype=float)
    a_cols = [y_fit.y_marginal.index(yv, x) for yv in y_values]
    b_cols = [w_fit.w_marginal.index(wv, x) for wv in w_values]
    out = np.empty((y_values.size, w_values.size))
    zero = np.zeros(x.shape[0])
    for iy, yv in enumerate(y_values):
        for iw, wv in enumerate(w_values):
            rho = zero if dep_fit is None else dep_fit.local_rho(yv, wv, x)
            out[iy, iw] = wts @ bvn_cdf(a_cols[iy], b_cols[iw], rho)
    return out


def counterfactual_joint_cdf(fits, samples, index: CounterfactualIndex,
                             y_values=None, w_values=None,
                             x_weights=None) -> JointCdfSurface:
    """Plug-in counterfactual surface for one four-slot index.

    fits and samples are mappings keyed by group label. Evaluation grids
    default to the estimation grids of the coefficient-supplying groups.
    x_weights, when given, is a mapping from group label to covariate-
    averaging weights (bootstrap draws weight the rows of the covariate
    group).
    """
    if isinstance(index, str):
        index = CounterfactualIndex.parse(index)
    try:
        y_fit = fits[index.y_group]
        w_fit = fits[index.w_group]
        dep_fit = fits[index.dep_group]
        sample = samples[index.x_group]
    except KeyError as missing:
        raise ConfigError(f"no fit/sample for group {missing}") from None
    if y_values is None:
        y_values = y_fit.grid.y_grid
    if w_values is None:
        w_values = w_fit.grid.w_grid
    wts = None if x_weights is None else x_weights.get(index.x_group)
    values = _surface(y_fit, w_fit, dep_fit, sample.x, y_values, w_values, wts)
    return JointCdfSurface(
        values=values,
        y_values=np.asarray(y_values, dtype=float),
        w_values=np.asarray(w_values, dtype=float),
        index=index,
        provenance=f"groups={sorted(fits)} index={index}",
    )


def independence_counterfactual(fit: BdrFit, sample: Sample, y_values=None,
                                w_values=None, x_weights=None) -> JointCdfSurface:
    """Surface with the local correlation forced to zero for every row and
    threshold pair: the covariate-averaged product of the marginal CDFs."""
    if y_values is None:
        y_values = fit.grid.y_grid
    if w_values is None:
        w_values = fit.grid.w_grid
    values = _surface(fit, fit, None, sample.x, y_values, w_values, x_weights)
    return JointCdfSurface(
        values=values,
        y_values=np.asarray(y_values, dtype=float),
        w_values=np.asarray(w_values, dtype=float),
        index=None,
        provenance="zero-dependence counterfactual",
    )


def fitted_surface(fit: BdrFit, sample: Sample, y_values=None, w_values=None,
                   x_weights=None) -> JointCdfSurface:
    """Covariate-averaged fitted joint CDF for a single group."""
    if y_values is None:
        y_values = fit.grid.y_grid
    if w_values is None:
        w_values = fit.grid.w_grid
    values = _surface(fit, fit, fit, sample.x, y_values, w_values, x_weights)
    return JointCdfSurface(
        values=values,
        y_values=np.asarray(y_values, dtype=float),
        w_values=np.asarray(w_values, dtype=float),
        index=None,
        provenance="fitted surface",
    )


@dataclass
class DecompositionReport:
    """Five-way split of a group difference; components telescope to the
    total entrywise. kind is "cdf" or "transition"."""

    total: np.ndarray
    composition: np.ndarray
    sorting: np.ndarray
    marginal_w: np.ndarray
    marginal_y: np.ndarray
    y_values: np.ndarray
    w_values: np.ndarray
    kind: str = "cdf"

    def components(self) -> dict[str, np.ndarray]:
        return {
            "total": self.total,
            "composition": self.composition,
            "sorting": self.sorting,
            "marginal_w": self.marginal_w,
            "marginal_y": self.marginal_y,
        }

    def shares(self, floor: float = SHARE_FLOOR) -> dict[str, np.ndarray]:
        """Components as fractions of the total, NaN where |total| < floor
        (the total can sit arbitrarily close to zero)."""
        out = {}
        guard = np.abs(self.total) >= floor
        with np.errstate(divide="ignore", invalid="ignore"):
            for name in _COMPONENTS:
                comp = getattr(self, name)
                out[name] = np.where(guard, comp / self.total, np.nan)
        return out


def _decomposition_from_values(values: dict[str, np.ndarray], y_values, w_values,
                               direction, kind: str) -> DecompositionReport:
    sign = 1.0
    if tuple(direction) == (0, 1):
        sign = -1.0
    elif tuple(direction) != (1, 0):
        raise ConfigError("direction must be (1, 0) or (0, 1)")
    steps = [values[c] - values[n] for c, n in zip(_PATH, _PATH[1:])]
    return DecompositionReport(
        total=sign * (values["1111"] - values["0000"]),
        composition=sign * steps[0],
        sorting=sign * steps[1],
        marginal_w=sign * steps[2],
        marginal_y=sign * steps[3],
        y_values=np.asarray(y_values, dtype=float),
        w_values=np.asarray(w_values, dtype=float),
        kind=kind,
    )


def decompose_joint(fits, samples, y_values=None, w_values=None, direction=(1, 0),
                    x_weights=None) -> DecompositionReport:
    """Split the group difference in covariate-averaged joint CDFs into
    composition, sorting, and the two marginal effects.

    Surfaces for every path index are evaluated at common thresholds
    (defaulting to group 1's estimation grid). The telescoping path is
    anchored at the group labels; direction=(0, 1) reports the reverse
    comparison, which negates every component.
    """
    if y_values is None:
        y_values = fits[1].grid.y_grid
    if w_values is None:
        w_values = fits[1].grid.w_grid
    values = {
        code: counterfactual_joint_cdf(
            fits, samples, code, y_values, w_values, x_weights
        ).values
        for code in _PATH
    }
    return _decomposition_from_values(values, y_values, w_values, direction, "cdf")


@dataclass
class TransitionMatrix:
    """Bracket probabilities from four-corner differencing of a surface."""

    cells: np.ndarray  # (J, K)
    y_cuts: np.ndarray  # length J + 1
    w_cuts: np.ndarray  # length K + 1

    @property
    def total_mass(self) -> float:
        return float(self.cells.sum())

    @property
    def min_cell(self) -> float:
        return float(self.cells.min())


def _validate_cuts(cuts) -> np.ndarray:
    cuts = np.asarray(cuts, dtype=float)
    if cuts.size < 2:
        raise DataError("need at least two cut values")
    if np.any(np.isnan(cuts)) or np.any(np.diff(cuts) <= 0):
        raise DataError("cuts must be sorted and distinct")
    return cuts


def _second_difference(values: np.ndarray) -> np.ndarray:
    return np.diff(np.diff(values, axis=0), axis=1)


def _locate(axis: np.ndarray, cuts: np.ndarray) -> np.ndarray:
    """Indices of the cut values on the surface axis (up to float rounding)."""
    idx = np.empty(cuts.size, dtype=int)
    for i, c in enumerate(np.asarray(cuts, dtype=float)):
        if np.isinf(c):
            hits = np.flatnonzero(axis == c)
        else:
            hits = np.flatnonzero(np.abs(axis - c) <= 1e-9 * (1.0 + abs(c)))
        if hits.size == 0:
            raise DataError(f"cut {c!r} is not an evaluation point of the surface")
        idx[i] = hits[0]
    return idx


def transition_matrix(surface: JointCdfSurface, y_cuts=None, w_cuts=None) -> TransitionMatrix:
    """Cell (j, k) = F(y_j, w_k) - F(y_{j-1}, w_k) - F(y_j, w_{k-1})
    + F(y_{j-1}, w_{k-1}), over the given cut grids.

    Cuts default to the surface axes; otherwise they must be a subset of
    them. With +/-inf outermost cuts the cells sum to one.
    """
    y_cuts = surface.y_values if y_cuts is None else _validate_cuts(y_cuts)
    w_cuts = surface.w_values if w_cuts is None else _validate_cuts(w_cuts)
    yi = _locate(surface.y_values, y_cuts)
    wi = _locate(surface.w_values, w_cuts)
    sub = surface.values[np.ix_(yi, wi)]
    return TransitionMatrix(
        cells=_second_difference(sub),
        y_cuts=np.asarray(y_cuts, dtype=float),
        w_cuts=np.asarray(w_cuts, dtype=float),
    )


def transition_from_fits(fits, samples, index, y_cuts, w_cuts,
                         x_weights=None) -> TransitionMatrix:
    """Counterfactual transition matrix, evaluating the surface at the cuts."""
    y_cuts = _validate_cuts(y_cuts)
    w_cuts = _validate_cuts(w_cuts)
    surf = counterfactual_joint_cdf(fits, samples, index, y_cuts, w_cuts, x_weights)
    return transition_matrix(surf)


def decompose_transition(fits, samples, y_cuts, w_cuts, direction=(1, 0),
                         x_weights=None) -> DecompositionReport:
    """Five-way decomposition of the group difference in transition matrices."""
    y_cuts = _validate_cuts(y_cuts)
    w_cuts = _validate_cuts(w_cuts)
    values = {}
    for code in _PATH:
        surf = counterfactual_joint_cdf(fits, samples, code, y_cuts, w_cuts, x_weights)
        values[code] = _second_difference(surf.values)
    return _decomposition_from_values(
        values, y_cuts, w_cuts, direction, "transition"
    )
