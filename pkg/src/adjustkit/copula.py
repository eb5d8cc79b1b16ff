"""Gaussian-copula front end: per-coordinate normal scores with cross-arm pooling.

Each covariate is replaced by its within-arm normal score, with the treated
arm's scores mapped onto the control scale by a truncated least-squares fit.
The output depends on the data only through within-arm ranks, so any strictly
increasing per-coordinate transform of the input leaves it bit-identical.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .data_model import Dataset, GroupView, split_by_treatment
from .errors import DegeneratePooling

__all__ = [
    "CopulaTransform",
    "normal_scores",
    "pool_transforms",
    "transform_dataset",
    "TRUNCATION",
]

TRUNCATION = float(ndtri(0.975))
MIN_SURVIVORS = 10


@dataclass(frozen=True)
class CopulaTransform:
    """Fitted per-coordinate score tables and pooling coefficients.

    Attributes
    ----------
    knots0, knots1 : tuple of ndarray
        Sorted distinct values per coordinate, per arm.
    scores0, scores1 : tuple of ndarray
        Normal scores at the knots; nondecreasing in the value.
    a, b : ndarray of shape (p,)
        Pooling coefficients mapping arm-1 scores onto the arm-0 scale.
    degenerate : ndarray of bool, shape (p,)
        True where pooling fell back to (1, 0).
    q : float
        Truncation threshold for the pooling fit.
    """

    knots0: tuple
    knots1: tuple
    scores0: tuple
    scores1: tuple
    a: np.ndarray
    b: np.ndarray
    degenerate: np.ndarray
    q: float = TRUNCATION


def _score_table(column: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Distinct values and their midrank normal scores for one group."""
    n_s = column.size
    knots, counts = np.unique(column, return_counts=True)
    below = np.concatenate(([0], np.cumsum(counts)[:-1]))
    midranks = below + (counts + 1) / 2.0
    return knots, ndtri(midranks / (n_s + 1))


def _lookup(knots: np.ndarray, scores: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Step-function evaluation: score of the largest knot <= value, clamped."""
    idx = np.searchsorted(knots, values, side="right") - 1
    return scores[np.clip(idx, 0, knots.size - 1)]


def normal_scores(column, group: GroupView) -> np.ndarray:
    """Within-group normal scores of one covariate column.

    Parameters
    ----------
    column : array_like, shape (n,)
        Full-sample covariate values.
    group : GroupView
        Rows of the arm to score.

    Returns
    -------
    ndarray, shape (n_s,)
        Phi^{-1} of the midrank empirical CDF scaled by n_s/(n_s+1),
        ordered as group.rows; ties share a score and all outputs are
        finite.
    """
    col = np.asarray(column, dtype=np.float64).ravel()[group.rows]
    if col.size < 2:
        raise ValueError(f"arm {group.arm} needs at least 2 rows")
    knots, scores = _score_table(col)
    return scores[np.searchsorted(knots, col)]


def pool_transforms(scores0, scores1, column, t) -> tuple[float, float]:
    """Truncated least-squares pooling of the two arms' score scales.

    Parameters
    ----------
    scores0, scores1 : array_like, shape (n,)
        The two arms' score functions evaluated at every observation.
    column : array_like, shape (n,)
        The raw covariate column (shape check only; the fit runs on the
        scores).
    t : array_like, shape (n,)
        Treatment labels; both arms must be nonempty.

    Returns
    -------
    (a, b)
        Coefficients of the fit scores0 ~ a * scores1 + b over the
        observations where both scores lie strictly inside the
        truncation threshold.  Falls back to (1, 0) with a
        DegeneratePooling warning when fewer than 10 observations
        survive or the regressor has zero variance.
    """
    s0 = np.asarray(scores0, dtype=np.float64).ravel()
    s1 = np.asarray(scores1, dtype=np.float64).ravel()
    col = np.asarray(column, dtype=np.float64).ravel()
    tv = np.asarray(t).ravel()
    if not (s0.shape == s1.shape == col.shape == tv.shape):
        raise ValueError("scores, column, and t must share a length")
    if not (np.any(tv == 0) and np.any(tv == 1)):
        raise ValueError("both treatment arms must be nonempty")
    keep = (np.abs(s0) < TRUNCATION) & (np.abs(s1) < TRUNCATION)
    if keep.sum() < MIN_SURVIVORS:
        warnings.warn(
            f"only {int(keep.sum())} observations inside the truncation band",
            DegeneratePooling,
        )
        return 1.0, 0.0
    u = s1[keep]
    v = s0[keep]
    var_u = np.var(u)
    if var_u == 0.0:
        warnings.warn("pooling regressor has zero variance", DegeneratePooling)
        return 1.0, 0.0
    a = float(np.cov(u, v, ddof=0)[0, 1] / var_u)
    b = float(v.mean() - a * u.mean())
    return a, b


def fit_copula(d: Dataset) -> CopulaTransform:
    """Fit score tables and pooling coefficients on every coordinate."""
    g0, g1 = split_by_treatment(d)
    p = d.p
    knots0, knots1, sc0, sc1 = [], [], [], []
    a = np.empty(p)
    b = np.empty(p)
    degen = np.zeros(p, dtype=bool)
    for i in range(p):
        col = d.x[:, i]
        k0, s0 = _score_table(col[g0.rows])
        k1, s1 = _score_table(col[g1.rows])
        knots0.append(k0)
        knots1.append(k1)
        sc0.append(s0)
        sc1.append(s1)
        eval0 = _lookup(k0, s0, col)
        eval1 = _lookup(k1, s1, col)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", DegeneratePooling)
            a[i], b[i] = pool_transforms(eval0, eval1, col, d.t)
        if caught:
            degen[i] = True
            warnings.warn(
                f"coordinate {i + 1}: {caught[0].message}", DegeneratePooling
            )
    return CopulaTransform(
        knots0=tuple(knots0),
        knots1=tuple(knots1),
        scores0=tuple(sc0),
        scores1=tuple(sc1),
        a=a,
        b=b,
        degenerate=degen,
    )


def transform_dataset(d: Dataset) -> Dataset:
    """Replace every covariate by its pooled within-arm normal score.

    Parameters
    ----------
    d : Dataset

    Returns
    -------
    Dataset
        Same shape, T and Y untouched; coordinate i becomes
        (1-T) * score0(X_i) + T * (a_i * score1(X_i) + b_i).

    Notes
    -----
    The output is invariant, bit for bit, under any strictly increasing
    per-coordinate transform of the input covariates: every step uses
    the data only through within-arm ranks.
    """
    tf = fit_copula(d)
    g0, g1 = split_by_treatment(d)
    new_x = np.empty_like(d.x)
    for i in range(d.p):
        col = d.x[:, i]
        new_x[g0.rows, i] = _lookup(tf.knots0[i], tf.scores0[i], col[g0.rows])
        new_x[g1.rows, i] = (
            tf.a[i] * _lookup(tf.knots1[i], tf.scores1[i], col[g1.rows]) + tf.b[i]
        )
    return d.with_x(new_x)
