"""Core data containers: observational samples and covariate subsets.

Covariate subsets are bitmasks over the columns of the design matrix.
Bit ``i`` of a mask corresponds to covariate ``X_{i+1}``; user-facing
indices are 1-based throughout, masks are plain integers internally.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import (
    DimensionTooLarge,
    EmptyGroup,
    LargeDimension,
    SchemaError,
)

# Hard cap on exhaustive enumeration: 2^24 subsets is the most the
# dense table machinery is allowed to materialize.
MAX_SUBSET_DIM = 24
WARN_SUBSET_DIM = 20


def check_dimension(p: int) -> None:
    """Validate a covariate count destined for exhaustive enumeration."""
    if p < 1:
        raise ValueError(f"need at least one covariate, got p={p}")
    if p > MAX_SUBSET_DIM:
        raise DimensionTooLarge(
            f"p={p} would enumerate 2^{p} subsets; the cap is p={MAX_SUBSET_DIM}"
        )
    if p >= WARN_SUBSET_DIM:
        warnings.warn(
            f"enumerating 2^{p} subsets; expect heavy memory and runtime",
            LargeDimension,
            stacklevel=3,
        )


def popcount(mask: int) -> int:
    return bin(mask).count("1")


@dataclass(frozen=True, order=True)
class SubsetId:
    """Identifier of a covariate subset within a fixed universe of size p.

    Parameters
    ----------
    mask : int
        Bitmask with bit ``i`` set when covariate ``X_{i+1}`` belongs to
        the subset.
    p : int
        Size of the covariate universe.
    """

    mask: int
    p: int

    def __post_init__(self):
        if not 0 <= self.mask < (1 << self.p):
            raise ValueError(f"mask {self.mask:#x} out of range for p={self.p}")

    @classmethod
    def from_indices(cls, p: int, indices: Sequence[int]) -> "SubsetId":
        """Build a subset from 1-based covariate indices."""
        mask = 0
        for i in indices:
            if not 1 <= i <= p:
                raise ValueError(f"index {i} outside 1..{p}")
            mask |= 1 << (i - 1)
        return cls(mask, p)

    @property
    def indices(self) -> tuple[int, ...]:
        """1-based indices of the member covariates, ascending."""
        return tuple(i + 1 for i in range(self.p) if self.mask >> i & 1)

    @property
    def size(self) -> int:
        return popcount(self.mask)

    def complement(self) -> "SubsetId":
        return SubsetId(~self.mask & ((1 << self.p) - 1), self.p)

    def contains(self, index: int) -> bool:
        """Membership test for a 1-based covariate index."""
        return bool(self.mask >> (index - 1) & 1)

    def issubset(self, other: "SubsetId") -> bool:
        return self.mask & other.mask == self.mask

    def union(self, other: "SubsetId") -> "SubsetId":
        return SubsetId(self.mask | other.mask, self.p)

    def intersection(self, other: "SubsetId") -> "SubsetId":
        return SubsetId(self.mask & other.mask, self.p)

    def difference(self, other: "SubsetId") -> "SubsetId":
        return SubsetId(self.mask & ~other.mask, self.p)

    def __str__(self) -> str:
        return "{" + ",".join(map(str, self.indices)) + "}"


def enumerate_subsets(p: int) -> Iterator[SubsetId]:
    """Yield every subset of {X_1..X_p} in ascending mask order.

    Lazy: nothing is materialized, so p = 20 is iterable without holding
    a million objects at once.  Raises ``DimensionTooLarge`` for p > 24
    and warns from p = 20 upward.
    """
    check_dimension(p)
    for mask in range(1 << p):
        yield SubsetId(mask, p)


def enumerate_masks(p: int) -> np.ndarray:
    """Dense array of all 2^p masks, ascending. Internal fast path."""
    check_dimension(p)
    return np.arange(1 << p, dtype=np.uint32)


def mask_popcounts(masks: np.ndarray) -> np.ndarray:
    """Vectorized popcount for arrays of masks."""
    m = masks.astype(np.uint32)
    out = np.zeros(m.shape, dtype=np.int8)
    while True:
        out += (m & 1).astype(np.int8)
        m >>= 1
        if not m.any():
            break
    return out


def mask_to_indices(mask: int) -> tuple[int, ...]:
    """1-based indices of the set bits, ascending."""
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


@dataclass(frozen=True)
class Dataset:
    """Observational sample (X, T, Y) with n rows and p covariates.

    Attributes
    ----------
    x : ndarray of shape (n, p)
        Covariate matrix; must be finite.
    t : ndarray of shape (n,)
        Binary treatment labels (0/1 integers).
    y : ndarray of shape (n,)
        Observed outcome.
    column_names : tuple of str
        Covariate names; defaults to X1..Xp.
    """

    x: np.ndarray
    t: np.ndarray
    y: np.ndarray
    column_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        t = np.asarray(self.t)
        y = np.asarray(self.y, dtype=np.float64)
        if x.ndim != 2:
            raise ValueError("x must be a 2-d array")
        n, p = x.shape
        if n < 2 or p < 1:
            raise ValueError(f"need n >= 2 and p >= 1, got n={n}, p={p}")
        if t.shape != (n,) or y.shape != (n,):
            raise ValueError("t and y must be vectors of length n")
        if not np.isfinite(x).all():
            raise ValueError("x contains non-finite entries")
        if not np.isfinite(y).all():
            raise ValueError("y contains non-finite entries")
        tv = np.unique(t)
        if not np.isin(tv, (0, 1)).all():
            raise ValueError(f"t must be 0/1, found values {tv}")
        t = t.astype(np.int8)
        names = tuple(self.column_names) or tuple(f"X{i}" for i in range(1, p + 1))
        if len(names) != p:
            raise ValueError("column_names length must equal p")
        for arr in (x, t, y):
            arr.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def with_x(self, x: np.ndarray) -> "Dataset":
        """Copy of the dataset with the covariate matrix replaced."""
        return Dataset(x=x, t=self.t, y=self.y, column_names=self.column_names)


@dataclass(frozen=True)
class GroupView:
    """Row selection for one treatment arm of a dataset."""

    arm: int
    rows: np.ndarray

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]


def split_by_treatment(d: Dataset) -> tuple[GroupView, GroupView]:
    """Views of the control and treated rows, in that order.

    Raises ``EmptyGroup`` when either arm has no rows.
    """
    views = []
    for arm in (0, 1):
        rows = np.flatnonzero(d.t == arm)
        if rows.size == 0:
            raise EmptyGroup(f"treatment arm {arm} has no rows")
        views.append(GroupView(arm=arm, rows=rows))
    return views[0], views[1]


def subset_columns(m: np.ndarray, a) -> np.ndarray:
    """Columns of a matrix named by a subset, in ascending index order.

    ``a`` may be a SubsetId or a raw integer mask.  An empty subset yields
    an (n, 0) slice.  Square matrices can be restricted on both axes by
    calling this twice on the transpose; see ``principal_block``.
    """
    mask = a.mask if isinstance(a, SubsetId) else int(a)
    cols = [i for i in range(m.shape[-1]) if mask >> i & 1]
    return m[..., cols]


def principal_block(sigma: np.ndarray, a) -> np.ndarray:
    """Principal submatrix sigma[A, A] for a subset A."""
    mask = a.mask if isinstance(a, SubsetId) else int(a)
    idx = [i for i in range(sigma.shape[0]) if mask >> i & 1]
    return sigma[np.ix_(idx, idx)]


def load_csv(path) -> Dataset:
    """Read a dataset from CSV with columns T, Y, X1..Xp.

    The header row is required.  T must be 0/1 integers, Y real, and the
    covariate columns must be named X1..Xp in ascending order.  Missing
    or non-finite values are rejected, not imputed.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("empty file: header row required") from None
        header = [h.strip() for h in header]
        if "T" not in header or "Y" not in header:
            raise SchemaError("header must contain columns T and Y")
        t_col = header.index("T")
        y_col = header.index("Y")
        x_cols = [i for i in range(len(header)) if i not in (t_col, y_col)]
        expected = [f"X{k}" for k in range(1, len(x_cols) + 1)]
        got = [header[i] for i in x_cols]
        if got != expected:
            raise SchemaError(
                f"covariate columns must be named X1..X{len(x_cols)} in order, got {got}"
            )
        if not x_cols:
            raise SchemaError("no covariate columns found")
        t_vals, y_vals, x_rows = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise SchemaError(f"line {lineno}: expected {len(header)} fields")
            try:
                tv = float(row[t_col])
                yv = float(row[y_col])
                xv = [float(row[i]) for i in x_cols]
            except ValueError as exc:
                raise SchemaError(f"line {lineno}: {exc}") from None
            if tv not in (0.0, 1.0):
                raise SchemaError(f"line {lineno}: T must be 0 or 1, got {row[t_col]}")
            if not np.isfinite(yv) or not all(np.isfinite(v) for v in xv):
                raise SchemaError(f"line {lineno}: non-finite value")
            t_vals.append(int(tv))
            y_vals.append(yv)
            x_rows.append(xv)
    if len(x_rows) < 2:
        raise SchemaError("need at least two data rows")
    return Dataset(
        x=np.array(x_rows, dtype=np.float64),
        t=np.array(t_vals, dtype=np.int8),
        y=np.array(y_vals, dtype=np.float64),
        column_names=tuple(expected),
    )


def save_csv(d: Dataset, path) -> None:
    """Write a dataset in the same schema load_csv reads."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["T", "Y", *d.column_names])
        for i in range(d.n):
            writer.writerow([int(d.t[i]), repr(float(d.y[i])), *map(repr, d.x[i].tolist())])
