"""Missing-structure matrices: monotone detection, rearrangement and conditions.

Masks are boolean ``n x d`` arrays with True marking an observed response
entry. A monotone mask has every row observing a suffix ``l..d`` of the
columns, with ``l`` nondecreasing down the rows (pattern 1 rows first).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import qr

from .data_model import Dataset, Prior
from .errors import StructureError

EXHAUSTIVE_MAX_D = 8


@dataclass(frozen=True, eq=False)
class MissingStructure:
    mask: np.ndarray

    def __post_init__(self):
        mask = np.array(self.mask, dtype=bool)
        if mask.ndim != 2:
            raise StructureError("mask must be 2-dimensional")
        if not np.all(mask.any(axis=1)):
            raise StructureError("every row must have at least one observed entry")
        mask.flags.writeable = False
        object.__setattr__(self, "mask", mask)

    @classmethod
    def complete(cls, n: int, d: int) -> "MissingStructure":
        return cls(np.ones((n, d), dtype=bool))

    @property
    def shape(self) -> tuple[int, int]:
        return self.mask.shape

    @property
    def observed_counts(self) -> np.ndarray:
        return self.mask.sum(axis=1)

    def __eq__(self, other):
        if not isinstance(other, MissingStructure):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.mask, other.mask))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class MonotoneDecomposition:
    """Pattern bookkeeping for a mask after monotone rearrangement.

    ``row_permutation`` and ``column_permutation`` map the arranged
    positions to the original ones: the arranged mask is
    ``mask[row_permutation][:, column_permutation]``. Patterns are 1-based.
    Pattern submatrices are filled in by :func:`decompose`.
    """

    pattern_of_row: np.ndarray
    n_per_pattern: np.ndarray
    cumulative: np.ndarray
    row_permutation: np.ndarray
    column_permutation: np.ndarray
    y_blocks: Optional[list] = field(default=None, repr=False)
    x_blocks: Optional[list] = field(default=None, repr=False)

    @property
    def d(self) -> int:
        return len(self.n_per_pattern)

    @property
    def n(self) -> int:
        return len(self.pattern_of_row)

    @property
    def is_identity(self) -> bool:
        return bool(
            np.array_equal(self.row_permutation, np.arange(self.n))
            and np.array_equal(self.column_permutation, np.arange(self.d))
        )


def _as_mask(ms) -> np.ndarray:
    return ms.mask if isinstance(ms, MissingStructure) else np.asarray(ms, dtype=bool)


def _leading_missing(mask: np.ndarray) -> np.ndarray:
    """Per row, the number of missing entries before the first observed one."""
    return np.argmax(mask, axis=1)


def _mask_is_monotone(mask: np.ndarray) -> bool:
    if mask.size == 0 or not mask[:, -1].all():
        return False
    lead = _leading_missing(mask)
    d = mask.shape[1]
    suffix = np.arange(d)[None, :] >= lead[:, None]
    return bool(np.array_equal(mask, suffix) and np.all(np.diff(lead) >= 0))


def is_monotone(ms) -> bool:
    """True when observed entries are nested down the rows and column d is complete."""
    return _mask_is_monotone(_as_mask(ms))


def _build_decomposition(mask: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> MonotoneDecomposition:
    arranged = mask[rows][:, cols]
    d = mask.shape[1]
    pattern = _leading_missing(arranged) + 1
    counts = np.bincount(pattern, minlength=d + 1)[1:]
    return MonotoneDecomposition(
        pattern_of_row=pattern,
        n_per_pattern=counts,
        cumulative=np.cumsum(counts),
        row_permutation=rows,
        column_permutation=cols,
    )


def _arrange(mask: np.ndarray, cols: np.ndarray) -> np.ndarray:
    # Stable sort keeps the original order within a pattern.
    return np.argsort(_leading_missing(mask[:, cols]), kind="stable")


def try_monotonize(ms) -> Optional[MonotoneDecomposition]:
    """Search for row and column permutations making the mask monotone.

    Columns are first ordered by observed count (ascending, ties by index)
    and rows by their number of leading missing entries. When that fails
    and ``d <= 8`` every column order is tried. Returns None on failure.
    """
    mask = _as_mask(ms)
    n, d = mask.shape
    if _mask_is_monotone(mask):
        return _build_decomposition(mask, np.arange(n), np.arange(d))
    cols = np.argsort(mask.sum(axis=0), kind="stable")
    rows = _arrange(mask, cols)
    if _mask_is_monotone(mask[rows][:, cols]):
        return _build_decomposition(mask, rows, cols)
    if d > EXHAUSTIVE_MAX_D:
        return None
    for perm in itertools.permutations(range(d)):
        cols = np.array(perm)
        rows = _arrange(mask, cols)
        if _mask_is_monotone(mask[rows][:, cols]):
            return _build_decomposition(mask, rows, cols)
    return None


def decompose(ms, data: Dataset) -> MonotoneDecomposition:
    """Materialize ``y_(k,l)`` and ``x_(k,l)`` for a mask that is monotone as given."""
    mask = _as_mask(ms)
    if not _mask_is_monotone(mask):
        raise StructureError("decompose requires a monotone missing structure")
    if mask.shape != data.y.shape:
        raise StructureError("mask and data shapes differ")
    dec = _build_decomposition(mask, np.arange(mask.shape[0]), np.arange(mask.shape[1]))
    return _materialize(dec, data.y, data.x)


def _materialize(dec: MonotoneDecomposition, y: np.ndarray, x: np.ndarray) -> MonotoneDecomposition:
    y_arr = y[dec.row_permutation][:, dec.column_permutation]
    x_arr = x[dec.row_permutation]
    y_blocks, x_blocks = [], []
    for ell in range(dec.d):
        rows = int(dec.cumulative[ell])
        y_blocks.append(y_arr[:rows, ell:])
        x_blocks.append(x_arr[:rows])
    return MonotoneDecomposition(
        dec.pattern_of_row, dec.n_per_pattern, dec.cumulative,
        dec.row_permutation, dec.column_permutation, y_blocks, x_blocks,
    )


def decompose_arranged(dec: MonotoneDecomposition, data: Dataset) -> MonotoneDecomposition:
    """Materialize blocks of an arrangement found by :func:`try_monotonize`."""
    return _materialize(dec, data.y, data.x)


def numerical_rank(mat: np.ndarray) -> int:
    """Rank from column-pivoted QR with tolerance max(shape) * eps * largest column norm."""
    if mat.size == 0:
        return 0
    _, r, _ = qr(mat, mode="economic", pivoting=True)
    diag = np.abs(np.diagonal(r))
    if diag.size == 0 or diag[0] == 0.0:
        return 0
    tol = max(mat.shape) * np.finfo(float).eps * diag[0]
    return int(np.sum(diag > tol))


@dataclass(frozen=True)
class PatternCheck:
    pattern: int
    rows: int
    rank: int
    rank_required: int
    rank_ok: bool
    count_required: float
    count_ok: bool
    df: float

    @property
    def ok(self) -> bool:
        return self.rank_ok and self.count_ok


@dataclass(frozen=True)
class H1Report:
    patterns: tuple[PatternCheck, ...]

    @property
    def passed(self) -> bool:
        return all(p.ok for p in self.patterns)

    @property
    def dfs(self) -> list[float]:
        return [p.df for p in self.patterns]


def check_h1(dec: MonotoneDecomposition, data: Dataset, prior: Prior) -> H1Report:
    """Per-pattern rank and sample-count checks for the monotone P step.

    Pattern ``l`` needs ``rank(y_(k,l) : x_(k,l)) = p + d - l + 1`` and
    ``N_l > p + d - m + l - 1``; the reported chi-square degrees of freedom
    are ``N_l - l + m - p - d + 1``.
    """
    if dec.y_blocks is None:
        dec = decompose_arranged(dec, data)
    p, d, m = data.p, data.d, prior.m
    checks = []
    for idx in range(d):
        ell = idx + 1
        n_cum = int(dec.cumulative[idx])
        yx = np.hstack([dec.y_blocks[idx], dec.x_blocks[idx]])
        rank = numerical_rank(yx)
        need = p + d - ell + 1
        bound = p + d - m + ell - 1
        checks.append(PatternCheck(
            pattern=ell, rows=n_cum, rank=rank, rank_required=need,
            rank_ok=rank == need, count_required=bound, count_ok=n_cum > bound,
            df=n_cum - ell + m - p - d + 1,
        ))
    return H1Report(tuple(checks))


def check_h1_full(data: Dataset, prior: Prior) -> bool:
    """Complete-data version: ``rank(y:x) = p + d`` and ``n > p + 2d - m - 1``."""
    if not data.is_complete:
        raise StructureError("check_h1_full needs a fully observed (or imputed) response")
    p, d = data.p, data.d
    rank_ok = numerical_rank(np.hstack([data.y, data.x])) == p + d
    return rank_ok and data.n > p + 2 * d - prior.m - 1


def precedes(k1, k2) -> bool:
    """Strict order: ``k1 != k2`` and every entry observed in ``k1`` is observed in ``k2``."""
    m1, m2 = _as_mask(k1), _as_mask(k2)
    if m1.shape != m2.shape:
        raise StructureError(f"shape mismatch {m1.shape} vs {m2.shape}")
    return bool(not np.array_equal(m1, m2) and np.all(m2[m1]))


@dataclass(frozen=True, eq=False)
class WitnessResult:
    """Outcome of the monotone sub-structure search.

    ``mask`` is the witness in original coordinates; rows that keep no
    observed entry are treated as deleted. ``report`` is the H1 check on
    the kept rows.
    """

    mask: Optional[np.ndarray]
    report: Optional[H1Report]
    kept_rows: Optional[np.ndarray] = None
    min_observed: Optional[int] = None

    @property
    def found(self) -> bool:
        return self.mask is not None and self.report is not None and self.report.passed


def largest_staircase(mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Largest monotone sub-mask under the greedy column order.

    Each row keeps the longest suffix of observed columns in that order.
    Returns the sub-mask in original coordinates and the column order.
    """
    cols = np.argsort(mask.sum(axis=0), kind="stable")
    arranged = mask[:, cols]
    # Length of the run of True values ending at the last column.
    run = np.argmin(arranged[:, ::-1], axis=1)
    run[arranged.all(axis=1)] = arranged.shape[1]
    d = mask.shape[1]
    sub_arranged = np.arange(d)[None, :] >= (d - run)[:, None]
    sub = np.zeros_like(mask)
    sub[:, cols] = sub_arranged
    return sub, cols


def check_proposition1(k, data: Dataset, prior: Prior) -> WitnessResult:
    """Look for a monotone sub-structure of ``k`` satisfying the H1 checks.

    When found, H1 holds for any monotone superstructure of ``k`` whatever
    values are imputed. Not finding one does not show that H1 fails.
    """
    mask = _as_mask(k)
    sub, _ = largest_staircase(mask)
    kept = np.flatnonzero(sub.any(axis=1))
    if kept.size == 0:
        return WitnessResult(None, None)
    sub_data = Dataset(data.y[kept], sub[kept], data.x[kept])
    dec = try_monotonize(sub[kept])
    if dec is None:  # cannot happen for a staircase, kept for safety
        return WitnessResult(None, None)
    report = check_h1(decompose_arranged(dec, sub_data), sub_data, prior)
    return WitnessResult(sub, report, kept, int(sub[kept].sum(axis=1).min()))
