"""Core value types: datasets with missing masks, priors, states and chains.

Arrays held by these types are made read-only on construction so that the
values can be shared freely between chains and threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.linalg.lapack import dpotrf, dpotrs, dtrtrs

from .errors import DegenerateScatterError, StructureError

SYM_TOL = 1e-10
# squared Cholesky pivots at or below this fraction of the matching diagonal
# entry mark a numerically singular matrix (condition number around 1e13)
CHOL_PIVOT_RTOL = 1e-13


def _frozen(arr, dtype=float) -> np.ndarray:
    out = np.array(arr, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


def cholesky_or_none(mat: np.ndarray) -> Optional[np.ndarray]:
    """Lower Cholesky factor, or None when the matrix is not positive definite.

    The test is relative to the diagonal of ``mat``, so it does not depend
    on the scale of the data. Calls LAPACK directly; the per-call overhead
    matters inside chains.
    """
    low, info = dpotrf(mat, lower=1)
    if info != 0 or not np.all(np.diagonal(low) ** 2 > CHOL_PIVOT_RTOL * np.diagonal(mat)):
        return None
    return low


def tri_solve(tri: np.ndarray, b: np.ndarray, lower: bool = True, trans: bool = False) -> np.ndarray:
    """Solve ``T x = b`` (or ``T' x = b``) for triangular ``T``."""
    out, info = dtrtrs(tri, b, lower=int(lower), trans=int(trans))
    if info != 0:
        raise np.linalg.LinAlgError("singular triangular factor")
    return out


def chol_solve(low: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``A x = b`` given the lower Cholesky factor of ``A``."""
    out, info = dpotrs(low, b, lower=1)
    if info != 0:
        raise np.linalg.LinAlgError("invalid Cholesky factor")
    return out


def is_positive_definite(mat: np.ndarray) -> bool:
    return cholesky_or_none(mat) is not None


@dataclass(frozen=True, eq=False)
class Dataset:
    """Response matrix ``y`` with an observation mask and a complete design ``x``.

    ``mask[i, j]`` is True when ``y[i, j]`` is observed. Entries of ``y``
    under a False mask are placeholders and are stored as 0.0.
    """

    y: np.ndarray
    mask: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        y = np.array(self.y, dtype=float)
        x = np.array(self.x, dtype=float)
        if self.mask is None:
            mask = np.ones(y.shape, dtype=bool)
        else:
            mask = np.array(self.mask, dtype=bool)
        if y.ndim != 2 or x.ndim != 2:
            raise StructureError("y and x must be 2-dimensional")
        if mask.shape != y.shape:
            raise StructureError(f"mask shape {mask.shape} != y shape {y.shape}")
        if x.shape[0] != y.shape[0]:
            raise StructureError("x and y must have the same number of rows")
        if not np.all(np.isfinite(x)):
            raise StructureError("x must be fully observed and finite")
        if not np.all(mask.any(axis=1)):
            bad = int(np.flatnonzero(~mask.any(axis=1))[0])
            raise StructureError(f"row {bad} has no observed response entry")
        y = np.where(mask, y, 0.0)
        if not np.all(np.isfinite(y)):
            raise StructureError("observed responses must be finite")
        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "mask", _frozen(mask, bool))
        object.__setattr__(self, "x", _frozen(x))

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.y.shape[1]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def observed_counts(self) -> np.ndarray:
        """Number of observed entries per row (the ``d_i``)."""
        return self.mask.sum(axis=1)

    @property
    def is_complete(self) -> bool:
        return bool(self.mask.all())

    @cached_property
    def row_groups(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Rows grouped by identical observation pattern: ``(columns, rows)``."""
        patterns, inverse = np.unique(self.mask, axis=0, return_inverse=True)
        inverse = np.asarray(inverse).ravel()
        return [
            (np.flatnonzero(pat), np.flatnonzero(inverse == g))
            for g, pat in enumerate(patterns)
        ]

    def with_mask(self, mask: np.ndarray) -> "Dataset":
        return Dataset(self.y, mask, self.x)

    def filled(self, rows, cols, values, mask: Optional[np.ndarray] = None) -> "Dataset":
        """Copy with ``y[rows, cols] = values``; the new entries become observed."""
        y = np.array(self.y)
        y[rows, cols] = values
        if mask is None:
            mask = np.array(self.mask)
            mask[rows, cols] = True
        return Dataset(y, mask, self.x)


@dataclass(frozen=True, eq=False)
class Prior:
    """Prior ``|Sigma|^{-(m+1)/2} exp(-tr(Sigma^{-1} a)/2)``, flat in ``B``."""

    m: float
    a: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.array(self.a, dtype=float))
        if a.shape[0] != a.shape[1]:
            raise ValueError("prior matrix a must be square")
        if np.max(np.abs(a - a.T), initial=0.0) > SYM_TOL:
            raise ValueError("prior matrix a must be symmetric")
        if a.size and np.min(np.linalg.eigvalsh(a)) < -SYM_TOL:
            raise ValueError("prior matrix a must be positive semi-definite")
        object.__setattr__(self, "m", float(self.m))
        object.__setattr__(self, "a", _frozen(a))

    @classmethod
    def jeffreys(cls, d: int) -> "Prior":
        """Independence Jeffreys prior: ``m = d``, ``a = 0``."""
        return cls(m=d, a=np.zeros((d, d)))

    @property
    def d(self) -> int:
        return self.a.shape[0]


@dataclass(frozen=True, eq=False)
class RegressionState:
    """One draw of the coefficients ``beta`` (p x d) and scatter ``sigma`` (d x d)."""

    beta: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        beta = np.atleast_2d(np.array(self.beta, dtype=float))
        sigma = np.atleast_2d(np.array(self.sigma, dtype=float))
        if sigma.shape != (beta.shape[1], beta.shape[1]):
            raise ValueError(f"sigma shape {sigma.shape} does not match beta {beta.shape}")
        if np.max(np.abs(sigma - sigma.T)) > SYM_TOL * max(1.0, np.max(np.abs(sigma))):
            raise ValueError("sigma must be symmetric")
        if not is_positive_definite(sigma):
            raise DegenerateScatterError("sigma is not positive definite")
        object.__setattr__(self, "beta", _frozen(beta))
        object.__setattr__(self, "sigma", _frozen(sigma))


@dataclass(frozen=True, eq=False)
class LatentWeights:
    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=float).ravel()
        if not (np.all(np.isfinite(w)) and np.all(w > 0)):
            raise ValueError("latent weights must be finite and strictly positive")
        object.__setattr__(self, "w", _frozen(w))


@dataclass(frozen=True)
class ChainMeta:
    seed: int
    algorithm: str
    iterations: int
    duration: float
    posthoc_duration: float = 0.0


@dataclass(frozen=True, eq=False)
class ChainOutput:
    """Recorded draws of a chain, stored as stacked arrays.

    ``beta`` is (T, p, d) and ``sigma`` is (T, d, d). ``weights`` is (T, n)
    when recorded. ``imputations`` is (T, M) with ``imputed_rows`` and
    ``imputed_cols`` giving the (row, column) of each of the M entries.
    """

    beta: np.ndarray
    sigma: np.ndarray
    meta: ChainMeta
    weights: Optional[np.ndarray] = None
    imputations: Optional[np.ndarray] = None
    imputed_rows: Optional[np.ndarray] = None
    imputed_cols: Optional[np.ndarray] = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        t = self.beta.shape[0]
        if self.sigma.shape[0] != t or t != self.meta.iterations:
            raise ValueError("recorded sequences must match the iteration count")
        for name in ("weights", "imputations"):
            arr = getattr(self, name)
            if arr is not None and arr.shape[0] != t:
                raise ValueError(f"{name} length {arr.shape[0]} != {t}")

    def __len__(self) -> int:
        return self.beta.shape[0]

    @property
    def states(self) -> list[RegressionState]:
        return [RegressionState(b, s) for b, s in zip(self.beta, self.sigma)]

    def state(self, t: int) -> RegressionState:
        return RegressionState(self.beta[t], self.sigma[t])


def _observed_residual(state: RegressionState, data: Dataset, i: int):
    obs = np.flatnonzero(data.mask[i])
    mean = state.beta.T @ data.x[i]
    return obs, data.y[i, obs] - mean[obs]


def residual_quadratic_form(state: RegressionState, data: Dataset, i: int) -> float:
    """Mahalanobis-type residual of row ``i`` restricted to its observed entries."""
    obs, resid = _observed_residual(state, data, i)
    block = state.sigma[np.ix_(obs, obs)]
    low = cholesky_or_none(block)
    if low is None:
        raise DegenerateScatterError(f"observed block of sigma for row {i} is singular")
    z = tri_solve(low, resid)
    return float(z @ z)


def residual_quadratic_forms(beta: np.ndarray, sigma: np.ndarray, data: Dataset) -> np.ndarray:
    """All ``r_i`` at once, one Cholesky per distinct observation pattern."""
    resid = data.y - data.x @ beta
    out = np.empty(data.n)
    d = data.d
    for cols, rows in data.row_groups:
        if cols.size == d:
            block, sub = sigma, resid[rows]
        else:
            block, sub = sigma[cols][:, cols], resid[rows][:, cols]
        low = cholesky_or_none(block)
        if low is None:
            raise DegenerateScatterError(
                f"observed block of sigma is singular for rows starting at {int(rows[0])}"
            )
        z = tri_solve(low, np.ascontiguousarray(sub.T))
        out[rows] = np.einsum("ij,ij->j", z, z)
    return out


def drift_value(state: RegressionState, data: Dataset) -> float:
    """Sum over rows of the residual quadratic forms."""
    return float(sum(residual_quadratic_form(state, data, i) for i in range(data.n)))
