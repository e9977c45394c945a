"""DA and DAI samplers for robust multivariate regression with missing responses.

Internally a chain works in "arranged" coordinates: rows and columns are
permuted so the (target) missing structure is monotone with pattern-1 rows
first. Draws are mapped back to the caller's coordinates before they are
returned.

Random stream discipline, per iteration:

* DA: ``w_1..w_n``; then for each pattern ``l`` the vector ``f_l`` (chi
  diagonal first, then the normals below it); then ``z_1..z_d``. Post hoc
  imputations use a separate child stream so that enabling them leaves
  the chain itself unchanged.
* DAI: ``w_1..w_n``; imputed entries in row-major order; then the P step.
"""

from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .data_model import (
    ChainMeta,
    ChainOutput,
    Dataset,
    LatentWeights,
    Prior,
    RegressionState,
    chol_solve,
    cholesky_or_none,
    residual_quadratic_forms,
    tri_solve,
)
from .errors import (
    DegenerateScatterError,
    H1ViolationError,
    H2ViolationError,
    ImproperConditionalError,
    NumericalDegeneracyError,
    RobustDAError,
    StructureError,
)
from .mixing import MixingSpec, check_h2, sample_tilted
from .missing_structures import (
    MissingStructure,
    MonotoneDecomposition,
    WitnessResult,
    check_h1,
    check_proposition1,
    decompose_arranged,
    is_monotone,
    precedes,
    try_monotonize,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DaConfig:
    iterations: int
    burn_in: int = 0
    seed: int = 0
    record_weights: bool = False
    posthoc_impute: bool = True

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("burn_in must satisfy 0 <= burn_in < iterations")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class DaiConfig(DaConfig):
    """DA settings plus the monotone superstructure ``k_prime`` (None: all observed)."""

    k_prime: Optional[MissingStructure] = None


@dataclass
class PatternSweepWork:
    """Per-pattern quantities of the monotone P step (arranged coordinates)."""

    gram: list = field(default_factory=list)       # x' lambda x, p x p
    beta_hat: list = field(default_factory=list)   # p x (d - l + 1)
    resid_ssp: list = field(default_factory=list)  # s_l
    scale: list = field(default_factory=list)      # c_l = a_l + s_l
    gram_upper: list = field(default_factory=list)
    scale_upper: list = field(default_factory=list)
    df: list = field(default_factory=list)
    h: Optional[np.ndarray] = None


# --------------------------------------------------------------------------
# Linear algebra helpers
# --------------------------------------------------------------------------

def _upper_factor(mat: np.ndarray, what: str) -> np.ndarray:
    """Upper triangular ``U`` with ``mat = U U'``.

    ``U^{-T}`` is then the lower Cholesky factor of ``mat^{-1}``, obtained
    without forming the inverse.
    """
    low = cholesky_or_none(mat[::-1, ::-1])
    if low is None:
        raise NumericalDegeneracyError(f"{what} is not positive definite")
    return low[::-1, ::-1]


def _apply_lower_inv_factor(upper: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``U^{-T} v``: multiply by the lower Cholesky factor of ``(U U')^{-1}``."""
    return tri_solve(upper, v, lower=False, trans=True)


def _weighted_ls(x: np.ndarray, y: np.ndarray, w: np.ndarray, what: str):
    xw = x * w[:, None]
    gram = x.T @ xw
    low = cholesky_or_none(gram)
    if low is None:
        raise NumericalDegeneracyError(f"{what}: weighted Gram matrix is singular")
    beta_hat = chol_solve(low, xw.T @ y)
    resid = y - x @ beta_hat
    ssp = resid.T @ (resid * w[:, None])
    return gram, beta_hat, 0.5 * (ssp + ssp.T)


# --------------------------------------------------------------------------
# Arranged problem
# --------------------------------------------------------------------------

class _Arrangement:
    """Data permuted into monotone order for a given decomposition."""

    def __init__(self, data: Dataset, dec: MonotoneDecomposition, prior: Prior, mask=None):
        rows, cols = dec.row_permutation, dec.column_permutation
        self.rows, self.cols = rows, cols
        self.inv_rows = np.argsort(rows)
        self.inv_cols = np.argsort(cols)
        mask = data.mask if mask is None else np.asarray(mask, dtype=bool)
        self.y = np.ascontiguousarray(data.y[rows][:, cols])
        self.x = np.ascontiguousarray(data.x[rows])
        self.mask = mask[rows][:, cols]
        self.data = Dataset(self.y, self.mask, self.x)
        self.cum = np.asarray(dec.cumulative, dtype=int)
        self.a = prior.a[np.ix_(cols, cols)]
        self.m = prior.m
        self.n, self.d = self.y.shape
        self.p = self.x.shape[1]
        self.observed_counts = self.mask.sum(axis=1).astype(float)

    def to_arranged(self, state: RegressionState):
        return state.beta[:, self.cols], state.sigma[np.ix_(self.cols, self.cols)]

    def to_original(self, beta, sigma):
        return beta[..., self.inv_cols], sigma[..., self.inv_cols, :][..., :, self.inv_cols]


def _degrees_of_freedom(cum, m, p, d) -> np.ndarray:
    ell = np.arange(1, d + 1)
    return np.asarray(cum, dtype=float) - ell + m - p - d + 1


def _pattern_sweep(y, x, cum, a, m, w) -> PatternSweepWork:
    n, d = y.shape
    p = x.shape[1]
    df = _degrees_of_freedom(cum, m, p, d)
    work = PatternSweepWork(df=list(df))
    for ell in range(d):
        if df[ell] <= 0:
            raise H1ViolationError(
                f"pattern {ell + 1}: chi-square degrees of freedom {df[ell]:g} <= 0"
            )
        n_cum = cum[ell]
        if ell > 0 and n_cum == cum[ell - 1]:
            # Empty pattern: same rows as before, one column fewer.
            gram, bh, ssp = work.gram[-1], work.beta_hat[-1][:, 1:], work.resid_ssp[-1][1:, 1:]
            gram_upper = work.gram_upper[-1]
        else:
            gram, bh, ssp = _weighted_ls(x[:n_cum], y[:n_cum, ell:], w[:n_cum], f"pattern {ell + 1}")
            gram_upper = _upper_factor(gram, f"pattern {ell + 1} Gram matrix")
        scale = a[ell:, ell:] + ssp
        work.gram.append(gram)
        work.beta_hat.append(bh)
        work.resid_ssp.append(ssp)
        work.scale.append(scale)
        work.gram_upper.append(gram_upper)
        work.scale_upper.append(_upper_factor(scale, f"pattern {ell + 1} scale matrix a_l + s_l"))
    return work


def _p_step_monotone_arrays(y, x, cum, a, m, w, rng):
    """Monotone P step on arranged arrays; returns (beta, sigma, work)."""
    n, d = y.shape
    p = x.shape[1]
    work = _pattern_sweep(y, x, cum, a, m, w)
    h = np.zeros((d, d))
    for ell in range(d):
        f = np.empty(d - ell)
        f[0] = np.sqrt(rng.chisquare(work.df[ell]))
        f[1:] = rng.standard_normal(d - ell - 1)
        h[ell:, ell] = _apply_lower_inv_factor(work.scale_upper[ell], f)
    z = rng.standard_normal((d, p))
    diag = np.diagonal(h)
    if not np.all(diag > 0):
        raise NumericalDegeneracyError("triangular factor h has a non-positive diagonal")
    work.h = h

    mean_part = np.empty((p, d))
    for ell in range(d):
        mean_part[:, ell] = (
            _apply_lower_inv_factor(work.gram_upper[ell], z[ell])
            + work.beta_hat[ell] @ h[ell:, ell]
        )
    h_inv = tri_solve(h, np.eye(d))
    sigma = h_inv.T @ h_inv
    sigma = 0.5 * (sigma + sigma.T)
    # B = M h^{-1}, i.e. B' = h^{-T} M' by back substitution
    beta = tri_solve(h, np.ascontiguousarray(mean_part.T), trans=True).T
    return beta, sigma, work


def _p_step_full_arrays(y, x, a, m, w, rng):
    n, d = y.shape
    p = x.shape[1]
    nu = n - p + m - d
    if nu <= d - 1:
        raise ImproperConditionalError(
            f"inverse Wishart degrees of freedom {nu:g} must exceed d - 1 = {d - 1}"
        )
    gram, beta_hat, ssp = _weighted_ls(x, y, w, "complete data")
    scale_upper = _upper_factor(a + ssp, "scale matrix s + a")
    # Bartlett factor of the Wishart for Sigma^{-1}
    bart = np.zeros((d, d))
    for i in range(d):
        bart[i, i] = np.sqrt(rng.chisquare(nu - i))
        bart[i + 1:, i] = rng.standard_normal(d - i - 1)
    z = rng.standard_normal((p, d))
    h = _apply_lower_inv_factor(scale_upper, bart)
    h_inv = tri_solve(h, np.eye(d))
    sigma = h_inv.T @ h_inv
    sigma = 0.5 * (sigma + sigma.T)
    sigma_low = cholesky_or_none(sigma)
    if sigma_low is None:
        raise NumericalDegeneracyError("drawn scatter matrix is not positive definite")
    gram_upper = _upper_factor(gram, "complete-data Gram matrix")
    beta = beta_hat + _apply_lower_inv_factor(gram_upper, z) @ sigma_low.T
    return beta, sigma


# --------------------------------------------------------------------------
# Public steps
# --------------------------------------------------------------------------

def _tilted_weights(mixing: MixingSpec, counts: np.ndarray, r: np.ndarray, rng) -> np.ndarray:
    return np.asarray(sample_tilted(mixing, counts, r, rng), dtype=float)


def i_step(state: RegressionState, data: Dataset, mixing: MixingSpec, rng) -> LatentWeights:
    """Draw the latent weights given the current parameters and observed data."""
    r = residual_quadratic_forms(state.beta, state.sigma, data)
    try:
        w = _tilted_weights(mixing, data.observed_counts, r, rng)
    except RobustDAError as exc:
        raise type(exc)(f"I step: {exc}") from exc
    return LatentWeights(w)


def _as_weights(w) -> np.ndarray:
    return w.w if isinstance(w, LatentWeights) else LatentWeights(w).w


def p_step_monotone(dec: MonotoneDecomposition, data: Dataset, prior: Prior, w, rng) -> RegressionState:
    """Draw ``(B, Sigma)`` given the weights under a monotone missing structure.

    ``dec`` comes from :func:`try_monotonize` or :func:`decompose` on
    ``data.mask``; ``w`` is indexed by the original rows.
    """
    arr = _Arrangement(data, dec, prior)
    w_arr = _as_weights(w)[arr.rows]
    beta, sigma, _ = _p_step_monotone_arrays(arr.y, arr.x, arr.cum, arr.a, arr.m, w_arr, rng)
    beta, sigma = arr.to_original(beta, sigma)
    return RegressionState(beta, sigma)


def pattern_sweep(dec: MonotoneDecomposition, data: Dataset, prior: Prior, w) -> PatternSweepWork:
    """The deterministic part of the monotone P step, in arranged coordinates."""
    arr = _Arrangement(data, dec, prior)
    return _pattern_sweep(arr.y, arr.x, arr.cum, arr.a, arr.m, _as_weights(w)[arr.rows])


def p_step_full(data_complete: Dataset, prior: Prior, w, rng) -> RegressionState:
    """Complete-data P step: inverse Wishart for Sigma, then matrix normal for B."""
    if not data_complete.is_complete:
        raise StructureError("p_step_full needs a fully observed response matrix")
    beta, sigma = _p_step_full_arrays(
        data_complete.y, data_complete.x, prior.a, prior.m, _as_weights(w), rng
    )
    return RegressionState(beta, sigma)


class _ImputationPlan:
    """Groups of rows sharing observed and target-missing column sets."""

    def __init__(self, mask: np.ndarray, targets: np.ndarray):
        todo = targets & ~mask
        self.rows, self.cols = np.nonzero(todo)  # row-major order
        self.size = self.rows.size
        position = np.full(mask.shape, -1)
        position[self.rows, self.cols] = np.arange(self.size)
        key = np.hstack([mask, todo])
        uniq, inverse = np.unique(key, axis=0, return_inverse=True)
        inverse = np.asarray(inverse).ravel()
        d = mask.shape[1]
        self.groups = []
        for g, pat in enumerate(uniq):
            miss = np.flatnonzero(pat[d:])
            if miss.size == 0:
                continue
            obs = np.flatnonzero(pat[:d])
            rws = np.flatnonzero(inverse == g)
            self.groups.append((obs, miss, rws, position[np.ix_(rws, miss)]))


def _conditional_normal(beta, sigma, y, x, obs, miss, rows):
    """Conditional means (rows x |miss|) and unit-weight covariance of the missing block."""
    mu = x[rows] @ beta
    s_oo = sigma[np.ix_(obs, obs)]
    s_om = sigma[np.ix_(obs, miss)]
    low = cholesky_or_none(s_oo)
    if low is None:
        raise DegenerateScatterError("observed block of sigma is singular during imputation")
    gain = chol_solve(low, s_om)  # Sigma_OO^{-1} Sigma_OM
    mean = mu[:, miss] + (y[np.ix_(rows, obs)] - mu[:, obs]) @ gain
    cov = sigma[np.ix_(miss, miss)] - s_om.T @ gain
    return mean, 0.5 * (cov + cov.T)


def _impute_with_plan(plan: _ImputationPlan, beta, sigma, y, x, w, rng) -> np.ndarray:
    z = rng.standard_normal(plan.size)
    out = np.empty(plan.size)
    for obs, miss, rows, pos in plan.groups:
        mean, cov = _conditional_normal(beta, sigma, y, x, obs, miss, rows)
        low = cholesky_or_none(cov)
        if low is None:
            raise DegenerateScatterError("conditional covariance of missing entries is singular")
        noise = (z[pos] @ low.T) / np.sqrt(w[rows])[:, None]
        out[pos] = mean + noise
    return out


def _targets_mask(targets, shape) -> np.ndarray:
    if targets is None:
        return np.ones(shape, dtype=bool)
    mask = targets.mask if isinstance(targets, MissingStructure) else np.asarray(targets, dtype=bool)
    if mask.shape != shape:
        raise StructureError("target structure shape differs from the data")
    return mask


def impute_conditional_normal(state: RegressionState, data: Dataset, w, targets=None, rng=None):
    """Draw the entries observed under ``targets`` but missing in ``data``.

    Returns ``(rows, cols, values)`` in row-major order. ``targets=None``
    means every missing entry.
    """
    plan = _ImputationPlan(data.mask, _targets_mask(targets, data.mask.shape))
    vals = _impute_with_plan(plan, state.beta, state.sigma, data.y, data.x, _as_weights(w), rng)
    return plan.rows, plan.cols, vals


def conditional_normal_parameters(state: RegressionState, data: Dataset, w, targets=None) -> dict:
    """Mean and covariance of the imputation distribution, keyed by row.

    Each value is ``(missing_columns, mean, covariance)`` with the
    covariance already divided by ``w_i``.
    """
    wv = _as_weights(w)
    plan = _ImputationPlan(data.mask, _targets_mask(targets, data.mask.shape))
    out = {}
    for obs, miss, rows, _ in plan.groups:
        mean, cov = _conditional_normal(state.beta, state.sigma, data.y, data.x, obs, miss, rows)
        for j, i in enumerate(rows):
            out[int(i)] = (miss, mean[j], cov / wv[i])
    return out


# --------------------------------------------------------------------------
# Chains
# --------------------------------------------------------------------------

def default_initial_state(data: Dataset) -> RegressionState:
    """OLS on the fully observed rows; residual covariance plus 1e-6 I.

    Falls back to column-wise OLS on each column's observed rows when there
    are too few complete rows.
    """
    n, d, p = data.n, data.d, data.p
    full = data.mask.all(axis=1)
    if full.sum() > p:
        x, y = data.x[full], data.y[full]
        beta, *_ = np.linalg.lstsq(x, y, rcond=None)
        resid = y - x @ beta
        sigma = resid.T @ resid / max(int(full.sum()) - p, 1)
    else:
        beta = np.zeros((p, d))
        var = np.ones(d)
        for j in range(d):
            rows = data.mask[:, j]
            coef, *_ = np.linalg.lstsq(data.x[rows], data.y[rows, j], rcond=None)
            beta[:, j] = coef
            resid = data.y[rows, j] - data.x[rows] @ coef
            var[j] = resid @ resid / max(int(rows.sum()) - p, 1)
        sigma = np.diag(var)
    sigma = 0.5 * (sigma + sigma.T) + 1e-6 * np.eye(d)
    return RegressionState(beta, sigma)


def _streams(seed: int):
    chain_seq, posthoc_seq = np.random.SeedSequence(int(seed)).spawn(2)
    return np.random.default_rng(chain_seq), np.random.default_rng(posthoc_seq)


def _require_h2(mixing: MixingSpec, d: int):
    if not check_h2(mixing, d):
        raise H2ViolationError(
            f"Condition H2 fails for {mixing.family} with d={d}: the I-step conditional may be improper"
        )


def _apply_structure(data: Dataset, ms) -> Dataset:
    """Restrict ``data`` to the structure ``ms`` (None keeps its own mask)."""
    if ms is None:
        return data
    mask = _targets_mask(ms, data.mask.shape)
    if np.array_equal(mask, data.mask):
        return data
    if np.any(mask & ~data.mask):
        raise StructureError("structure marks entries observed that are missing in the data")
    return data.with_mask(mask)


def _with_iteration(exc: RobustDAError, t: int) -> RobustDAError:
    return type(exc)(f"iteration {t}: {exc}")


def run_da(
    data: Dataset,
    ms: Optional[MissingStructure],
    prior: Prior,
    mixing: MixingSpec,
    config: DaConfig,
    init: Optional[RegressionState] = None,
) -> ChainOutput:
    """DA chain: I step then monotone P step, optional post hoc imputation.

    The missing structure of ``data`` must be monotone, possibly after
    permuting rows and columns, and satisfy the H1 checks.
    """
    data = _apply_structure(data, ms)
    _require_h2(mixing, data.d)
    dec = try_monotonize(data.mask)
    if dec is None:
        raise StructureError("DA needs a monotone missing structure; use run_dai with a monotone k'")
    report = check_h1(decompose_arranged(dec, data), data, prior)
    if not report.passed:
        bad = [c.pattern for c in report.patterns if not c.ok]
        raise H1ViolationError(f"Condition H1 fails for pattern(s) {bad}")
    arr = _Arrangement(data, dec, prior)
    init = default_initial_state(data) if init is None else init
    beta, sigma = arr.to_arranged(init)
    rng, posthoc_rng = _streams(config.seed)

    n_keep = config.iterations - config.burn_in
    betas = np.empty((n_keep, arr.p, arr.d))
    sigmas = np.empty((n_keep, arr.d, arr.d))
    keep_w = config.record_weights or config.posthoc_impute
    weights = np.empty((n_keep, arr.n)) if keep_w else None

    start = time.perf_counter()
    for t in range(config.iterations):
        try:
            r = residual_quadratic_forms(beta, sigma, arr.data)
            w = _tilted_weights(mixing, arr.observed_counts, r, rng)
            beta, sigma, _ = _p_step_monotone_arrays(arr.y, arr.x, arr.cum, arr.a, arr.m, w, rng)
        except RobustDAError as exc:
            raise _with_iteration(exc, t) from exc
        s = t - config.burn_in
        if s >= 0:
            betas[s], sigmas[s] = beta, sigma
            if keep_w:
                weights[s] = w
    duration = time.perf_counter() - start

    imputations = imp_rows = imp_cols = None
    posthoc_duration = 0.0
    if config.posthoc_impute and not data.is_complete:
        start = time.perf_counter()
        plan = _ImputationPlan(arr.mask, np.ones_like(arr.mask))
        imputations = np.empty((n_keep, plan.size))
        for s in range(n_keep):
            imputations[s] = _impute_with_plan(plan, betas[s], sigmas[s], arr.y, arr.x, weights[s], posthoc_rng)
        imputations, imp_rows, imp_cols = _entries_to_original(arr, plan, imputations)
        posthoc_duration = time.perf_counter() - start

    betas, sigmas = arr.to_original(betas, sigmas)
    return ChainOutput(
        beta=betas,
        sigma=sigmas,
        meta=ChainMeta(int(config.seed), "da", n_keep, duration, posthoc_duration),
        weights=weights[:, arr.inv_rows] if config.record_weights else None,
        imputations=imputations,
        imputed_rows=imp_rows,
        imputed_cols=imp_cols,
        extras={"h1": report},
    )


def _entries_to_original(arr: _Arrangement, plan: _ImputationPlan, values: np.ndarray):
    rows = arr.rows[plan.rows]
    cols = arr.cols[plan.cols]
    order = np.lexsort((cols, rows))
    return values[:, order], rows[order], cols[order]


def run_dai(
    data: Dataset,
    ms: Optional[MissingStructure],
    prior: Prior,
    mixing: MixingSpec,
    config: DaiConfig,
    init: Optional[RegressionState] = None,
) -> ChainOutput:
    """DAI chain: I1 weights, I2 imputation of the entries in ``k' - k``, P step on ``k'``."""
    data = _apply_structure(data, ms)
    _require_h2(mixing, data.d)
    k = data.mask
    k_prime = (
        np.ones_like(k) if config.k_prime is None
        else _targets_mask(config.k_prime, k.shape)
    )
    if not precedes(k, k_prime):
        raise StructureError("k' must strictly contain the observed structure k")
    dec = try_monotonize(k_prime)
    if dec is None:
        raise StructureError("k' must be monotone (up to row and column permutation)")
    complete_target = bool(k_prime.all())
    m, p, d = prior.m, data.p, data.d
    df = _degrees_of_freedom(dec.cumulative, m, p, d)
    if np.any(df <= 0):
        raise H1ViolationError(f"count part of Condition H1 fails for k' (df={df.tolist()})")

    witness = check_proposition1(k, data, prior)
    if not witness.found:
        msg = "no monotone sub-structure of k satisfying H1 was found; Harris ergodicity is not certified"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        log.warning(msg)

    arr = _Arrangement(data, dec, prior, mask=k)
    plan = _ImputationPlan(arr.mask, k_prime[arr.rows][:, arr.cols])
    init = default_initial_state(data) if init is None else init
    beta, sigma = arr.to_arranged(init)
    rng, _ = _streams(config.seed)
    y_work = arr.y.copy()

    n_keep = config.iterations - config.burn_in
    betas = np.empty((n_keep, arr.p, arr.d))
    sigmas = np.empty((n_keep, arr.d, arr.d))
    weights = np.empty((n_keep, arr.n)) if config.record_weights else None
    imputations = np.empty((n_keep, plan.size))

    start = time.perf_counter()
    for t in range(config.iterations):
        try:
            r = residual_quadratic_forms(beta, sigma, arr.data)
            w = _tilted_weights(mixing, arr.observed_counts, r, rng)
            z = _impute_with_plan(plan, beta, sigma, arr.y, arr.x, w, rng)
            y_work[plan.rows, plan.cols] = z
            if complete_target:
                beta, sigma = _p_step_full_arrays(y_work, arr.x, arr.a, m, w, rng)
            else:
                beta, sigma, _ = _p_step_monotone_arrays(y_work, arr.x, arr.cum, arr.a, m, w, rng)
        except RobustDAError as exc:
            raise _with_iteration(exc, t) from exc
        s = t - config.burn_in
        if s >= 0:
            betas[s], sigmas[s] = beta, sigma
            imputations[s] = z
            if weights is not None:
                weights[s] = w
    duration = time.perf_counter() - start

    imputations, imp_rows, imp_cols = _entries_to_original(arr, plan, imputations)
    betas, sigmas = arr.to_original(betas, sigmas)
    return ChainOutput(
        beta=betas,
        sigma=sigmas,
        meta=ChainMeta(int(config.seed), "dai", n_keep, duration),
        weights=weights[:, arr.inv_rows] if weights is not None else None,
        imputations=imputations,
        imputed_rows=imp_rows,
        imputed_cols=imp_cols,
        extras={"proposition1": witness},
    )


__all__ = [
    "DaConfig",
    "DaiConfig",
    "PatternSweepWork",
    "WitnessResult",
    "conditional_normal_parameters",
    "default_initial_state",
    "i_step",
    "impute_conditional_normal",
    "is_monotone",
    "p_step_full",
    "p_step_monotone",
    "pattern_sweep",
    "run_da",
    "run_dai",
]
