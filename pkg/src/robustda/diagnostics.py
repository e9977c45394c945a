"""Effective sample size, per-minute efficiency, drift traces and DA/DAI comparison.

ESS uses non-overlapping batch means with batch size ``floor(sqrt(N))``.
Both the univariate and the joint estimator use ``ddof=1`` covariances, so
the joint estimator with one component equals the univariate one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .data_model import ChainOutput, Dataset, residual_quadratic_forms
from .errors import InsufficientDataError

MIN_LENGTH = 100
CAP_SLACK = 0.10
COND_LIMIT = 1e12


def _check_length(n: int):
    if n < MIN_LENGTH:
        raise InsufficientDataError(f"need at least {MIN_LENGTH} draws, got {n}")


def _batch_means(x: np.ndarray) -> tuple[np.ndarray, int]:
    n = x.shape[0]
    b = math.isqrt(n)
    a = n // b
    return x[: a * b].reshape(a, b, *x.shape[1:]).mean(axis=1), b


def ess_univariate_flagged(series) -> tuple[float, bool]:
    """``(ESS, degenerate)``; a constant series is degenerate with ESS = N."""
    x = np.asarray(series, dtype=float).ravel()
    n = x.size
    _check_length(n)
    if np.ptp(x) == 0.0:
        return float(n), True
    means, b = _batch_means(x)
    sigma_bm = b * np.var(means, ddof=1)
    var = np.var(x, ddof=1)
    if sigma_bm <= 0.0:
        return math.inf, False
    return float(n * var / sigma_bm), False


def ess_univariate(series) -> float:
    """``N`` times the sample variance over the batch-means asymptotic variance."""
    return ess_univariate_flagged(series)[0]


def _logdet(mat: np.ndarray) -> float:
    sign, val = np.linalg.slogdet(mat)
    return val if sign > 0 else -math.inf


def ess_multivariate(matrix_series) -> float:
    """Joint ESS ``N (det Lambda / det Sigma_bm)^{1/q}`` for a (N, q) series.

    When the batch-means matrix is near singular both matrices get the same
    small ridge on the diagonal before the determinants are taken.
    """
    x = np.asarray(matrix_series, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n, q = x.shape
    _check_length(n)
    if q > n / 20:
        raise InsufficientDataError(f"{q} components need at least {20 * q} draws, got {n}")
    lam = np.atleast_2d(np.cov(x, rowvar=False, ddof=1))
    means, b = _batch_means(x)
    sig = b * np.atleast_2d(np.cov(means, rowvar=False, ddof=1))
    eig = np.linalg.eigvalsh(sig)
    if eig[0] <= eig[-1] / COND_LIMIT:
        ridge = max(np.trace(lam) / q, np.finfo(float).tiny) * 1e-8
        lam = lam + ridge * np.eye(q)
        sig = sig + ridge * np.eye(q)
    ld_lam, ld_sig = _logdet(lam), _logdet(sig)
    if not np.isfinite(ld_lam):
        return float(n)
    return float(n * math.exp((ld_lam - ld_sig) / q))


def functional_names(p: int, d: int) -> list[str]:
    names = [f"B{i + 1}{j + 1}" for j in range(d) for i in range(p)]
    rows, cols = np.tril_indices(d)
    names += [f"Sigma{i + 1}{j + 1}" for i, j in zip(rows, cols)]
    return names


def functional_matrix(output: ChainOutput) -> np.ndarray:
    """(T, pd + d(d+1)/2) matrix: B column by column (B11, B21, B12, ...), then Sigma's lower triangle."""
    t, p, d = output.beta.shape
    b = output.beta.transpose(0, 2, 1).reshape(t, p * d)
    rows, cols = np.tril_indices(d)
    return np.hstack([b, output.sigma[:, rows, cols]])


@dataclass(frozen=True)
class EssReport:
    names: tuple
    univariate: np.ndarray
    joint: float
    iterations: int
    minutes: float
    capped: tuple = ()
    degenerate: tuple = ()

    @property
    def esspm_univariate(self) -> np.ndarray:
        return self.univariate / self.minutes if self.minutes > 0 else np.full_like(self.univariate, np.inf)

    @property
    def esspm_joint(self) -> float:
        return self.joint / self.minutes if self.minutes > 0 else math.inf

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "minutes": self.minutes,
            "ess": dict(zip(self.names, map(float, self.univariate))),
            "esspm": dict(zip(self.names, map(float, self.esspm_univariate))),
            "joint_ess": self.joint,
            "joint_esspm": self.esspm_joint,
            "capped": list(self.capped),
            "degenerate": list(self.degenerate),
        }


def ess_report(output: ChainOutput) -> EssReport:
    """ESS for every tracked functional plus the joint value, capped at 1.1 N."""
    fm = functional_matrix(output)
    n = fm.shape[0]
    _, p, d = output.beta.shape
    names = functional_names(p, d)
    cap = n * (1.0 + CAP_SLACK)
    uni, capped, degenerate = [], [], []
    for name, col in zip(names, fm.T):
        ess, flat = ess_univariate_flagged(col)
        if flat:
            degenerate.append(name)
        if ess > cap:
            capped.append(name)
            ess = cap
        uni.append(ess)
    active = [j for j, nm in enumerate(names) if nm not in degenerate]
    joint = ess_multivariate(fm[:, active]) if active else float(n)
    if joint > cap:
        capped.append("joint")
        joint = cap
    return EssReport(
        names=tuple(names),
        univariate=np.array(uni),
        joint=float(joint),
        iterations=n,
        minutes=output.meta.duration / 60.0,
        capped=tuple(capped),
        degenerate=tuple(degenerate),
    )


@dataclass(frozen=True)
class ComparisonReport:
    """Median ESS over replications for each algorithm, and DA minus DAI."""

    names: tuple
    da_univariate: np.ndarray
    dai_univariate: np.ndarray
    da_joint: float
    dai_joint: float
    replications: int
    da_runs: list = field(default_factory=list, repr=False)
    dai_runs: list = field(default_factory=list, repr=False)

    @property
    def difference(self) -> np.ndarray:
        return self.da_univariate - self.dai_univariate

    @property
    def joint_difference(self) -> float:
        return self.da_joint - self.dai_joint

    @property
    def joint_sign(self) -> int:
        return int(np.sign(self.joint_difference))

    def to_dict(self) -> dict:
        return {
            "replications": self.replications,
            "da": {"ess": dict(zip(self.names, map(float, self.da_univariate))), "joint_ess": self.da_joint},
            "dai": {"ess": dict(zip(self.names, map(float, self.dai_univariate))), "joint_ess": self.dai_joint},
            "difference": dict(zip(self.names, map(float, self.difference))),
            "joint_difference": self.joint_difference,
            "joint_sign": self.joint_sign,
        }


Outputs = Union[ChainOutput, Sequence[ChainOutput]]


def _as_reports(outputs: Outputs) -> list[EssReport]:
    if isinstance(outputs, ChainOutput):
        outputs = [outputs]
    return [o if isinstance(o, EssReport) else ess_report(o) for o in outputs]


def compare_da_dai(da: Outputs, dai: Outputs) -> ComparisonReport:
    """Compare DA against DAI; each side is one chain or a list of replications."""
    da_reps, dai_reps = _as_reports(da), _as_reports(dai)
    if len(da_reps) != len(dai_reps):
        raise ValueError("DA and DAI need the same number of replications")
    if da_reps[0].names != dai_reps[0].names:
        raise ValueError("DA and DAI track different functionals")
    if {r.iterations for r in da_reps} != {r.iterations for r in dai_reps}:
        raise ValueError("DA and DAI chains must have the same length")
    return ComparisonReport(
        names=da_reps[0].names,
        da_univariate=np.median([r.univariate for r in da_reps], axis=0),
        dai_univariate=np.median([r.univariate for r in dai_reps], axis=0),
        da_joint=float(np.median([r.joint for r in da_reps])),
        dai_joint=float(np.median([r.joint for r in dai_reps])),
        replications=len(da_reps),
        da_runs=da_reps,
        dai_runs=dai_reps,
    )


def drift_trace(output: ChainOutput, data: Dataset) -> np.ndarray:
    """Drift function value (sum of residual quadratic forms) at every recorded state."""
    return np.array([
        residual_quadratic_forms(b, s, data).sum() for b, s in zip(output.beta, output.sigma)
    ])


__all__ = [
    "ComparisonReport",
    "EssReport",
    "compare_da_dai",
    "drift_trace",
    "ess_multivariate",
    "ess_report",
    "ess_univariate",
    "ess_univariate_flagged",
    "functional_matrix",
    "functional_names",
]
