"""Mixing distributions of the normal scale mixture and their tilted conditionals.

Each family records how it behaves near the origin, whether it has a finite
``d/2``-th moment, and how to draw from the I-step conditional

    w^{d_i/2} exp(-r w / 2) P_mix(dw)

either exactly (conjugate families) or by rejection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar, Optional

import numpy as np
from scipy import integrate, optimize, special

from .errors import OracleError, SamplingBudgetError, TiltDegenerateError
from .gig import gig_rvs

REJECTION_BUDGET = 1_000_000


# --------------------------------------------------------------------------
# Families
# --------------------------------------------------------------------------

class MixingSpec:
    """A mixing distribution on (0, inf)."""

    family: ClassVar[str]
    support: ClassVar[tuple[float, float]] = (0.0, math.inf)
    discrete: ClassVar[bool] = False

    def support_bounds(self) -> tuple[float, float]:
        return self.support

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        raise NotImplementedError

    def log_density(self, w: np.ndarray) -> np.ndarray:
        """Unnormalized log density, straight from the family's definition."""
        raise NotImplementedError

    def log_moment(self, k) -> np.ndarray:
        """``log E[w^k]``; +inf where the moment diverges."""
        raise NotImplementedError

    def sample_size_biased(self, k, rng: np.random.Generator) -> np.ndarray:
        """Draw from ``w^k P_mix(dw) / E[w^k]``; ``k`` is an array."""
        raise NotImplementedError

    def tilted_exact(self, k, r, rng) -> Optional[np.ndarray]:
        """Exact tilted draws for conjugate families, else None."""
        return None

    def params(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}

    def _check_positive(self, **vals):
        for name, val in vals.items():
            if not (np.isfinite(val) and val > 0):
                raise ValueError(f"{self.family}: parameter {name} must be > 0, got {val}")


@dataclass(frozen=True)
class PointMass(MixingSpec):
    w0: float = 1.0
    family: ClassVar[str] = "pointmass"
    discrete: ClassVar[bool] = True

    def __post_init__(self):
        self._check_positive(w0=self.w0)

    def sample(self, rng, size=None):
        return np.full(() if size is None else size, float(self.w0))

    def log_moment(self, k):
        return np.asarray(k, dtype=float) * math.log(self.w0)

    def tilted_exact(self, k, r, rng):
        return np.full(np.shape(r), float(self.w0))


@dataclass(frozen=True)
class FiniteDiscrete(MixingSpec):
    atoms: tuple
    probs: tuple
    family: ClassVar[str] = "discrete"
    discrete: ClassVar[bool] = True

    def __post_init__(self):
        atoms = tuple(float(a) for a in self.atoms)
        probs = tuple(float(p) for p in self.probs)
        if len(atoms) == 0 or len(atoms) != len(probs):
            raise ValueError("discrete: atoms and probs must be non-empty and equal length")
        if any(not (np.isfinite(a) and a > 0) for a in atoms):
            raise ValueError("discrete: atoms must be > 0")
        if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-9:
            raise ValueError("discrete: probs must be nonnegative and sum to 1")
        total = sum(probs)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", tuple(p / total for p in probs))

    @property
    def _support_atoms(self) -> np.ndarray:
        return np.array([a for a, p in zip(self.atoms, self.probs) if p > 0])

    def sample(self, rng, size=None):
        return rng.choice(np.array(self.atoms), p=np.array(self.probs), size=size)

    def log_moment(self, k):
        k = np.asarray(k, dtype=float)
        atoms = np.array(self.atoms)
        with np.errstate(divide="ignore"):
            logp = np.log(np.array(self.probs))
        return special.logsumexp(logp + k[..., None] * np.log(atoms), axis=-1)

    def tilted_logweights(self, k, r) -> np.ndarray:
        """Normalized log probabilities of the atoms under the tilt, shape (..., J)."""
        atoms = np.array(self.atoms)
        with np.errstate(divide="ignore"):
            logp = np.log(np.array(self.probs))
        k = np.asarray(k, dtype=float)[..., None]
        r = np.asarray(r, dtype=float)[..., None]
        logw = logp + k * np.log(atoms) - 0.5 * r * atoms
        return logw - special.logsumexp(logw, axis=-1, keepdims=True)

    def tilted_exact(self, k, r, rng):
        k, r = np.broadcast_arrays(np.asarray(k, float), np.asarray(r, float))
        cum = np.cumsum(np.exp(self.tilted_logweights(k, r)), axis=-1)
        u = rng.random(r.shape)
        idx = np.sum(cum < u[..., None] * cum[..., -1:], axis=-1)
        idx = np.minimum(idx, len(self.atoms) - 1)
        return np.array(self.atoms)[idx]


@dataclass(frozen=True)
class Pareto(MixingSpec):
    """Density proportional to ``w^{-b-1}`` on ``[a, inf)``."""

    a: float
    b: float
    family: ClassVar[str] = "pareto"

    def __post_init__(self):
        self._check_positive(a=self.a, b=self.b)

    def support_bounds(self):
        return (float(self.a), math.inf)

    def sample(self, rng, size=None):
        return self.a * (1.0 + rng.pareto(self.b, size=size))

    def log_density(self, w):
        return -(self.b + 1.0) * np.log(w)

    def log_moment(self, k):
        k = np.asarray(k, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.log(self.b) + k * np.log(self.a) - np.log(self.b - k)
        return np.where(k < self.b, val, np.inf)

    def sample_size_biased(self, k, rng):
        return self.a * (1.0 + rng.pareto(self.b - k))


@dataclass(frozen=True)
class Gamma(MixingSpec):
    """Shape ``a``, rate ``b``."""

    a: float
    b: float
    family: ClassVar[str] = "gamma"

    def __post_init__(self):
        self._check_positive(a=self.a, b=self.b)

    def sample(self, rng, size=None):
        return rng.gamma(self.a, 1.0 / self.b, size=size)

    def log_density(self, w):
        return (self.a - 1.0) * np.log(w) - self.b * w

    def log_moment(self, k):
        k = np.asarray(k, dtype=float)
        return special.gammaln(self.a + k) - special.gammaln(self.a) - k * np.log(self.b)

    def sample_size_biased(self, k, rng):
        return rng.gamma(self.a + k, 1.0 / self.b)

    def tilted_exact(self, k, r, rng):
        return rng.gamma(self.a + np.asarray(k), 1.0 / (self.b + 0.5 * np.asarray(r)))


@dataclass(frozen=True)
class GIG(MixingSpec):
    """Density proportional to ``w^{q-1} exp(-(a w + b / w) / 2)``."""

    a: float
    b: float
    q: float
    family: ClassVar[str] = "gig"

    def __post_init__(self):
        self._check_positive(a=self.a, b=self.b)
        if not np.isfinite(self.q):
            raise ValueError("gig: q must be finite")

    def sample(self, rng, size=None):
        return gig_rvs(self.a, self.b, self.q, rng, size=size)

    def log_density(self, w):
        return (self.q - 1.0) * np.log(w) - 0.5 * (self.a * w + self.b / w)

    def log_moment(self, k):
        k = np.asarray(k, dtype=float)
        omega = math.sqrt(self.a * self.b)
        return (
            0.5 * k * math.log(self.b / self.a)
            + np.log(special.kve(self.q + k, omega))
            - np.log(special.kve(self.q, omega))
        )

    def sample_size_biased(self, k, rng):
        return gig_rvs(self.a, self.b, self.q + np.asarray(k), rng)

    def tilted_exact(self, k, r, rng):
        return gig_rvs(self.a + np.asarray(r), self.b, self.q + np.asarray(k), rng)


@dataclass(frozen=True)
class InverseGamma(MixingSpec):
    """Density proportional to ``w^{-a-1} exp(-b / w)``."""

    a: float
    b: float
    family: ClassVar[str] = "invgamma"

    def __post_init__(self):
        self._check_positive(a=self.a, b=self.b)

    def sample(self, rng, size=None):
        return self.b / rng.gamma(self.a, 1.0, size=size)

    def log_density(self, w):
        return -(self.a + 1.0) * np.log(w) - self.b / w

    def log_moment(self, k):
        k = np.asarray(k, dtype=float)
        with np.errstate(invalid="ignore"):
            val = special.gammaln(self.a - k) - special.gammaln(self.a) + k * np.log(self.b)
        return np.where(k < self.a, val, np.inf)

    def sample_size_biased(self, k, rng):
        return self.b / rng.gamma(self.a - np.asarray(k), 1.0)

    def tilted_exact(self, k, r, rng):
        k, r = np.broadcast_arrays(np.asarray(k, float), np.asarray(r, float))
        out = np.empty(r.shape)
        pos = r > 0
        if np.any(pos):
            out[pos] = gig_rvs(r[pos], 2.0 * self.b, k[pos] - self.a, rng)
        if np.any(~pos):
            # r = 0 leaves an inverse gamma with shape a - k
            out[~pos] = self.b / rng.gamma(self.a - k[~pos], 1.0)
        return out


@dataclass(frozen=True)
class LogNormal(MixingSpec):
    """``log w`` is normal with mean ``mu`` and standard deviation ``v``."""

    mu: float
    v: float
    family: ClassVar[str] = "lognormal"

    def __post_init__(self):
        self._check_positive(v=self.v)
        if not np.isfinite(self.mu):
            raise ValueError("lognormal: mu must be finite")

    def sample(self, rng, size=None):
        return rng.lognormal(self.mu, self.v, size=size)

    def log_density(self, w):
        lw = np.log(w)
        return -lw - (lw - self.mu) ** 2 / (2.0 * self.v**2)

    def log_moment(self, k):
        k = np.asarray(k, dtype=float)
        return k * self.mu + 0.5 * (k * self.v) ** 2

    def sample_size_biased(self, k, rng):
        return rng.lognormal(self.mu + np.asarray(k) * self.v**2, self.v)


@dataclass(frozen=True)
class Frechet(MixingSpec):
    """Density proportional to ``w^{-(1+alpha)} exp(-(s / w)^alpha)``."""

    alpha: float
    s: float
    family: ClassVar[str] = "frechet"

    def __post_init__(self):
        self._check_positive(alpha=self.alpha, s=self.s)

    def sample(self, rng, size=None):
        return self.s * rng.standard_exponential(size=size) ** (-1.0 / self.alpha)

    def log_density(self, w):
        return -(1.0 + self.alpha) * np.log(w) - (self.s / w) ** self.alpha

    def log_moment(self, k):
        k = np.asarray(k, dtype=float)
        with np.errstate(invalid="ignore"):
            val = k * math.log(self.s) + special.gammaln(1.0 - k / self.alpha)
        return np.where(k < self.alpha, val, np.inf)

    def sample_size_biased(self, k, rng):
        return self.s * rng.gamma(1.0 - np.asarray(k) / self.alpha, 1.0) ** (-1.0 / self.alpha)


@dataclass(frozen=True)
class Beta(MixingSpec):
    a: float
    b: float
    family: ClassVar[str] = "beta"
    support: ClassVar[tuple[float, float]] = (0.0, 1.0)

    def __post_init__(self):
        self._check_positive(a=self.a, b=self.b)

    def sample(self, rng, size=None):
        return rng.beta(self.a, self.b, size=size)

    def log_density(self, w):
        return (self.a - 1.0) * np.log(w) + (self.b - 1.0) * np.log1p(-w)

    def log_moment(self, k):
        k = np.asarray(k, dtype=float)
        return special.betaln(self.a + k, self.b) - special.betaln(self.a, self.b)

    def sample_size_biased(self, k, rng):
        return rng.beta(self.a + np.asarray(k), self.b)


@dataclass(frozen=True)
class Weibull(MixingSpec):
    """Shape ``a``, scale ``b``."""

    a: float
    b: float
    family: ClassVar[str] = "weibull"

    def __post_init__(self):
        self._check_positive(a=self.a, b=self.b)

    def sample(self, rng, size=None):
        return self.b * rng.weibull(self.a, size=size)

    def log_density(self, w):
        return (self.a - 1.0) * np.log(w) - (w / self.b) ** self.a

    def log_moment(self, k):
        k = np.asarray(k, dtype=float)
        return k * math.log(self.b) + special.gammaln(1.0 + k / self.a)

    def sample_size_biased(self, k, rng):
        return self.b * rng.gamma(1.0 + np.asarray(k) / self.a, 1.0) ** (1.0 / self.a)


@dataclass(frozen=True)
class F(MixingSpec):
    """Snedecor F with ``a`` numerator and ``b`` denominator degrees of freedom."""

    a: float
    b: float
    family: ClassVar[str] = "f"

    def __post_init__(self):
        self._check_positive(a=self.a, b=self.b)

    def sample(self, rng, size=None):
        return rng.f(self.a, self.b, size=size)

    def log_density(self, w):
        return (0.5 * self.a - 1.0) * np.log(w) - 0.5 * (self.a + self.b) * np.log(self.a * w + self.b)

    def log_moment(self, k):
        k = np.asarray(k, dtype=float)
        with np.errstate(invalid="ignore"):
            val = (
                k * math.log(self.b / self.a)
                + special.gammaln(0.5 * self.a + k) + special.gammaln(0.5 * self.b - k)
                - special.gammaln(0.5 * self.a) - special.gammaln(0.5 * self.b)
            )
        return np.where(k < 0.5 * self.b, val, np.inf)

    def sample_size_biased(self, k, rng):
        k = np.asarray(k, dtype=float)
        num = rng.chisquare(self.a + 2.0 * k) / self.a
        den = rng.chisquare(self.b - 2.0 * k) / self.b
        return num / den


FAMILIES: dict[str, type] = {
    cls.family: cls
    for cls in (PointMass, FiniteDiscrete, Pareto, Gamma, GIG, InverseGamma,
                LogNormal, Frechet, Beta, Weibull, F)
}

CONJUGATE_FAMILIES = ("pointmass", "discrete", "gamma", "gig", "invgamma")


def make_mixing(family: str, **params) -> MixingSpec:
    """Build a family from its configuration name, e.g. ``make_mixing("gamma", a=2, b=2)``."""
    try:
        cls = FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown mixing family {family!r}; expected one of {sorted(FAMILIES)}")
    return cls(**params)


# --------------------------------------------------------------------------
# Near-origin classes, H2 and the geometric ergodicity verdict
# --------------------------------------------------------------------------

ZERO_NEAR_ORIGIN = "ZeroNearOrigin"
FASTER_THAN_POLYNOMIAL = "FasterThanPolynomial"
POLYNOMIAL_WITH_POWER = "PolynomialWithPower"


@dataclass(frozen=True)
class OriginClass:
    tag: str
    theta: Optional[float] = None
    power: Optional[float] = None

    def __post_init__(self):
        if self.tag == ZERO_NEAR_ORIGIN and not (self.theta and self.theta > 0):
            raise ValueError("zero-near-origin class needs theta > 0")
        if self.tag == POLYNOMIAL_WITH_POWER and not (self.power is not None and self.power > -1):
            raise ValueError("polynomial class needs power > -1")


def classify_origin(spec: MixingSpec) -> OriginClass:
    fam = spec.family
    if fam == "pointmass":
        return OriginClass(ZERO_NEAR_ORIGIN, theta=float(spec.w0))
    if fam == "discrete":
        return OriginClass(ZERO_NEAR_ORIGIN, theta=float(spec._support_atoms.min()))
    if fam == "pareto":
        return OriginClass(ZERO_NEAR_ORIGIN, theta=float(spec.a))
    if fam in ("gig", "invgamma", "lognormal", "frechet"):
        return OriginClass(FASTER_THAN_POLYNOMIAL)
    if fam in ("gamma", "beta", "weibull"):
        return OriginClass(POLYNOMIAL_WITH_POWER, power=float(spec.a) - 1.0)
    if fam == "f":
        return OriginClass(POLYNOMIAL_WITH_POWER, power=float(spec.a) / 2.0 - 1.0)
    raise ValueError(f"no origin rule for family {fam!r}")


def check_h2(spec: MixingSpec, d: int) -> bool:
    """Whether ``E[w^{d/2}]`` is finite under the mixing distribution."""
    fam = spec.family
    if fam in ("pointmass", "discrete", "gamma", "gig", "lognormal", "beta", "weibull"):
        return True
    if fam == "pareto":
        return spec.b > d / 2
    if fam == "invgamma":
        return spec.a > d / 2
    if fam == "frechet":
        return spec.alpha > d / 2
    if fam == "f":
        return spec.b > d
    raise ValueError(f"no H2 rule for family {fam!r}")


GEOMETRICALLY_ERGODIC = "GeometricallyErgodic"
NOT_ESTABLISHED = "NotEstablished"


@dataclass(frozen=True)
class ErgodicityVerdict:
    h2_ok: bool
    origin_class: OriginClass
    c1: float
    theorem1: str
    reason: str

    def to_dict(self) -> dict:
        return {
            "h2_ok": self.h2_ok,
            "origin_class": self.origin_class.tag,
            "theta": self.origin_class.theta,
            "power": self.origin_class.power,
            "c1": self.c1,
            "theorem1": self.theorem1,
            "reason": self.reason,
        }


def c1_threshold(n: int, p: int, m: float, min_di: int) -> float:
    return (n - p + m - min_di) / 2.0


def verdict_theorem1(spec: MixingSpec, n: int, p: int, d: int, m: float, min_di: int) -> ErgodicityVerdict:
    """Apply the three near-origin sufficient conditions for geometric ergodicity.

    NotEstablished means only that the sufficient conditions do not apply.
    Propriety of the P-step conditional (H1 for monotone data) is checked
    separately.
    """
    if not 1 <= min_di <= d:
        raise ValueError(f"min_di must lie in [1, {d}], got {min_di}")
    h2 = check_h2(spec, d)
    origin = classify_origin(spec)
    c1 = c1_threshold(n, p, m, min_di)
    if not h2:
        return ErgodicityVerdict(False, origin, c1, NOT_ESTABLISHED,
                                 f"Condition H2 fails: E[w^(d/2)] is infinite for {spec.family}")
    if origin.tag == ZERO_NEAR_ORIGIN:
        return ErgodicityVerdict(True, origin, c1, GEOMETRICALLY_ERGODIC,
                                 f"mixing distribution is zero near the origin (theta={origin.theta:g})")
    if origin.tag == FASTER_THAN_POLYNOMIAL:
        return ErgodicityVerdict(True, origin, c1, GEOMETRICALLY_ERGODIC,
                                 "mixing distribution is faster than polynomial near the origin")
    if origin.power > c1:
        return ErgodicityVerdict(True, origin, c1, GEOMETRICALLY_ERGODIC,
                                 f"polynomial power {origin.power:g} exceeds c1={c1:g}")
    return ErgodicityVerdict(True, origin, c1, NOT_ESTABLISHED,
                             f"polynomial power {origin.power:g} does not exceed c1={c1:g}")


# --------------------------------------------------------------------------
# Tilted conditional sampling
# --------------------------------------------------------------------------

def _log_envelope(spec: MixingSpec, k: np.ndarray, r: np.ndarray) -> np.ndarray:
    """``log sup_w w^k exp(-r w / 2)`` over the support of the family."""
    lo, hi = spec.support_bounds()
    with np.errstate(divide="ignore"):
        w_star = np.where(r > 0, 2.0 * k / np.where(r > 0, r, 1.0), np.inf)
    w_star = np.clip(w_star, lo, hi)
    with np.errstate(invalid="ignore"):
        val = k * np.log(w_star) - 0.5 * r * w_star
    return np.where(np.isfinite(w_star), val, np.inf)


def log_acceptance_ratio(spec: MixingSpec, k, r, w, size_biased: bool) -> np.ndarray:
    """Log acceptance probability of a proposal ``w`` (always <= 0).

    With proposals from the mixing law the ratio is
    ``w^k exp(-r w / 2) / M``; with size-biased proposals it is
    ``exp(-r w / 2)``.
    """
    k, r, w = (np.asarray(v, dtype=float) for v in (k, r, w))
    if size_biased:
        return -0.5 * r * w
    return k * np.log(w) - 0.5 * r * w - _log_envelope(spec, k, r)


def _rejection(spec: MixingSpec, k: np.ndarray, r: np.ndarray, rng) -> np.ndarray:
    # Pick per element the proposal with the smaller bounding constant:
    # the mixing law itself (constant M) or the size-biased law (E[w^k]).
    log_env = _log_envelope(spec, k, r)
    log_mom = spec.log_moment(k)
    use_sb = log_mom <= log_env
    if np.any(~np.isfinite(np.where(use_sb, log_mom, log_env))):
        raise TiltDegenerateError(f"{spec.family}: tilted conditional is improper (r=0 and infinite moment)")

    out = np.empty(k.shape)
    pending = np.arange(k.size)
    used = np.zeros(k.size, dtype=np.int64)
    while pending.size:
        reps = max(1, min(64, 256 // pending.size))
        kk = np.repeat(k[pending], reps)
        rr = np.repeat(r[pending], reps)
        sb = np.repeat(use_sb[pending], reps)
        w = np.empty(kk.size)
        if np.any(sb):
            w[sb] = spec.sample_size_biased(kk[sb], rng)
        if np.any(~sb):
            w[~sb] = spec.sample(rng, size=int(np.sum(~sb)))
        log_acc = np.where(sb, -0.5 * rr * w, kk * np.log(w) - 0.5 * rr * w - np.repeat(log_env[pending], reps))
        accept = (np.log(rng.random(kk.size)) < log_acc).reshape(pending.size, reps)
        hit = accept.any(axis=1)
        first = np.argmax(accept, axis=1)
        w = w.reshape(pending.size, reps)
        out[pending[hit]] = w[hit, first[hit]]
        used[pending] += reps
        pending = pending[~hit]
        if pending.size and used[pending].max() >= REJECTION_BUDGET:
            i = int(pending[np.argmax(used[pending])])
            raise SamplingBudgetError(
                f"{spec.family}: no acceptance after {int(used[i])} proposals "
                f"(d_i={2 * k.flat[i]:g}, r={r.flat[i]:g})"
            )
    return out


def sample_tilted(spec: MixingSpec, d_i, r, rng: np.random.Generator, size=None):
    """Draw from the density proportional to ``w^{d_i/2} exp(-r w / 2) P_mix(dw)``.

    ``d_i`` and ``r`` may be arrays (one draw per element, as in the I step)
    or scalars with ``size`` draws requested.
    """
    d_i = np.asarray(d_i, dtype=float)
    r = np.asarray(r, dtype=float)
    if not (np.isfinite(r).all() and (r >= 0).all()):
        raise TiltDegenerateError("residual quadratic form must be finite and nonnegative")
    if (d_i < 1).any():
        raise TiltDegenerateError("d_i must be at least 1")
    shape = np.broadcast_shapes(d_i.shape, r.shape) if size is None else size
    k = np.broadcast_to(0.5 * d_i, shape).ravel()
    rr = np.broadcast_to(r, shape).ravel()
    at_zero = rr == 0
    if at_zero.any() and not np.isfinite(spec.log_moment(k[at_zero])).all():
        raise TiltDegenerateError(f"{spec.family}: tilted conditional is improper at r=0")
    out = spec.tilted_exact(k, rr, rng)
    if out is None:
        out = _rejection(spec, k, rr, rng)
    out = np.asarray(out, dtype=float).reshape(shape)
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# Quadrature oracle
# --------------------------------------------------------------------------

def _transform(spec: MixingSpec):
    """Map t in R onto the support: returns (w(t), log dw/dt)."""
    lo, hi = spec.support_bounds()
    if hi < math.inf:
        def wmap(t):
            return lo + (hi - lo) * special.expit(t)

        def logjac(t):
            return math.log(hi - lo) + special.log_expit(t) + special.log_expit(-t)
    elif lo > 0:
        def wmap(t):
            return lo + np.exp(t)

        def logjac(t):
            return t
    else:
        wmap = np.exp

        def logjac(t):
            return t
    return wmap, logjac


def tilted_moment_oracle(spec: MixingSpec, d_i: float, r: float, order: int) -> float:
    """``E[w^order]`` under the tilted conditional, by quadrature or exact summation."""
    k = 0.5 * d_i
    if spec.family == "pointmass":
        return float(spec.w0) ** order
    if spec.family == "discrete":
        atoms = np.array(spec.atoms)
        logw = np.log(np.array(spec.probs)) + k * np.log(atoms) - 0.5 * r * atoms
        weights = np.exp(logw - logw.max())
        return float(np.sum(weights * atoms**order) / np.sum(weights))

    wmap, logjac = _transform(spec)

    def log_integrand(t, power):
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            w = wmap(t)
            val = (power + k) * np.log(w) + spec.log_density(w) - 0.5 * r * w + logjac(t)
        return np.where(np.isfinite(val), val, -np.inf)

    def integral(power):
        grid = np.linspace(-200.0, 200.0, 40001)
        vals = log_integrand(grid, power)
        j = int(np.argmax(vals))
        if not np.isfinite(vals[j]):
            raise OracleError("integrand vanishes on the whole grid")
        res = optimize.minimize_scalar(
            lambda t: -float(log_integrand(np.array(t), power)),
            bounds=(grid[max(j - 1, 0)], grid[min(j + 1, grid.size - 1)]),
            method="bounded", options={"xatol": 1e-10},
        )
        t_star = float(res.x) if res.success else float(grid[j])
        peak = max(float(log_integrand(np.array(t_star), power)), float(vals[j]))
        inside = np.flatnonzero(vals > peak - 90.0)
        if inside[0] == 0 or inside[-1] == grid.size - 1:
            raise OracleError("integrand does not decay inside the quadrature window")
        lo_t = grid[max(inside[0] - 1, 0)]
        hi_t = grid[min(inside[-1] + 1, grid.size - 1)]
        val, err = integrate.quad(
            lambda t: float(np.exp(log_integrand(np.array(t), power) - peak)),
            lo_t, hi_t, points=[t_star], limit=500, epsabs=0.0, epsrel=1e-11,
        )
        if not (val > 0 and err <= 1e-9 * val):
            raise OracleError(f"quadrature did not converge (value {val}, error {err})")
        return math.log(val) + peak

    return math.exp(integral(order) - integral(0))
