"""Generalized inverse Gaussian variates.

Density ``w^{q-1} exp(-(a w + b / w) / 2)`` on ``w > 0`` with ``a, b > 0``.
Uses Devroye's (2014) log-concave rejection scheme on the two-parameter
form, vectorized so that every element may carry its own parameters.
"""

from __future__ import annotations

import numpy as np

from .errors import SamplingBudgetError

MAX_ROUNDS = 10_000


def _psi(x, alpha, lam):
    return -alpha * (np.cosh(x) - 1.0) - lam * (np.expm1(x) - x)


def _dpsi(x, alpha, lam):
    return -alpha * np.sinh(x) - lam * np.expm1(x)


def _log_envelope_constants(lam, omega):
    # alpha = sqrt(omega^2 + lam^2) - lam, written to avoid cancellation
    alpha = omega**2 / (np.sqrt(omega**2 + lam**2) + lam)

    x = -_psi(1.0, alpha, lam)
    t = np.where(
        (x >= 0.5) & (x <= 2.0),
        1.0,
        np.where(x > 2.0, np.sqrt(2.0 / (alpha + lam)), np.log(4.0 / (alpha + 2.0 * lam))),
    )

    x = -_psi(-1.0, alpha, lam)
    inv_a = 1.0 / alpha
    s_small = np.log1p(inv_a + np.sqrt(inv_a**2 + 2.0 * inv_a))
    with np.errstate(divide="ignore"):
        s_small = np.where(lam > 0, np.minimum(1.0 / lam, s_small), s_small)
    s = np.where(
        (x >= 0.5) & (x <= 2.0),
        1.0,
        np.where(x > 2.0, np.sqrt(4.0 / (alpha * np.cosh(1.0) + lam)), s_small),
    )

    eta = -_psi(t, alpha, lam)
    zeta = -_dpsi(t, alpha, lam)
    theta = -_psi(-s, alpha, lam)
    xi = _dpsi(-s, alpha, lam)
    p = 1.0 / xi
    r = 1.0 / zeta
    td = t - r * eta
    sd = s - p * theta
    q = td + sd
    return alpha, t, s, eta, zeta, theta, xi, p, r, td, sd, q


def gig_rvs(a, b, q, rng: np.random.Generator, size=None) -> np.ndarray:
    """Draw GIG(a, b, q) variates; parameters broadcast against ``size``."""
    a, b, q = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, q)))
    shape = a.shape if size is None else size
    a = np.broadcast_to(a, shape).ravel()
    b = np.broadcast_to(b, shape).ravel()
    q = np.broadcast_to(q, shape).ravel()
    if np.any(a <= 0) or np.any(b <= 0):
        raise ValueError("GIG requires a > 0 and b > 0")

    swap = q < 0
    lam = np.abs(q)
    omega = np.sqrt(a * b)
    alpha, t, s, eta, zeta, theta, xi, p, r, td, sd, qq = _log_envelope_constants(lam, omega)
    total = p + qq + r

    out = np.empty(a.size)
    pending = np.arange(a.size)
    rounds = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while pending.size:
            rounds += 1
            if rounds > MAX_ROUNDS:
                raise SamplingBudgetError("GIG sampler did not terminate")
            uvw = rng.random((pending.size, 3))
            u, v, w = uvw[:, 0], uvw[:, 1], uvw[:, 2]
            P, Q, R = p[pending], qq[pending], r[pending]
            TD, SD = td[pending], sd[pending]
            uu = u * total[pending]
            x = np.where(
                uu < Q,
                -SD + Q * v,
                np.where(uu < Q + R, TD - R * np.log(v), -SD + P * np.log(v)),
            )
            log_g = np.where(
                x > TD,
                -eta[pending] - zeta[pending] * (x - t[pending]),
                np.where(x < -SD, -theta[pending] + xi[pending] * (x + s[pending]), 0.0),
            )
            ok = np.log(w) + log_g <= _psi(x, alpha[pending], lam[pending])
            out[pending[ok]] = x[ok]
            pending = pending[~ok]

    lo = lam / omega
    out = np.exp(out) * (lo + np.sqrt(1.0 + lo**2))
    out = np.where(swap, 1.0 / out, out)
    return (out * np.sqrt(b / a)).reshape(shape)
