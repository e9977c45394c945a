import math
import zlib

import numpy as np
import pytest
from scipy import stats

from robustda import mixing as mx
from robustda.errors import OracleError, SamplingBudgetError, TiltDegenerateError
from robustda.gig import gig_rvs
from robustda.mixing import (
    F,
    FAMILIES,
    GIG,
    Beta,
    FiniteDiscrete,
    Frechet,
    Gamma,
    InverseGamma,
    LogNormal,
    Pareto,
    PointMass,
    Weibull,
    c1_threshold,
    check_h2,
    classify_origin,
    log_acceptance_ratio,
    make_mixing,
    sample_tilted,
    tilted_moment_oracle,
    verdict_theorem1,
)

REJECTION_SPECS = [
    Pareto(1.5, 3.0),
    LogNormal(0.3, 0.8),
    Frechet(3.0, 1.5),
    Beta(2.0, 1.0),
    Weibull(1.5, 2.0),
    F(6.0, 8.0),
]


class TestConditionH2:
    # (spec, d, expected)
    TABLE = [
        (PointMass(0.3), 5, True),
        (FiniteDiscrete((0.5, 2.0), (0.5, 0.5)), 5, True),
        (Gamma(0.1, 3.0), 9, True),
        (GIG(1.0, 1.0, -0.5), 9, True),
        (LogNormal(0.0, 2.0), 9, True),
        (Beta(0.5, 0.5), 9, True),
        (Weibull(0.5, 1.0), 9, True),
        (Pareto(1.0, 1.0), 2, False),   # b = d/2
        (Pareto(1.0, 1.0001), 2, True),
        (Pareto(1.0, 1.5), 3, False),   # b = d/2
        (InverseGamma(1.0, 1.0), 2, False),
        (InverseGamma(1.01, 1.0), 2, True),
        (InverseGamma(0.5, 1.0), 2, False),
        (Frechet(1.0, 1.0), 2, False),
        (Frechet(1.2, 1.0), 2, True),
        (F(4.0, 2.0), 2, False),        # b = d
        (F(4.0, 3.0), 2, True),
        (F(4.0, 3.0), 3, False),
    ]

    @pytest.mark.parametrize("spec,d,expected", TABLE)
    def test_rule(self, spec, d, expected):
        assert check_h2(spec, d) is expected

    @pytest.mark.parametrize("spec,d,expected", TABLE)
    def test_rule_matches_moment(self, spec, d, expected):
        # H2 is finiteness of E[w^{d/2}]
        assert bool(np.isfinite(spec.log_moment(d / 2))) is expected


class TestOriginClass:
    @pytest.mark.parametrize("spec,tag,theta,power", [
        (PointMass(0.7), mx.ZERO_NEAR_ORIGIN, 0.7, None),
        (FiniteDiscrete((2.0, 0.5, 4.0), (0.2, 0.3, 0.5)), mx.ZERO_NEAR_ORIGIN, 0.5, None),
        (Pareto(3.0, 2.0), mx.ZERO_NEAR_ORIGIN, 3.0, None),
        (GIG(1.0, 1.0, -0.5), mx.FASTER_THAN_POLYNOMIAL, None, None),
        (InverseGamma(2.0, 1.0), mx.FASTER_THAN_POLYNOMIAL, None, None),
        (LogNormal(0.0, 1.0), mx.FASTER_THAN_POLYNOMIAL, None, None),
        (Frechet(2.0, 1.0), mx.FASTER_THAN_POLYNOMIAL, None, None),
        (Gamma(2.0, 2.0), mx.POLYNOMIAL_WITH_POWER, None, 1.0),
        (Beta(0.5, 1.0), mx.POLYNOMIAL_WITH_POWER, None, -0.5),
        (Weibull(3.0, 1.0), mx.POLYNOMIAL_WITH_POWER, None, 2.0),
        (F(4.0, 3.0), mx.POLYNOMIAL_WITH_POWER, None, 1.0),
    ])
    def test_classification(self, spec, tag, theta, power):
        oc = classify_origin(spec)
        assert oc.tag == tag
        assert oc.theta == theta
        assert oc.power == power

    def test_total_over_registry(self):
        defaults = {
            "pointmass": {"w0": 1.0}, "discrete": {"atoms": (1.0,), "probs": (1.0,)},
            "pareto": {"a": 1.0, "b": 2.0}, "gamma": {"a": 1.0, "b": 1.0},
            "gig": {"a": 1.0, "b": 1.0, "q": 0.0}, "invgamma": {"a": 2.0, "b": 1.0},
            "lognormal": {"mu": 0.0, "v": 1.0}, "frechet": {"alpha": 2.0, "s": 1.0},
            "beta": {"a": 1.0, "b": 1.0}, "weibull": {"a": 1.0, "b": 1.0}, "f": {"a": 2.0, "b": 4.0},
        }
        assert set(defaults) == set(FAMILIES)
        for name, params in defaults.items():
            spec = make_mixing(name, **params)
            assert spec.family == name
            oc = classify_origin(spec)
            if oc.power is not None:
                assert oc.power > -1
            if oc.theta is not None:
                assert oc.theta > 0

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            Gamma(0.0, 1.0)
        with pytest.raises(ValueError):
            FiniteDiscrete((1.0, 2.0), (0.5, 0.6))
        with pytest.raises(ValueError):
            make_mixing("cauchy")


class TestTheorem1Verdict:
    def test_simulation_design_gamma(self):
        v = verdict_theorem1(Gamma(2.0, 2.0), n=50, p=2, d=2, m=2, min_di=1)
        assert v.c1 == 24.5
        assert v.theorem1 == mx.NOT_ESTABLISHED

    def test_point_mass(self):
        v = verdict_theorem1(PointMass(1.0), n=5, p=2, d=3, m=0, min_di=1)
        assert v.theorem1 == mx.GEOMETRICALLY_ERGODIC

    def test_power_threshold_strict(self):
        c1 = c1_threshold(50, 2, 2, 1)
        at = verdict_theorem1(Gamma(c1 + 1.0, 1.0), 50, 2, 2, 2, 1)
        above = verdict_theorem1(Gamma(c1 + 1.0 + 1e-9, 1.0), 50, 2, 2, 2, 1)
        assert at.theorem1 == mx.NOT_ESTABLISHED
        assert above.theorem1 == mx.GEOMETRICALLY_ERGODIC

    def test_f_threshold(self):
        # power a/2 - 1 > c1  <=>  a > n - p + m - min_di + 2
        bound = 50 - 2 + 2 - 1 + 2
        assert verdict_theorem1(F(bound, 5.0), 50, 2, 2, 2, 1).theorem1 == mx.NOT_ESTABLISHED
        assert verdict_theorem1(F(bound + 0.01, 5.0), 50, 2, 2, 2, 1).theorem1 == mx.GEOMETRICALLY_ERGODIC

    def test_h2_failure_blocks_verdict(self):
        v = verdict_theorem1(InverseGamma(0.5, 1.0), 50, 2, 2, 2, 1)
        assert not v.h2_ok and v.theorem1 == mx.NOT_ESTABLISHED
        assert "H2" in v.reason

    def test_faster_than_polynomial(self):
        assert verdict_theorem1(LogNormal(0, 1), 50, 2, 2, 2, 1).theorem1 == mx.GEOMETRICALLY_ERGODIC

    def test_complete_data_threshold(self):
        for n, p, m, d in [(50, 2, 2, 2), (20, 3, 0, 4), (9, 1, -1.5, 1)]:
            v = verdict_theorem1(Gamma(1.0, 1.0), n, p, d, m, min_di=d)
            assert v.c1 == (n - p + m - d) / 2

    def test_verdict_invariant(self):
        specs = [PointMass(1.0), Pareto(1.0, 0.5), Gamma(30.0, 1.0), Gamma(1.0, 1.0), GIG(1, 1, 0),
                 InverseGamma(0.9, 1.0), Beta(40.0, 1.0), F(3.0, 1.0)]
        for spec in specs:
            v = verdict_theorem1(spec, 30, 2, 2, 2, 1)
            expect = v.h2_ok and (
                v.origin_class.tag in (mx.ZERO_NEAR_ORIGIN, mx.FASTER_THAN_POLYNOMIAL)
                or v.origin_class.power > v.c1
            )
            assert (v.theorem1 == mx.GEOMETRICALLY_ERGODIC) == expect


def _mean_z(draws, mean, var):
    return (draws.mean() - mean) / math.sqrt(var / draws.size)


class TestSampleTilted:
    def test_gamma_conjugate(self):
        rng = np.random.default_rng(0)
        draws = sample_tilted(Gamma(2.0, 2.0), 2, 3.0, rng, size=100_000)
        # Gamma(3, rate 3.5)
        assert abs(_mean_z(draws, 3 / 3.5, 3 / 3.5**2)) < 3

    def test_point_mass(self):
        rng = np.random.default_rng(0)
        np.testing.assert_array_equal(sample_tilted(PointMass(1.0), [1, 2, 3], [0.0, 5.0, 1e6], rng), 1.0)
        assert sample_tilted(PointMass(2.5), 1, 4.0, rng) == 2.5

    def test_discrete_reweighting(self):
        spec = FiniteDiscrete((0.5, 2.0), (0.5, 0.5))
        np.testing.assert_allclose(np.exp(spec.tilted_logweights(1.0, 0.0)), [0.2, 0.8], rtol=1e-14)
        draws = sample_tilted(spec, 2, 0.0, np.random.default_rng(2), size=100_000)
        share = np.mean(draws == 2.0)
        assert abs(share - 0.8) < 4 * math.sqrt(0.16 / 100_000)

    def test_discrete_large_r_stable(self):
        spec = FiniteDiscrete((0.5, 2.0), (0.5, 0.5))
        draws = sample_tilted(spec, 1, 1e6, np.random.default_rng(0), size=100)
        assert np.all(draws == 0.5)

    def test_scalar_in_scalar_out(self):
        w = sample_tilted(LogNormal(0, 1), 2, 1.0, np.random.default_rng(0))
        assert isinstance(w, float) and w > 0

    def test_invgamma_r_zero(self):
        # r = 0 gives InverseGamma(a - d_i/2, b)
        spec = InverseGamma(4.0, 2.0)
        draws = sample_tilted(spec, 2, 0.0, np.random.default_rng(4), size=100_000)
        mean, var = 2.0 / 2.0, 2.0**2 / (2.0**2 * 1.0)
        assert abs(_mean_z(draws, mean, var)) < 4

    @pytest.mark.parametrize("spec", REJECTION_SPECS, ids=lambda s: s.family)
    @pytest.mark.parametrize("d_i,r", [(1, 0.0), (2, 0.7), (3, 6.0)])
    def test_rejection_moments(self, spec, d_i, r):
        rng = np.random.default_rng([zlib.crc32(spec.family.encode()), d_i])
        draws = sample_tilted(spec, np.full(20_000, d_i), np.full(20_000, r), rng)
        m1 = tilted_moment_oracle(spec, d_i, r, 1)
        m2 = tilted_moment_oracle(spec, d_i, r, 2)
        assert abs(_mean_z(draws, m1, m2 - m1**2)) < 4.5

    def test_rejects_bad_inputs(self):
        rng = np.random.default_rng(0)
        with pytest.raises(TiltDegenerateError):
            sample_tilted(Gamma(1, 1), 1, -0.1, rng)
        with pytest.raises(TiltDegenerateError):
            sample_tilted(Gamma(1, 1), 1, np.nan, rng)
        with pytest.raises(TiltDegenerateError):
            sample_tilted(Gamma(1, 1), 0, 1.0, rng)

    def test_improper_at_zero_residual(self):
        # E[w^{3/2}] is infinite for Pareto with b = 1.2
        with pytest.raises(TiltDegenerateError):
            sample_tilted(Pareto(1.0, 1.2), 3, 0.0, np.random.default_rng(0))
        with pytest.raises(TiltDegenerateError):
            sample_tilted(InverseGamma(1.0, 1.0), 2, 0.0, np.random.default_rng(0))
        # proper as soon as r > 0
        assert sample_tilted(Pareto(1.0, 1.2), 3, 0.5, np.random.default_rng(0)) >= 1.0

    def test_budget_exhaustion(self, monkeypatch):
        monkeypatch.setattr(mx, "REJECTION_BUDGET", 2000)
        with pytest.raises(SamplingBudgetError, match="lognormal"):
            sample_tilted(LogNormal(0.0, 0.1), 1, 1e6, np.random.default_rng(0))

    @pytest.mark.parametrize("spec", REJECTION_SPECS, ids=lambda s: s.family)
    def test_acceptance_ratio_in_unit_interval(self, spec):
        rng = np.random.default_rng(9)
        for d_i, r in [(1, 0.3), (2, 4.0), (4, 25.0)]:
            k = d_i / 2
            w = spec.sample(rng, size=5000)
            lr = log_acceptance_ratio(spec, k, r, w, size_biased=False)
            assert np.all(lr <= 1e-12) and np.all(np.isfinite(lr))
            wb = spec.sample_size_biased(np.full(5000, k), rng)
            lb = log_acceptance_ratio(spec, k, r, wb, size_biased=True)
            assert np.all(lb <= 0) and np.all(np.isfinite(lb))


class TestOracle:
    def test_point_mass(self):
        assert tilted_moment_oracle(PointMass(0.4), 3, 2.0, 1) == 0.4

    def test_gamma_mean(self):
        assert tilted_moment_oracle(Gamma(2.0, 2.0), 2, 3.0, 1) == pytest.approx(6 / 7, rel=1e-8)

    def test_discrete_mean(self):
        assert tilted_moment_oracle(FiniteDiscrete((0.5, 2.0), (0.5, 0.5)), 2, 0.0, 1) == pytest.approx(1.7)

    def test_closed_forms(self):
        # size-biased Pareto(a, b) by w^k is Pareto(a, b - k)
        assert tilted_moment_oracle(Pareto(2.0, 3.0), 1, 0.0, 1) == pytest.approx(2.0 * 2.5 / 1.5, rel=1e-8)
        # LogNormal: E[w^{k+1}] / E[w^k] = exp(mu + v^2 (2k + 1) / 2)
        assert tilted_moment_oracle(LogNormal(0.0, 1.0), 2, 0.0, 1) == pytest.approx(math.exp(1.5), rel=1e-8)

    def test_gig_against_scipy(self):
        # GIG(a, b, q) tilted by d_i=2, r=1 is GIG(a + 1, b, q + 1)
        a, b, q = 2.0, 3.0, -0.4
        val = tilted_moment_oracle(GIG(a, b, q), 2, 1.0, 1)
        a2, q2 = a + 1.0, q + 1.0
        ref = stats.geninvgauss(q2, math.sqrt(a2 * b), scale=math.sqrt(b / a2)).mean()
        assert val == pytest.approx(ref, rel=1e-8)

    def test_infinite_moment_raises(self):
        with pytest.raises(OracleError):
            tilted_moment_oracle(Pareto(2.0, 1.5), 1, 0.0, 1)


class TestGig:
    @pytest.mark.parametrize("a,b,q", [(1.0, 1.0, 0.5), (0.2, 5.0, -2.0), (4.0, 0.01, 3.0), (1e-3, 1e-3, 0.0)])
    def test_moments_against_scipy(self, a, b, q):
        rng = np.random.default_rng(1)
        draws = gig_rvs(a, b, q, rng, size=100_000)
        ref = stats.geninvgauss(q, math.sqrt(a * b), scale=math.sqrt(b / a))
        assert abs(_mean_z(draws, ref.mean(), ref.var())) < 4
        # KS against the exact law
        assert stats.kstest(draws[:5000], ref.cdf).pvalue > 1e-4

    def test_per_element_parameters(self):
        rng = np.random.default_rng(2)
        q = np.repeat([-1.0, 2.0], 50_000)
        draws = gig_rvs(1.0, 2.0, q, rng)
        for qq, part in ((-1.0, draws[:50_000]), (2.0, draws[50_000:])):
            ref = stats.geninvgauss(qq, math.sqrt(2.0), scale=math.sqrt(2.0))
            assert abs(_mean_z(part, ref.mean(), ref.var())) < 4

    def test_invalid(self):
        with pytest.raises(ValueError):
            gig_rvs(0.0, 1.0, 1.0, np.random.default_rng(0))
