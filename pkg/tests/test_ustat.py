import json
import math

import numpy as np
import pytest
from scipy import integrate, stats

from dmnlife import mc
from dmnlife.datasets import leukemia_sample
from dmnlife.lifedist import Exponential
from dmnlife.ustat import (
    SIGMA0_NORMAL,
    Sample,
    asymptotic_variance,
    delta_cap,
    delta_hat,
    kernel_phi,
    kernel_phi_sym,
    printed_variance_functional,
    run_test,
)

# exact values computed ahead of the implementation:
# leukemia statistic via rational arithmetic over the double loop
LEUKEMIA_DELTA_CAP = -0.375242136976
# influence-function variance of the scaled statistic under the unit
# exponential, from closed-form moment algebra (41/16)
NULL_SIGMA2 = 2.5625
# the printed variance functional under the unit exponential:
# 122 - 1725/8 + 23465/243 - 25/16
PRINTED_SIGMA2 = 122 - 1725 / 8 + 23465 / 243 - 25 / 16


def naive_delta_hat(values):
    n = len(values)
    total = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                total += kernel_phi(values[i], values[j])
    return total / (n * (n - 1))


class TestKernel:
    def test_diagonal_identity(self):
        for x in (1.0, 2.0, 3.0):
            assert kernel_phi(x, x) == pytest.approx(-(x**3) / 3.0, rel=1e-14)

    def test_hand_values(self):
        assert kernel_phi(1.0, 2.0) == pytest.approx(2.0 / 3.0, rel=1e-14)
        assert kernel_phi(2.0, 1.0) == pytest.approx(-8.0 / 3.0, rel=1e-14)

    def test_cubic_homogeneity(self):
        assert kernel_phi(10.0, 20.0) == pytest.approx(
            1000.0 * kernel_phi(1.0, 2.0), rel=1e-12
        )
        rng = np.random.default_rng(5)
        for _ in range(30):
            x, y, c = rng.uniform(0.1, 5.0, size=3)
            assert kernel_phi(c * x, c * y) == pytest.approx(
                c**3 * kernel_phi(x, y), rel=1e-10
            )

    def test_symmetrized(self):
        assert kernel_phi_sym(1.0, 2.0) == pytest.approx(-1.0, rel=1e-14)
        assert kernel_phi_sym(2.0, 1.0) == kernel_phi_sym(1.0, 2.0)

    def test_array_broadcast(self):
        x = np.array([1.0, 2.0])
        y = np.array([2.0, 1.0])
        np.testing.assert_allclose(kernel_phi(x, y), [2.0 / 3.0, -8.0 / 3.0])


class TestDeltaHat:
    def test_pair_identities(self):
        assert delta_hat(Sample([2.0, 2.0])) == pytest.approx(-8.0 / 3.0, rel=1e-14)
        assert delta_hat(Sample([1.0, 2.0])) == pytest.approx(-1.0, rel=1e-14)

    def test_permutation_invariance(self):
        assert delta_hat(Sample([1.0, 2.0, 5.0])) == delta_hat(Sample([5.0, 1.0, 2.0]))

    def test_matches_double_loop_oracle(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            n = int(rng.integers(2, 51))
            values = rng.exponential(size=n)
            got = delta_hat(Sample(values))
            assert got == pytest.approx(naive_delta_hat(values), rel=1e-12)


class TestDeltaCap:
    def test_pair_value(self):
        assert delta_cap(Sample([1.0, 2.0])) == pytest.approx(-8.0 / 27.0, rel=1e-14)

    def test_constant_sample(self):
        for c in (0.5, 1.0, 7.0):
            assert delta_cap(Sample([c] * 6)) == pytest.approx(-1.0 / 3.0, rel=1e-12)

    def test_leukemia_frozen_value(self):
        assert delta_cap(leukemia_sample()) == pytest.approx(
            LEUKEMIA_DELTA_CAP, abs=1e-9
        )

    def test_scale_invariance(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            s = Sample(rng.exponential(size=int(rng.integers(5, 40))))
            base = delta_cap(s)
            for c in (1e-3, 1e3):
                assert abs(delta_cap(s.scaled(c)) - base) <= 1e-10 * abs(base)


class TestNullKernelMoments:
    def test_exact_double_integral_oracle(self):
        # pairwise moments under the unit exponential, by direct integration
        def pair_mean(fn):
            val, _ = integrate.dblquad(
                lambda y, x: fn(x, y) * math.exp(-x - y),
                0,
                40,
                0,
                40,
                epsabs=1e-10,
            )
            return val

        assert pair_mean(lambda x, y: x * x * min(x, y)) == pytest.approx(
            1.75, abs=1e-6
        )
        assert pair_mean(lambda x, y: x * min(x, y) ** 2) == pytest.approx(
            1.0, abs=1e-6
        )
        assert pair_mean(lambda x, y: x * min(x, y)) == pytest.approx(0.75, abs=1e-6)
        assert pair_mean(lambda x, y: min(x, y) ** 2) == pytest.approx(0.5, abs=1e-6)
        assert pair_mean(kernel_phi) == pytest.approx(-0.25, abs=1e-6)


class TestAsymptoticVariance:
    def test_null_value(self):
        av = asymptotic_variance(Exponential(1.0))
        assert av.sigma2 == pytest.approx(NULL_SIGMA2, abs=1e-6)
        assert av.sigma == pytest.approx(math.sqrt(NULL_SIGMA2), abs=1e-6)

    def test_scale_free(self):
        values = [asymptotic_variance(Exponential(m)).sigma2 for m in (0.5, 1.0, 2.0)]
        assert max(values) - min(values) < 1e-9

    def test_printed_functional_reproduces_stored_constant(self):
        pv = printed_variance_functional(Exponential(1.0))
        assert pv.sigma2 == pytest.approx(PRINTED_SIGMA2, abs=1e-6)
        assert pv.sigma == pytest.approx(SIGMA0_NORMAL, abs=1e-3)


class TestRunTest:
    def test_normal_quantile(self):
        assert stats.norm.ppf(0.95) == pytest.approx(1.6448, abs=1e-4)

    def test_constant_sample_identity(self):
        res = run_test(Sample([3.0] * 100), alpha=0.05)
        assert res.delta_cap == pytest.approx(-1.0 / 3.0, rel=1e-12)
        assert res.z == pytest.approx(10.0 * (-1.0 / 3.0) / SIGMA0_NORMAL, rel=1e-12)
        assert res.z == pytest.approx(-2.842, abs=1e-3)
        assert res.reject

    def test_leukemia_normal_mode(self):
        res = run_test(leukemia_sample(), alpha=0.05)
        assert res.z == pytest.approx(
            math.sqrt(40) * LEUKEMIA_DELTA_CAP / SIGMA0_NORMAL, abs=1e-6
        )
        assert res.reject
        assert 0.0 <= res.p_value <= 1.0

    def test_monotone_decision_in_alpha(self):
        rng = np.random.default_rng(31)
        for _ in range(40):
            s = Sample(rng.exponential(size=25))
            r05 = run_test(s, alpha=0.05)
            r10 = run_test(s, alpha=0.10)
            if r05.reject:
                assert r10.reject

    def test_alpha_validation(self):
        with pytest.raises(ValueError):
            run_test(Sample([1.0, 2.0]), alpha=0.0)
        with pytest.raises(ValueError):
            run_test(Sample([1.0, 2.0]), alpha=0.6)
        with pytest.raises(ValueError):
            run_test(Sample([1.0, 2.0]), mode="bayes")

    def test_calibrated_requires_table(self):
        with pytest.raises(ValueError):
            run_test(Sample([1.0, 2.0]), mode="calibrated")

    def test_calibrated_decision(self):
        table = mc.CalibrationTable()
        table.add(
            mc.CalibrationEntry(
                n=10,
                levels=(0.01, 0.05, 0.10, 0.5),
                quantiles=(-0.39, -0.37, -0.36, -0.2),
                replicates=1000,
                seed=0,
                null_mean=-0.19,
                null_sd=0.3,
            )
        )
        rejecting = Sample([1.0] * 10)  # delta_cap = -1/3 <= -0.37? no
        res = run_test(rejecting, alpha=0.05, mode="calibrated", calibration=table)
        assert res.sigma0_used is None and res.z is None
        assert res.reject == (res.delta_cap <= -0.37)
        assert 0.0 <= res.p_value <= 1.0

    def test_calibrated_interpolates_in_n(self):
        table = mc.CalibrationTable()
        for n, q in ((10, -0.4), (20, -0.3)):
            table.add(
                mc.CalibrationEntry(
                    n=n,
                    levels=(0.05, 0.5),
                    quantiles=(q, 0.0),
                    replicates=1000,
                    seed=0,
                    null_mean=-0.2,
                    null_sd=0.3,
                )
            )
        assert table.quantile(15, 0.05) == pytest.approx(-0.35)
        with pytest.raises(KeyError):
            table.quantile(25, 0.05)
        with pytest.raises(KeyError):
            table.quantile(10, 0.001)


class TestSampleType:
    def test_validation(self):
        with pytest.raises(ValueError):
            Sample([1.0])
        with pytest.raises(ValueError):
            Sample([1.0, -2.0])
        with pytest.raises(ValueError):
            Sample([1.0, 0.0])
        with pytest.raises(ValueError):
            Sample([1.0, float("nan")])
        with pytest.raises(ValueError):
            Sample([1.0, float("inf")])

    def test_order_preserved(self):
        s = Sample([3.0, 1.0, 2.0])
        np.testing.assert_array_equal(s.values, [3.0, 1.0, 2.0])
        assert s.n == 3


class TestResultSerialization:
    def test_json_keys(self):
        res = run_test(Sample([1.0, 2.0, 3.0]))
        doc = json.loads(res.to_json())
        assert set(doc) == {
            "n",
            "delta_hat",
            "delta_cap",
            "z",
            "p_value",
            "alpha",
            "mode",
            "sigma0_used",
            "reject",
        }
        assert doc["n"] == 3
        assert isinstance(doc["reject"], bool)

    def test_text_and_tsv(self):
        res = run_test(Sample([1.0, 2.0, 3.0]))
        text = res.to_text()
        assert "delta_cap" in text and "reject" in text.lower()
        lines = res.to_tsv().strip().splitlines()
        assert lines[0] == "field\tvalue"
        fields = dict(ln.split("\t") for ln in lines[1:])
        assert float(fields["delta_cap"]) == pytest.approx(res.delta_cap)
