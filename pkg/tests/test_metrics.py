import math
from fractions import Fraction

import pytest
import scipy.stats

from adasense.core import BudgetLedger, SensingTrace, SupportClass
from adasense.metrics import (
    detection_risk,
    estimation_risk,
    fdr,
    ndr,
    risk_triple_from_counts,
    sym_diff_error,
)
from adasense.rng import stream
from adasense.strategies import DetectOutcome, EstimateOutcome, make_strategy


class TestPointMetrics:
    def test_sym_diff(self):
        assert sym_diff_error({1, 2}, {2, 3}) == 2
        assert sym_diff_error({4, 9}, {4, 9}) == 0
        assert sym_diff_error(set(), {1, 2, 3}) == 3

    def test_fdr_ndr(self):
        assert fdr(set(), {1, 2}) == 0.0  # 0/0 convention
        assert fdr({1, 2}, {2, 3}) == 0.5
        assert ndr({1, 2}, {2, 3}) == 0.5
        assert fdr({1}, set()) == 1.0
        assert ndr({1}, set()) == 0.0

    def test_relabeling_invariance(self):
        rng = stream(40)
        for _ in range(100):
            n = int(rng.integers(2, 12))
            perm = rng.permutation(n) + 1
            est = {int(i) + 1 for i in rng.choice(n, size=int(rng.integers(0, n)), replace=False)}
            tru = {int(i) + 1 for i in rng.choice(n, size=int(rng.integers(0, n)), replace=False)}
            p_est = {int(perm[i - 1]) for i in est}
            p_tru = {int(perm[i - 1]) for i in tru}
            assert sym_diff_error(est, tru) == sym_diff_error(p_est, p_tru)
            assert fdr(est, tru) == fdr(p_est, p_tru)
            assert ndr(est, tru) == ndr(p_est, p_tru)


class _ConstantDetector:
    kind = "detect"
    name = "const-det"

    def __init__(self, n, decision):
        self.n = n
        self.m = 1.0
        self.decision = decision

    def run(self, signal, rng):
        return DetectOutcome(self.decision, SensingTrace(BudgetLedger(self.m)))


class _CoinFlipDetector:
    kind = "detect"
    name = "coin"

    def __init__(self, n):
        self.n = n
        self.m = 1.0

    def run(self, signal, rng):
        return DetectOutcome(int(rng.integers(2)), SensingTrace(BudgetLedger(self.m)))


class TestDetectionRisk:
    def test_always_zero(self):
        cls = SupportClass.explicit(4, [{1, 2}, {3, 4}])
        t = detection_risk(_ConstantDetector(4, 0), cls, 1.0, 50, stream(1))
        assert t.risk_sum == 1.0 and t.risk_max == 1.0 and t.risk_bayes == 1.0
        assert t.p_null == 0.0 and t.miss_worst == 1.0

    def test_always_one(self):
        cls = SupportClass.explicit(4, [{1, 2}])
        t = detection_risk(_ConstantDetector(4, 1), cls, 1.0, 50, stream(2))
        assert t.risk_sum == 1.0 and t.risk_max == 1.0 and t.risk_bayes == 1.0
        assert t.p_null == 1.0 and t.miss_worst == 0.0

    def test_coin_flip(self):
        cls = SupportClass.explicit(6, [{1, 2}, {3, 4}, {5, 6}])
        t = detection_risk(_CoinFlipDetector(6), cls, 1.0, 400, stream(3))
        assert abs(t.risk_sum - 1.0) <= 3 * t.se_risk_sum
        assert t.risk_bayes <= t.risk_sum <= 2 * t.risk_max <= 2 * t.risk_sum

    def test_json_fields(self):
        import json

        cls = SupportClass.explicit(4, [{1, 2}])
        t = detection_risk(_ConstantDetector(4, 0), cls, 1.0, 10, stream(4))
        raw = json.loads(t.to_json())
        for key in ("risk_sum", "risk_max", "risk_bayes", "se_risk_sum", "trials"):
            assert key in raw

    def test_mds_detector_end_to_end(self):
        # real detector through the Monte Carlo triple on the implicit
        # class; strong signal drives the risk down and the chain holds
        n, s = 64, 32
        strat = make_strategy("mds", n=n, s=s, m=float(n), amplitude=8.0)
        t = detection_risk(
            strat, SupportClass.all_subsets(n, s), 8.0, 60, stream(10), 8
        )
        assert t.risk_bayes <= t.risk_sum <= 2 * t.risk_max <= 2 * t.risk_sum
        assert t.risk_sum <= 0.5


class TestRiskChainExact:
    def test_random_counts(self):
        rng = stream(5)
        for _ in range(300):
            trials = int(rng.integers(2, 60))
            k = int(rng.integers(1, 25))
            c0 = int(rng.integers(0, trials + 1))
            cs = [int(v) for v in rng.integers(0, trials + 1, size=k)]
            t = risk_triple_from_counts(c0, cs, trials)
            assert t.risk_bayes <= t.risk_sum
            assert t.risk_sum <= 2.0 * t.risk_max
            assert 2.0 * t.risk_max <= 2.0 * t.risk_sum

    def test_exact_fractions(self):
        t = risk_triple_from_counts(
            Fraction(1), [Fraction(1), Fraction(2)], Fraction(3)
        )
        assert t.risk_sum == Fraction(1, 3) + Fraction(2, 3)
        assert t.risk_bayes == Fraction(1, 3) + Fraction(1, 2)


class _OracleEstimator:
    kind = "estimate"
    name = "oracle"

    def __init__(self, n):
        self.n = n
        self.m = 1.0

    def run(self, signal, rng):
        return EstimateOutcome(signal.support, SensingTrace(BudgetLedger(self.m)))


class _EmptyEstimator:
    kind = "estimate"
    name = "empty"

    def __init__(self, n):
        self.n = n
        self.m = 1.0

    def run(self, signal, rng):
        return EstimateOutcome(frozenset(), SensingTrace(BudgetLedger(self.m)))


class TestEstimationRisk:
    def test_oracle_all_zero(self):
        cls = SupportClass.all_subsets(16, 3)
        r = estimation_risk(_OracleEstimator(16), cls, 1.0, 20, stream(6), 8)
        assert r.mean_sym_diff == 0.0
        assert r.fdr == 0.0 and r.ndr == 0.0 and r.exact_fail == 0.0

    def test_empty_estimator(self):
        cls = SupportClass.all_subsets(16, 3)
        r = estimation_risk(_EmptyEstimator(16), cls, 1.0, 20, stream(7), 8)
        assert r.mean_sym_diff == 3.0
        assert r.ndr == 1.0 and r.fdr == 0.0 and r.exact_fail == 1.0

    def test_report_inequalities(self):
        # exact-failure <= mean error and fdr+ndr <= mean error (3 joint se)
        n, s = 64, 4
        cls = SupportClass.all_subsets(n, s)
        strat = make_strategy("uniform", n=n, s=s, m=float(n), amplitude=2.0)
        r = estimation_risk(strat, cls, 2.0, 60, stream(8), 6)
        assert r.exact_fail <= r.mean_sym_diff + 1e-12
        joint_se = 3 * (r.se_fdr + r.se_ndr + r.se_mean_sym_diff)
        assert r.fdr + r.ndr <= r.mean_sym_diff + joint_se

    def test_uniform_matches_gaussian_closed_form(self):
        # independent oracle: exact Gaussian tail arithmetic for one-shot
        # thresholding at precision m/n
        n, s = 2**10, 4
        m = float(n)
        mu = math.sqrt(2.0 * math.log(n))
        tau = mu / 2.0
        root = math.sqrt(m / n)
        expected = (n - s) * scipy.stats.norm.sf(tau * root) + s * scipy.stats.norm.cdf(
            (tau - mu) * root
        )
        cls = SupportClass.all_subsets(n, s)
        strat = make_strategy("uniform", n=n, s=s, m=m, amplitude=mu, threshold=tau)
        r = estimation_risk(strat, cls, mu, 200, stream(9), 4)
        assert abs(r.mean_sym_diff - expected) <= 3 * r.se_mean_sym_diff + 1e-9
