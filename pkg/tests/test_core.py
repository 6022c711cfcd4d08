import math

import numpy as np
import pytest

from adasense.core import (
    BudgetLedger,
    SensingTrace,
    SparseSignal,
    SupportClass,
    class_is_full_range,
    class_is_symmetric,
    empirical_kl_under_null,
    log_likelihood_ratio,
    observe,
    observe_batch,
)
from adasense.errors import BudgetExceeded, InvalidAction
from adasense.rng import stream
from adasense.strategies import EstimateOutcome


def make_trace(m=1e9):
    return SensingTrace(BudgetLedger(m))


class TestSparseSignal:
    def test_values(self):
        sig = SparseSignal(10, frozenset({2, 7}), 1.5)
        assert sig.value(2) == 1.5
        assert sig.value(3) == 0.0
        assert sig.sparsity == 2
        np.testing.assert_array_equal(
            sig.values(np.array([1, 2, 7])), [0.0, 1.5, 1.5]
        )

    def test_null(self):
        null = SparseSignal.null(4)
        assert null.support == frozenset()
        assert null.value(1) == 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            SparseSignal(4, frozenset({5}), 1.0)
        with pytest.raises(ValueError):
            SparseSignal(4, frozenset({1}), -1.0)
        with pytest.raises(ValueError):
            # zero amplitude only for the null signal
            SparseSignal(4, frozenset({1}), 0.0)


class TestObserve:
    def test_null_signal_standard_normal(self):
        # precision 1 on a null signal is a standard normal draw
        sig = SparseSignal.null(3)
        trace = make_trace()
        rng = stream(123)
        n_draws = 100_000
        ys = np.array([observe(sig, 1, 1.0, trace, rng) for _ in range(n_draws)])
        assert abs(ys.mean()) <= 0.01
        assert abs(ys.var() - 1.0) <= 0.02
        assert len(trace.records) == n_draws

    def test_high_precision_concentrates(self):
        sig = SparseSignal(5, frozenset({2}), 1.0)
        trace = make_trace(1e12)
        rng = stream(7)
        ys = [observe(sig, 2, 1e8, trace, rng) for _ in range(1000)]
        # noise sd is 1e-4, so 1e-3 is ten sigmas out
        assert all(abs(y - 1.0) <= 1e-3 for y in ys)

    def test_budget_exceeded(self):
        sig = SparseSignal.null(2)
        trace = SensingTrace(BudgetLedger(1.0))
        with pytest.raises(BudgetExceeded):
            observe(sig, 1, 2.0, trace, stream(0))
        # refused charge leaves no record and no spend
        assert trace.records == []
        assert trace.ledger.spent == 0.0

    def test_invalid_action(self):
        sig = SparseSignal.null(2)
        with pytest.raises(InvalidAction):
            observe(sig, 3, 1.0, make_trace(), stream(0))
        with pytest.raises(InvalidAction):
            observe(sig, 0, 1.0, make_trace(), stream(0))

    def test_expected_mode_records_overrun(self):
        ledger = BudgetLedger(1.0, mode="expected")
        trace = SensingTrace(ledger)
        sig = SparseSignal.null(2)
        observe(sig, 1, 0.6, trace, stream(0))
        assert not ledger.overran
        observe(sig, 1, 0.6, trace, stream(1))
        assert ledger.overran
        assert ledger.spent == pytest.approx(1.2)

    def test_batch_matches_ledger(self):
        sig = SparseSignal(6, frozenset({1}), 2.0)
        trace = SensingTrace(BudgetLedger(6.0))
        ys = observe_batch(sig, np.arange(1, 7), 1.0, trace, stream(3))
        assert ys.shape == (6,)
        assert trace.ledger.spent == pytest.approx(6.0)
        assert len(trace.records) == 6


class TestSupportClassPredicates:
    def test_all_subsets_symmetric_and_full_range(self):
        cls = SupportClass.all_subsets(4, 2)
        assert class_is_symmetric(cls)
        assert class_is_full_range(cls)

    def test_implicit_class_never_enumerates(self):
        cls = SupportClass.all_subsets(2**20, 5)
        assert class_is_symmetric(cls)
        assert class_is_full_range(cls)
        assert len(cls.xi) == 2**20

    def test_asymmetric_explicit(self):
        cls = SupportClass.explicit(3, [{1, 2}, {1, 3}])
        assert not class_is_symmetric(cls)

    def test_cyclic_intervals_symmetric(self):
        cls = SupportClass.explicit(4, [{1, 2}, {2, 3}, {3, 4}, {4, 1}])
        assert class_is_symmetric(cls)

    def test_full_range_examples(self):
        assert not class_is_full_range(SupportClass.explicit(4, [{1, 2}, {2, 3}]))
        assert class_is_full_range(SupportClass.explicit(1, [{1}]))

    def test_symmetry_agrees_with_rational_counting(self):
        # independent oracle: Fraction-based membership frequencies
        from fractions import Fraction
        import itertools

        rng = stream(99)
        for _ in range(200):
            n = int(rng.integers(2, 9))
            s = int(rng.integers(1, n + 1))
            size = int(rng.integers(1, 7))
            all_subsets = list(itertools.combinations(range(1, n + 1), s))
            idx = rng.choice(len(all_subsets), size=min(size, len(all_subsets)), replace=False)
            members = [frozenset(all_subsets[i]) for i in idx]
            cls = SupportClass.explicit(n, members)
            xi = set().union(*members)
            freq = {
                i: Fraction(sum(i in mem for mem in members), len(members)) for i in xi
            }
            expected = all(freq[i] == Fraction(s, len(xi)) for i in xi)
            assert class_is_symmetric(cls) == expected


class TestLogLikelihoodRatio:
    def test_single_record(self):
        trace = make_trace()
        trace.append(1, 1.0, 0.7)
        got = log_likelihood_ratio(trace, {1}, set(), 2.0)
        assert got == pytest.approx(2.0 * 0.7 - 2.0, abs=1e-15)

    def test_equal_hypotheses_zero(self):
        trace = make_trace()
        rng = stream(4)
        sig = SparseSignal(5, frozenset({1}), 1.0)
        for a in (1, 2, 3, 1, 5):
            observe(sig, a, 2.0, trace, rng)
        assert log_likelihood_ratio(trace, {1, 4}, {1, 4}, 3.0) == 0.0

    def test_two_record_example_against_density_quotient(self):
        # independent route: difference of Gaussian log densities
        trace = make_trace()
        trace.append(1, 2.0, 0.5)
        trace.append(2, 2.0, -0.3)
        mu = 1.0
        got = log_likelihood_ratio(trace, {1}, {2}, mu)

        def logpdf(y, mean, precision):
            return 0.5 * math.log(precision / (2 * math.pi)) - 0.5 * precision * (
                y - mean
            ) ** 2

        direct = (
            logpdf(0.5, mu, 2.0) + logpdf(-0.3, 0.0, 2.0)
            - logpdf(0.5, 0.0, 2.0) - logpdf(-0.3, mu, 2.0)
        )
        assert got == pytest.approx(direct, abs=1e-12)
        assert got == pytest.approx(1.6, abs=1e-12)

    def test_antisymmetry_exact(self):
        rng = stream(11)
        sig = SparseSignal(8, frozenset({2, 5}), 1.3)
        trace = make_trace()
        for _ in range(60):
            observe(sig, int(rng.integers(1, 9)), float(rng.uniform(0.1, 3.0)), trace, rng)
        for _ in range(20):
            a = frozenset(int(i) + 1 for i in rng.choice(8, size=2, replace=False))
            b = frozenset(int(i) + 1 for i in rng.choice(8, size=3, replace=False))
            x = log_likelihood_ratio(trace, a, b, 1.3)
            y = log_likelihood_ratio(trace, b, a, 1.3)
            assert x == -y  # bitwise, not approximately

    def test_chain_exact_on_dyadic_traces(self):
        # with dyadic rationals every product and sum below is exact in
        # binary floating point, so the chain identity must hold bitwise
        rng = stream(12)
        trace = make_trace()
        for _ in range(40):
            a = int(rng.integers(1, 7))
            prec = float(rng.choice([0.5, 1.0, 2.0, 4.0]))
            y = float(rng.integers(-8, 9)) / 4.0
            trace.append(a, prec, y)
        mu = 0.5
        sets = [frozenset({1}), frozenset({2, 3}), frozenset({1, 4, 5}), frozenset()]
        for sa in sets:
            for sb in sets:
                for sc in sets:
                    ab = log_likelihood_ratio(trace, sa, sb, mu)
                    bc = log_likelihood_ratio(trace, sb, sc, mu)
                    ac = log_likelihood_ratio(trace, sa, sc, mu)
                    assert ab + bc == ac

    def test_chain_close_on_general_traces(self):
        rng = stream(13)
        sig = SparseSignal(6, frozenset({1}), 0.9)
        trace = make_trace()
        for _ in range(100):
            observe(sig, int(rng.integers(1, 7)), float(rng.uniform(0.2, 2.0)), trace, rng)
        sa, sb, sc = frozenset({1, 2}), frozenset({3}), frozenset({2, 4})
        ab = log_likelihood_ratio(trace, sa, sb, 0.9)
        bc = log_likelihood_ratio(trace, sb, sc, 0.9)
        ac = log_likelihood_ratio(trace, sa, sc, 0.9)
        assert ab + bc == pytest.approx(ac, rel=1e-12, abs=1e-12)


class _FixedActions:
    """Test double: spends a fixed precision schedule, ignores observations."""

    kind = "estimate"
    name = "fixed"

    def __init__(self, n, m, plan):
        self.n = n
        self.m = m
        self.plan = plan  # list of (action, precision)

    def run(self, signal, rng):
        trace = SensingTrace(BudgetLedger(self.m))
        for action, precision in self.plan:
            observe(signal, action, precision, trace, rng)
        return EstimateOutcome(frozenset(), trace)


class TestEmpiricalKl:
    def test_uniform_allocation_exact(self):
        n, m = 8, 8.0
        strat = _FixedActions(n, m, [(i, m / n) for i in range(1, n + 1)])
        est, se = empirical_kl_under_null(strat, {1, 2, 3}, 1.0, 50, stream(5))
        assert est == (m / n) * 3 / 2
        assert se == 0.0

    def test_all_budget_on_one_entry(self):
        strat = _FixedActions(4, 6.0, [(1, 6.0)])
        est, se = empirical_kl_under_null(strat, {1}, 1.0, 10, stream(5))
        assert est == 3.0 and se == 0.0
        est2, _ = empirical_kl_under_null(strat, {2}, 1.0, 10, stream(5))
        assert est2 == 0.0


class TestTraceCsv:
    def test_round_trip(self):
        sig = SparseSignal(5, frozenset({3}), 1.0)
        trace = SensingTrace(BudgetLedger(100.0))
        rng = stream(21)
        for _ in range(25):
            observe(sig, int(rng.integers(1, 6)), float(rng.uniform(0.5, 2.0)), trace, rng)
        text = trace.to_csv()
        back = SensingTrace.from_csv(text, total=100.0)
        assert back.records == trace.records
        assert back.ledger.spent == pytest.approx(trace.ledger.spent, rel=1e-12)

    def test_header_and_precision(self):
        trace = make_trace()
        trace.append(1, 1.0 / 3.0, 0.1234567890123456789)
        lines = trace.to_csv().splitlines()
        assert lines[0] == "k,a,gamma2,y"
        # 17 significant digits survive the round trip
        k, a, g2, y = lines[1].split(",")
        assert float(g2) == 1.0 / 3.0
        assert float(y) == 0.1234567890123456789

    def test_spent_matches_record_sum(self):
        sig = SparseSignal.null(4)
        trace = SensingTrace(BudgetLedger(50.0))
        rng = stream(2)
        for _ in range(200):
            observe(sig, 1, 0.123, trace, rng)
        assert trace.total_precision() == pytest.approx(trace.ledger.spent, rel=1e-12)
