"""Desk-scale verification battery behind the ``verify`` CLI subcommand.

Each check compares an implementation value against an independent
reference (closed form, exact enumeration, or an exact solver) and yields
one verdict dict: name, inputs, value, reference, tolerance, pass.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np

from .core import BudgetLedger, SensingTrace, SparseSignal, SupportClass
from .metrics import risk_triple_from_counts
from .oracles import (
    allocation_value,
    average_allocation_value,
    hypergeometric_pmf,
    hypergeometric_variance,
    kl_cap_check,
    maxmin_allocation_value,
    symmetric_class_family,
    truncated_geometric_pmf,
    uniform_allocation,
)
from .rng import stream
from .strategies import (
    STRATEGY_IDS,
    EstimateOutcome,
    make_strategy,
    run_with_relabeling,
)


def _verdict(name, inputs, value, reference, tolerance, passed) -> dict:
    return {
        "name": name,
        "inputs": inputs,
        "value": value,
        "reference": reference,
        "tolerance": tolerance,
        "pass": bool(passed),
    }


def check_allocation_identities(max_n: int = 8, max_s: int = 3, m: float = 4.0):
    """Exact LP value, closed-form average value, and the uniform optimizer
    against m*s/|Xi| on every generated symmetric class."""
    verdicts = []
    worst_maxmin = 0.0
    worst_avg = 0.0
    worst_unif = 0.0
    count = 0
    for label, cls in symmetric_class_family(max_n, max_s):
        target = m * cls.s / len(cls.xi)
        value, _ = maxmin_allocation_value(cls, m)
        avg = average_allocation_value(cls, m)
        unif = allocation_value(cls, uniform_allocation(cls, m))
        worst_maxmin = max(worst_maxmin, abs(value - target))
        worst_avg = max(worst_avg, abs(avg - target))
        worst_unif = max(worst_unif, abs(unif - target))
        count += 1
    verdicts.append(
        _verdict(
            "maxmin_allocation_equals_ms_over_xi",
            {"families": "all-s-subsets + cyclic", "max_n": max_n, "max_s": max_s,
             "m": m, "classes": count},
            worst_maxmin, 0.0, 1e-9, worst_maxmin <= 1e-9,
        )
    )
    verdicts.append(
        _verdict(
            "average_allocation_equals_ms_over_xi",
            {"max_n": max_n, "max_s": max_s, "m": m, "classes": count},
            worst_avg, 0.0, 1e-9, worst_avg <= 1e-9,
        )
    )
    verdicts.append(
        _verdict(
            "uniform_allocation_attains_optimum",
            {"max_n": max_n, "max_s": max_s, "m": m, "classes": count},
            worst_unif, 0.0, 1e-9, worst_unif <= 1e-9,
        )
    )
    return verdicts


def check_asymmetric_class():
    """On the non-symmetric class {{1,2},{1,3}} the LP optimum (all budget on
    the shared entry) is 3, strictly above m*s/|Xi| = 2: symmetry matters."""
    cls = SupportClass.explicit(3, [{1, 2}, {1, 3}])
    value, _ = maxmin_allocation_value(cls, 3.0)
    formula = 3.0 * cls.s / len(cls.xi)
    ok = abs(value - 3.0) <= 1e-9 and value > formula
    return [
        _verdict(
            "asymmetric_class_beats_symmetric_formula",
            {"class": "{{1,2},{1,3}}", "n": 3, "m": 3},
            value, 3.0, 1e-9, ok,
        )
    ]


def check_truncated_geometric(max_cap: int = 64):
    bad = 0
    for cap in range(1, max_cap + 1):
        total = sum(truncated_geometric_pmf(cap, x) for x in range(1, cap + 1))
        if total != Fraction(1):
            bad += 1
    spot = [truncated_geometric_pmf(3, x) for x in (1, 2, 3)]
    ok = bad == 0 and spot == [Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)]
    return [
        _verdict(
            "truncated_geometric_pmf",
            {"caps": f"1..{max_cap}"},
            [float(v) for v in spot], [0.5, 0.25, 0.25], 0.0, ok,
        )
    ]


def check_hypergeometric():
    spot = hypergeometric_pmf(4, 2, 2, 1)
    ok = abs(spot - 2.0 / 3.0) < 1e-15
    worst_total = 0.0
    var_ok = True
    for n, s, draw in itertools.product((10, 25, 60), (1, 4, 9), (1, 5, 12)):
        if s > n or draw > n:
            continue
        total = sum(
            hypergeometric_pmf(n, s, draw, k) for k in range(0, min(s, draw) + 1)
        )
        worst_total = max(worst_total, abs(total - 1.0))
        if hypergeometric_variance(n, s, draw) > draw * s / n + 1e-12:
            var_ok = False
    ok = ok and worst_total <= 1e-12 and var_ok
    return [
        _verdict(
            "hypergeometric_pmf",
            {"spot": "n=4,s=2,draw=2,k=1", "grid": "n in {10,25,60}"},
            spot, 2.0 / 3.0, 1e-12, ok,
        )
    ]


def check_kl_caps(trials: int = 500, seed: int = 20250810, support_draws: int = 100):
    """Every registered strategy keeps its least-favorable empirical null
    divergence under the cap at n=64, s=4, m=64, mu=1."""
    n, s, m, mu = 64, 4, 64.0, 1.0
    verdicts = []
    cls = SupportClass.all_subsets(n, s)
    for sid in STRATEGY_IDS:
        strategy = make_strategy(sid, n=n, s=s, m=m, amplitude=mu)
        rng = stream(seed, STRATEGY_IDS.index(sid))
        report = kl_cap_check(strategy, cls, mu, trials, rng, support_draws)
        verdicts.append(
            _verdict(
                f"kl_cap_{sid}",
                {"n": n, "s": s, "m": m, "mu": mu, "trials": trials},
                report.min_empirical_kl,
                report.cap,
                3.0 * report.max_standard_error,
                report.passed,
            )
        )
    return verdicts


def check_symmetrization_enumeration():
    """Exact count over all 4! relabelings: a base estimator that always
    answers {1} symmetrizes to the uniform random singleton."""

    class _Const:
        kind = "estimate"
        name = "const1"
        n = 4
        m = 1.0

        def run(self, signal, rng):
            return EstimateOutcome(frozenset({1}), SensingTrace(BudgetLedger(1.0)))

    base = _Const()
    signal = SparseSignal(4, frozenset({2}), 1.0)
    counts = {i: 0 for i in range(1, 5)}
    rng = stream(0)
    total = 0
    for perm in itertools.permutations(range(1, 5)):
        outcome = run_with_relabeling(base, signal, np.array(perm, dtype=np.int64), rng)
        (only,) = outcome.estimate
        counts[only] += 1
        total += 1
    probs = [counts[i] / total for i in range(1, 5)]
    ok = all(abs(p - 0.25) < 1e-15 for p in probs)
    return [
        _verdict(
            "symmetrization_uniform_singleton",
            {"n": 4, "permutations": total},
            probs, [0.25] * 4, 0.0, ok,
        )
    ]


def check_risk_chain(cases: int = 200, seed: int = 7):
    """The chain bayes <= sum <= 2*max <= 2*sum holds exactly for risk
    triples assembled from integer error counts."""
    rng = stream(seed)
    bad = 0
    for _ in range(cases):
        trials = int(rng.integers(2, 50))
        k = int(rng.integers(1, 20))
        c0 = int(rng.integers(0, trials + 1))
        cs = [int(v) for v in rng.integers(0, trials + 1, size=k)]
        t = risk_triple_from_counts(c0, cs, trials)
        chain = (
            t.risk_bayes <= t.risk_sum
            and t.risk_sum <= 2.0 * t.risk_max
            and 2.0 * t.risk_max <= 2.0 * t.risk_sum
        )
        if not chain:
            bad += 1
    return [
        _verdict(
            "risk_chain_exact",
            {"cases": cases},
            bad, 0, 0, bad == 0,
        )
    ]


def run_verification(trials: int = 500, seed: int = 20250810) -> list[dict]:
    verdicts = []
    verdicts += check_allocation_identities()
    verdicts += check_asymmetric_class()
    verdicts += check_truncated_geometric()
    verdicts += check_hypergeometric()
    verdicts += check_symmetrization_enumeration()
    verdicts += check_risk_chain()
    verdicts += check_kl_caps(trials=trials, seed=seed)
    return verdicts
