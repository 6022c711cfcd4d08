"""Error metrics and Monte Carlo risk functionals.

Detection risks come in three flavors built from the same components: the
null rejection probability p0 and per-support miss probabilities.  The sum
risk adds p0 to the worst miss, the max risk takes the larger of the two,
and the Bayes risk averages misses uniformly over the class.  Assembled
from trial counts the chain  bayes <= sum <= 2*max <= 2*sum  holds exactly
(integer counts, monotone float division).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .core import SparseSignal, SupportClass


def sym_diff_error(estimate, truth) -> int:
    """Number of misclassified entries |estimate ^ truth|."""
    return len(frozenset(estimate) ^ frozenset(truth))


def fdr(estimate, truth) -> float:
    """Fraction of the estimate that is false, 0/0 = 0."""
    est = frozenset(estimate)
    if not est:
        return 0.0
    return len(est - frozenset(truth)) / len(est)


def ndr(estimate, truth) -> float:
    """Fraction of the truth that was missed, 0/0 = 0."""
    tru = frozenset(truth)
    if not tru:
        return 0.0
    return len(tru - frozenset(estimate)) / len(tru)


def _binom_se(p: float, trials: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / trials)


@dataclass(frozen=True)
class DetectionRiskTriple:
    """Sum, max, and Bayes detection risks with their components."""

    risk_sum: float
    risk_max: float
    risk_bayes: float
    p_null: float
    miss_worst: float
    miss_mean: float
    se_risk_sum: float
    se_risk_max: float
    se_risk_bayes: float
    trials: int
    supports_checked: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "risk_sum": self.risk_sum,
                "risk_max": self.risk_max,
                "risk_bayes": self.risk_bayes,
                "p_null": self.p_null,
                "miss_worst": self.miss_worst,
                "miss_mean": self.miss_mean,
                "se_risk_sum": self.se_risk_sum,
                "se_risk_max": self.se_risk_max,
                "se_risk_bayes": self.se_risk_bayes,
                "trials": self.trials,
                "supports_checked": self.supports_checked,
            }
        )


def risk_triple_from_counts(
    null_errors: int, miss_counts, trials: int, supports_checked: int | None = None
) -> DetectionRiskTriple:
    """Assemble the three risks from error counts.

    Works for exact rational components too: every operation is a max, an
    integer sum, or a single division, so ordering is monotone and the
    risk chain holds exactly.
    """
    miss_counts = list(miss_counts)
    k = len(miss_counts)
    p0 = null_errors / trials
    worst = max(miss_counts) / trials
    mean = sum(miss_counts) / (k * trials)
    triple_sum = p0 + worst
    triple_max = max(p0, worst)
    triple_bayes = p0 + mean
    se0 = _binom_se(p0, trials)
    se_worst = _binom_se(worst, trials)
    se_mean = _binom_se(mean, k * trials)
    return DetectionRiskTriple(
        risk_sum=triple_sum,
        risk_max=triple_max,
        risk_bayes=triple_bayes,
        p_null=p0,
        miss_worst=worst,
        miss_mean=mean,
        se_risk_sum=math.hypot(se0, se_worst),
        se_risk_max=max(se0, se_worst),
        se_risk_bayes=math.hypot(se0, se_mean),
        trials=trials,
        supports_checked=supports_checked if supports_checked is not None else k,
    )


def _support_grid(
    support_class: SupportClass, rng: np.random.Generator, support_draws: int
):
    if support_class.is_implicit:
        return [support_class.sample_member(rng) for _ in range(support_draws)]
    return list(support_class.members)


def detection_risk(
    test,
    alt_class: SupportClass,
    amplitude: float,
    trials: int,
    rng: np.random.Generator,
    support_draws: int = 32,
) -> DetectionRiskTriple:
    """Monte Carlo detection risk triple of a test strategy.

    Estimates the null rejection rate over ``trials`` runs, then the miss
    rate per support over a grid: every member of an explicit class, or
    ``support_draws`` uniform samples of the implicit class.  For
    relabeling-symmetrized tests all supports are exchangeable, which is
    what justifies the sampled grid; for other strategies the sampled max
    can only under-estimate the true worst case.
    """
    if trials < 2:
        raise ValueError("need at least 2 trials")
    n = alt_class.n
    null = SparseSignal.null(n)
    null_errors = 0
    for child in rng.spawn(trials):
        if test.run(null, child).decision != 0:
            null_errors += 1

    supports = _support_grid(alt_class, rng, support_draws)
    miss_counts = []
    for support in supports:
        signal = SparseSignal(n, support, amplitude)
        errs = 0
        for child in rng.spawn(trials):
            if test.run(signal, child).decision != 1:
                errs += 1
        miss_counts.append(errs)
    return risk_triple_from_counts(null_errors, miss_counts, trials, len(supports))


@dataclass(frozen=True)
class EstimationErrorReport:
    """Worst-support estimation error summary.

    All four metrics are reported at the support whose mean symmetric
    difference is largest on the grid, so the per-sample inequalities
    (exact-failure <= mean error, fdr + ndr <= mean error) survive
    aggregation.
    """

    mean_sym_diff: float
    fdr: float
    ndr: float
    exact_fail: float
    se_mean_sym_diff: float
    se_fdr: float
    se_ndr: float
    se_exact_fail: float
    trials: int
    supports_checked: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "mean_sym_diff": self.mean_sym_diff,
                "fdr": self.fdr,
                "ndr": self.ndr,
                "exact_fail": self.exact_fail,
                "se_mean_sym_diff": self.se_mean_sym_diff,
                "se_fdr": self.se_fdr,
                "se_ndr": self.se_ndr,
                "se_exact_fail": self.se_exact_fail,
                "trials": self.trials,
                "supports_checked": self.supports_checked,
            }
        )


def estimation_risk(
    estimator,
    support_class: SupportClass,
    amplitude: float,
    trials: int,
    rng: np.random.Generator,
    support_draws: int = 32,
) -> EstimationErrorReport:
    """Monte Carlo estimation risk over a support grid (same grid policy as
    :func:`detection_risk`), aggregated at the worst support by mean
    symmetric-difference error."""
    if trials < 2:
        raise ValueError("need at least 2 trials")
    n = support_class.n
    supports = _support_grid(support_class, rng, support_draws)

    best = None
    for support in supports:
        if amplitude > 0:
            signal = SparseSignal(n, support, amplitude)
        else:
            signal = SparseSignal.null(n)  # truth stays the nominal support
        d_vals = np.empty(trials)
        fdr_vals = np.empty(trials)
        ndr_vals = np.empty(trials)
        fail_vals = np.empty(trials)
        for t, child in enumerate(rng.spawn(trials)):
            outcome = estimator.run(signal, child)
            est = outcome.estimate
            d = sym_diff_error(est, support)
            f = fdr(est, support)
            g = ndr(est, support)
            if len(support) >= 1:
                # per-sample: rates cannot exceed the raw error count
                assert f + g <= d + 1e-12
            d_vals[t] = d
            fdr_vals[t] = f
            ndr_vals[t] = g
            fail_vals[t] = 0.0 if est == support else 1.0
        stats = (d_vals, fdr_vals, ndr_vals, fail_vals)
        if best is None or d_vals.mean() > best[0].mean():
            best = stats

    d_vals, fdr_vals, ndr_vals, fail_vals = best
    root = math.sqrt(trials)
    return EstimationErrorReport(
        mean_sym_diff=float(d_vals.mean()),
        fdr=float(fdr_vals.mean()),
        ndr=float(ndr_vals.mean()),
        exact_fail=float(fail_vals.mean()),
        se_mean_sym_diff=float(d_vals.std(ddof=1) / root),
        se_fdr=float(fdr_vals.std(ddof=1) / root),
        se_ndr=float(ndr_vals.std(ddof=1) / root),
        se_exact_fail=float(fail_vals.std(ddof=1) / root),
        trials=trials,
        supports_checked=len(supports),
    )
