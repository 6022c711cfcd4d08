"""Sensing-and-inference procedures.

All procedures draw noise through the budgeted observation engine in
:mod:`adasense.core`, so every run produces a full measurement trace and
respects its ledger.  Strategy objects are immutable configuration; each
``run`` owns its trace and generator, so runs are independent and safe to
execute in parallel.

String identifiers for the registry: ``uniform``, ``sds``, ``ds``,
``mds``, ``sprt``, with a ``sym:`` prefix composing the random-relabeling
wrapper (``sym:sprt``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from .core import (
    BudgetLedger,
    SensingTrace,
    SparseSignal,
    observe_batch,
)
from .errors import BudgetExceeded, InvalidDimension
from .rng import NormalPool

# Fraction of the budget the multi-stage distiller leaves unspent for the
# final detection round, and the default detection threshold multiplier.
# Both calibrated empirically against the null false-alarm and sum-risk
# targets at the desk-scale detection operating point; see DsParams.default.
DS_TEST_BUDGET_FRACTION = 0.2
DS_THRESHOLD_MULTIPLIER = 1.5


@dataclass(frozen=True)
class SdsParams:
    """Knobs of the coordinate-wise repeated sign test: the look cap per
    entry and the common per-measurement precision."""

    steps: int
    precision: float

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.precision <= 0:
            raise ValueError("precision must be positive")

    @classmethod
    def default(cls, n: int, m: float) -> "SdsParams":
        # look cap (log2 n)^2 rounded to the nearest integer >= 1,
        # per-measurement precision m/(4n)
        steps = max(1, round(math.log2(n) ** 2))
        return cls(steps=steps, precision=m / (4.0 * n))


@dataclass(frozen=True)
class DsParams:
    """Stage budget fractions for multi-stage distillation plus the final
    detection threshold multiplier.  Fractions must sum to at most 1; the
    remainder funds the final detection round."""

    fractions: tuple[float, ...]
    threshold_multiplier: float = DS_THRESHOLD_MULTIPLIER

    def __post_init__(self):
        if len(self.fractions) < 1:
            raise ValueError("need at least one stage")
        if any(f <= 0 for f in self.fractions):
            raise ValueError("stage fractions must be positive")
        if math.fsum(self.fractions) > 1.0 + 1e-12:
            raise ValueError("stage fractions must sum to at most 1")
        if self.threshold_multiplier <= 0:
            raise ValueError("threshold multiplier must be positive")

    @property
    def stages(self) -> int:
        return len(self.fractions)

    @classmethod
    def default(cls, n_candidates: int) -> "DsParams":
        """Geometric (3/4)^t stage split over max(1, ceil(log2 log2 n))
        stages, renormalized so the stages spend 1 - DS_TEST_BUDGET_FRACTION
        of the budget and the remainder pays for the final test round."""
        if n_candidates < 2:
            stages = 1
        else:
            stages = max(1, math.ceil(math.log2(max(math.log2(n_candidates), 1.0))))
        raw = [(3.0 / 4.0) ** t for t in range(1, stages + 1)]
        scale = (1.0 - DS_TEST_BUDGET_FRACTION) / math.fsum(raw)
        return cls(fractions=tuple(r * scale for r in raw))


@dataclass(frozen=True)
class SprtParams:
    """Per-entry sequential test calibration: step precision, log-likelihood
    exit thresholds (lower < 0 < upper), and the per-entry step cap."""

    step_precision: float
    upper: float
    lower: float
    max_steps: int

    def __post_init__(self):
        if self.step_precision <= 0:
            raise ValueError("step precision must be positive")
        if not self.lower < 0 < self.upper:
            raise ValueError("need lower < 0 < upper")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")

    @classmethod
    def default(
        cls, n: int, s: int, m: float, amplitude: float, epsilon: float
    ) -> "SprtParams":
        """Wald thresholds sized to the per-entry error split epsilon/(n-s)
        false alarms and epsilon/s misses; step precision m/(4n)."""
        if not 0 < epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")
        if not 1 <= s < n:
            raise ValueError("need 1 <= s < n")
        if amplitude <= 0:
            raise ValueError("the design amplitude must be positive")
        delta = m / (4.0 * n)
        upper = math.log((n - s) / epsilon)
        lower = -math.log(s / epsilon)
        max_steps = math.ceil(
            4.0 * max(upper, -lower) / (amplitude * amplitude * delta)
        )
        return cls(delta, upper, lower, max(1, max_steps))


@dataclass
class EstimateOutcome:
    """A support estimate, the trace that produced it, and whether the run
    was cut short by the budget guard."""

    estimate: frozenset[int]
    trace: SensingTrace
    truncated: bool = False


@dataclass
class DetectOutcome:
    """A binary detection decision (1 = signal declared) and its trace."""

    decision: int
    trace: SensingTrace


def non_adaptive_uniform_estimate(
    signal: SparseSignal,
    m: float,
    threshold: float,
    rng: np.random.Generator,
) -> EstimateOutcome:
    """Measure every entry once at precision m/n and keep observations at or
    above the threshold.  Spends exactly m."""
    n = signal.n
    trace = SensingTrace(BudgetLedger(m))
    actions = np.arange(1, n + 1)
    ys = observe_batch(signal, actions, m / n, trace, rng)
    estimate = frozenset(int(i) for i in actions[ys >= threshold])
    return EstimateOutcome(estimate, trace)


def simple_distilled_sensing(
    signal: SparseSignal,
    m: float,
    params: SdsParams,
    rng: np.random.Generator,
) -> EstimateOutcome:
    """Coordinate-wise repeated sign testing with a hard stop on the budget.

    Scans entries in index order.  Each entry is measured repeatedly at the
    fixed precision until a negative observation or the look cap; it joins
    the estimate only by surviving all looks.  The whole procedure
    terminates, reporting ``truncated=True``, as soon as the next
    measurement would not fit in the budget.
    """
    n = signal.n
    p = params.precision
    cap = params.steps
    sd = p ** -0.5
    trace = SensingTrace(BudgetLedger(m))
    ledger = trace.ledger
    pool = NormalPool(rng)
    estimate: list[int] = []
    k = 0
    for i in range(1, n + 1):
        x = signal.value(i)
        c = 0
        while True:
            k += 1
            c += 1
            ledger.charge(p)
            y = x + sd * pool.next()
            trace.append(i, p, y)
            if p * (k + 1) > m:
                # next look would overrun: stop everything, keep current estimate
                return EstimateOutcome(frozenset(estimate), trace, truncated=True)
            if c == cap or y < 0:
                break
        if c == cap and y >= 0:
            estimate.append(i)
    return EstimateOutcome(frozenset(estimate), trace)


def distilled_sensing(
    signal: SparseSignal,
    candidates,
    m: float,
    params: DsParams,
    rng: np.random.Generator,
    trace: SensingTrace | None = None,
) -> tuple[frozenset[int], dict[int, float], SensingTrace]:
    """Multi-stage distillation over a candidate set.

    Stage t spends ``fractions[t] * m`` split evenly over the entries still
    alive; entries with a non-negative observation survive.  Returns the
    final survivors, their last-stage observations, and the trace.  The
    allocation is computed to fit, so the ledger never trips.
    """
    survivors = np.array(sorted(candidates), dtype=np.int64)
    if survivors.size == 0:
        raise ValueError("candidate set must be non-empty")
    if trace is None:
        trace = SensingTrace(BudgetLedger(m))
    final_obs: dict[int, float] = {}
    for frac in params.fractions:
        if survivors.size == 0:
            break
        precision = frac * m / survivors.size
        ys = observe_batch(signal, survivors, precision, trace, rng)
        keep = ys >= 0.0
        survivors = survivors[keep]
        final_obs = {int(a): float(y) for a, y in zip(survivors, ys[keep])}
    return frozenset(int(i) for i in survivors), final_obs, trace


def draw_subsample(n: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` distinct 1-based entries drawn uniformly, sorted."""
    picks = rng.choice(n, size=size, replace=False)
    return np.sort(picks.astype(np.int64)) + 1


def subsample_size(n: int, s: int) -> int:
    """ceil(2 n lnlnln n / s), capped at n; needs n >= 16 so the triple
    logarithm is positive."""
    if n < 16:
        raise InvalidDimension(f"need n >= 16, got n={n}")
    lll = math.log(math.log(math.log(n)))
    return min(n, math.ceil(2.0 * n * lll / s))


def mds_detect(
    signal: SparseSignal,
    s: int,
    m: float,
    params: DsParams | None,
    rng: np.random.Generator,
) -> DetectOutcome:
    """Detection by distillation of a random subsample.

    Draws a uniform subsample sized for the assumed sparsity, distills it,
    then spends the remaining budget on one measurement round over the
    survivors.  Declares a signal when the largest standardized final
    observation clears ``multiplier * sqrt(2 ln max(#survivors, 2))``.
    """
    n = signal.n
    size = subsample_size(n, s)
    candidates = draw_subsample(n, size, rng)
    if params is None:
        params = DsParams.default(size)
    trace = SensingTrace(BudgetLedger(m))
    survivors, _, trace = distilled_sensing(signal, candidates, m, params, rng, trace)
    if not survivors:
        return DetectOutcome(0, trace)
    remaining = m - trace.ledger.spent
    if remaining <= 0:
        return DetectOutcome(0, trace)
    arr = np.array(sorted(survivors), dtype=np.int64)
    precision = remaining / arr.size
    ys = observe_batch(signal, arr, precision, trace, rng)
    statistic = float(ys.max()) * math.sqrt(precision)
    threshold = params.threshold_multiplier * math.sqrt(
        2.0 * math.log(max(arr.size, 2))
    )
    return DetectOutcome(int(statistic > threshold), trace)


def parallel_sprt_estimate(
    signal: SparseSignal,
    s: int,
    m: float,
    epsilon: float,
    design_amplitude: float,
    rng: np.random.Generator,
    params: SprtParams | None = None,
) -> EstimateOutcome:
    """One sequential likelihood-ratio test per entry, stepped round-robin,
    all paying into the shared budget.

    Each entry accumulates the exact per-measurement log-likelihood ratio
    ``mu*precision*y - mu^2*precision/2`` for the design amplitude until it
    exits [lower, upper] or hits the step cap; undecided entries are
    excluded from the estimate.  The run stops, ``truncated=True``, when
    the budget cannot pay for the next measurement.
    """
    n = signal.n
    if params is None:
        params = SprtParams.default(n, s, m, design_amplitude, epsilon)
    delta = params.step_precision
    sd = delta ** -0.5
    mu = design_amplitude
    drift_scale = mu * delta
    half = 0.5 * mu * mu * delta

    trace = SensingTrace(BudgetLedger(m))
    ledger = trace.ledger
    pool = NormalPool(rng)
    llr = {}
    steps = {}
    active = list(range(1, n + 1))
    accepted: list[int] = []
    truncated = False
    while active and not truncated:
        still = []
        for i in active:
            try:
                ledger.charge(delta)
            except BudgetExceeded:
                truncated = True
                break
            y = signal.value(i) + sd * pool.next()
            trace.append(i, delta, y)
            v = llr.get(i, 0.0) + drift_scale * y - half
            llr[i] = v
            c = steps.get(i, 0) + 1
            steps[i] = c
            if v >= params.upper:
                accepted.append(i)
            elif v <= params.lower:
                pass
            elif c >= params.max_steps:
                pass  # undecided: excluded from the estimate
            else:
                still.append(i)
        active = still
    return EstimateOutcome(frozenset(accepted), trace, truncated=truncated)


def run_with_relabeling(base, signal: SparseSignal, perm: np.ndarray, rng):
    """Run ``base`` on the signal relabeled by the permutation ``perm``
    (``perm[i-1]`` is the virtual name of true entry i), then map the
    outcome back to true coordinates.

    Measuring virtual entry a touches true entry perm^{-1}(a); the trace is
    rewritten to true coordinates so downstream budget and divergence
    accounting see physical entries.  Budget accounting is unchanged.
    """
    n = signal.n
    virtual_support = frozenset(int(perm[i - 1]) for i in signal.support)
    virtual = SparseSignal(n, virtual_support, signal.amplitude)
    outcome = base.run(virtual, rng)
    inverse = np.empty(n + 1, dtype=np.int64)
    inverse[perm] = np.arange(1, n + 1)
    trace = outcome.trace
    trace.records = [
        r._replace(action=int(inverse[r.action])) for r in trace.records
    ]
    if isinstance(outcome, DetectOutcome):
        return outcome
    estimate = frozenset(int(inverse[j]) for j in outcome.estimate)
    return EstimateOutcome(estimate, trace, outcome.truncated)


# ---------------------------------------------------------------------------
# strategy objects


@dataclass(frozen=True)
class UniformStrategy:
    kind: ClassVar[str] = "estimate"
    name: ClassVar[str] = "uniform"
    n: int
    m: float
    threshold: float

    def run(self, signal, rng):
        return non_adaptive_uniform_estimate(signal, self.m, self.threshold, rng)


@dataclass(frozen=True)
class SdsStrategy:
    kind: ClassVar[str] = "estimate"
    name: ClassVar[str] = "sds"
    n: int
    m: float
    params: SdsParams

    def run(self, signal, rng):
        return simple_distilled_sensing(signal, self.m, self.params, rng)


@dataclass(frozen=True)
class DsStrategy:
    """Plain distillation over all entries, read as an estimator: the final
    survivors are the support estimate."""

    kind: ClassVar[str] = "estimate"
    name: ClassVar[str] = "ds"
    n: int
    m: float
    params: DsParams

    def run(self, signal, rng):
        candidates = np.arange(1, self.n + 1)
        survivors, _, trace = distilled_sensing(
            signal, candidates, self.m, self.params, rng
        )
        return EstimateOutcome(survivors, trace)


@dataclass(frozen=True)
class MdsStrategy:
    kind: ClassVar[str] = "detect"
    name: ClassVar[str] = "mds"
    n: int
    m: float
    s: int
    params: DsParams | None = None

    def run(self, signal, rng):
        return mds_detect(signal, self.s, self.m, self.params, rng)


@dataclass(frozen=True)
class SprtStrategy:
    kind: ClassVar[str] = "estimate"
    name: ClassVar[str] = "sprt"
    n: int
    m: float
    s: int
    epsilon: float
    design_amplitude: float
    params: SprtParams | None = None

    def run(self, signal, rng):
        return parallel_sprt_estimate(
            signal,
            self.s,
            self.m,
            self.epsilon,
            self.design_amplitude,
            rng,
            self.params,
        )


@dataclass(frozen=True)
class SymmetrizedStrategy:
    """Random-relabeling wrapper: each run draws a fresh uniform permutation,
    runs the base strategy on the relabeled problem, and maps the result
    back.  Makes any class of same-cardinality supports look exchangeable
    to the base procedure."""

    base: object

    @property
    def kind(self):
        return self.base.kind

    @property
    def name(self):
        return f"sym:{self.base.name}"

    @property
    def n(self):
        return self.base.n

    @property
    def m(self):
        return self.base.m

    def run(self, signal, rng):
        perm = rng.permutation(signal.n).astype(np.int64) + 1
        return run_with_relabeling(self.base, signal, perm, rng)


def symmetrize(base) -> SymmetrizedStrategy:
    """Wrap an estimation (or detection) strategy with uniform random
    relabeling of the coordinates."""
    return SymmetrizedStrategy(base)


STRATEGY_IDS = ("uniform", "sds", "ds", "mds", "sprt")


def make_strategy(
    spec: str,
    *,
    n: int,
    s: int,
    m: float,
    amplitude: float,
    epsilon: float = 0.1,
    threshold: float | None = None,
):
    """Build a fully configured strategy from its string identifier.

    ``amplitude`` is the design amplitude handed to procedures that need to
    know it (the per-entry sequential tests); ``threshold`` overrides the
    uniform baseline's cut, which defaults to half the design amplitude.
    A ``sym:`` prefix composes the relabeling wrapper.
    """
    if spec.startswith("sym:"):
        return symmetrize(
            make_strategy(
                spec[4:],
                n=n,
                s=s,
                m=m,
                amplitude=amplitude,
                epsilon=epsilon,
                threshold=threshold,
            )
        )
    if spec == "uniform":
        tau = threshold if threshold is not None else amplitude / 2.0
        return UniformStrategy(n=n, m=m, threshold=tau)
    if spec == "sds":
        return SdsStrategy(n=n, m=m, params=SdsParams.default(n, m))
    if spec == "ds":
        return DsStrategy(n=n, m=m, params=DsParams.default(n))
    if spec == "mds":
        return MdsStrategy(n=n, m=m, s=s)
    if spec == "sprt":
        return SprtStrategy(
            n=n, m=m, s=s, epsilon=epsilon, design_amplitude=amplitude
        )
    raise ValueError(f"unknown strategy id {spec!r}")
