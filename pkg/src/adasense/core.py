"""Signal model, budgeted observation engine, support classes, likelihood ratios.

The observation model is ``y = x[a] + precision**-0.5 * z`` with ``z``
standard normal, ``a`` the measured entry and ``precision`` the measurement
precision.  The sum of precisions over a whole run is capped by a budget,
tracked by a :class:`BudgetLedger`.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .errors import BudgetExceeded, ClassTooLarge, InvalidAction

# Hard-budget checks allow this much relative slack: allocations that tile
# the budget exactly accumulate float rounding when charged one
# measurement at a time.
BUDGET_REL_SLACK = 1e-9


@dataclass(frozen=True)
class SparseSignal:
    """Constant-amplitude sparse vector: ``amplitude`` on the support, 0 elsewhere."""

    n: int
    support: frozenset[int]
    amplitude: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"dimension must be positive, got {self.n}")
        object.__setattr__(self, "support", frozenset(self.support))
        if self.support and not all(1 <= i <= self.n for i in self.support):
            raise ValueError("support must be a subset of {1..n}")
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")
        if self.amplitude == 0 and self.support:
            raise ValueError("zero amplitude is only allowed for the null signal")

    @classmethod
    def null(cls, n: int) -> "SparseSignal":
        return cls(n, frozenset(), 0.0)

    @property
    def sparsity(self) -> int:
        return len(self.support)

    def value(self, index: int) -> float:
        return self.amplitude if index in self.support else 0.0

    def values(self, indices: np.ndarray) -> np.ndarray:
        """Vector of entry values for 1-based ``indices``."""
        if not self.support:
            return np.zeros(len(indices))
        mask = np.isin(indices, list(self.support))
        return np.where(mask, self.amplitude, 0.0)


@dataclass(frozen=True)
class SupportClass:
    """A class of candidate supports of common cardinality ``s``.

    ``members is None`` denotes the implicit class of all s-subsets of
    {1..n}; it is never enumerated, so n can be large.
    """

    n: int
    s: int
    members: tuple[frozenset[int], ...] | None = None

    def __post_init__(self):
        if self.n < 1 or self.s < 1 or self.s > self.n:
            raise ValueError(f"need 1 <= s <= n, got s={self.s}, n={self.n}")
        if self.members is not None:
            members = tuple(frozenset(m) for m in self.members)
            object.__setattr__(self, "members", members)
            if not members:
                raise ValueError("explicit class must have at least one member")
            for m in members:
                if len(m) != self.s:
                    raise ValueError("all members must have cardinality s")
                if not all(1 <= i <= self.n for i in m):
                    raise ValueError("member indices must lie in {1..n}")

    @classmethod
    def all_subsets(cls, n: int, s: int) -> "SupportClass":
        """Implicit class of every s-subset of {1..n}."""
        return cls(n, s, None)

    @classmethod
    def explicit(cls, n: int, sets: Iterable[Iterable[int]]) -> "SupportClass":
        members = tuple(frozenset(m) for m in sets)
        if not members:
            raise ValueError("explicit class must have at least one member")
        return cls(n, len(next(iter(members))), members)

    @property
    def is_implicit(self) -> bool:
        return self.members is None

    @property
    def size(self) -> int:
        if self.members is None:
            return math.comb(self.n, self.s)
        return len(self.members)

    @property
    def xi(self) -> frozenset[int]:
        """Union of all member supports."""
        if self.members is None:
            return frozenset(range(1, self.n + 1))
        out: set[int] = set()
        for m in self.members:
            out |= m
        return frozenset(out)

    def sample_member(self, rng: np.random.Generator) -> frozenset[int]:
        if self.members is None:
            picks = rng.choice(self.n, size=self.s, replace=False)
            return frozenset(int(i) + 1 for i in picks)
        return self.members[int(rng.integers(len(self.members)))]

    def enumerated(self, limit: int = 200_000) -> tuple[frozenset[int], ...]:
        """All members, materializing the implicit class when small enough."""
        if self.members is not None:
            return self.members
        if self.size > limit:
            raise ClassTooLarge(
                f"implicit class has {self.size} members, limit {limit}"
            )
        import itertools

        return tuple(
            frozenset(c) for c in itertools.combinations(range(1, self.n + 1), self.s)
        )


def class_is_symmetric(support_class: SupportClass) -> bool:
    """True iff every element of Xi lies in the same fraction s/|Xi| of members.

    The count is exact: integer cross-multiplication, no floats.  The
    implicit all-s-subsets class is symmetric without enumeration.
    """
    if support_class.is_implicit:
        return True
    members = support_class.members
    counts: dict[int, int] = {}
    for m in members:
        for i in m:
            counts[i] = counts.get(i, 0) + 1
    xi_size = len(counts)
    total = len(members)
    s = support_class.s
    return all(c * xi_size == s * total for c in counts.values())


def class_is_full_range(support_class: SupportClass) -> bool:
    """True iff the union of members covers all of {1..n}."""
    if support_class.is_implicit:
        return True
    return len(support_class.xi) == support_class.n


@dataclass
class BudgetLedger:
    """Tracks precision spent against a total budget.

    ``hard`` mode refuses any charge that would push ``spent`` past the
    total (within BUDGET_REL_SLACK); ``expected`` mode allows it but
    records the overrun.
    """

    total: float
    spent: float = 0.0
    mode: str = "hard"
    overran: bool = False

    def __post_init__(self):
        if self.total <= 0:
            raise ValueError("budget must be positive")
        if self.mode not in ("hard", "expected"):
            raise ValueError(f"unknown budget mode {self.mode!r}")

    @property
    def remaining(self) -> float:
        return max(self.total - self.spent, 0.0)

    def _limit(self) -> float:
        return self.total * (1.0 + BUDGET_REL_SLACK)

    def charge(self, precision: float) -> None:
        if precision <= 0:
            raise ValueError("precision must be positive")
        new = self.spent + precision
        if new > self._limit():
            if self.mode == "hard":
                raise BudgetExceeded(
                    f"charge of {precision} would spend {new} of {self.total}"
                )
            self.overran = True
        self.spent = new

    def charge_bulk(self, precisions: np.ndarray) -> None:
        """Charge a batch at once.  Precisions are positive; the whole batch
        must fit (prefix sums are monotone, so checking the total suffices)."""
        total = float(np.sum(precisions))
        if total <= 0 or np.any(precisions <= 0):
            raise ValueError("precisions must be positive")
        new = self.spent + total
        if new > self._limit():
            if self.mode == "hard":
                raise BudgetExceeded(
                    f"bulk charge of {total} would spend {new} of {self.total}"
                )
            self.overran = True
        self.spent = new


class SensingRecord(NamedTuple):
    """One measurement: step index, entry measured, precision, observation."""

    k: int
    action: int
    precision: float
    y: float


@dataclass
class SensingTrace:
    """Ordered measurement records plus the budget ledger that paid for them."""

    ledger: BudgetLedger
    records: list[SensingRecord] = field(default_factory=list)
    seed: int | None = None

    def append(self, action: int, precision: float, y: float) -> None:
        self.records.append(SensingRecord(len(self.records) + 1, action, precision, y))

    def extend(
        self, actions: np.ndarray, precision: float, ys: np.ndarray
    ) -> None:
        k0 = len(self.records)
        self.records.extend(
            SensingRecord(k0 + j + 1, int(a), precision, float(y))
            for j, (a, y) in enumerate(zip(actions, ys))
        )

    def total_precision(self) -> float:
        return math.fsum(r.precision for r in self.records)

    def spend_by_entry(self, n: int) -> np.ndarray:
        """Total precision spent per entry (index 0 holds entry 1)."""
        out = np.zeros(n)
        if self.records:
            acts = np.fromiter((r.action for r in self.records), dtype=np.int64)
            precs = np.fromiter((r.precision for r in self.records), dtype=np.float64)
            np.add.at(out, acts - 1, precs)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("k,a,gamma2,y\n")
        for r in self.records:
            buf.write(f"{r.k},{r.action},{r.precision:.17g},{r.y:.17g}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, total: float | None = None) -> "SensingTrace":
        lines = [ln for ln in text.strip().splitlines() if ln]
        if lines and lines[0].lower().startswith("k,"):
            lines = lines[1:]
        records = []
        for ln in lines:
            k, a, g2, y = ln.split(",")
            records.append(SensingRecord(int(k), int(a), float(g2), float(y)))
        spent = math.fsum(r.precision for r in records)
        ledger = BudgetLedger(total if total is not None else max(spent, 1e-300))
        ledger.spent = spent
        trace = cls(ledger)
        trace.records = records
        return trace


def observe(
    signal: SparseSignal,
    action: int,
    precision: float,
    trace: SensingTrace,
    rng: np.random.Generator,
) -> float:
    """Measure one entry, charge the trace's ledger, record the observation.

    Raises BudgetExceeded (hard mode, before any noise is drawn) or
    InvalidAction.  Returns the noisy observation.
    """
    if not 1 <= action <= signal.n:
        raise InvalidAction(f"action {action} outside 1..{signal.n}")
    trace.ledger.charge(precision)
    y = signal.value(action) + precision ** -0.5 * float(rng.standard_normal())
    trace.append(action, precision, y)
    return y


def observe_batch(
    signal: SparseSignal,
    actions: np.ndarray,
    precision: float,
    trace: SensingTrace,
    rng: np.random.Generator,
) -> np.ndarray:
    """Measure several entries once each at a common precision."""
    if len(actions) == 0:
        return np.zeros(0)
    if actions.min() < 1 or actions.max() > signal.n:
        raise InvalidAction("action outside 1..n")
    trace.ledger.charge_bulk(np.full(len(actions), precision))
    ys = signal.values(actions) + precision ** -0.5 * rng.standard_normal(len(actions))
    trace.extend(actions, precision, ys)
    return ys


def log_likelihood_ratio(
    trace: SensingTrace,
    s_a: frozenset[int] | set[int],
    s_b: frozenset[int] | set[int],
    amplitude: float,
) -> float:
    """Exact log of the Gaussian likelihood ratio of the trace under support
    ``s_a`` versus ``s_b`` at the given amplitude.

    Records measuring entries on which the two hypotheses agree contribute
    exactly zero; the remaining per-record terms are ``+-precision *
    (mu*y - mu^2/2)``, which makes antisymmetry in (s_a, s_b) exact.
    """
    mu = amplitude
    half = 0.5 * mu * mu
    total = 0.0
    for rec in trace.records:
        in_a = rec.action in s_a
        if in_a == (rec.action in s_b):
            continue
        term = rec.precision * (mu * rec.y - half)
        total += term if in_a else -term
    return total


def null_spend_profiles(
    strategy, trials: int, rng: np.random.Generator
) -> np.ndarray:
    """Per-entry precision spent by ``strategy`` on each of ``trials``
    independent runs under the null signal.  Shape (trials, n)."""
    if trials < 2:
        raise ValueError("need at least 2 trials")
    n = strategy.n
    null = SparseSignal.null(n)
    out = np.empty((trials, n))
    for t, child in enumerate(rng.spawn(trials)):
        outcome = strategy.run(null, child)
        out[t] = outcome.trace.spend_by_entry(n)
    return out


def empirical_kl_under_null(
    strategy,
    s_alt: frozenset[int] | set[int],
    amplitude: float,
    trials: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Monte Carlo estimate of the expected null log-likelihood ratio against
    the alternative supported on ``s_alt``.

    Uses the conditional expectation given the actions, ``(mu^2/2) * sum of
    precision spent inside s_alt``, which is exact in the action marginal,
    so deterministic strategies get a zero standard error.  Returns
    (estimate, standard error).
    """
    profiles = null_spend_profiles(strategy, trials, rng)
    idx = np.array(sorted(s_alt), dtype=np.int64) - 1
    per_trial = 0.5 * amplitude * amplitude * profiles[:, idx].sum(axis=1)
    mean = float(per_trial.mean())
    se = float(per_trial.std(ddof=1) / math.sqrt(trials))
    return mean, se
