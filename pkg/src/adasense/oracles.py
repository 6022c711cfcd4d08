"""Independent brute-force verifiers.

Self-contained checks of the machinery the rest of the package relies on:
an exact rational simplex for the max-min budget-allocation program, exact
pmfs for the subsampling and repeated-sign-test distributions, and the
empirical cap on null Kullback-Leibler divergence that any budgeted
strategy must respect over a symmetric class.

The LP solver is deliberately dependency-free (Fraction pivoting with
Bland's rule) so the oracle does not inherit anyone else's bugs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import SupportClass, class_is_symmetric, null_spend_profiles
from .errors import ClassTooLarge, OutOfSupport

MAX_CLASS_SIZE = 10_000
MAX_DIMENSION = 16


@dataclass(frozen=True)
class BudgetAllocation:
    """A per-entry expected-precision vector with its budget."""

    b: tuple[float, ...]
    budget: float

    def __post_init__(self):
        if any(v < -1e-12 for v in self.b):
            raise ValueError("allocation entries must be non-negative")
        if math.fsum(self.b) > self.budget * (1 + 1e-9) + 1e-9:
            raise ValueError("allocation exceeds budget")

    @property
    def total(self) -> float:
        return math.fsum(self.b)


def _simplex_max(c, rows, rhs):
    """Maximize c.x s.t. rows @ x <= rhs, x >= 0, exactly over Fractions.

    All rhs must be non-negative so the slack basis is feasible.  Bland's
    rule guarantees termination under degeneracy.  Returns (value, x).
    """
    m = len(rows)
    n = len(c)
    width = n + m + 1
    tab = []
    for i in range(m):
        row = [Fraction(v) for v in rows[i]] + [Fraction(0)] * m + [Fraction(rhs[i])]
        row[n + i] = Fraction(1)
        tab.append(row)
    obj = [-Fraction(v) for v in c] + [Fraction(0)] * (m + 1)
    basis = list(range(n, n + m))

    while True:
        enter = next((j for j in range(n + m) if obj[j] < 0), None)
        if enter is None:
            break
        # ratio test, Bland tie-break on the leaving basic variable
        leave = None
        best = None
        for i in range(m):
            a = tab[i][enter]
            if a > 0:
                ratio = tab[i][width - 1] / a
                if best is None or ratio < best or (
                    ratio == best and basis[i] < basis[leave]
                ):
                    best = ratio
                    leave = i
        if leave is None:
            raise ArithmeticError("LP unbounded; malformed constraint set")
        piv = tab[leave][enter]
        tab[leave] = [v / piv for v in tab[leave]]
        for i in range(m):
            if i != leave and tab[i][enter] != 0:
                f = tab[i][enter]
                tab[i] = [v - f * w for v, w in zip(tab[i], tab[leave])]
        if obj[enter] != 0:
            f = obj[enter]
            obj = [v - f * w for v, w in zip(obj, tab[leave])]
        basis[leave] = enter

    x = [Fraction(0)] * n
    for i, b in enumerate(basis):
        if b < n:
            x[b] = tab[i][width - 1]
    value = sum(ci * xi for ci, xi in zip(c, x))
    return value, x


def _check_limits(support_class: SupportClass) -> None:
    if support_class.is_implicit:
        raise ClassTooLarge("the exact LP oracle needs an explicit class")
    if support_class.size > MAX_CLASS_SIZE:
        raise ClassTooLarge(f"class size {support_class.size} > {MAX_CLASS_SIZE}")
    if support_class.n > MAX_DIMENSION:
        raise ClassTooLarge(f"dimension {support_class.n} > {MAX_DIMENSION}")


def maxmin_allocation_value(
    support_class: SupportClass, m: float
) -> tuple[float, BudgetAllocation]:
    """Exact value and optimizer of  max_b min_{S in class} sum_{i in S} b_i
    over non-negative allocations with sum b <= m.

    Solved as the linear program  max t  s.t.  sum_{i in S} b_i >= t  for
    every member S.  For symmetric classes the value is m*s/|Xi|, attained
    by the uniform allocation on Xi; this oracle does not assume that.
    """
    _check_limits(support_class)
    n = support_class.n
    mq = Fraction(m).limit_denominator(10**12) if not isinstance(m, int) else Fraction(m)
    # variables: b_1..b_n, t
    c = [Fraction(0)] * n + [Fraction(1)]
    rows = []
    rhs = []
    for member in support_class.members:
        row = [Fraction(0)] * (n + 1)
        for i in member:
            row[i - 1] = Fraction(-1)
        row[n] = Fraction(1)
        rows.append(row)  # t - sum_{i in S} b_i <= 0
        rhs.append(Fraction(0))
    rows.append([Fraction(1)] * n + [Fraction(0)])  # sum b_i <= m
    rhs.append(mq)
    value, x = _simplex_max(c, rows, rhs)
    alloc = BudgetAllocation(tuple(float(v) for v in x[:n]), float(m))
    return float(value), alloc


def average_allocation_value(support_class: SupportClass, m: float) -> float:
    """Exact value of  max_b (1/|C|) sum_{S in class} sum_{i in S} b_i  over
    non-negative allocations with sum b <= m.

    The objective is linear with coefficient freq(i) = |{S : i in S}|/|C|
    on b_i, so the optimum puts all mass on a most frequent entry:
    m * max_i freq(i).  Equals m*s/|Xi| on symmetric classes.
    """
    _check_limits(support_class)
    counts: dict[int, int] = {}
    for member in support_class.members:
        for i in member:
            counts[i] = counts.get(i, 0) + 1
    best = max(counts.values())
    return float(m * Fraction(best, support_class.size))


def uniform_allocation(support_class: SupportClass, m: float) -> BudgetAllocation:
    """The allocation m/|Xi| on Xi and zero elsewhere."""
    xi = support_class.xi
    per = m / len(xi)
    b = tuple(per if i in xi else 0.0 for i in range(1, support_class.n + 1))
    return BudgetAllocation(b, float(m))


def allocation_value(
    support_class: SupportClass, allocation: BudgetAllocation
) -> float:
    """min over members of the allocation mass inside the member."""
    return min(
        math.fsum(allocation.b[i - 1] for i in member)
        for member in support_class.members
    )


def truncated_geometric_pmf(l: int, x: int) -> Fraction:
    """Exact law of the look counter of a repeated fair sign test capped at l:
    (1/2)^x for x = 1..l-1 and (1/2)^(l-1) at x = l."""
    if l < 1:
        raise ValueError("cap l must be at least 1")
    if not 1 <= x <= l:
        raise OutOfSupport(f"x={x} outside 1..{l}")
    if x < l:
        return Fraction(1, 2**x)
    return Fraction(1, 2 ** (l - 1))


def hypergeometric_pmf(n: int, s: int, draw: int, k: int) -> float:
    """Exact P(intersection = k) when ``draw`` entries are sampled without
    replacement from n of which s are special.  Exact integer combinatorics
    rounded once to float."""
    if not (0 <= s <= n and 0 <= draw <= n):
        raise ValueError("need 0 <= s, draw <= n")
    if not 0 <= k <= min(s, draw):
        raise OutOfSupport(f"k={k} outside 0..min(s, draw)")
    num = math.comb(s, k) * math.comb(n - s, draw - k)
    return float(Fraction(num, math.comb(n, draw)))


def hypergeometric_mean(n: int, s: int, draw: int) -> float:
    return draw * s / n


def hypergeometric_variance(n: int, s: int, draw: int) -> float:
    if n <= 1:
        return 0.0
    p = s / n
    return draw * p * (1 - p) * (n - draw) / (n - 1)


@dataclass(frozen=True)
class KlCapReport:
    """Result of the null-divergence cap check for one strategy."""

    strategy: str
    cap: float
    min_empirical_kl: float
    max_standard_error: float
    supports_checked: int
    trials: int
    passed: bool

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "cap": self.cap,
            "min_empirical_kl": self.min_empirical_kl,
            "max_standard_error": self.max_standard_error,
            "supports_checked": self.supports_checked,
            "trials": self.trials,
            "pass": self.passed,
        }


def kl_cap_check(
    strategy,
    support_class: SupportClass,
    amplitude: float,
    trials: int,
    rng: np.random.Generator,
    support_draws: int = 100,
) -> KlCapReport:
    """Check that the least-favorable support's empirical null divergence
    stays under mu^2 * m * s / (2 |Xi|) + 3 standard errors.

    Runs the strategy ``trials`` times under the null once and evaluates
    every support against the same spend profiles.  Explicit classes are
    enumerated; the implicit class is probed with ``support_draws`` uniform
    samples, which can only over-estimate the true minimum and therefore
    never lets a failing strategy pass by accident.
    """
    if not class_is_symmetric(support_class):
        raise ValueError("the divergence cap applies to symmetric classes")
    n = support_class.n
    s = support_class.s
    m = strategy.m
    xi_size = len(support_class.xi)
    cap = amplitude * amplitude * m * s / (2.0 * xi_size)

    profiles = null_spend_profiles(strategy, trials, rng)
    if support_class.is_implicit:
        supports = [support_class.sample_member(rng) for _ in range(support_draws)]
    else:
        supports = list(support_class.members)

    factor = 0.5 * amplitude * amplitude
    min_kl = math.inf
    max_se = 0.0
    for support in supports:
        idx = np.array(sorted(support), dtype=np.int64) - 1
        per_trial = factor * profiles[:, idx].sum(axis=1)
        mean = float(per_trial.mean())
        se = float(per_trial.std(ddof=1) / math.sqrt(trials))
        min_kl = min(min_kl, mean)
        max_se = max(max_se, se)

    passed = min_kl <= cap + 3.0 * max_se
    return KlCapReport(
        strategy=getattr(strategy, "name", type(strategy).__name__),
        cap=cap,
        min_empirical_kl=min_kl,
        max_standard_error=max_se,
        supports_checked=len(supports),
        trials=trials,
        passed=passed,
    )


def cyclic_interval_class(n: int, s: int) -> SupportClass:
    """The n cyclic windows of length s over {1..n}; symmetric and full range."""
    members = []
    for start in range(n):
        members.append(frozenset((start + j) % n + 1 for j in range(s)))
    return SupportClass(n, s, tuple(members))


def symmetric_class_family(max_n: int = 8, max_s: int = 3):
    """The acceptance family of symmetric explicit classes: all-s-subsets
    and cyclic-interval classes for n <= max_n, s <= max_s."""
    classes = []
    for n in range(1, max_n + 1):
        for s in range(1, min(max_s, n) + 1):
            classes.append(
                ("all_subsets", SupportClass(n, s, SupportClass.all_subsets(n, s).enumerated()))
            )
            if s < n:  # length-n window would duplicate the single full set
                classes.append(("cyclic", cyclic_interval_class(n, s)))
    return classes
