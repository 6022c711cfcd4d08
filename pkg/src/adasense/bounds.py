"""Closed-form critical-amplitude calculators.

Each function returns a :class:`BoundSpec` carrying the evaluated value,
its inputs, and flags.  Unsubscripted logarithms are natural (the Gaussian
divergence algebra behind every bound forces base e); base-2 logs appear
only where the source construction uses them (the ``log2 n`` terms of the
sequential-thresholding guarantee).  A negative bracket under the square
root clamps the value to 0 and sets ``clamped``: the bound is vacuous
there, not invalid.

For reference, the classical non-adaptive detection boundary scales like
``c * sqrt(log n)`` with a constant depending on how s relates to n; it is
discussed in the docs but deliberately not computed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidDimension, InvalidEpsilon, InvalidSparsity


@dataclass(frozen=True)
class BoundSpec:
    """An evaluated bound: name, inputs, critical amplitude, and flags.

    ``clamped`` marks a negative bracket forced to zero; ``valid_region``
    is False when the bound's stated validity condition fails for these
    inputs (the value is still computed).
    """

    name: str
    inputs: dict
    value: float
    clamped: bool = False
    valid_region: bool = True

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("bound value must be non-negative")

    def as_row(self) -> dict:
        row = {"name": self.name}
        for key in ("n", "s", "m", "epsilon", "xi_size"):
            if key in self.inputs:
                row[key] = self.inputs[key]
        row["value"] = self.value
        row["clamped"] = self.clamped
        row["validity_flag"] = self.valid_region
        return row


def _check_epsilon(epsilon: float) -> None:
    if not 0 < epsilon < 1:
        raise InvalidEpsilon(f"epsilon must lie in (0,1), got {epsilon}")


def detection_lower_bound(xi_size: int, s: int, m: float, epsilon: float) -> BoundSpec:
    """Minimum amplitude below which no adaptive test over a symmetric class
    with range Xi can reach detection risk epsilon:
    sqrt( 2|Xi|/(s m) * ln(1/(2 epsilon)) ), clamped at 0 for epsilon >= 1/2.

    The same value applies with max-risk <= epsilon/2 or Bayes risk <=
    epsilon.
    """
    _check_epsilon(epsilon)
    if s < 1 or s > xi_size:
        raise InvalidSparsity(f"need 1 <= s <= |Xi|, got s={s}, |Xi|={xi_size}")
    if m <= 0:
        raise ValueError("budget m must be positive")
    bracket = math.log(1.0 / (2.0 * epsilon))
    clamped = bracket <= 0
    value = math.sqrt(max(0.0, 2.0 * xi_size / (s * m) * bracket))
    return BoundSpec(
        "detection_lower",
        {"xi_size": xi_size, "s": s, "m": m, "epsilon": epsilon},
        value,
        clamped=clamped,
    )


def estimation_lower_bound(n: int, s: int, m: float, epsilon: float) -> BoundSpec:
    """Minimum amplitude below which no adaptive procedure keeps the worst
    expected support error at most epsilon over supports of size s-1, s, s+1:
    sqrt( (2n/m) * (ln s + ln((n-s)/(n+1)) + ln(1/(2 epsilon))) ).
    """
    _check_epsilon(epsilon)
    if not 1 <= s < n:
        raise InvalidSparsity(f"need 1 <= s < n, got s={s}, n={n}")
    if m <= 0:
        raise ValueError("budget m must be positive")
    bracket = (
        math.log(s) + math.log((n - s) / (n + 1.0)) + math.log(1.0 / (2.0 * epsilon))
    )
    clamped = bracket <= 0
    value = math.sqrt(max(0.0, 2.0 * n / m * bracket))
    return BoundSpec(
        "estimation_lower",
        {"n": n, "s": s, "m": m, "epsilon": epsilon},
        value,
        clamped=clamped,
    )


def estimation_upper_bound(n: int, s: int, m: float) -> BoundSpec:
    """Amplitude at which the budgeted sequential-thresholding recovery
    guarantee kicks in: sqrt( (4n/m) * (2 ln(s+1) + 5 ln(log2 n)) ).

    Flags (rather than rejects) inputs outside the guarantee's sparsity
    region s+1 <= n / ((log2 n)^2 - 3).
    """
    if n < 5:
        raise InvalidDimension(f"need n >= 5 so (log2 n)^2 > 3, got n={n}")
    if s < 1:
        raise InvalidSparsity(f"need s >= 1, got s={s}")
    if m <= 0:
        raise ValueError("budget m must be positive")
    log2n = math.log2(n)
    value = math.sqrt(4.0 * n / m * (2.0 * math.log(s + 1) + 5.0 * math.log(log2n)))
    valid = (s + 1) <= n / (log2n * log2n - 3.0)
    return BoundSpec(
        "estimation_upper", {"n": n, "s": s, "m": m}, value, valid_region=valid
    )


def mds_sufficient_magnitude(n: int, s: int, m: float) -> BoundSpec:
    """Amplitude above which subsampled multi-stage distillation detects
    reliably: sqrt( 32 n ln ln ln n / (s m) ).

    Requires n >= 16 so the triple logarithm is positive; flags s <=
    ln ln ln n, where the construction's guarantee does not apply.
    """
    if n < 16:
        raise InvalidDimension(f"need n >= 16 so lnlnln n > 0, got n={n}")
    if s < 1:
        raise InvalidSparsity(f"need s >= 1, got s={s}")
    if m <= 0:
        raise ValueError("budget m must be positive")
    lll = math.log(math.log(math.log(n)))
    value = math.sqrt(32.0 * n * lll / (s * m))
    return BoundSpec(
        "mds_sufficient", {"n": n, "s": s, "m": m}, value, valid_region=s > lll
    )


def cs_lower_bound(n: int, s: int, m: float, epsilon: float) -> BoundSpec:
    """Support-recovery lower bound for adaptive compressed sensing under an
    expected Frobenius-norm budget; pointwise identical to
    :func:`estimation_lower_bound`, reported under its own name."""
    spec = estimation_lower_bound(n, s, m, epsilon)
    return BoundSpec("cs_lower", spec.inputs, spec.value, clamped=spec.clamped)


BOUND_CALCULATORS = {
    "detection_lower": lambda n, s, m, epsilon: detection_lower_bound(n, s, m, epsilon),
    "estimation_lower": lambda n, s, m, epsilon: estimation_lower_bound(n, s, m, epsilon),
    "estimation_upper": lambda n, s, m, epsilon: estimation_upper_bound(n, s, m),
    "mds_sufficient": lambda n, s, m, epsilon: mds_sufficient_magnitude(n, s, m),
    "cs_lower": lambda n, s, m, epsilon: cs_lower_bound(n, s, m, epsilon),
}
