"""Deterministic, parallel Monte Carlo experiment runner.

Output is a pure function of the configuration, including the master seed:
every (grid point, trial) pair owns an independent random stream, results
are gathered by trial index, and the reduction is a fixed-order fold, so
the same config produces byte-identical curves at any worker count.
Worker-count control: the ADASENSE_THREADS environment variable, default
machine parallelism.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._version import __version__
from .core import SparseSignal
from .rng import stream
from .strategies import STRATEGY_IDS, make_strategy

METRIC_IDS = ("mean_sym_diff", "exact_fail", "detection")


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the culprit."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"field '{field_name}': {message}")
        self.field = field_name


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a risk-curve run depends on."""

    strategy: str
    n: int
    s: int
    m: float
    amplitudes: tuple[float, ...]
    trials: int
    metric: str = "mean_sym_diff"
    seed: int = 0
    support_grid: int = 0
    epsilon: float = 0.1
    threshold: float | None = None

    def __post_init__(self):
        base = self.strategy[4:] if self.strategy.startswith("sym:") else self.strategy
        if base not in STRATEGY_IDS:
            raise ConfigError("strategy", f"unknown strategy {self.strategy!r}")
        if self.n < 1:
            raise ConfigError("n", "must be a positive integer")
        if not 1 <= self.s <= self.n:
            raise ConfigError("s", "must satisfy 1 <= s <= n")
        if self.m <= 0:
            raise ConfigError("m", "must be positive")
        if not self.amplitudes:
            raise ConfigError("amplitudes", "grid must be non-empty")
        if any(a < 0 for a in self.amplitudes):
            raise ConfigError("amplitudes", "amplitudes must be non-negative")
        if base == "sprt" and any(a <= 0 for a in self.amplitudes):
            raise ConfigError(
                "amplitudes", "the sequential-test strategy needs positive amplitudes"
            )
        if self.trials < 2:
            raise ConfigError("trials", "need at least 2 trials")
        if self.metric not in METRIC_IDS:
            raise ConfigError("metric", f"unknown metric {self.metric!r}")
        if self.metric == "detection" and base != "mds":
            # only detection strategies produce decisions
            raise ConfigError(
                "metric", f"strategy {self.strategy!r} does not emit decisions"
            )
        if self.support_grid < 0:
            raise ConfigError("support_grid", "must be >= 0")
        if not 0 < self.epsilon <= 1:
            raise ConfigError("epsilon", "must lie in (0, 1]")

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {
            "strategy", "n", "s", "m", "amplitudes", "trials", "metric",
            "seed", "support_grid", "epsilon", "threshold",
        }
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown configuration field")
        for name in ("strategy", "n", "s", "m", "amplitudes", "trials"):
            if name not in raw:
                raise ConfigError(name, "missing required field")
        kwargs = dict(raw)
        coercions = {
            "n": int, "s": int, "trials": int, "seed": int,
            "support_grid": int, "m": float, "epsilon": float,
            "strategy": str, "metric": str,
        }
        for name, cast in coercions.items():
            if name in kwargs:
                try:
                    kwargs[name] = cast(kwargs[name])
                except (TypeError, ValueError):
                    raise ConfigError(name, f"must be a {cast.__name__}")
        if kwargs.get("threshold") is not None:
            try:
                kwargs["threshold"] = float(kwargs["threshold"])
            except (TypeError, ValueError):
                raise ConfigError("threshold", "must be a number")
        try:
            kwargs["amplitudes"] = tuple(float(a) for a in raw["amplitudes"])
        except (TypeError, ValueError):
            raise ConfigError("amplitudes", "must be a list of numbers")
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "n": self.n,
            "s": self.s,
            "m": self.m,
            "amplitudes": list(self.amplitudes),
            "trials": self.trials,
            "metric": self.metric,
            "seed": self.seed,
            "support_grid": self.support_grid,
            "epsilon": self.epsilon,
            "threshold": self.threshold,
        }


@dataclass(frozen=True)
class CurvePoint:
    mu: float
    risk: float
    se: float
    trials: int


@dataclass(frozen=True)
class RiskCurve:
    points: tuple[CurvePoint, ...]
    metadata: dict = field(default_factory=dict)

    def risks(self) -> np.ndarray:
        return np.array([p.risk for p in self.points])


def thread_count() -> int:
    raw = os.environ.get("ADASENSE_THREADS", "")
    if raw.strip():
        try:
            v = int(raw)
        except ValueError:
            raise ConfigError("ADASENSE_THREADS", "must be an integer")
        return max(1, v)
    return os.cpu_count() or 1


# spawn-key tag separating the per-point support-grid stream from trial
# streams (paths of different lengths never collide)
_GRID_TAG = 2**31


def _draw_support(n: int, s: int, rng) -> frozenset[int]:
    picks = rng.choice(n, size=s, replace=False)
    return frozenset(int(i) + 1 for i in picks)


def _grid_supports(config: ExperimentConfig, point_index: int):
    rng = stream(config.seed, point_index, _GRID_TAG)
    return [
        _draw_support(config.n, config.s, rng) for _ in range(config.support_grid)
    ]


def _trial_value(
    config: ExperimentConfig, strategy, mu: float, trial_rng, support=None
) -> float:
    """One trial's loss.  Estimation metrics score against a support either
    fixed by the grid or drawn fresh; the detection metric runs a null and
    an alternative trial and adds the two error indicators, so its mean
    estimates the sum risk."""
    n = config.n
    if config.metric == "detection":
        null_rng, alt_rng, support_rng = trial_rng.spawn(3)
        if support is None:
            support = _draw_support(n, config.s, support_rng)
        value = 0.0
        if strategy.run(SparseSignal.null(n), null_rng).decision != 0:
            value += 1.0
        alt = (
            SparseSignal(n, support, mu) if mu > 0 else SparseSignal.null(n)
        )
        if strategy.run(alt, alt_rng).decision != 1:
            value += 1.0
        return value

    if support is None:
        support = _draw_support(n, config.s, trial_rng)
    signal = SparseSignal(n, support, mu) if mu > 0 else SparseSignal.null(n)
    outcome = strategy.run(signal, trial_rng)
    if config.metric == "mean_sym_diff":
        return float(len(outcome.estimate ^ support))
    return 0.0 if outcome.estimate == support else 1.0


def _run_chunk(args) -> tuple[int, int, list[float]]:
    config, point_index, start, stop = args
    mu = config.amplitudes[point_index]
    strategy = make_strategy(
        config.strategy,
        n=config.n,
        s=config.s,
        m=config.m,
        amplitude=mu if mu > 0 else max(config.amplitudes),
        epsilon=config.epsilon,
        threshold=config.threshold,
    )
    grid = _grid_supports(config, point_index) if config.support_grid > 0 else None
    values = []
    for t in range(start, stop):
        trial_rng = stream(config.seed, point_index, t)
        support = grid[t % len(grid)] if grid else None
        values.append(_trial_value(config, strategy, mu, trial_rng, support))
    return point_index, start, values


def _chunks(config: ExperimentConfig, workers: int):
    per_chunk = max(1, math.ceil(config.trials / max(workers * 2, 1)))
    for p in range(len(config.amplitudes)):
        t = 0
        while t < config.trials:
            yield (config, p, t, min(t + per_chunk, config.trials))
            t += per_chunk


def run_experiment(config: ExperimentConfig) -> RiskCurve:
    """Monte Carlo risk at every amplitude on the grid.

    Identical configs produce bit-identical curves regardless of the
    worker count or scheduling order.
    """
    workers = thread_count()
    tasks = list(_chunks(config, workers))
    values = np.zeros((len(config.amplitudes), config.trials))
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for point, start, chunk in pool.map(_run_chunk, tasks):
                values[point, start : start + len(chunk)] = chunk
    else:
        for task in tasks:
            point, start, chunk = _run_chunk(task)
            values[point, start : start + len(chunk)] = chunk

    points = []
    for p, mu in enumerate(config.amplitudes):
        row = values[p]
        if config.support_grid > 0:
            # worst-case grid: trial t used support t % g; aggregate the max
            g = config.support_grid
            group_means = [row[np.arange(config.trials) % g == j].mean()
                           for j in range(min(g, config.trials))]
            worst = int(np.argmax(group_means))
            sel = row[np.arange(config.trials) % g == worst]
            risk = float(sel.mean())
            se = float(sel.std(ddof=1) / math.sqrt(len(sel))) if len(sel) > 1 else 0.0
        else:
            risk = float(row.mean())
            se = float(row.std(ddof=1) / math.sqrt(config.trials))
        points.append(CurvePoint(mu=float(mu), risk=risk, se=se, trials=config.trials))
    metadata = {"config": config.to_dict(), "version": __version__}
    return RiskCurve(tuple(points), metadata)


@dataclass(frozen=True)
class ScanResult:
    """Amplitude at which the risk curve first drops below the target."""

    target: float
    mu_star: float | None
    reached: bool
    warning: str | None
    curve: RiskCurve


def find_crossing(curve: RiskCurve, target: float) -> tuple[float | None, str | None]:
    """Crossing amplitude of a curve: smallest grid point whose estimate
    plus two standard errors is below the target, linearly interpolated
    between the bracketing grid points.  Returns (mu_star or None,
    monotonicity warning or None)."""
    upper = [p.risk + 2.0 * p.se for p in curve.points]
    warning = None
    risks = [p.risk for p in curve.points]
    if any(b > a + 1e-12 for a, b in zip(risks, risks[1:])):
        warning = "risk estimates are not monotone decreasing in amplitude"

    crossing = next((j for j, v in enumerate(upper) if v < target), None)
    if crossing is None:
        return None, warning
    if crossing == 0:
        return curve.points[0].mu, warning
    v0, v1 = upper[crossing - 1], upper[crossing]
    mu0, mu1 = curve.points[crossing - 1].mu, curve.points[crossing].mu
    frac = (v0 - target) / (v0 - v1) if v0 != v1 else 1.0
    return float(mu0 + frac * (mu1 - mu0)), warning


def threshold_scan(config: ExperimentConfig, target: float) -> ScanResult:
    """Smallest grid amplitude whose risk estimate plus two standard errors
    falls below the target (conservative by construction), interpolated
    between grid points.  Warns, without failing, when the curve is not
    decreasing in amplitude (nothing guarantees it is)."""
    if target <= 0:
        raise ConfigError("target_risk", "must be positive")
    curve = run_experiment(config)
    mu_star, warning = find_crossing(curve, target)
    return ScanResult(target, mu_star, mu_star is not None, warning, curve)


@dataclass(frozen=True)
class PhaseDiagram:
    """Threshold-scan results across a sparsity grid."""

    s_grid: tuple[int, ...]
    scans: tuple[ScanResult, ...]
    target: float


def phase_diagram(
    config: ExperimentConfig, s_grid, target: float
) -> PhaseDiagram:
    scans = []
    for s in s_grid:
        scans.append(threshold_scan(_with_sparsity(config, int(s)), target))
    return PhaseDiagram(tuple(int(s) for s in s_grid), tuple(scans), target)


def _with_sparsity(config: ExperimentConfig, s: int) -> ExperimentConfig:
    raw = config.to_dict()
    raw["s"] = s
    return ExperimentConfig.from_dict(raw)


# ---------------------------------------------------------------------------
# serialization: CSV with a JSON metadata comment line, and plain JSON


def _fmt(x: float) -> str:
    return repr(float(x))


def curve_to_csv(curve: RiskCurve) -> str:
    meta = json.dumps(curve.metadata, sort_keys=True)
    s = curve.metadata.get("config", {}).get("s", "")
    lines = [f"# {meta}", "s,mu,risk,se,trials"]
    for p in curve.points:
        lines.append(f"{s},{_fmt(p.mu)},{_fmt(p.risk)},{_fmt(p.se)},{p.trials}")
    return "\n".join(lines) + "\n"


def curve_from_csv(text: str) -> RiskCurve:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    metadata = {}
    if lines and lines[0].startswith("#"):
        metadata = json.loads(lines[0][1:].strip())
        lines = lines[1:]
    if lines and lines[0].startswith("s,"):
        lines = lines[1:]
    points = []
    for ln in lines:
        _, mu, risk, se, trials = ln.split(",")
        points.append(CurvePoint(float(mu), float(risk), float(se), int(trials)))
    return RiskCurve(tuple(points), metadata)


def curve_to_json(curve: RiskCurve) -> str:
    return json.dumps(
        {
            "metadata": curve.metadata,
            "points": [
                {"mu": p.mu, "risk": p.risk, "se": p.se, "trials": p.trials}
                for p in curve.points
            ],
        },
        sort_keys=True,
    )


def curve_from_json(text: str) -> RiskCurve:
    raw = json.loads(text)
    points = tuple(
        CurvePoint(p["mu"], p["risk"], p["se"], p["trials"]) for p in raw["points"]
    )
    return RiskCurve(points, raw.get("metadata", {}))


def scan_to_json(result: ScanResult) -> str:
    return json.dumps(
        {
            "target_risk": result.target,
            "mu_star": result.mu_star,
            "reached": result.reached,
            "warning": result.warning,
            "curve": json.loads(curve_to_json(result.curve)),
        },
        sort_keys=True,
    )


def scan_to_csv(result: ScanResult) -> str:
    meta = dict(result.curve.metadata)
    meta["target_risk"] = result.target
    meta["mu_star"] = result.mu_star
    meta["reached"] = result.reached
    if result.warning:
        meta["warning"] = result.warning
    curve = RiskCurve(result.curve.points, meta)
    return curve_to_csv(curve)


def phase_to_csv(diagram: PhaseDiagram) -> str:
    header = {
        "target_risk": diagram.target,
        "s_grid": list(diagram.s_grid),
        "mu_star": [scan.mu_star for scan in diagram.scans],
        "version": __version__,
    }
    lines = [f"# {json.dumps(header, sort_keys=True)}", "s,mu,risk,se,trials"]
    for s, scan in zip(diagram.s_grid, diagram.scans):
        for p in scan.curve.points:
            lines.append(f"{s},{_fmt(p.mu)},{_fmt(p.risk)},{_fmt(p.se)},{p.trials}")
    return "\n".join(lines) + "\n"


def phase_to_json(diagram: PhaseDiagram) -> str:
    return json.dumps(
        {
            "target_risk": diagram.target,
            "entries": [
                {"s": s, "scan": json.loads(scan_to_json(scan))}
                for s, scan in zip(diagram.s_grid, diagram.scans)
            ],
        },
        sort_keys=True,
    )
