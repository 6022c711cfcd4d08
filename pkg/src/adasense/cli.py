"""Command-line surface.

Subcommands: ``bounds`` (closed-form tables over a parameter grid),
``simulate`` (one risk curve), ``scan`` (risk curve plus the crossing
amplitude), ``phase`` (scans over a sparsity grid), ``verify`` (oracle
battery, exit 0 iff everything passes).

Experiments are described by a JSON config file; ``--set path=value``
overrides individual fields with dotted-path syntax.  All randomness comes
from the config's seed, so identical invocations produce identical bytes.
Exit codes: 0 success, 1 config/validation error (the message names the
offending field), 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .bounds import BOUND_CALCULATORS
from .errors import AdasenseError
from .harness import (
    ConfigError,
    ExperimentConfig,
    phase_diagram,
    phase_to_csv,
    phase_to_json,
    run_experiment,
    scan_to_csv,
    scan_to_json,
    curve_to_csv,
    curve_to_json,
    threshold_scan,
)
from .svg import render_svg
from .verify import run_verification


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"no such file: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}")


def _apply_overrides(config: dict, overrides: list[str]) -> dict:
    for item in overrides:
        if "=" not in item:
            raise ConfigError("--set", f"expected path=value, got {item!r}")
        path, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = config
        keys = path.split(".")
        for key in keys[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ConfigError(path, "path does not lead to an object")
        node[keys[-1]] = value
    return config


def _emit(text: str, output: str | None) -> None:
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _reference_bounds(experiment: ExperimentConfig, target: float, names):
    """Bounds drawn as vertical references on scan plots.  When the config
    does not name any, pick by metric: recovery bounds for estimation
    metrics, detection bounds otherwise."""
    eps = target if 0.0 < target < 1.0 else 0.25
    if names is None:
        if experiment.metric == "detection":
            names = ["detection_lower", "mds_sufficient"]
        else:
            names = ["estimation_lower", "estimation_upper"]
    out = []
    for name in names:
        calc = BOUND_CALCULATORS.get(name)
        if calc is None:
            raise ConfigError("reference_bounds", f"unknown bound {name!r}")
        out.append(calc(experiment.n, experiment.s, experiment.m, eps))
    return out


def _cmd_bounds(args) -> int:
    config = _apply_overrides(_load_config(args.config), args.set or [])
    grid = config.get("grid")
    if not isinstance(grid, dict):
        raise ConfigError("grid", "bounds config must contain a 'grid' object")
    names = grid.get("names", list(BOUND_CALCULATORS))
    rows = []
    for name in names:
        calc = BOUND_CALCULATORS.get(name)
        if calc is None:
            raise ConfigError("grid.names", f"unknown bound {name!r}")
        for n in grid.get("n", [1024]):
            for s in grid.get("s", [8]):
                for m in grid.get("m", [float(n)]):
                    for eps in grid.get("epsilon", [0.1]):
                        spec = calc(int(n), int(s), float(m), float(eps))
                        rows.append(
                            {
                                "name": name,
                                "n": int(n),
                                "s": int(s),
                                "m": float(m),
                                "epsilon": float(eps),
                                "value": spec.value,
                                "clamped": spec.clamped,
                                "validity_flag": spec.valid_region,
                            }
                        )
    if args.format == "json":
        _emit(json.dumps(rows, sort_keys=True) + "\n", args.output)
    else:
        lines = ["name,n,s,m,epsilon,value,clamped,validity_flag"]
        for r in rows:
            lines.append(
                f"{r['name']},{r['n']},{r['s']},{r['m']!r},{r['epsilon']!r},"
                f"{r['value']!r},{r['clamped']},{r['validity_flag']}"
            )
        _emit("\n".join(lines) + "\n", args.output)
    return 0


def _experiment_from(config: dict, key: str | None = None) -> ExperimentConfig:
    raw = config.get(key, config) if key else config
    if key and key not in config:
        raise ConfigError(key, "missing experiment configuration")
    if not isinstance(raw, dict):
        raise ConfigError(key or "config", "must be an object")
    return ExperimentConfig.from_dict(raw)


def _maybe_figure(args, make_fig) -> None:
    if getattr(args, "figure", None):
        from . import plots

        plots.save_figure(make_fig(), args.figure)


def _cmd_simulate(args) -> int:
    if args.format == "svg":
        raise ConfigError("format", "svg output is only valid for scan and phase")
    config = _apply_overrides(_load_config(args.config), args.set or [])
    experiment = _experiment_from(config)
    curve = run_experiment(experiment)
    text = curve_to_json(curve) + "\n" if args.format == "json" else curve_to_csv(curve)
    _emit(text, args.output)

    def fig():
        from . import plots

        return plots.risk_curve_figure(curve)

    _maybe_figure(args, fig)
    return 0


def _cmd_scan(args) -> int:
    config = _apply_overrides(_load_config(args.config), args.set or [])
    experiment = _experiment_from(config, "experiment")
    target = config.get("target_risk")
    if not isinstance(target, (int, float)):
        raise ConfigError("target_risk", "must be a number")
    result = threshold_scan(experiment, float(target))
    refs = _reference_bounds(experiment, float(target), config.get("reference_bounds"))
    if args.format == "svg":
        _emit(render_svg(result.curve, refs), args.output)
    elif args.format == "json":
        _emit(scan_to_json(result) + "\n", args.output)
    else:
        _emit(scan_to_csv(result), args.output)

    def fig():
        from . import plots

        return plots.risk_curve_figure(result.curve, refs)

    _maybe_figure(args, fig)
    return 0


def _cmd_phase(args) -> int:
    config = _apply_overrides(_load_config(args.config), args.set or [])
    experiment = _experiment_from(config, "experiment")
    target = config.get("target_risk")
    if not isinstance(target, (int, float)):
        raise ConfigError("target_risk", "must be a number")
    s_grid = config.get("s_grid")
    if not isinstance(s_grid, list) or not s_grid:
        raise ConfigError("s_grid", "must be a non-empty list of sparsities")
    diagram = phase_diagram(experiment, [int(s) for s in s_grid], float(target))
    if args.format == "svg":
        # re-use the curve renderer on the mu* trace, one point per sparsity
        from .harness import CurvePoint, RiskCurve

        pts = tuple(
            CurvePoint(float(s), scan.mu_star if scan.mu_star is not None else 0.0,
                       0.0, experiment.trials)
            for s, scan in zip(diagram.s_grid, diagram.scans)
        )
        _emit(render_svg(RiskCurve(pts, {"config": experiment.to_dict()})), args.output)
    elif args.format == "json":
        _emit(phase_to_json(diagram) + "\n", args.output)
    else:
        _emit(phase_to_csv(diagram), args.output)

    def fig():
        from . import plots

        return plots.phase_figure(diagram)

    _maybe_figure(args, fig)
    return 0


def _cmd_verify(args) -> int:
    config = _load_config(args.config) if args.config else {}
    config = _apply_overrides(config, args.set or [])
    trials = int(config.get("trials", 500))
    seed = int(config.get("seed", 20250810))
    verdicts = run_verification(trials=trials, seed=seed)
    _emit(json.dumps(verdicts, indent=2, default=str) + "\n", args.output)
    return 0 if all(v["pass"] for v in verdicts) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adasense",
        description="Budgeted adaptive sensing: bounds, simulations, scans, verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, svg_ok=False, figure_ok=False, config_required=True):
        p.add_argument("--config", required=config_required, help="JSON config file")
        p.add_argument("--output", help="output path (default: stdout)")
        formats = ["csv", "json"] + (["svg"] if svg_ok else [])
        p.add_argument("--format", choices=formats, default="csv")
        p.add_argument(
            "--set", action="append", metavar="PATH=VALUE",
            help="override a config field (dotted path, JSON value)",
        )
        if figure_ok:
            p.add_argument(
                "--figure", help="also render a matplotlib figure to this file"
            )

    common(sub.add_parser("bounds", help="evaluate bound tables over a grid"))
    p_sim = sub.add_parser("simulate", help="Monte Carlo risk curve")
    # svg accepted by the parser but rejected with a config error: the
    # format is only meaningful for scan/phase outputs
    common(p_sim, svg_ok=True, figure_ok=True)
    p_scan = sub.add_parser("scan", help="risk curve plus crossing amplitude")
    common(p_scan, svg_ok=True, figure_ok=True)
    p_phase = sub.add_parser("phase", help="threshold scans over a sparsity grid")
    common(p_phase, svg_ok=True, figure_ok=True)
    p_ver = sub.add_parser("verify", help="run the oracle battery")
    common(p_ver, config_required=False)
    return parser


_COMMANDS = {
    "bounds": _cmd_bounds,
    "simulate": _cmd_simulate,
    "scan": _cmd_scan,
    "phase": _cmd_phase,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, AdasenseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
