"""Command-line entry point and lint report emission.

Checks are reported linter-style: every finding is surfaced, each check can
be disabled individually, and exit codes follow the contract 0 = all pass,
1 = some check failed, 2 = input error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field

from . import __version__
from .chartspec import ChartSpec, SpecError, has_errors, parse_spec, spec_to_dict, validate_spec
from .data import Table, TableError, load_csv, load_json_rows
from .morphisms import (
    Bootstrap,
    ContractRecords,
    Identity,
    IdentityRows,
    OpacityScale,
    RandomizeAssignment,
    Rng,
    Shuffle,
    derive_seed,
)
from .mtv import (
    BarHeightOrder,
    MtvConfig,
    PixelCount,
    run_single,
    run_statistical,
)
from .raster import rasterize, write_png, write_ppm
from .scene import compile_scene
from .simlab import run_experiment, summarize, summary_csv, trend_correlations

ALL_CHECKS = ("shuffle", "opacity", "bootstrap", "contract", "randomize")

# Default pixel-diff thresholds: exact for aggregated charts, a small
# allowance for unaggregated ones where genuine overdraw is tolerable noise.
PIXEL_THRESHOLD_AGGREGATED = 0
PIXEL_THRESHOLD_UNAGGREGATED = 16

OPACITY_TEST_FRACTION = 0.5

MIRAGE_MESSAGES = {
    "shuffle": "row order changed the rendered image: overplotting or "
    "order-dependent rendering hides data",
    "opacity": "reduced mark opacity did not fade the chart uniformly: "
    "overplotting (marks stacked in the same pixels)",
    "bootstrap": "bar order is unstable under within-bar resampling: "
    "outlier-driven or non-robust difference between aggregates",
    "contract": "bar order changes when groups are equalized to the smallest "
    "group: differing number of records by group / under-sampling",
    "randomize": "bar heights barely react to destroying the category-value "
    "relationship: possible noise rather than signal",
}


@dataclass(frozen=True)
class LintConfig:
    trials: int = 100
    epsilon: float = 0.95
    seed: int = 0
    strict: bool = False
    disabled: tuple[str, ...] = ()


@dataclass(frozen=True)
class CheckResult:
    name: str
    applicable: bool
    verdict: str  # "pass" | "fail" | "warning" | "not-applicable"
    pass_fraction: float | None
    statistic: float | None
    message: str


@dataclass
class LintReport:
    chart: dict
    validation: list[dict]
    checks: list[CheckResult]
    seed: int
    config: dict
    version: str = __version__
    tool: str = "chartlint"

    def to_dict(self) -> dict:
        return {
            "tool": self.tool,
            "version": self.version,
            "seed": self.seed,
            "chart": self.chart,
            "validation": self.validation,
            "config": self.config,
            "checks": [
                {
                    "name": c.name,
                    "applicable": c.applicable,
                    "verdict": c.verdict,
                    "pass_fraction": c.pass_fraction,
                    "statistic": c.statistic,
                    "message": c.message,
                }
                for c in self.checks
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @property
    def exit_code(self) -> int:
        if any(c.verdict == "fail" for c in self.checks):
            return 1
        return 0


def _not_applicable(name: str, reason: str) -> CheckResult:
    return CheckResult(name, False, "not-applicable", None, None, reason)


def _check_shuffle(spec: ChartSpec, table: Table, config: LintConfig) -> CheckResult:
    threshold = (
        PIXEL_THRESHOLD_AGGREGATED if spec.aggregated else PIXEL_THRESHOLD_UNAGGREGATED
    )
    outcome = run_statistical(
        MtvConfig(
            alpha=Shuffle(),
            omega=Identity(),
            eq=PixelCount(threshold),
            trials=config.trials,
            pass_threshold=config.epsilon,
            seed=derive_seed(config.seed, 0, "lint-shuffle"),
        ),
        spec,
        table,
    )
    message = "" if outcome.verdict == "pass" else MIRAGE_MESSAGES["shuffle"]
    return CheckResult(
        "shuffle", True, outcome.verdict, outcome.pass_fraction, None, message
    )


def _check_opacity(spec: ChartSpec, table: Table, config: LintConfig) -> CheckResult:
    # Deterministic relation: scaling mark opacity by f must equal blending
    # the original image toward white by f (to within rounding) unless marks
    # overlap.
    record = run_single(
        spec,
        table,
        IdentityRows(),
        OpacityScale(OPACITY_TEST_FRACTION),
        PixelCount(0, channel_tolerance=1),
        Rng(derive_seed(config.seed, 0, "lint-opacity")),
    )
    verdict = "pass" if record.passed else "fail"
    message = "" if record.passed else MIRAGE_MESSAGES["opacity"]
    return CheckResult(
        "opacity", True, verdict, 1.0 if record.passed else 0.0, record.diff, message
    )


def _grouped_outcome(name: str, spec: ChartSpec, table: Table, config: LintConfig):
    alpha = {
        "bootstrap": Bootstrap,
        "contract": ContractRecords,
        "randomize": RandomizeAssignment,
    }[name](spec.x.field, spec.y.field)
    return run_statistical(
        MtvConfig(
            alpha=alpha,
            omega=Identity(),
            eq=BarHeightOrder(0.0),
            trials=config.trials,
            pass_threshold=config.epsilon,
            seed=derive_seed(config.seed, 0, f"lint-{name}"),
        ),
        spec,
        table,
    )


def _check_grouped(name: str, spec: ChartSpec, table: Table, config: LintConfig) -> CheckResult:
    if not spec.is_aggregated_bar:
        return _not_applicable(name, "requires an aggregated bar chart")
    outcome = _grouped_outcome(name, spec, table, config)
    message = "" if outcome.verdict == "pass" else MIRAGE_MESSAGES[name]
    return CheckResult(
        name,
        True,
        outcome.verdict,
        outcome.pass_fraction,
        outcome.height_diff_variance,
        message,
    )


def _check_randomize(spec: ChartSpec, table: Table, config: LintConfig) -> CheckResult:
    """Randomize is direction-inverted relative to the other grouped tests:
    the chart being UNmoved by destroying the category-value relationship is
    the suspicious outcome. The mapping is heuristic and says so."""
    if not spec.is_aggregated_bar:
        return _not_applicable("randomize", "requires an aggregated bar chart")
    outcome = _grouped_outcome("randomize", spec, table, config)
    from .mtv import compute_heights

    baseline = compute_heights(spec, table)
    if len(baseline) == 2 and outcome.height_diff_variance is not None:
        # Permutation-null reading: a real signal should sit outside the
        # spread of randomized differences.
        d0 = baseline[1][1] - baseline[0][1]
        spread = math.sqrt(outcome.height_diff_variance)
        signal = abs(d0) > 2.0 * spread
    else:
        # Fall back to how often the randomized order still matches.
        signal = outcome.pass_fraction <= 0.5
    if signal:
        verdict, message = "pass", ""
    else:
        verdict = "warning"
        message = MIRAGE_MESSAGES["randomize"] + " (heuristic mapping)"
    return CheckResult(
        "randomize",
        True,
        verdict,
        outcome.pass_fraction,
        outcome.height_diff_variance,
        message,
    )


def lint_chart(spec_text: str, data_text: str, config: LintConfig, data_format: str = "csv"):
    """Run all enabled checks; returns (LintReport, exit_code)."""
    try:
        spec = parse_spec(spec_text)
    except SpecError as exc:
        report = LintReport({}, [{"severity": "error", "message": str(exc)}], [], config.seed, _config_dict(config))
        return report, 2
    try:
        table = load_json_rows(data_text) if data_format == "json" else load_csv(data_text)
    except TableError as exc:
        report = LintReport(
            _chart_summary(spec),
            [{"severity": "error", "message": str(exc)}],
            [],
            config.seed,
            _config_dict(config),
        )
        return report, 2

    issues = validate_spec(spec, table)
    validation = [{"severity": i.severity, "message": i.message} for i in issues]
    if has_errors(issues):
        report = LintReport(_chart_summary(spec), validation, [], config.seed, _config_dict(config))
        return report, 2

    checks = []
    for name in ALL_CHECKS:
        if name in config.disabled:
            continue
        if name == "shuffle":
            checks.append(_check_shuffle(spec, table, config))
        elif name == "opacity":
            checks.append(_check_opacity(spec, table, config))
        elif name == "randomize":
            checks.append(_check_randomize(spec, table, config))
        else:
            checks.append(_check_grouped(name, spec, table, config))

    report = LintReport(_chart_summary(spec), validation, checks, config.seed, _config_dict(config))
    code = report.exit_code
    if code == 0 and config.strict and any(c.verdict == "warning" for c in report.checks):
        code = 1
    return report, code


def _chart_summary(spec: ChartSpec) -> dict:
    return {
        "mark": spec.mark,
        "encoding": spec_to_dict(spec)["encoding"],
        "aggregated": spec.aggregated,
    }


def _config_dict(config: LintConfig) -> dict:
    return {
        "trials": config.trials,
        "epsilon": config.epsilon,
        "strict": config.strict,
        "disabled": list(config.disabled),
    }


# ---------------------------------------------------------------------------
# Command-line interface


def _default_seed() -> int:
    env = os.environ.get("CHARTLINT_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            pass
    return 0


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _data_format(path: str) -> str:
    return "json" if path.endswith(".json") else "csv"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chartlint",
        description="Metamorphic-testing linter for declarative charts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    lint = sub.add_parser("lint", help="run all applicable checks on a chart")
    lint.add_argument("spec")
    lint.add_argument("data")
    lint.add_argument("--trials", type=int, default=100)
    lint.add_argument("--epsilon", type=float, default=0.95)
    lint.add_argument("--seed", type=int, default=None)
    lint.add_argument("--strict", action="store_true", help="warnings also fail")
    lint.add_argument(
        "--disable", action="append", default=[], choices=ALL_CHECKS, metavar="CHECK"
    )

    test = sub.add_parser("test", help="run a single metamorphic test")
    test.add_argument("spec")
    test.add_argument("data")
    test.add_argument(
        "--morphism",
        required=True,
        choices=("shuffle", "bootstrap", "contract", "randomize", "opacity"),
    )
    test.add_argument("--trials", type=int, default=100)
    test.add_argument("--epsilon", type=float, default=0.95)
    test.add_argument("--seed", type=int, default=None)

    sim = sub.add_parser("simulate", help="run the synthetic-data experiment grid")
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--trials", type=int, default=100)
    sim.add_argument("--out", default=".", help="output directory")
    sim.add_argument("--cells-json", action="store_true", help="also write per-cell JSON")

    render = sub.add_parser("render", help="rasterize a chart to PPM or PNG")
    render.add_argument("spec")
    render.add_argument("data")
    render.add_argument("--out", required=True)
    return parser


def _cmd_lint(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    config = LintConfig(
        trials=args.trials,
        epsilon=args.epsilon,
        seed=seed,
        strict=args.strict,
        disabled=tuple(args.disable),
    )
    try:
        spec_text, data_text = _read(args.spec), _read(args.data)
    except OSError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    report, code = lint_chart(spec_text, data_text, config, _data_format(args.data))
    print(report.to_json())
    return code


def _cmd_test(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    try:
        spec = parse_spec(_read(args.spec))
        data_text = _read(args.data)
        table = (
            load_json_rows(data_text)
            if _data_format(args.data) == "json"
            else load_csv(data_text)
        )
    except (OSError, SpecError, TableError) as exc:
        print(str(exc), file=sys.stderr)
        return 2
    issues = validate_spec(spec, table)
    if has_errors(issues):
        for issue in issues:
            print(f"{issue.severity}: {issue.message}", file=sys.stderr)
        return 2

    if args.morphism == "opacity":
        record = run_single(
            spec,
            table,
            IdentityRows(),
            OpacityScale(OPACITY_TEST_FRACTION),
            PixelCount(0, channel_tolerance=1),
            Rng(derive_seed(seed, 0, "cli-opacity")),
        )
        doc = {
            "morphism": "opacity",
            "pass": record.passed,
            "diff": record.diff,
            "seed": seed,
        }
        print(json.dumps(doc, sort_keys=True))
        return 0 if record.passed else 1
    if args.morphism == "shuffle":
        threshold = (
            PIXEL_THRESHOLD_AGGREGATED
            if spec.aggregated
            else PIXEL_THRESHOLD_UNAGGREGATED
        )
        alpha, eq = Shuffle(), PixelCount(threshold)
    else:
        alpha_cls = {
            "bootstrap": Bootstrap,
            "contract": ContractRecords,
            "randomize": RandomizeAssignment,
        }[args.morphism]
        alpha, eq = alpha_cls(spec.x.field, spec.y.field), BarHeightOrder(0.0)
    outcome = run_statistical(
        MtvConfig(
            alpha=alpha,
            omega=Identity(),
            eq=eq,
            trials=args.trials,
            pass_threshold=args.epsilon,
            seed=seed,
        ),
        spec,
        table,
    )
    print(outcome.to_json())
    return 1 if outcome.verdict == "fail" else 0


def _cmd_simulate(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    start = time.time()
    cells = run_experiment(seed, trials_per_test=args.trials)
    rows = summarize(cells)
    try:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "summary.csv"), "w", encoding="utf-8") as fh:
            fh.write(summary_csv(rows))
        if args.cells_json:
            doc = [
                {
                    "manipulation": c.scenario.manipulation,
                    "effect_index": c.scenario.effect_index,
                    "replicate": c.scenario.replicate,
                    "seed": c.scenario.seed,
                    "stats": c.stats,
                }
                for c in cells
            ]
            with open(os.path.join(args.out, "cells.json"), "w", encoding="utf-8") as fh:
                json.dump(doc, fh, sort_keys=True, indent=2)
    except OSError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    print(f"wrote {len(rows)} summary rows for {len(cells)} cells "
          f"({time.time() - start:.1f}s)")
    for (manipulation, test), rho in trend_correlations(rows).items():
        mono = "yes" if rho >= 0.8 else "NO"
        print(f"trend {manipulation}/{test}: spearman rho={rho:+.2f} monotone={mono}")
    return 0


def _cmd_render(args) -> int:
    try:
        spec = parse_spec(_read(args.spec))
        data_text = _read(args.data)
        table = (
            load_json_rows(data_text)
            if _data_format(args.data) == "json"
            else load_csv(data_text)
        )
    except (OSError, SpecError, TableError) as exc:
        print(str(exc), file=sys.stderr)
        return 2
    issues = validate_spec(spec, table)
    if has_errors(issues):
        for issue in issues:
            print(f"{issue.severity}: {issue.message}", file=sys.stderr)
        return 2
    img = rasterize(compile_scene(spec, table))
    try:
        if args.out.endswith(".png"):
            write_png(img, args.out)
        else:
            with open(args.out, "wb") as fh:
                fh.write(write_ppm(img))
    except OSError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "lint": _cmd_lint,
        "test": _cmd_test,
        "simulate": _cmd_simulate,
        "render": _cmd_render,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
