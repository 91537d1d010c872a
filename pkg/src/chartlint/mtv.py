"""The metamorphic test runner.

A single trial morphs the data (and, for the opacity relation, the spec),
renders or aggregates both sides, and applies an equality measure. The
statistical runner repeats this N times with derived per-trial seeds and
reports the passing fraction against a configurable threshold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .data import Table, Value, value_text
from .morphisms import (
    DataMorphism,
    Identity,
    OpacityScale,
    Rng,
    VisualMorphism,
    apply_visual,
    derive_seed,
)
from .raster import (
    RasterImage,
    RasterError,
    blend_toward_background,
    chi2_histogram_distance,
    draw_mark,
    new_canvas,
    pixel_diff,
    rasterize,
)
from .scene import SceneGraph, aggregate_groups, bar_heights, compile_scene


class MtvError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Equality measures


@dataclass(frozen=True)
class PixelCount:
    threshold: int = 0
    channel_tolerance: int = 0

    def __post_init__(self):
        if self.threshold < 0:
            raise MtvError("threshold must be non-negative")


@dataclass(frozen=True)
class BarHeightOrder:
    tolerance: float = 0.0

    def __post_init__(self):
        if self.tolerance < 0:
            raise MtvError("tolerance must be non-negative")


@dataclass(frozen=True)
class Chi2Histogram:
    threshold: float = 0.0

    def __post_init__(self):
        if self.threshold < 0:
            raise MtvError("threshold must be non-negative")


@dataclass(frozen=True)
class InsightPreserved:
    greater_category: Value
    lesser_category: Value


EqualityMeasure = PixelCount | BarHeightOrder | Chi2Histogram | InsightPreserved


def _needs_aggregated_bar(eq: EqualityMeasure) -> bool:
    return isinstance(eq, (BarHeightOrder, InsightPreserved))


def _needs_images(eq: EqualityMeasure) -> bool:
    return isinstance(eq, (PixelCount, Chi2Histogram))


def bar_order_equal(
    a: list[tuple[Value, float]], b: list[tuple[Value, float]], tolerance: float
) -> bool:
    """True iff both lists rank categories identically, where values within
    the tolerance are tied and a tie is compatible with either order."""
    da = {value_text(c): v for c, v in a}
    db = {value_text(c): v for c, v in b}
    if set(da) != set(db):
        raise MtvError(
            f"category sets differ: {sorted(da)} vs {sorted(db)}"
        )
    keys = sorted(da)
    for i, ki in enumerate(keys):
        for kj in keys[i + 1 :]:
            sa = da[ki] - da[kj]
            sb = db[ki] - db[kj]
            if (sa > tolerance and sb < -tolerance) or (
                sa < -tolerance and sb > tolerance
            ):
                return False
    return True


def variance_of_height_difference(
    trials: list[list[tuple[Value, float]]], baseline: list[tuple[Value, float]]
) -> float:
    """Sample variance (N-1 divisor) of the per-trial bar height difference
    (second category minus first, in baseline order) for two-bar charts."""
    if len(baseline) != 2:
        raise MtvError("height-difference variance requires a two-category chart")
    if len(trials) < 2:
        raise MtvError("need at least 2 trials for a sample variance")
    k0, k1 = (value_text(c) for c, _ in baseline)
    diffs = []
    for heights in trials:
        by_key = {value_text(c): v for c, v in heights}
        diffs.append(by_key[k1] - by_key[k0])
    mean = sum(diffs) / len(diffs)
    return sum((d - mean) ** 2 for d in diffs) / (len(diffs) - 1)


# ---------------------------------------------------------------------------
# Trial execution


@dataclass(frozen=True)
class TrialRecord:
    passed: bool | None  # None when the eq is inapplicable to this chart
    heights: list[tuple[Value, float]] | None = None
    diff: float | None = None


def compute_heights(spec, table: Table) -> list[tuple[Value, float]]:
    """Aggregated bar heights in data units without building pixel marks.

    Matches bar_heights(compile_scene(spec, table)) exactly; the scene path
    is the one the tests cross-check against this one.
    """
    groups = aggregate_groups(
        table, spec.x.field, spec.y.field, spec.y.aggregate, spec.sort
    )
    return [(g.category, g.value) for g in groups if not g.degenerate]


class _Baseline:
    """Per-run cache of the unmorphed chart's scene, raster, and heights."""

    def __init__(self, spec, table: Table):
        self.spec = spec
        self.table = table
        self._scene: SceneGraph | None = None
        self._image: RasterImage | None = None
        self._heights: list[tuple[Value, float]] | None = None

    @property
    def scene(self) -> SceneGraph:
        if self._scene is None:
            self._scene = compile_scene(self.spec, self.table)
        return self._scene

    @property
    def image(self) -> RasterImage:
        if self._image is None:
            self._image = rasterize(self.scene)
        return self._image

    @property
    def heights(self) -> list[tuple[Value, float]]:
        if self._heights is None:
            self._heights = compute_heights(self.spec, self.table)
        return self._heights


def _run_trial(
    baseline: _Baseline,
    alpha: DataMorphism,
    omega: VisualMorphism,
    eq: EqualityMeasure,
    rng: Rng,
) -> TrialRecord:
    spec = baseline.spec
    if _needs_aggregated_bar(eq) and not spec.is_aggregated_bar:
        return TrialRecord(passed=None)

    morphed_table = alpha.apply(baseline.table, rng)
    morphed_spec = apply_visual(omega, spec)

    heights = None
    if spec.is_aggregated_bar:
        heights = compute_heights(morphed_spec, morphed_table)

    if _needs_images(eq):
        if isinstance(omega, OpacityScale):
            expected = blend_toward_background(baseline.image, omega.f)
        else:
            expected = baseline.image
        actual = rasterize(compile_scene(morphed_spec, morphed_table))
        if isinstance(eq, PixelCount):
            diff = float(pixel_diff(actual, expected, eq.channel_tolerance))
            return TrialRecord(diff <= eq.threshold, heights, diff)
        diff = chi2_histogram_distance(actual, expected)
        return TrialRecord(diff <= eq.threshold, heights, diff)

    if isinstance(eq, BarHeightOrder):
        return TrialRecord(bar_order_equal(heights, baseline.heights, eq.tolerance), heights)

    # InsightPreserved
    by_key = {value_text(c): v for c, v in heights}
    gk = value_text(eq.greater_category)
    lk = value_text(eq.lesser_category)
    if gk not in by_key or lk not in by_key:
        raise MtvError(f"categories '{gk}'/'{lk}' not present in chart")
    return TrialRecord(by_key[gk] > by_key[lk], heights)


def run_single(
    spec,
    table: Table,
    alpha: DataMorphism,
    omega: VisualMorphism,
    eq: EqualityMeasure,
    rng: Rng,
) -> TrialRecord:
    """Execute one metamorphic trial and return its record; passed is None
    when the equality measure does not apply to this chart form."""
    return _run_trial(_Baseline(spec, table), alpha, omega, eq, rng)


# ---------------------------------------------------------------------------
# Statistical runner


@dataclass(frozen=True)
class MtvConfig:
    alpha: DataMorphism
    omega: VisualMorphism
    eq: EqualityMeasure
    trials: int = 100
    pass_threshold: float = 0.95  # required fraction of passing trials
    seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise MtvError("trials must be >= 1")
        if not 0 <= self.pass_threshold <= 1:
            raise MtvError("pass threshold must be in [0, 1]")


@dataclass
class MtvOutcome:
    config: MtvConfig
    trials: list[TrialRecord]
    pass_fraction: float
    verdict: str  # "pass" | "fail" | "not-applicable"
    height_diff_variance: float | None
    seed: int

    def to_dict(self) -> dict:
        return {
            "morphism": self.config.alpha.tag,
            "visual_morphism": self.config.omega.tag,
            "eq": type(self.config.eq).__name__,
            "trials": len(self.trials),
            "pass_threshold": self.config.pass_threshold,
            "seed": self.seed,
            "pass_fraction": self.pass_fraction,
            "verdict": self.verdict,
            "height_diff_variance": self.height_diff_variance,
            "per_trial": [
                {
                    "pass": t.passed,
                    "heights": (
                        None
                        if t.heights is None
                        else [[value_text(c), v] for c, v in t.heights]
                    ),
                    "diff": t.diff,
                }
                for t in self.trials
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def run_statistical(config: MtvConfig, spec, table: Table) -> MtvOutcome:
    """Run N independent trials with derived per-trial seeds and aggregate.

    The outcome is byte-reproducible for an equal config (seed included);
    trial results are assembled in trial-index order.
    """
    baseline = _Baseline(spec, table)
    records = []
    for i in range(config.trials):
        rng = Rng(derive_seed(config.seed, i, config.alpha.tag))
        records.append(_run_trial(baseline, config.alpha, config.omega, config.eq, rng))

    applicable = [r for r in records if r.passed is not None]
    if not applicable:
        return MtvOutcome(config, records, 0.0, "not-applicable", None, config.seed)
    pass_fraction = sum(1 for r in applicable if r.passed) / len(applicable)
    verdict = "pass" if pass_fraction >= config.pass_threshold else "fail"

    variance = None
    height_trials = [r.heights for r in records if r.heights is not None]
    if spec.is_aggregated_bar and len(height_trials) >= 2 and len(baseline.heights) == 2:
        variance = variance_of_height_difference(height_trials, baseline.heights)
    return MtvOutcome(config, records, pass_fraction, verdict, variance, config.seed)


def render_overlay(scenes: list[SceneGraph], per_layer_opacity: float) -> RasterImage:
    """Composite several scenes over one white canvas, each layer with mark
    opacity multiplied by the given fraction; single scene at 1.0 equals a
    plain rasterize."""
    if not scenes:
        raise MtvError("render_overlay requires at least one scene")
    dims = {(s.width, s.height) for s in scenes}
    if len(dims) > 1:
        raise RasterError(f"scene dimension mismatch: {sorted(dims)}")
    first = scenes[0]
    canvas = new_canvas(first.width, first.height)
    for scene in scenes:
        for mark in sorted(scene.marks, key=lambda m: m.draw_order):
            draw_mark(canvas, mark, per_layer_opacity)
    return RasterImage(first.width, first.height, canvas.tobytes())
