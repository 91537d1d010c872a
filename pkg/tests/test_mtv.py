import json

import pytest
from hypothesis import given, settings, strategies as st

from chartlint import load_csv, parse_spec
from chartlint.morphisms import (
    Bootstrap,
    Identity,
    IdentityRows,
    OpacityScale,
    RandomizeAssignment,
    Rng,
    Shuffle,
)
from chartlint.mtv import (
    BarHeightOrder,
    InsightPreserved,
    MtvConfig,
    MtvError,
    PixelCount,
    bar_order_equal,
    compute_heights,
    render_overlay,
    run_single,
    run_statistical,
    variance_of_height_difference,
)
from chartlint.raster import chi2_histogram_distance, pixel_diff, rasterize
from chartlint.scene import bar_heights, compile_scene

from conftest import spec_json


def overlap_scatter():
    """A dense opaque scatter with coincident points: draw order matters."""
    spec = parse_spec(
        spec_json(
            mark="point",
            x={"field": "x", "type": "quantitative"},
            y={"field": "y", "type": "quantitative"},
            color={"field": "g", "type": "nominal"},
        )
    )
    rows = ["x,y,g"]
    rng = Rng(7)
    for _ in range(40):
        x, y = rng.uniform(0, 10), rng.uniform(0, 10)
        # two differently-coloured points at the same spot, so whichever
        # draws last owns those pixels
        rows.append(f"{x:.3f},{y:.3f},a")
        rows.append(f"{x:.3f},{y:.3f},b")
    return spec, load_csv("\n".join(rows) + "\n")


# --- single trials ---------------------------------------------------------


def test_identity_trial_passes(mean_bar_spec, three_row_table):
    rec = run_single(
        mean_bar_spec, three_row_table, IdentityRows(), Identity(), PixelCount(0), Rng(0)
    )
    assert rec.passed is True
    assert rec.diff == 0.0


def test_shuffle_invariant_for_aggregated_bar(mean_bar_spec, three_row_table):
    for seed in range(10):
        rec = run_single(
            mean_bar_spec, three_row_table, Shuffle(), Identity(), PixelCount(0), Rng(seed)
        )
        assert rec.passed is True


def test_shuffle_changes_overlapping_scatter():
    # derived oracle: render both possible draw orders explicitly and check
    # the shuffled raster differs from the baseline for a swapping seed
    spec, table = overlap_scatter()
    base = rasterize(compile_scene(spec, table))
    failed = 0
    for seed in range(10):
        rec = run_single(spec, table, Shuffle(), Identity(), PixelCount(0), Rng(seed))
        if not rec.passed:
            failed += 1
    assert failed > 0
    assert pixel_diff(base, base) == 0


def test_not_applicable_for_heights_on_scatter(scatter_spec):
    t = load_csv("x,y\n1,2\n3,4\n")
    rec = run_single(scatter_spec, t, Shuffle(), Identity(), BarHeightOrder(0.0), Rng(0))
    assert rec.passed is None


def test_insight_preserved_trial(mean_bar_spec):
    t = load_csv("cat,val\nX,1\nY,5\n")
    rec = run_single(
        mean_bar_spec, t, IdentityRows(), Identity(), InsightPreserved("Y", "X"), Rng(0)
    )
    assert rec.passed is True
    rec = run_single(
        mean_bar_spec, t, IdentityRows(), Identity(), InsightPreserved("X", "Y"), Rng(0)
    )
    assert rec.passed is False


def test_insight_preserved_unknown_category(mean_bar_spec, three_row_table):
    with pytest.raises(MtvError, match="not present"):
        run_single(
            mean_bar_spec,
            three_row_table,
            IdentityRows(),
            Identity(),
            InsightPreserved("Z", "X"),
            Rng(0),
        )


def test_opacity_relation_via_run_single(mean_bar_spec, three_row_table):
    rec = run_single(
        mean_bar_spec,
        three_row_table,
        IdentityRows(),
        OpacityScale(0.5),
        PixelCount(0, channel_tolerance=1),
        Rng(0),
    )
    assert rec.passed is True


def test_chi2_is_position_blind_on_bar_charts(mean_bar_spec):
    # swapping the two bar values moves pixels around but leaves the colour
    # histogram intact, so chi2 accepts what the strict pixel count rejects
    a = load_csv("cat,val\nX,1\nY,3\n")
    b = load_csv("cat,val\nX,3\nY,1\n")
    img_a = rasterize(compile_scene(mean_bar_spec, a))
    img_b = rasterize(compile_scene(mean_bar_spec, b))
    assert pixel_diff(img_a, img_b) > 0
    assert chi2_histogram_distance(img_a, img_b) == 0.0


# --- bar_order_equal -------------------------------------------------------


def test_bar_order_equal_examples():
    assert bar_order_equal([("X", 2.0), ("Y", 2.0000001)], [("X", 3.0), ("Y", 2.0)], 1e-3)
    assert not bar_order_equal([("X", 1.0), ("Y", 2.0)], [("X", 3.0), ("Y", 2.0)], 1e-3)
    assert bar_order_equal([("X", 1.0), ("Y", 2.0)], [("X", 1.5), ("Y", 2.5)], 0.0)
    # a tie on either side is compatible with any order
    assert bar_order_equal([("X", 2.0), ("Y", 2.0)], [("X", 9.0), ("Y", 0.0)], 0.0)


def test_bar_order_equal_category_mismatch():
    with pytest.raises(MtvError, match="category sets differ"):
        bar_order_equal([("X", 1.0)], [("Y", 1.0)], 0.0)


def test_bar_order_equal_three_categories():
    a = [("A", 1.0), ("B", 2.0), ("C", 3.0)]
    b = [("A", 10.0), ("B", 20.0), ("C", 30.0)]
    assert bar_order_equal(a, b, 0.0)
    c = [("A", 10.0), ("B", 20.0), ("C", 15.0)]
    assert not bar_order_equal(a, c, 0.0)


@settings(max_examples=100)
@given(
    st.lists(
        st.floats(allow_nan=False, allow_infinity=False, min_value=-100, max_value=100),
        min_size=2,
        max_size=5,
    ),
    st.floats(min_value=0, max_value=10),
    st.floats(min_value=0, max_value=10),
)
def test_bar_order_equal_monotone_in_tolerance(vals, t_small, t_big):
    lo, hi = sorted([t_small, t_big])
    a = [(f"c{i}", v) for i, v in enumerate(vals)]
    b = list(reversed([(f"c{i}", v) for i, v in enumerate(vals)]))
    # widening the tolerance can only turn False into True
    if bar_order_equal(a, b, lo):
        assert bar_order_equal(a, b, hi)


# --- variance --------------------------------------------------------------


def test_variance_identical_trials_zero():
    baseline = [("X", 1.0), ("Y", 4.0)]
    trials = [baseline, baseline, baseline]
    assert variance_of_height_difference(trials, baseline) == 0.0


def test_variance_hand_computed():
    baseline = [("X", 0.0), ("Y", 0.0)]
    trials = [[("X", 0.0), ("Y", 1.0)], [("X", 0.0), ("Y", 3.0)]]
    # diffs {1, 3}: mean 2, sample variance (1 + 1) / 1 = 2
    assert variance_of_height_difference(trials, baseline) == 2.0


def test_variance_requires_two_categories():
    with pytest.raises(MtvError, match="two-category"):
        variance_of_height_difference([[("X", 1.0)]], [("X", 1.0)])


def test_variance_requires_two_trials():
    baseline = [("X", 1.0), ("Y", 2.0)]
    with pytest.raises(MtvError, match="2 trials"):
        variance_of_height_difference([baseline], baseline)


# --- statistical runner ----------------------------------------------------


def test_statistical_shuffle_all_pass(mean_bar_spec, three_row_table):
    cfg = MtvConfig(Shuffle(), Identity(), PixelCount(0), trials=20, seed=5)
    out = run_statistical(cfg, mean_bar_spec, three_row_table)
    assert out.verdict == "pass"
    assert out.pass_fraction == 1.0
    assert len(out.trials) == 20
    assert out.height_diff_variance == 0.0


def test_statistical_not_applicable(scatter_spec):
    t = load_csv("x,y\n1,2\n3,4\n")
    cfg = MtvConfig(Shuffle(), Identity(), BarHeightOrder(0.0), trials=5)
    out = run_statistical(cfg, scatter_spec, t)
    assert out.verdict == "not-applicable"
    assert all(r.passed is None for r in out.trials)


def test_statistical_bootstrap_variance_positive(mean_bar_spec):
    t = load_csv("cat,val\n" + "".join(f"X,{v}\n" for v in range(10)) + "Y,20\nY,40\n")
    cfg = MtvConfig(
        Bootstrap("cat", "val"), Identity(), BarHeightOrder(0.0), trials=30, seed=1
    )
    out = run_statistical(cfg, mean_bar_spec, t)
    assert out.height_diff_variance > 0.0


def test_statistical_reproducible(mean_bar_spec, three_row_table):
    cfg = MtvConfig(
        RandomizeAssignment("cat", "val"), Identity(), BarHeightOrder(0.0), trials=10, seed=3
    )
    a = run_statistical(cfg, mean_bar_spec, three_row_table)
    b = run_statistical(cfg, mean_bar_spec, three_row_table)
    assert a.to_json() == b.to_json()


def test_seed_changes_trial_streams(mean_bar_spec):
    t = load_csv("cat,val\n" + "".join(f"X,{v}\n" for v in range(8)) + "Y,1\nY,9\n")
    outs = set()
    for seed in range(3):
        cfg = MtvConfig(Bootstrap("cat", "val"), Identity(), BarHeightOrder(0.0), trials=10, seed=seed)
        outs.add(run_statistical(cfg, mean_bar_spec, t).to_json())
    assert len(outs) == 3


def test_outcome_json_schema(mean_bar_spec, three_row_table):
    cfg = MtvConfig(Shuffle(), Identity(), BarHeightOrder(0.0), trials=3, seed=0)
    out = run_statistical(cfg, mean_bar_spec, three_row_table)
    doc = json.loads(out.to_json())
    assert doc["morphism"] == "shuffle"
    assert doc["visual_morphism"] == "identity"
    assert doc["eq"] == "BarHeightOrder"
    assert doc["trials"] == 3
    assert len(doc["per_trial"]) == 3
    assert all(t["pass"] is True for t in doc["per_trial"])


def test_config_validation():
    with pytest.raises(MtvError):
        MtvConfig(Shuffle(), Identity(), PixelCount(0), trials=0)
    with pytest.raises(MtvError):
        MtvConfig(Shuffle(), Identity(), PixelCount(0), pass_threshold=1.5)
    with pytest.raises(MtvError):
        PixelCount(-1)


# --- helpers ---------------------------------------------------------------


def test_compute_heights_matches_scene_path(mean_bar_spec):
    for csv in (
        "cat,val\nX,1\nX,3\nY,2\n",
        "cat,val\nB,5\nA,1\nA,2\nC,9\n",
        "cat,val\nX,1\nY,\n",
    ):
        t = load_csv(csv)
        assert compute_heights(mean_bar_spec, t) == bar_heights(
            compile_scene(mean_bar_spec, t)
        )


def test_render_overlay_single_scene(mean_bar_spec, three_row_table):
    scene = compile_scene(mean_bar_spec, three_row_table)
    assert render_overlay([scene], 1.0).pixels == rasterize(scene).pixels


def test_render_overlay_accumulates_layers(mean_bar_spec, three_row_table):
    scene = compile_scene(mean_bar_spec, three_row_table)
    one = render_overlay([scene], 0.4)
    two = render_overlay([scene, scene], 0.4)
    assert one.pixels != two.pixels


def test_render_overlay_requires_scene():
    with pytest.raises(MtvError):
        render_overlay([], 0.5)
