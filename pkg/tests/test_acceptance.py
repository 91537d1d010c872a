"""End-to-end acceptance gate.

Each test covers one release criterion and prints a single pass/fail line
with its pinned tolerances. Run with -s (or read the captured output) to
see the lines.
"""

import itertools
import json
import statistics
import time

import pytest

from chartlint import load_csv, parse_spec
from chartlint.data import table_from_rows, value_text
from chartlint.morphisms import (
    Bootstrap,
    ContractRecords,
    Identity,
    IdentityRows,
    OpacityScale,
    RandomizeAssignment,
    Rng,
    Shuffle,
    bootstrap_groups,
    contract_groups,
    derive_seed,
    randomize_assignment,
    shuffle_rows,
)
from chartlint.mtv import (
    InsightPreserved,
    MtvConfig,
    PixelCount,
    run_single,
    run_statistical,
)
from chartlint.raster import rasterize, write_ppm
from chartlint.scene import compile_scene
from chartlint.simlab import (
    generate_quartet,
    quartiles,
    run_experiment,
    summarize,
    summary_csv,
    trend_correlations,
    two_bar_mean_spec,
)

from conftest import spec_json


def report(criterion, ok, detail):
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} — {detail}"
    print(line)
    assert ok, line


def make_spec(**kw):
    return parse_spec(spec_json(**kw))


# --- fixture corpus --------------------------------------------------------

QUANT_X = {"field": "x", "type": "quantitative"}
QUANT_Y = {"field": "y", "type": "quantitative"}


def fixture_corpus():
    """Twelve (spec, table) pairs: bar/point/line, aggregated and not."""
    pairs = []
    bar_csv = "cat,val\nA,1\nB,5\nA,3\nC,2\n"
    for aggregate in ("mean", "sum", "count", "min", "max"):
        pairs.append(
            (
                make_spec(y={"field": "val", "type": "quantitative", "aggregate": aggregate}),
                load_csv(bar_csv),
            )
        )
    pairs.append((make_spec(y={"field": "val", "type": "quantitative"}), load_csv(bar_csv)))
    pairs.append((make_spec(mark="point", x=QUANT_X, y=QUANT_Y), load_csv("x,y\n1,2\n5,9\n3,4\n")))
    pairs.append(
        (
            make_spec(mark="point", x=QUANT_X, y=QUANT_Y, color={"field": "g", "type": "nominal"}),
            load_csv("x,y,g\n1,2,a\n5,9,b\n3,4,a\n"),
        )
    )
    pairs.append((make_spec(mark="line", x=QUANT_X, y=QUANT_Y), load_csv("x,y\n0,0\n1,3\n2,1\n3,4\n")))
    pairs.append(
        (
            make_spec(mark="point", x={"field": "cat", "type": "nominal"}, y=QUANT_Y),
            load_csv("cat,y\nA,1\nB,2\nA,3\n"),
        )
    )
    pairs.append((make_spec(sort="by-value-descending"), load_csv(bar_csv)))
    pairs.append((make_spec(opacity=0.5), load_csv(bar_csv)))
    return pairs


def overlap_scatter_fixture():
    """Opaque coincident points in two colours: draw order decides pixels."""
    spec = make_spec(
        mark="point",
        x=QUANT_X,
        y=QUANT_Y,
        color={"field": "g", "type": "nominal"},
    )
    rows = ["x,y,g"]
    rng = Rng(7)
    for _ in range(40):
        x, y = rng.uniform(0, 10), rng.uniform(0, 10)
        rows.append(f"{x:.3f},{y:.3f},a")
        rows.append(f"{x:.3f},{y:.3f},b")
    return spec, load_csv("\n".join(rows) + "\n")


# --- criteria --------------------------------------------------------------


def test_criterion_1_identity_soundness():
    start = time.monotonic()
    corpus = fixture_corpus()
    passes = 0
    for spec, table in corpus:
        rec = run_single(spec, table, IdentityRows(), Identity(), PixelCount(0), Rng(0))
        passes += bool(rec.passed)
    elapsed = time.monotonic() - start
    ok = passes == len(corpus) >= 10 and elapsed < 5.0
    report(1, ok, f"identity passed {passes}/{len(corpus)} fixtures in {elapsed:.2f}s (<5s)")


def test_criterion_2_shuffle_correctness():
    start = time.monotonic()
    agg_spec = make_spec()
    agg_table = load_csv("cat,val\nA,1\nB,5\nA,3\nC,2\nB,4\n")
    agg = run_statistical(
        MtvConfig(Shuffle(), Identity(), PixelCount(0), trials=100, seed=0),
        agg_spec,
        agg_table,
    )
    spec, table = overlap_scatter_fixture()
    overlap = run_statistical(
        MtvConfig(Shuffle(), Identity(), PixelCount(0), trials=100, seed=0), spec, table
    )
    elapsed = time.monotonic() - start
    ok = agg.pass_fraction == 1.0 and overlap.pass_fraction <= 0.6 and elapsed < 30.0
    report(
        2,
        ok,
        f"aggregated bar pass-fraction {agg.pass_fraction} (==1.0), overlap scatter "
        f"{overlap.pass_fraction} (<=0.6), N=100, {elapsed:.1f}s (<30s)",
    )


def test_criterion_3_opacity_relation():
    clean_spec = make_spec()
    clean = run_single(
        clean_spec,
        load_csv("cat,val\nA,2\nB,5\n"),
        IdentityRows(),
        OpacityScale(0.5),
        PixelCount(0, channel_tolerance=1),
        Rng(0),
    )
    # unaggregated bar: every row draws a full bar at the same x slot, so
    # same-category rows stack in the same pixels
    overdraw_spec = make_spec(y={"field": "val", "type": "quantitative"}, opacity=0.8)
    overdraw = run_single(
        overdraw_spec,
        load_csv("cat,val\nA,5\nA,3\nB,4\nB,2\n"),
        IdentityRows(),
        OpacityScale(0.5),
        PixelCount(0, channel_tolerance=1),
        Rng(0),
    )
    ok = clean.passed is True and overdraw.passed is False
    report(
        3,
        ok,
        f"no-overlap chart passes (diff {clean.diff:.0f}) and overdrawn unaggregated "
        f"bar fails (diff {overdraw.diff:.0f}) at +/-1 channel tolerance",
    )


def test_criterion_4_quartet_discrimination():
    start = time.monotonic()
    spec = two_bar_mean_spec()
    eq = InsightPreserved("Y", "X")
    wins_ab = wins_ad = 0
    c_fractions = []
    seeds = range(10)
    for master in seeds:
        quartet = generate_quartet(master)
        fractions = {}
        for name in ("A", "B", "C", "D"):
            out = run_statistical(
                MtvConfig(
                    Bootstrap("category", "value"), Identity(), eq, trials=100, seed=master
                ),
                spec,
                quartet[name],
            )
            fractions[name] = out.pass_fraction
        wins_ab += fractions["A"] > fractions["B"]
        wins_ad += fractions["A"] > fractions["D"]
        c_fractions.append(fractions["C"])
    elapsed = time.monotonic() - start
    ok = wins_ab >= 9 and wins_ad >= 9 and all(f == 1.0 for f in c_fractions) and elapsed < 60.0
    report(
        4,
        ok,
        f"A>B in {wins_ab}/10 seeds, A>D in {wins_ad}/10 (both >=9), C stability "
        f"{min(c_fractions)}..{max(c_fractions)} (==1.0), N=100, {elapsed:.1f}s (<1min)",
    )


def test_criterion_5_simulation_trends():
    start = time.monotonic()
    rho_full = trend_correlations(summarize(run_experiment(0, trials_per_test=100)))
    full_elapsed = time.monotonic() - start
    full_ok = all(r >= 0.8 for r in rho_full.values()) and full_elapsed < 600.0

    reduced_wins = 0
    worst_reduced = None
    for master in range(5):
        t0 = time.monotonic()
        rho = trend_correlations(summarize(run_experiment(master, trials_per_test=25)))
        t1 = time.monotonic() - t0
        if all(r >= 0.8 for r in rho.values()) and t1 < 120.0:
            reduced_wins += 1
        worst_reduced = max(worst_reduced or 0.0, t1)
    ok = full_ok and reduced_wins >= 4
    rho_text = ", ".join(f"{m}/{t}={r:+.2f}" for (m, t), r in rho_full.items())
    report(
        5,
        ok,
        f"full grid N=100 rho>=0.8 for all focal trends ({rho_text}) in "
        f"{full_elapsed:.0f}s (<10min); reduced N=25 satisfied in {reduced_wins}/5 "
        f"seeds (>=4), slowest {worst_reduced:.0f}s (<2min each)",
    )


def random_table(rng):
    n = 1 + rng.randrange(12)
    cats = ["A", "B", "C", None]
    rows = [
        [cats[rng.randrange(len(cats))], float(rng.randrange(11) - 5)] for _ in range(n)
    ]
    return table_from_rows(["cat", "val"], rows)


def test_criterion_6_morphism_properties():
    from collections import Counter

    cases = 0
    for i in range(1_000):
        rng = Rng(derive_seed(0, i, "acceptance-props"))
        t = random_table(rng)
        sizes = Counter(value_text(c) for c, _ in t.rows)

        shuffled = shuffle_rows(t, Rng(i))
        assert shuffled.columns == t.columns
        assert Counter(shuffled.rows) == Counter(t.rows)
        assert shuffled == shuffle_rows(t, Rng(i))

        boot = bootstrap_groups(t, "cat", "val", Rng(i))
        assert Counter(value_text(c) for c, _ in boot.rows) == sizes
        assert all(row in t.rows for row in boot.rows)

        contracted = contract_groups(t, "cat", "val", Rng(i))
        non_null = {k: v for k, v in sizes.items() if k != value_text(None)}
        got = Counter(value_text(c) for c, _ in contracted.rows)
        if non_null:
            m = min(non_null.values())
            assert all(got[k] == m for k in non_null)
        assert not Counter(contracted.rows) - Counter(t.rows)

        randomized = randomize_assignment(t, "cat", "val", Rng(i))
        assert sorted(value_text(c) for c, _ in randomized.rows) == sorted(
            value_text(c) for c, _ in t.rows
        )
        assert sorted(value_text(v) for _, v in randomized.rows) == sorted(
            value_text(v) for _, v in t.rows
        )
        cases += 1

    oracle_cases = 0
    hand = {
        (1.0,): (1.0, 1.0, 1.0),
        (1.0, 2.0): (1.25, 1.5, 1.75),
        (1.0, 2.0, 3.0): (1.5, 2.0, 2.5),
        (1.0, 2.0, 3.0, 4.0): (1.75, 2.5, 3.25),
    }
    for values, expected in hand.items():
        assert quartiles(list(values)) == pytest.approx(expected)
        oracle_cases += 1
    rng = Rng(99)
    for n in range(1, 13):
        for _ in range(100):
            values = [rng.uniform(-50, 50) for _ in range(n)]
            got = quartiles(values)
            if n == 1:
                expected = (values[0],) * 3
            else:
                expected = tuple(statistics.quantiles(values, n=4, method="inclusive"))
            assert got == pytest.approx(expected)
            oracle_cases += 1
    report(
        6,
        cases >= 1_000,
        f"morphism invariants held on {cases} randomized tables (>=1,000); "
        f"quartiles matched the interpolation oracle on {oracle_cases} lists of length <=12",
    )


def test_criterion_7_end_to_end_determinism():
    csv_a = summary_csv(summarize(run_experiment(0, trials_per_test=25)))
    csv_b = summary_csv(summarize(run_experiment(0, trials_per_test=25)))
    spec = two_bar_mean_spec()
    table = generate_quartet(0)["A"]
    ppm_a = write_ppm(rasterize(compile_scene(spec, table)))
    ppm_b = write_ppm(rasterize(compile_scene(spec, table)))
    ok = csv_a == csv_b and ppm_a == ppm_b
    report(
        7,
        ok,
        "equal-seed simulate runs gave byte-identical summary CSV and equal scenes "
        "gave byte-identical PPM",
    )
