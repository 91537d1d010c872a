"""Synthetic scenario generation and the desk-scale simulation harness.

The grid is 4 manipulations x 5 effect levels x 30 replicates = 600
two-group datasets, each a pair of Gaussian samples visualized as a
two-bar chart of means. The grouped metamorphic tests run on every cell
and the summary reports the spread of the bar-height-difference variance.
"""

from __future__ import annotations

import io
import csv
from dataclasses import dataclass

from .chartspec import ChartSpec, Encoding
from .data import Table, table_from_rows
from .morphisms import Bootstrap, ContractRecords, Identity, RandomizeAssignment, Rng, derive_seed
from .mtv import BarHeightOrder, MtvConfig, run_statistical

MANIPULATIONS = ("mean", "sample_size", "outliers", "variance")
TESTS = ("bootstrap", "contract", "randomize")
N_EFFECTS = 5
N_REPLICATES = 30

BASE_N = 50
BASE_MU = 50.0
BASE_SIGMA = 10.0

# Effect levels 1..5, negligible to severe. For sample size, a higher effect
# index means fewer points (under-sampling).
MEAN_LEVELS = (50.0, 55.0, 60.0, 65.0, 70.0)
SAMPLE_SIZE_LEVELS = (50, 35, 25, 15, 8)
OUTLIER_COUNT_LEVELS = (1, 2, 4, 8, 16)
SIGMA_LEVELS = (10.0, 15.0, 20.0, 25.0, 30.0)


class SimError(ValueError):
    pass


@dataclass(frozen=True)
class SimScenario:
    manipulation: str
    effect_index: int  # 1..5
    replicate: int  # 1..30
    seed: int

    def __post_init__(self):
        if self.manipulation not in MANIPULATIONS:
            raise SimError(f"unknown manipulation '{self.manipulation}'")
        if not 1 <= self.effect_index <= N_EFFECTS:
            raise SimError(f"effect index {self.effect_index} out of range")
        if not 1 <= self.replicate <= N_REPLICATES:
            raise SimError(f"replicate {self.replicate} out of range")


@dataclass(frozen=True)
class SimResultCell:
    scenario: SimScenario
    stats: dict  # test name -> {"height_diff_variance", "pass_fraction"}


def two_bar_mean_spec(width: int = 400, height: int = 300) -> ChartSpec:
    return ChartSpec(
        mark="bar",
        encodings={
            "x": Encoding("category", "nominal"),
            "y": Encoding("value", "quantitative", "mean"),
        },
        width=width,
        height=height,
    )


def _two_group_table(x_values: list[float], y_values: list[float]) -> Table:
    rows = [("X", float(v)) for v in x_values] + [("Y", float(v)) for v in y_values]
    return table_from_rows(["category", "value"], rows)


def generate_baseline(rng: Rng) -> Table:
    """Two Gaussian groups, 50 rows each, N(50, 10^2), X rows then Y rows."""
    xs = [rng.gauss(BASE_MU, BASE_SIGMA) for _ in range(BASE_N)]
    ys = [rng.gauss(BASE_MU, BASE_SIGMA) for _ in range(BASE_N)]
    return _two_group_table(xs, ys)


def quartiles(values: list[float]) -> tuple[float, float, float]:
    """Q1, median, Q3 by linear interpolation between order statistics
    (type-7)."""
    if not values:
        raise SimError("quartiles of an empty list")
    xs = sorted(values)
    n = len(xs)

    def q(p: float) -> float:
        h = (n - 1) * p
        lo = int(h)
        hi = min(lo + 1, n - 1)
        return xs[lo] + (h - lo) * (xs[hi] - xs[lo])

    return q(0.25), q(0.5), q(0.75)


def generate_scenario(scenario: SimScenario) -> Table:
    """Baseline with Y's generator altered per the manipulation and level."""
    rng = Rng(scenario.seed)
    level = scenario.effect_index - 1
    xs = [rng.gauss(BASE_MU, BASE_SIGMA) for _ in range(BASE_N)]
    if scenario.manipulation == "mean":
        ys = [rng.gauss(MEAN_LEVELS[level], BASE_SIGMA) for _ in range(BASE_N)]
    elif scenario.manipulation == "sample_size":
        ys = [
            rng.gauss(BASE_MU, BASE_SIGMA)
            for _ in range(SAMPLE_SIZE_LEVELS[level])
        ]
    elif scenario.manipulation == "variance":
        ys = [rng.gauss(BASE_MU, SIGMA_LEVELS[level]) for _ in range(BASE_N)]
    else:  # outliers
        ys = [rng.gauss(BASE_MU, BASE_SIGMA) for _ in range(BASE_N)]
        q1, _, q3 = quartiles(ys)
        iqr = q3 - q1
        lo, hi = 1.5 * iqr + q3, 3.0 * iqr + q3
        ys = ys + [rng.uniform(lo, hi) for _ in range(OUTLIER_COUNT_LEVELS[level])]
    return _two_group_table(xs, ys)


def _alpha_for(test: str):
    if test == "bootstrap":
        return Bootstrap("category", "value")
    if test == "contract":
        return ContractRecords("category", "value")
    if test == "randomize":
        return RandomizeAssignment("category", "value")
    raise SimError(f"unknown test '{test}'")


def run_experiment(master_seed: int, trials_per_test: int = 100) -> list[SimResultCell]:
    """Run the full 600-cell grid; fully deterministic given the master seed.

    Each cell runs the bootstrap, contract, and randomize tests (shuffle is
    excluded: aggregation makes it height-invariant by construction).
    """
    spec = two_bar_mean_spec()
    cells = []
    index = 0
    for manipulation in MANIPULATIONS:
        for effect in range(1, N_EFFECTS + 1):
            for replicate in range(1, N_REPLICATES + 1):
                scenario = SimScenario(
                    manipulation,
                    effect,
                    replicate,
                    derive_seed(master_seed, index, "scenario"),
                )
                table = generate_scenario(scenario)
                stats = {}
                for test in TESTS:
                    config = MtvConfig(
                        alpha=_alpha_for(test),
                        omega=Identity(),
                        eq=BarHeightOrder(0.0),
                        trials=trials_per_test,
                        seed=derive_seed(master_seed, index, f"run-{test}"),
                    )
                    outcome = run_statistical(config, spec, table)
                    stats[test] = {
                        "height_diff_variance": outcome.height_diff_variance,
                        "pass_fraction": outcome.pass_fraction,
                    }
                cells.append(SimResultCell(scenario, stats))
                index += 1
    return cells


@dataclass(frozen=True)
class SummaryRow:
    manipulation: str
    test: str
    effect_index: int
    median_var: float
    q1: float
    q3: float
    min: float
    max: float
    n_replicates: int


def summarize(cells: list[SimResultCell]) -> list[SummaryRow]:
    """Per (manipulation, test, effect level): spread of the height-diff
    variance over the replicates. Requires the complete grid."""
    by_key: dict[tuple[str, int], list[SimResultCell]] = {}
    for cell in cells:
        key = (cell.scenario.manipulation, cell.scenario.effect_index)
        by_key.setdefault(key, []).append(cell)
    missing = []
    for manipulation in MANIPULATIONS:
        for effect in range(1, N_EFFECTS + 1):
            group = by_key.get((manipulation, effect), [])
            reps = {c.scenario.replicate for c in group}
            for r in range(1, N_REPLICATES + 1):
                if r not in reps:
                    missing.append(f"{manipulation}/effect={effect}/replicate={r}")
    if missing:
        raise SimError("incomplete grid, missing cells: " + ", ".join(missing[:10]))

    rows = []
    for manipulation in MANIPULATIONS:
        for test in TESTS:
            for effect in range(1, N_EFFECTS + 1):
                group = sorted(
                    by_key[(manipulation, effect)], key=lambda c: c.scenario.replicate
                )
                variances = [c.stats[test]["height_diff_variance"] for c in group]
                q1, median, q3 = quartiles(variances)
                rows.append(
                    SummaryRow(
                        manipulation,
                        test,
                        effect,
                        median,
                        q1,
                        q3,
                        min(variances),
                        max(variances),
                        len(variances),
                    )
                )
    return rows


def summary_csv(rows: list[SummaryRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["manipulation", "test", "effect_index", "median_var", "q1", "q3", "min", "max", "n_replicates"]
    )
    for r in rows:
        writer.writerow(
            [
                r.manipulation,
                r.test,
                r.effect_index,
                repr(r.median_var),
                repr(r.q1),
                repr(r.q3),
                repr(r.min),
                repr(r.max),
                r.n_replicates,
            ]
        )
    return buf.getvalue()


def _ranks(values: list[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def spearman(xs: list[float], ys: list[float]) -> float:
    """Spearman rank correlation with average ranks for ties."""
    if len(xs) != len(ys) or len(xs) < 2:
        raise SimError("spearman needs two equal-length lists of >= 2 values")
    rx, ry = _ranks(list(xs)), _ranks(list(ys))
    mx = sum(rx) / len(rx)
    my = sum(ry) / len(ry)
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = sum((a - mx) ** 2 for a in rx)
    vy = sum((b - my) ** 2 for b in ry)
    if vx == 0 or vy == 0:
        return 0.0
    return cov / (vx * vy) ** 0.5


# Focal (manipulation, test) pairs whose median variance should rise with
# the effect level.
FOCAL_TRENDS = (
    ("variance", "bootstrap"),
    ("outliers", "bootstrap"),
    ("sample_size", "contract"),
    ("mean", "randomize"),
)


def trend_correlations(rows: list[SummaryRow]) -> dict[tuple[str, str], float]:
    """Spearman rho of median variance vs effect level for each focal pair."""
    out = {}
    for manipulation, test in FOCAL_TRENDS:
        medians = [
            r.median_var
            for r in rows
            if r.manipulation == manipulation and r.test == test
        ]
        out[(manipulation, test)] = spearman(
            [float(e) for e in range(1, len(medians) + 1)], medians
        )
    return out


# ---------------------------------------------------------------------------
# Quartet fixtures: four datasets whose mean-aggregated two-bar charts are
# pixel-identical (X mean 50, Y mean 60 in each) but whose distributions
# differ: clean separation, single-outlier-driven, one repeated value, and
# a severe group-size mismatch.


def _shift_to_mean(values: list[float], target: float) -> list[float]:
    mean = sum(values) / len(values)
    return [v - mean + target for v in values]


def generate_quartet(seed: int) -> dict[str, Table]:
    rng = Rng(seed)

    def gaussians(n: int, mu: float, sigma: float) -> list[float]:
        return [rng.gauss(mu, sigma) for _ in range(n)]

    quartet = {}
    # A: two clean Gaussians with separated means
    quartet["A"] = _two_group_table(
        _shift_to_mean(gaussians(20, 50, 3), 50.0),
        _shift_to_mean(gaussians(20, 60, 3), 60.0),
    )
    # B: a single large outlier drives the whole difference
    x = _shift_to_mean(gaussians(20, 50, 3), 50.0)
    y_bulk = _shift_to_mean(gaussians(19, 50, 3), 50.0)
    outlier = 20 * 60.0 - sum(y_bulk)
    quartet["B"] = _two_group_table(x, y_bulk + [outlier])
    # C: one value repeated dozens of times
    quartet["C"] = _two_group_table(
        _shift_to_mean(gaussians(20, 50, 3), 50.0), [60.0] * 20
    )
    # D: severe group-size mismatch, tiny high-variance group
    quartet["D"] = _two_group_table(
        _shift_to_mean(gaussians(50, 50, 3), 50.0),
        _shift_to_mean(gaussians(3, 60, 30), 60.0),
    )
    return quartet
