"""chartlint: a metamorphic-testing linter for declarative charts."""

__version__ = "0.1.0"

from .data import Table, TableError, load_csv, load_json_rows, select_rows, column_values, to_csv
from .chartspec import ChartSpec, Encoding, SpecError, parse_spec, validate_spec
from .scene import SceneGraph, aggregate_groups, bar_heights, compile_scene
from .raster import (
    RasterImage,
    blend_toward_background,
    chi2_histogram_distance,
    pixel_diff,
    rasterize,
    write_ppm,
)
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
    Chi2Histogram,
    InsightPreserved,
    MtvConfig,
    MtvOutcome,
    PixelCount,
    bar_order_equal,
    render_overlay,
    run_single,
    run_statistical,
    variance_of_height_difference,
)
from .cli import LintConfig, lint_chart
