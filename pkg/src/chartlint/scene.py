"""Scene compilation: (ChartSpec, Table) -> positioned marks with provenance.

Grouping, aggregation, scale resolution, and pixel layout all happen here.
Every mark records which input rows produced it (backward provenance), which
is what lets the grouped morphisms resample exactly the rows behind a bar.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .data import Table, Value, column_values, value_text

# Fixed 10-color palette, assigned in category sort order.
PALETTE = (
    (31, 119, 180, 255),
    (255, 127, 14, 255),
    (44, 160, 44, 255),
    (214, 39, 40, 255),
    (148, 103, 189, 255),
    (140, 86, 75, 255),
    (227, 119, 194, 255),
    (127, 127, 127, 255),
    (188, 189, 34, 255),
    (23, 190, 207, 255),
)
DEFAULT_COLOR = (70, 130, 180, 255)

POINT_RADIUS = 4.0
BAND_PADDING = 0.1  # fraction of band width on each side

NULL_CATEGORY_LABEL = "⟨null⟩"


class SceneError(ValueError):
    pass


@dataclass(frozen=True)
class GroupSummary:
    category: Value
    value: float | None  # None when the aggregate is degenerate
    provenance: tuple[int, ...]
    record_count: int
    degenerate: bool = False


@dataclass(frozen=True)
class Mark:
    kind: str  # "bar" | "point" | "line-segment"
    geometry: tuple[float, ...]  # rect: x0,y0,x1,y1; circle: cx,cy,r; segment: x0,y0,x1,y1
    color: tuple[int, int, int, int]
    opacity: float
    provenance: tuple[int, ...]
    draw_order: int


@dataclass(frozen=True)
class SceneGraph:
    width: int
    height: int
    mark_kind: str
    aggregated: bool
    marks: tuple[Mark, ...]
    groups: tuple[GroupSummary, ...]
    x_domain: tuple[float, float] | None  # None for a nominal axis
    y_domain: tuple[float, float] | None
    categories: tuple[Value, ...] = ()  # band order of the nominal axis


def _sort_key(v: Value):
    return value_text(v)


def _aggregate_value(aggregate: str, cells: list[Value]) -> float | None:
    numbers = [c for c in cells if isinstance(c, float) and not isinstance(c, bool)]
    if aggregate == "count":
        return float(len(cells))
    if not numbers:
        return None
    if aggregate == "sum":
        return float(sum(numbers))
    if aggregate == "mean":
        return float(sum(numbers)) / len(numbers)
    if aggregate == "min":
        return min(numbers)
    if aggregate == "max":
        return max(numbers)
    raise SceneError(f"unknown aggregate '{aggregate}'")


def group_indices(table: Table, category_field: str) -> list[tuple[Value, list[int]]]:
    """Row indices per distinct category, in category-ascending order.

    A Null category forms its own group rather than being dropped.
    """
    cat_idx = table.column_index(category_field)
    by_key: dict[str, tuple[Value, list[int]]] = {}
    for i, row in enumerate(table.rows):
        key = value_text(row[cat_idx])
        if key not in by_key:
            by_key[key] = (row[cat_idx], [])
        by_key[key][1].append(i)
    return [by_key[k] for k in sorted(by_key)]


def aggregate_groups(
    table: Table,
    category_field: str,
    value_field: str,
    aggregate: str,
    sort: str = "by-category-ascending",
) -> list[GroupSummary]:
    """One GroupSummary per distinct category, ordered per the sort rule."""
    val_idx = table.column_index(value_field)
    groups = []
    for category, indices in group_indices(table, category_field):
        cells = [table.rows[i][val_idx] for i in indices]
        value = _aggregate_value(aggregate, cells)
        groups.append(
            GroupSummary(
                category=category,
                value=value,
                provenance=tuple(indices),
                record_count=len(indices),
                degenerate=value is None,
            )
        )
    if sort == "by-value-descending":
        groups.sort(
            key=lambda g: (
                -(g.value if g.value is not None else float("-inf")),
                _sort_key(g.category),
            )
        )
    elif sort == "none":
        groups.sort(key=lambda g: min(g.provenance))
    # "by-category-ascending" is the order group_indices already produced
    return groups


def _domain(values: list[float], zero: bool) -> tuple[float, float]:
    if not values:
        return (0.0, 1.0)
    lo, hi = min(values), max(values)
    if zero:
        lo, hi = min(0.0, lo), max(0.0, hi)
        if lo == hi:
            return (lo - 1.0, hi + 1.0)
        return (lo, hi)
    if lo == hi:
        return (lo - 1.0, hi + 1.0)
    pad = 0.05 * (hi - lo)
    return (lo - pad, hi + pad)


def _numbers(cells: list[Value]) -> list[float]:
    return [c for c in cells if isinstance(c, float) and not isinstance(c, bool)]


class _ColorMap:
    def __init__(self, spec, table: Table):
        self.enc = spec.color
        self.values: dict[str, tuple[int, int, int, int]] = {}
        self.domain: tuple[float, float] | None = None
        if self.enc is None:
            return
        cells = column_values(table, self.enc.field)
        if self.enc.field_type == "nominal":
            distinct = sorted({value_text(c) for c in cells})
            for i, key in enumerate(distinct):
                self.values[key] = PALETTE[i % len(PALETTE)]
        else:
            self.domain = _domain(_numbers(cells), zero=False)

    def color_for(self, cell: Value) -> tuple[int, int, int, int]:
        if self.enc is None:
            return DEFAULT_COLOR
        if self.enc.field_type == "nominal":
            return self.values.get(value_text(cell), DEFAULT_COLOR)
        if not isinstance(cell, float) or isinstance(cell, bool):
            return DEFAULT_COLOR
        lo, hi = self.domain
        t = 0.0 if hi == lo else (cell - lo) / (hi - lo)
        t = min(1.0, max(0.0, t))
        # light-to-dark blue ramp
        r = round(198 - t * (198 - 8))
        g = round(219 - t * (219 - 48))
        b = round(239 - t * (239 - 107))
        return (r, g, b, 255)


def compile_scene(spec, table: Table) -> SceneGraph:
    """Compile a validated (spec, table) pair into a deterministic SceneGraph.

    Aggregated bars get one mark per group; unaggregated charts get one mark
    per row with draw order equal to row order, so overplotting is sensitive
    to row order exactly as rendered.
    """
    if spec.aggregated:
        return _compile_aggregated(spec, table)
    return _compile_unaggregated(spec, table)


def _band_layout(width: int, k: int) -> list[tuple[float, float, float]]:
    """Per-band (x0, x1, center) spans with inner padding."""
    bands = []
    for i in range(k):
        b0 = width * i / k
        b1 = width * (i + 1) / k
        pad = BAND_PADDING * (b1 - b0)
        bands.append((b0 + pad, b1 - pad, (b0 + b1) / 2))
    return bands


def _py(v: float, domain: tuple[float, float], height: int) -> float:
    lo, hi = domain
    return (1.0 - (v - lo) / (hi - lo)) * height


def _px(v: float, domain: tuple[float, float], width: int) -> float:
    lo, hi = domain
    return (v - lo) / (hi - lo) * width


def _baseline(domain: tuple[float, float]) -> float:
    lo, hi = domain
    return min(max(0.0, lo), hi)


def _compile_aggregated(spec, table: Table) -> SceneGraph:
    groups = aggregate_groups(
        table, spec.x.field, spec.y.field, spec.y.aggregate, spec.sort
    )
    values = [g.value for g in groups if g.value is not None]
    y_domain = _domain(values, spec.y.scale_zero)
    categories = tuple(g.category for g in groups)
    bands = _band_layout(spec.width, len(groups))
    colors = _ColorMap(spec, table)
    cat_idx = table.column_index(spec.x.field)

    marks = []
    order = 0
    for g, (x0, x1, center) in zip(groups, bands):
        if g.value is None:
            continue
        color_cell = None
        if colors.enc is not None and g.provenance:
            color_cell = table.rows[g.provenance[0]][
                table.column_index(colors.enc.field)
            ]
        color = colors.color_for(color_cell)
        yv = _py(g.value, y_domain, spec.height)
        yb = _py(_baseline(y_domain), y_domain, spec.height)
        y0, y1 = min(yv, yb), max(yv, yb)
        if spec.mark == "bar":
            marks.append(
                Mark("bar", (x0, y0, x1, y1), color, spec.opacity, g.provenance, order)
            )
        elif spec.mark == "point":
            marks.append(
                Mark(
                    "point",
                    (center, yv, POINT_RADIUS),
                    color,
                    spec.opacity,
                    g.provenance,
                    order,
                )
            )
        order += 1
    if spec.mark == "line":
        pts = [
            (bands[i][2], _py(g.value, y_domain, spec.height), g.provenance)
            for i, g in enumerate(groups)
            if g.value is not None
        ]
        for i in range(len(pts) - 1):
            (ax, ay, aprov), (bx, by, bprov) = pts[i], pts[i + 1]
            marks.append(
                Mark(
                    "line-segment",
                    (ax, ay, bx, by),
                    DEFAULT_COLOR,
                    spec.opacity,
                    tuple(aprov) + tuple(bprov),
                    i,
                )
            )
    return SceneGraph(
        width=spec.width,
        height=spec.height,
        mark_kind=spec.mark,
        aggregated=True,
        marks=tuple(marks),
        groups=tuple(groups),
        x_domain=None,
        y_domain=y_domain,
        categories=categories,
    )


def _compile_unaggregated(spec, table: Table) -> SceneGraph:
    x_enc, y_enc = spec.x, spec.y
    x_cells = column_values(table, x_enc.field)
    y_cells = column_values(table, y_enc.field)
    colors = _ColorMap(spec, table)
    color_cells = (
        column_values(table, colors.enc.field) if colors.enc is not None else None
    )

    x_domain = None
    categories: tuple[Value, ...] = ()
    if x_enc.field_type == "nominal":
        categories = tuple(cat for cat, _ in group_indices(table, x_enc.field))
        bands = _band_layout(spec.width, len(categories))
        band_by_key = {value_text(c): bands[i] for i, c in enumerate(categories)}
    else:
        x_domain = _domain(_numbers(x_cells), x_enc.scale_zero)

    if y_enc.field_type != "quantitative":
        raise SceneError("y channel must be quantitative for unaggregated charts")
    y_domain = _domain(_numbers(y_cells), y_enc.scale_zero)

    # One drawable (x-band-or-position, y-pixel) per row with a usable y cell.
    points: list[tuple[int, float, float, tuple[float, float]]] = []
    for i in range(table.num_rows):
        yv = y_cells[i]
        if not isinstance(yv, float) or isinstance(yv, bool):
            continue
        if x_enc.field_type == "nominal":
            band = band_by_key[value_text(x_cells[i])]
            xpos = band[2]
            span = (band[0], band[1])
        else:
            xv = x_cells[i]
            if not isinstance(xv, float) or isinstance(xv, bool):
                continue
            xpos = _px(xv, x_domain, spec.width)
            span = (xpos, xpos)
        points.append((i, xpos, _py(yv, y_domain, spec.height), span))

    marks = []
    if spec.mark == "line":
        for j in range(len(points) - 1):
            i0, x0, y0, _ = points[j]
            i1, x1, y1, _ = points[j + 1]
            marks.append(
                Mark("line-segment", (x0, y0, x1, y1), DEFAULT_COLOR, spec.opacity, (i0, i1), j)
            )
    else:
        yb = _py(_baseline(y_domain), y_domain, spec.height)
        for i, xpos, ypix, span in points:
            color = colors.color_for(color_cells[i]) if color_cells is not None else DEFAULT_COLOR
            if spec.mark == "bar":
                y0, y1 = min(ypix, yb), max(ypix, yb)
                geometry = (span[0], y0, span[1], y1)
                marks.append(Mark("bar", geometry, color, spec.opacity, (i,), i))
            else:
                marks.append(
                    Mark("point", (xpos, ypix, POINT_RADIUS), color, spec.opacity, (i,), i)
                )
    return SceneGraph(
        width=spec.width,
        height=spec.height,
        mark_kind=spec.mark,
        aggregated=False,
        marks=tuple(marks),
        groups=(),
        x_domain=x_domain,
        y_domain=y_domain,
        categories=categories,
    )


def bar_heights(scene: SceneGraph) -> list[tuple[Value, float]]:
    """Per-category aggregated values, in scene group order, in data units."""
    if not (scene.mark_kind == "bar" and scene.aggregated):
        raise SceneError("bar_heights requires aggregated bar chart")
    return [(g.category, g.value) for g in scene.groups if not g.degenerate]


def scene_to_dict(scene: SceneGraph) -> dict:
    """Debug dump; not a stability-guaranteed format."""
    return {
        "width": scene.width,
        "height": scene.height,
        "mark": scene.mark_kind,
        "aggregated": scene.aggregated,
        "x_domain": scene.x_domain,
        "y_domain": scene.y_domain,
        "categories": [value_text(c) for c in scene.categories],
        "marks": [
            {
                "kind": m.kind,
                "geometry": list(m.geometry),
                "color": list(m.color),
                "opacity": m.opacity,
                "provenance": list(m.provenance),
                "draw_order": m.draw_order,
            }
            for m in scene.marks
        ],
        "groups": [
            {
                "category": value_text(g.category),
                "value": g.value,
                "provenance": list(g.provenance),
                "record_count": g.record_count,
                "degenerate": g.degenerate,
            }
            for g in scene.groups
        ],
    }
