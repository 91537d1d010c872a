"""Grammar, parser, and validator for the declarative chart specification.

The grammar is a deliberately small subset of the familiar declarative
chart-spec idiom: three marks (bar, point, line), three channels (x, y,
color), six aggregates. Specs are immutable and parsing is pure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .data import Table

MARKS = ("bar", "point", "line")
CHANNELS = ("x", "y", "color")
FIELD_TYPES = ("nominal", "quantitative")
AGGREGATES = ("none", "sum", "mean", "count", "min", "max")
SORTS = ("by-category-ascending", "by-value-descending", "none")

DEFAULT_WIDTH = 400
DEFAULT_HEIGHT = 300


class SpecError(ValueError):
    """Raised when a chart spec cannot be parsed."""


@dataclass(frozen=True)
class Encoding:
    field: str
    field_type: str  # nominal | quantitative
    aggregate: str = "none"
    scale_zero: bool = True


@dataclass(frozen=True)
class ChartSpec:
    mark: str
    encodings: dict[str, Encoding]
    width: int = DEFAULT_WIDTH
    height: int = DEFAULT_HEIGHT
    opacity: float = 1.0
    sort: str = "by-category-ascending"

    @property
    def x(self) -> Encoding:
        return self.encodings["x"]

    @property
    def y(self) -> Encoding:
        return self.encodings["y"]

    @property
    def color(self) -> Encoding | None:
        return self.encodings.get("color")

    @property
    def aggregated(self) -> bool:
        return any(e.aggregate != "none" for e in self.encodings.values())

    @property
    def is_aggregated_bar(self) -> bool:
        return self.mark == "bar" and self.aggregated

    def with_opacity(self, opacity: float) -> "ChartSpec":
        return replace(self, opacity=opacity)


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise SpecError(message)


def _parse_encoding(channel: str, obj: object) -> Encoding:
    path = f"encoding.{channel}"
    _require(isinstance(obj, dict), f"{path}: expected an object")
    allowed = {"field", "type", "aggregate", "scale"}
    for key in obj:
        _require(key in allowed, f"{path}.{key}: unknown key")
    _require("field" in obj, f"{path}: missing 'field'")
    field_name = obj["field"]
    _require(
        isinstance(field_name, str) and field_name != "",
        f"{path}.field: expected a non-empty string",
    )
    _require("type" in obj, f"{path}: missing 'type'")
    ftype = obj["type"]
    _require(ftype in FIELD_TYPES, f"{path}.type: unknown field type '{ftype}'")
    aggregate = obj.get("aggregate", "none")
    _require(
        aggregate in AGGREGATES, f"{path}.aggregate: unknown aggregate '{aggregate}'"
    )
    _require(
        aggregate == "none" or aggregate == "count" or ftype == "quantitative",
        f"{path}.aggregate: '{aggregate}' requires a quantitative field",
    )
    scale_zero = True
    if "scale" in obj:
        scale = obj["scale"]
        _require(isinstance(scale, dict), f"{path}.scale: expected an object")
        for key in scale:
            _require(key == "zero", f"{path}.scale.{key}: unknown key")
        if "zero" in scale:
            _require(
                isinstance(scale["zero"], bool), f"{path}.scale.zero: expected a bool"
            )
            scale_zero = scale["zero"]
    return Encoding(field_name, ftype, aggregate, scale_zero)


def parse_spec(text: str) -> ChartSpec:
    """Parse the JSON wire format into a ChartSpec with defaults applied.

    Strict mode: unknown keys anywhere are an error, and every error names
    the offending path.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"invalid JSON: {exc}") from None
    _require(isinstance(doc, dict), "spec must be a JSON object")
    allowed = {"mark", "encoding", "width", "height", "opacity", "sort"}
    for key in doc:
        _require(key in allowed, f"{key}: unknown key")

    _require("mark" in doc, "missing required key 'mark'")
    mark = doc["mark"]
    _require(mark in MARKS, f"mark: unknown mark '{mark}'")

    _require("encoding" in doc, "missing required key 'encoding'")
    enc_obj = doc["encoding"]
    _require(isinstance(enc_obj, dict), "encoding: expected an object")
    for channel in enc_obj:
        _require(channel in CHANNELS, f"encoding.{channel}: unknown channel")
    for channel in ("x", "y"):
        _require(channel in enc_obj, f"missing required channel {channel}")
    encodings = {ch: _parse_encoding(ch, enc_obj[ch]) for ch in CHANNELS if ch in enc_obj}

    width = doc.get("width", DEFAULT_WIDTH)
    height = doc.get("height", DEFAULT_HEIGHT)
    for name, v in (("width", width), ("height", height)):
        _require(
            isinstance(v, int) and not isinstance(v, bool) and v > 0,
            f"{name}: expected a positive integer",
        )
    opacity = doc.get("opacity", 1.0)
    _require(
        isinstance(opacity, (int, float))
        and not isinstance(opacity, bool)
        and 0 < opacity <= 1,
        "opacity: expected a number in (0, 1]",
    )
    sort = doc.get("sort", "by-category-ascending")
    _require(sort in SORTS, f"sort: unknown sort '{sort}'")

    return ChartSpec(mark, encodings, width, height, float(opacity), sort)


def spec_to_dict(spec: ChartSpec) -> dict:
    encoding = {}
    for channel, enc in spec.encodings.items():
        obj: dict = {"field": enc.field, "type": enc.field_type}
        if enc.aggregate != "none":
            obj["aggregate"] = enc.aggregate
        if not enc.scale_zero:
            obj["scale"] = {"zero": False}
        encoding[channel] = obj
    return {
        "mark": spec.mark,
        "encoding": encoding,
        "width": spec.width,
        "height": spec.height,
        "opacity": spec.opacity,
        "sort": spec.sort,
    }


def spec_to_json(spec: ChartSpec) -> str:
    return json.dumps(spec_to_dict(spec), sort_keys=True)


@dataclass(frozen=True)
class ValidationIssue:
    severity: str  # "error" | "warning"
    message: str


def validate_spec(spec: ChartSpec, table: Table) -> list[ValidationIssue]:
    """Check a spec against a concrete table.

    Returns an empty list iff every encoded field exists with a compatible
    type and all aggregate constraints hold; an empty result guarantees that
    scene compilation cannot fail on this (spec, table) pair.
    """
    issues: list[ValidationIssue] = []
    names = set(table.column_names)
    for channel, enc in spec.encodings.items():
        if enc.field not in names:
            issues.append(
                ValidationIssue(
                    "error", f"encoding.{channel}: field '{enc.field}' not in data"
                )
            )
            continue
        kind = table.column_kind(enc.field)
        if enc.field_type == "quantitative" and enc.aggregate != "count":
            # mixed columns are treated as text: silently coercing them is
            # itself a curation hazard, so they fail quantitative encoding.
            if kind != "number":
                issues.append(
                    ValidationIssue(
                        "error",
                        f"encoding.{channel}: quantitative field '{enc.field}' "
                        f"has {kind}-typed column",
                    )
                )
    if spec.mark == "bar":
        if not (spec.x.field_type == "nominal" and spec.y.field_type == "quantitative"):
            issues.append(
                ValidationIssue(
                    "error",
                    "bar mark requires a nominal x channel and a quantitative y channel",
                )
            )
        elif spec.y.aggregate == "none":
            issues.append(
                ValidationIssue(
                    "warning",
                    "bar mark without an aggregate draws one bar per row; "
                    "repeated categories will overplot",
                )
            )
    return issues


def has_errors(issues: list[ValidationIssue]) -> bool:
    return any(i.severity == "error" for i in issues)
