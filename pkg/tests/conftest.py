import json

import pytest

from chartlint import load_csv, parse_spec


def spec_json(mark="bar", x=None, y=None, color=None, **extra):
    doc = {"mark": mark, "encoding": {}}
    doc["encoding"]["x"] = x or {"field": "cat", "type": "nominal"}
    doc["encoding"]["y"] = y or {
        "field": "val",
        "type": "quantitative",
        "aggregate": "mean",
    }
    if color is not None:
        doc["encoding"]["color"] = color
    doc.update(extra)
    return json.dumps(doc)


@pytest.fixture
def mean_bar_spec():
    return parse_spec(spec_json())


@pytest.fixture
def three_row_table():
    return load_csv("cat,val\nX,1\nX,3\nY,2\n")


@pytest.fixture
def scatter_spec():
    return parse_spec(
        spec_json(
            mark="point",
            x={"field": "x", "type": "quantitative"},
            y={"field": "y", "type": "quantitative"},
        )
    )
