import pytest

from oscdom.params import Configurable, FloatParam, IntParam


class Widget(Configurable):
    display_name = "Widget"
    params = [
        FloatParam("scale", "Scale", value=1.0, min=0.0, max=4.0),
        IntParam("count", "Count", value=3, min=1),
        IntParam("dim", "Dimension", value=None, min=1, max=2),
    ]


def test_defaults_become_attributes():
    w = Widget()
    assert (w.scale, w.count, w.dim) == (1.0, 3, None)
    assert w.settings() == {"scale": 1.0, "count": 3, "dim": None}


def test_config_values_are_coerced():
    w = Widget({"scale": "2.5", "count": 7.0, "dim": 2})
    assert w.scale == 2.5
    assert w.count == 7 and isinstance(w.count, int)
    assert w.dim == 2


@pytest.mark.parametrize("config", [{"scale": -1.0}, {"scale": 5.0}, {"count": 0}, {"dim": 3}, {"color": "red"}])
def test_invalid_config(config):
    with pytest.raises(ValueError):
        Widget(config)


def test_schema():
    schema = Widget.get_param_schema()
    assert [p["name"] for p in schema] == ["scale", "count", "dim"]
    assert schema[0] == {
        "name": "scale", "type": "float", "display_name": "Scale", "value": 1.0,
        "info": None, "min": 0.0, "max": 4.0,
    }
    assert schema[1]["type"] == "int"
