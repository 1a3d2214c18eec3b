import json
from fractions import Fraction

import pytest

from bellforge import catalog
from bellforge.expr import BellExpression, Form, builtin, gen_ikk


def test_round_trip_preserves_exact_values(tmp_path):
    odd = BellExpression.from_coeffs([["1/3", "-2/7"]], ["5/2"], ["0", "-1"], "-1/9", Form.PROBABILITY)
    entries = [catalog.CatalogEntry("I33", gen_ikk(3), "generated"), catalog.CatalogEntry("ODD", odd)]
    path = tmp_path / "c.json"
    catalog.save(path, entries)
    back = catalog.load(path)
    assert back == entries
    assert catalog.find(back, "ODD").expr.const_term == Fraction(-1, 9)


def test_single_object_is_accepted():
    d = catalog.entry_to_dict(catalog.CatalogEntry("I2222", builtin("I2222")))
    (entry,) = catalog.loads(json.dumps(d))
    assert entry.expr == builtin("I2222")
    assert d["joint"] == [["1", "1"], ["1", "-1"]]
    assert d["form"] == "algebraic"


def test_duplicate_names_rejected():
    d = catalog.entry_to_dict(catalog.CatalogEntry("X", builtin("I2222")))
    with pytest.raises(catalog.CatalogError, match="duplicate"):
        catalog.loads(json.dumps([d, d]))


@pytest.mark.parametrize("mutate", [
    lambda d: d.pop("joint"),
    lambda d: d.update(m=3),
    lambda d: d.update(joint=[["1", "x"], ["1", "1"]]),
    lambda d: d.update(form="quantum"),
])
def test_malformed_entries(mutate):
    d = catalog.entry_to_dict(catalog.CatalogEntry("X", builtin("I2222")))
    mutate(d)
    with pytest.raises(catalog.CatalogError):
        catalog.loads(json.dumps(d))


def test_bad_json_and_missing_name():
    with pytest.raises(catalog.CatalogError):
        catalog.loads("{not json")
    with pytest.raises(catalog.CatalogError):
        catalog.loads("42")
    with pytest.raises(KeyError):
        catalog.find([], "I2222")
