import json

import numpy as np
import pytest

from gpcompare import specfile
from gpcompare.covariance import SpecError

DOCS = [
    {"name": "bm", "kernel": {"type": "brownian"}, "grid": [0.5, 1, 2], "shifts": [0, "-inf", 1.25]},
    {"name": "ou", "kernel": {"type": "ou", "scale": 0.3}, "grid": [0, 1], "shifts": [0, 0]},
    {"name": "ex", "kernel": {"type": "explicit", "matrix": [[1, 0.5], [0.5, 1]]}, "grid": [], "shifts": [0.1, 0.2]},
    {
        "name": "sum",
        "kernel": {"type": "sum", "terms": [{"type": "brownian"}, {"type": "scaled_identity", "a": 2}]},
        "grid": [1, 2],
        "shifts": [0, 0],
        "labels": ["a", "b"],
    },
]


@pytest.mark.parametrize("doc", DOCS)
def test_round_trip(doc):
    pf = specfile.loads(json.dumps(doc))
    assert pf.to_dict() == doc
    again = specfile.loads(specfile.dumps(pf))
    assert again.to_dict() == doc
    assert again.digest() == pf.digest()


def test_neg_inf_shift():
    spec = specfile.loads(json.dumps(DOCS[0])).to_spec()
    assert spec.shifts[1] == float("-inf")
    assert spec.participating.tolist() == [True, False, True]


@pytest.mark.parametrize(
    "text",
    [
        '{"name": "x", "kernel": {"type": "brownian"}, "grid": [1], "shifts": [NaN]}',
        '{"name": "x", "kernel": {"type": "brownian"}, "grid": [1], "shifts": [Infinity]}',
        '{"name": "x", "kernel": {"type": "brownian"}, "grid": [1], "shifts": ["inf"]}',
        '{"name": "x", "kernel": {"type": "brownian"}, "grid": [1, 1], "shifts": [0, 0]}',
        '{"name": "x", "kernel": {"type": "brownian", "scale": 1}, "grid": [1], "shifts": [0]}',
        '{"name": "x", "kernel": {"type": "explicit", "matrix": [[1, 2], [2, 1]]}, "shifts": [0, 0]}',
        '{"kernel": {"type": "brownian"}, "grid": [1], "shifts": [0]}',
        "not json",
    ],
)
def test_rejects_bad_documents(text):
    with pytest.raises(SpecError):
        specfile.loads(text)


def test_from_spec_round_trip():
    spec = specfile.loads(json.dumps(DOCS[0])).to_spec()
    again = specfile.loads(specfile.dumps(specfile.from_spec(spec))).to_spec()
    assert again == spec
    np.testing.assert_array_equal(again.sigma, spec.sigma)
