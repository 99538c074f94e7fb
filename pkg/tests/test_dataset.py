from fractions import Fraction

import numpy as np
import pytest

from approx_dcim.archsearch import exact_design
from approx_dcim.dataset import (
    Oracle, decode, encode, generate_dataset, read_dataset_csv, sample_designs, split_labels,
    write_dataset_csv,
)
from approx_dcim.multiplier import MultiplierConfig, build_tree, evaluate


@pytest.fixture(scope="module")
def oracle5(lib):
    return Oracle(5, lib)


def test_encode_round_trip():
    assert encode((0, 7, 3)) == "0-7-3"
    assert decode("0-7-3") == (0, 7, 3)
    assert decode("") == ()


def test_exact_label_has_zero_error(lib, oracle5):
    y = oracle5.label(exact_design(lib, oracle5.t))
    assert y[0] == 0 and y[1] == 0
    assert np.all(y[2:] > 0)


def test_labels_agree_with_rational_oracle(lib, oracle5):
    a = (3, 6)
    y = oracle5.label(a)
    net = build_tree(MultiplierConfig(5, a, lib))
    red, ed = Fraction(0), Fraction(0)
    for x in range(32):
        for w in range(32):
            r = int(evaluate(net, x, w))
            ed += abs(r - x * w)
            if x * w:
                red += Fraction(abs(r - x * w), x * w)
    assert y[0] == pytest.approx(float(red / (31 * 31)), rel=1e-12)
    assert y[1] == pytest.approx(float(ed / 1024 / 31 ** 2), rel=1e-12)


def test_sample_designs_distinct_and_seeded():
    a = sample_designs(3, 4, 40, seed=5)
    assert len(set(a)) == 40
    assert all(0 <= v < 4 for d in a for v in d)
    assert a == sample_designs(3, 4, 40, seed=5)
    assert a != sample_designs(3, 4, 40, seed=6)


def test_sample_designs_too_many():
    with pytest.raises(ValueError):
        sample_designs(2, 3, 10, seed=0)


def test_split_fractions_and_disjoint():
    s = split_labels(200, seed=1)
    assert (s == "train").sum() == 140
    assert (s == "val").sum() == 30
    assert (s == "test").sum() == 30
    with pytest.raises(ValueError):
        split_labels(10, seed=0, fractions=(0.5, 0.2, 0.2))


def test_generate_and_csv_round_trip(tmp_path, oracle5):
    ds = generate_dataset(5, count=20, seed=3, oracle=oracle5)
    assert len(ds) == 20
    ds2 = generate_dataset(5, count=20, seed=3, oracle=oracle5)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_dataset_csv(ds, p1)
    write_dataset_csv(ds2, p2)
    assert p1.read_bytes() == p2.read_bytes()
    back = read_dataset_csv(p1, 5)
    assert back.designs == ds.designs
    assert np.array_equal(back.labels, ds.labels)
    assert list(back.split) == list(ds.split)


def test_dataset_parts(oracle5, lib):
    ds = generate_dataset(5, count=20, seed=0, oracle=oracle5)
    idx = [set(ds.indices(s)) for s in ("train", "val", "test")]
    assert not (idx[0] & idx[1]) and not (idx[0] & idx[2]) and not (idx[1] & idx[2])
    designs, y = ds.part("val")
    assert len(designs) == len(y) == 3
    assert len(ds.graphs(lib, "test")) == 3
    with pytest.raises(ValueError):
        ds.indices("holdout")
