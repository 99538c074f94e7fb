import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from approx_dcim.cells import exact_compressor_42
from approx_dcim.multiplier import (MultiplierConfig, Netlist, Node, build_tree, evaluate, generate_pp,
                                    pp_value, search_space_size, slot_layout)


def test_generate_pp_examples():
    cols = generate_pp(3, 3, 2)
    assert [len(c) for c in cols[:3]] == [1, 2, 1]
    assert all(b == 1 for c in cols for b in c)
    assert pp_value(cols) == 9
    assert all(b == 0 for c in generate_pp(0, 255, 8) for b in c)
    assert pp_value(generate_pp(5, 10, 4)) == 50
    with pytest.raises(ValueError):
        generate_pp(16, 1, 4)


@given(st.integers(2, 8).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, 2**n - 1),
                                                     st.integers(0, 2**n - 1))))
def test_pp_matrix_value_and_heights(args):
    n, x, y = args
    cols = generate_pp(x, y, n)
    assert pp_value(cols) == x * y
    assert [len(c) for c in cols] == [sum(1 for p in range(n) if 0 <= j - p < n) for j in range(2 * n)]


def test_slot_layout_examples():
    lay = slot_layout(8)
    assert len(lay) == 9
    assert slot_layout(2) == []
    assert slot_layout(8) == lay
    assert [s for s, _, _ in lay] == list(range(1, 10))
    assert all(col < 8 for _, col, _ in lay)
    assert lay == sorted(lay, key=lambda e: (e[2], e[1]))
    assert search_space_size(8, 8) == 134_217_728


def test_n2_tree_has_no_slots_and_is_exact(lib):
    net = build_tree(MultiplierConfig(2, (), lib))
    assert net.t == 0
    assert {n.kind for n in net.nodes} <= {"PP", "HA", "FA"}
    x, y = np.meshgrid(np.arange(4), np.arange(4))
    assert np.array_equal(evaluate(net, x, y), x * y)


@pytest.mark.parametrize("N", [3, 4, 5, 6])
def test_exhaustive_exactness_small(lib, N):
    net = build_tree(MultiplierConfig.exact(N, lib))
    x, y = np.meshgrid(np.arange(2**N), np.arange(2**N))
    assert np.array_equal(evaluate(net, x, y), x * y)


def test_exact_8bit_sample(lib):
    net = build_tree(MultiplierConfig.exact(8, lib))
    assert evaluate(net, 181, 77) == 13937


def test_single_compressor_netlist():
    node = Node(0, "exact42", exact_compressor_42(), 1, 0, (1, 2, 3, 4, 5), (6, 7, 8))
    net = Netlist(tuple(f"i{k}" for k in range(5)), (node,), (6, 7, 8))
    out = net.simulate(np.array([1, 1, 1, 0, 0]))
    assert out[:, 0].tolist() == [1, 0, 1]


def test_apx_c0_slot_drops_cout(c0_lib):
    N = 8
    t = len(slot_layout(N))
    exact = build_tree(MultiplierConfig.exact(N, c0_lib))
    x, y = np.meshgrid(np.arange(256), np.arange(256))
    x, y = x.ravel(), y.ravel()
    for slot in (0, 4, t - 1):
        a = [0] * t
        a[slot] = 1
        net = build_tree(MultiplierConfig(N, a, c0_lib))
        node = net.node(net.slots[slot])
        sig = _all_signals(exact, x, y)
        cout = sig[node.outputs[2]].astype(np.int64)
        expect = x * y - (cout << (node.column + 1))
        assert np.array_equal(evaluate(net, x, y), expect)


def _bits(x, y, N):
    from approx_dcim.multiplier import operand_bits
    return operand_bits(x, y, N)


def _all_signals(net, x, y):
    from approx_dcim.multiplier import _apply
    bits = _bits(x, y, net.n_bits)
    sig = np.zeros((net.n_signals, bits.shape[1]), np.uint8)
    sig[1:1 + len(net.inputs)] = bits
    for n in net.nodes:
        _apply(sig, n.cell, n.inputs, n.outputs)
    return sig


def test_column_discipline_and_slots(lib):
    rng = np.random.default_rng(3)
    for _ in range(5):
        a = rng.integers(0, lib.K, 9)
        net = build_tree(MultiplierConfig(8, a, lib))
        exact_names = {"PP", "HA", "FA", lib.exact.name}
        for n in net.nodes:
            if n.column >= 8:
                assert n.kind in exact_names and n.slot is None
        assert sorted(net.node(k).slot for k in net.slots) == list(range(1, 10))
        for i, k in enumerate(net.slots):
            assert net.node(k).cell is lib.compressors[a[i]]


def test_bad_assignment_rejected(lib):
    with pytest.raises(ValueError):
        MultiplierConfig(8, (0,) * 8, lib)
    with pytest.raises(ValueError):
        MultiplierConfig(8, (9,) * 9, lib)


def test_locality(lib):
    base = build_tree(MultiplierConfig.exact(8, lib))
    for i, k in enumerate(base.slots):
        a = [0] * 9
        a[i] = 3
        other = build_tree(MultiplierConfig(8, a, lib))
        changed = {n.id for n, m in zip(base.nodes, other.nodes) if n.cell is not m.cell}
        assert changed == {k}
        assert base.edges() == other.edges()


def test_determinism_and_dump(lib):
    a = (1, 2, 3, 4, 5, 6, 7, 0, 1)
    n1, n2 = build_tree(MultiplierConfig(8, a, lib)), build_tree(MultiplierConfig(8, a, lib))
    assert n1.to_text() == n2.to_text()
    x = np.arange(1000) % 256
    y = (np.arange(1000) * 7) % 256
    assert np.array_equal(evaluate(n1, x, y), evaluate(n2, x, y))
    assert "node" in n1.to_text() and "edge" in n1.to_text()


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 7), min_size=9, max_size=9),
       st.lists(st.integers(0, 255), min_size=64, max_size=64))
def test_partition_invariance(a, xs):
    from approx_dcim.cells import default_library
    net = build_tree(MultiplierConfig(8, a, default_library()))
    x = np.array(xs)
    y = x[::-1].copy()
    whole = evaluate(net, x, y)
    parts = np.concatenate([evaluate(net, x[:20], y[:20]), evaluate(net, x[20:], y[20:])])
    assert np.array_equal(whole, parts)
