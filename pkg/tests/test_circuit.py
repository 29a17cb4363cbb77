import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from opdiff import dynamics
from opdiff.circuit import (Circuit, CircuitBuilder, CircuitError, Gate, InvalidOutput,
                            auxiliary_labelling, compile_circuit, evaluate, evaluate_guard, gate,
                            inp, layerize, simulate_compiled, simulate_compiled_pairs,
                            source_labelling)
from opdiff.dynamics import SizeMismatch
from opdiff.gadgets import PairValue, pair_value
from opdiff.netcore import induced_subnetwork, is_dag, longest_path


def and_circuit():
    return Circuit(2, (Gate(0, "AND", (inp(0), inp(1))),), (gate(0),))


def not_chain(length):
    gates = tuple(Gate(i, "NOT", (inp(0) if i == 0 else gate(i - 1),)) for i in range(length))
    return Circuit(1, gates, (gate(length - 1),))


def all_inputs(k):
    return itertools.product((0, 1), repeat=k)


def input_path_lengths(cc):
    """For every node, the set of path lengths from any input-pair node."""
    net = cc.network
    lengths = {x: {0} for p in cc.input_pairs for x in p}
    order = []
    indeg = list(net.in_degrees)
    ready = [i for i in range(net.n) if indeg[i] == 0]
    while ready:
        u = ready.pop()
        order.append(u)
        for v in net.influenced(u):
            indeg[v] -= 1
            if indeg[v] == 0:
                ready.append(v)
    for u in order:
        for v in net.influenced(u):
            if u in lengths:
                lengths.setdefault(v, set()).update(d + 1 for d in lengths[u])
    return lengths


class TestCircuitModel:
    def test_evaluate_examples(self):
        assert evaluate(and_circuit(), (1, 1)) == (1,)
        assert evaluate(not_chain(1), (0,)) == (1,)

    def test_size_mismatch(self):
        with pytest.raises(SizeMismatch):
            evaluate(and_circuit(), (1,))

    def test_bad_reference(self):
        with pytest.raises(CircuitError):
            Circuit(1, (Gate(0, "NOT", (inp(3),)),), (gate(0),))
        with pytest.raises(CircuitError):
            Circuit(1, (Gate(0, "NOT", (inp(0),)),), (gate(4),))

    def test_bad_arity_and_op(self):
        with pytest.raises(CircuitError):
            Circuit(2, (Gate(0, "AND", (inp(0),)),), (gate(0),))
        with pytest.raises(CircuitError):
            Circuit(2, (Gate(0, "XOR", (inp(0), inp(1))),), (gate(0),))

    def test_cycle_rejected(self):
        with pytest.raises(CircuitError, match="cyclic"):
            Circuit(1, (Gate(0, "AND", (inp(0), gate(1))), Gate(1, "NOT", (gate(0),))), (gate(1),))

    def test_ids_dense(self):
        with pytest.raises(CircuitError):
            Circuit(1, (Gate(1, "NOT", (inp(0),)),), ())

    @settings(max_examples=100)
    @given(st.integers(0, 2**32 - 1))
    def test_evaluate_matches_naive(self, seed):
        rng = random.Random(seed)
        c = oracles.random_circuit(rng, rng.randint(1, 5), rng.randint(1, 20), rng.randint(1, 4))
        for x in all_inputs(c.input_count):
            assert evaluate(c, x) == oracles.naive_eval(c, x)

    def test_builder_trees(self):
        cb = CircuitBuilder(5)
        xs = [cb.input(i) for i in range(5)]
        c = cb.build([cb.or_many(xs), cb.and_many(xs), cb.or_many([]), cb.and_many([])])
        for x in all_inputs(5):
            assert evaluate(c, x) == (int(any(x)), int(all(x)), 0, 1)


class TestLayerize:
    def test_x0_and_not_x1(self):
        c = Circuit(2, (Gate(0, "NOT", (inp(1),)), Gate(1, "AND", (inp(0), gate(0)))), (gate(1),))
        lc = layerize(c)
        assert lc.h == 2
        assert [g.op for g in lc.circuit.gates].count("NOP") == 1

    def test_single_nop(self):
        lc = layerize(Circuit(1, (Gate(0, "NOP", (inp(0),)),), (gate(0),)))
        assert lc.h == 1 and len(lc.circuit.gates) == 1

    def test_mixed_depths(self):
        c = Circuit(1, (Gate(0, "NOT", (inp(0),)), Gate(1, "NOT", (gate(0),)),
                        Gate(2, "NOT", (gate(1),))), (gate(0), gate(2)))
        lc = layerize(c)
        assert lc.h == 3
        assert [g.op for g in lc.circuit.gates].count("NOP") == 2

    def test_shared_output_gets_own_sinks(self):
        c = Circuit(1, (Gate(0, "NOT", (inp(0),)),), (gate(0), gate(0)))
        lc = layerize(c)
        outs = lc.circuit.outputs
        assert outs[0] != outs[1]
        assert all(lc.layer_of(r) == lc.h for r in outs)

    def test_dead_gates_pruned(self):
        c = Circuit(1, (Gate(0, "NOT", (inp(0),)), Gate(1, "NOP", (inp(0),))), (gate(0),))
        assert len(layerize(c).circuit.gates) == 1

    @settings(max_examples=100)
    @given(st.integers(0, 2**32 - 1))
    def test_preserves_semantics_and_layers(self, seed):
        rng = random.Random(seed)
        c = oracles.random_circuit(rng, rng.randint(1, 4), rng.randint(1, 15), rng.randint(1, 3))
        lc = layerize(c)
        for g in lc.circuit.gates:
            if g.args:
                # padded: every argument sits exactly one layer below
                assert all(lc.layer_of(r) == lc.layers[g.id] - 1 for r in g.args)
            else:
                assert lc.layers[g.id] == 1
        for r in lc.circuit.outputs:
            assert lc.layer_of(r) == lc.h
        for x in all_inputs(c.input_count):
            assert evaluate(lc.circuit, x) == evaluate(c, x)


class TestCompile:
    def test_and_counts(self):
        cc = compile_circuit(and_circuit())
        assert cc.network.n == 8 and cc.network.edge_count == 6
        assert cc.h == 1

    def test_passthrough_circuit(self):
        # outputs referencing inputs directly still get a gadget layer of their own
        for k in (1, 2, 3):
            c = Circuit(k, (), tuple(inp(j) for j in range(k)))
            cc = compile_circuit(c)
            assert cc.h == 1
            assert cc.network.n == 4 * k + 2
            for x in all_inputs(k):
                assert simulate_compiled(cc, x) == tuple(x)

    def test_constants_use_base_pair(self):
        cb = CircuitBuilder(1)
        c = cb.build([cb.const(True), cb.const(False)])
        cc = compile_circuit(c)
        srcs = [i for i in range(cc.network.n) if cc.network.in_degrees[i] == 0]
        assert sorted(srcs) == sorted([*cc.base.pair, *cc.input_pairs[0]])
        for x in all_inputs(1):
            assert simulate_compiled(cc, x) == (1, 0)

    def test_and_simulation(self):
        cc = compile_circuit(and_circuit())
        for x in all_inputs(2):
            assert simulate_compiled(cc, x) == (x[0] & x[1],)

    def test_not_chain(self):
        cc = compile_circuit(not_chain(5))
        assert cc.h == 5
        assert simulate_compiled(cc, (0,)) == (1,)

    def test_map_json(self):
        m = compile_circuit(and_circuit()).map_json()
        assert m == {"base_pair": [0, 1], "input_pairs": [[2, 3], [4, 5]],
                     "output_pairs": [[6, 7]], "h": 1}

    def test_size_mismatch(self):
        with pytest.raises(SizeMismatch):
            simulate_compiled(compile_circuit(and_circuit()), (1,))

    def test_guard_invalidates(self):
        cb = CircuitBuilder(2)
        x0, x1 = cb.input(0), cb.input(1)
        c = cb.build([cb.or_(x0, x1), cb.not_(x0)], guard=cb.and_(x0, x1))
        cc = compile_circuit(c)
        for x in all_inputs(2):
            vals = simulate_compiled_pairs(cc, x)
            if evaluate_guard(c, x):
                assert all(v is PairValue.INVALID for v in vals)
                with pytest.raises(InvalidOutput):
                    simulate_compiled(cc, x)
            else:
                assert simulate_compiled(cc, x) == evaluate(c, x)

    def test_repeated_argument(self):
        c = Circuit(1, (Gate(0, "AND", (inp(0), inp(0))), Gate(1, "OR", (gate(0), gate(0)))), (gate(1),))
        cc = compile_circuit(c)
        for x in all_inputs(1):
            assert simulate_compiled(cc, x) == x

    def test_output_is_its_own_guard(self):
        cb = CircuitBuilder(2)
        flag = cb.and_(cb.input(0), cb.input(1))
        c = cb.build([flag, cb.input(0)], guard=flag)
        cc = compile_circuit(c)
        for x in all_inputs(2):
            vals = simulate_compiled_pairs(cc, x)
            if x == (1, 1):
                assert all(v is PairValue.INVALID for v in vals)
            else:
                assert [v.as_bool() for v in vals] == [False, bool(x[0])]

    @settings(max_examples=120, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_oracle_equivalence(self, seed):
        rng = random.Random(seed)
        c = oracles.random_circuit(rng, rng.randint(1, 6), rng.randint(1, 20), rng.randint(1, 4))
        cc = compile_circuit(c)
        for x in all_inputs(c.input_count):
            assert simulate_compiled(cc, x) == oracles.naive_eval(c, x)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_structure(self, seed):
        rng = random.Random(seed)
        c = oracles.random_circuit(rng, rng.randint(1, 4), rng.randint(1, 12), rng.randint(1, 3))
        cc = compile_circuit(c)
        net = cc.network
        assert is_dag(net)
        assert longest_path(net) == cc.h
        assert net.max_in_degree <= 3
        srcs = {i for i in range(net.n) if net.in_degrees[i] == 0}
        assert srcs == {*cc.base.pair, *(x for p in cc.input_pairs for x in p)}
        sinks = {i for i in range(net.n) if not net.influenced(i)} - srcs
        assert sinks == cc.sink_nodes()
        assert len(cc.sink_nodes()) == 2 * len(cc.output_pairs)
        lengths = input_path_lengths(cc)
        for p, lay in cc.pair_layer.items():
            for x in p:
                assert lengths.get(x, {lay}) == {lay}
        for x in cc.sink_nodes():
            assert lengths.get(x, {cc.h}) == {cc.h}

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_layer_stabilization(self, seed):
        rng = random.Random(seed)
        c = oracles.random_circuit(rng, rng.randint(1, 4), rng.randint(1, 12), rng.randint(1, 3))
        cc = compile_circuit(c)
        x = [rng.randint(0, 1) for _ in range(c.input_count)]
        fill = np.array([rng.randint(0, 1) for _ in range(cc.network.n)], dtype=np.uint8)
        f = source_labelling(cc, x, fill)
        history = [f]
        for _ in range(cc.h + 2):
            f = dynamics.synchronous_update(cc.network, f)
            history.append(f)
        for p, lay in cc.pair_layer.items():
            vals = [pair_value(history[t], p) for t in range(lay, len(history))]
            assert vals[0] is not PairValue.INVALID
            assert len(set(vals)) == 1


class TestAuxiliary:
    def test_nop_chain(self):
        c = Circuit(1, (Gate(0, "NOP", (inp(0),)), Gate(1, "NOP", (gate(0),))), (gate(1),))
        cc = compile_circuit(c)
        assert cc.h == 2
        aux = auxiliary_labelling(cc, (1,))
        assert aux.pair(cc.input_pairs[0]) is PairValue.TRUE
        assert aux.pair(cc.gate_pairs[0]) is PairValue.TRUE
        assert not set(aux.nodes) & cc.sink_nodes()

    def test_padded_and(self):
        c = Circuit(2, (Gate(0, "AND", (inp(0), inp(1))), Gate(1, "NOP", (gate(0),))), (gate(1),))
        cc = compile_circuit(c)
        aux = auxiliary_labelling(cc, (1, 0))
        assert aux.pair(cc.gate_pairs[0]) is PairValue.FALSE
        d = aux.as_dict()
        assert (d[cc.gate_pairs[0].true_rail], d[cc.gate_pairs[0].false_rail]) == (0, 1)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_fill_independent_fixed_point(self, seed):
        rng = random.Random(seed)
        c = oracles.random_circuit(rng, rng.randint(1, 4), rng.randint(1, 12), rng.randint(1, 3))
        cc = compile_circuit(c)
        s = [rng.randint(0, 1) for _ in range(c.input_count)]
        a0 = auxiliary_labelling(cc, s, 0)
        a1 = auxiliary_labelling(cc, s, 1)
        ar = auxiliary_labelling(cc, s, np.array([rng.randint(0, 1) for _ in range(cc.network.n)]))
        assert np.array_equal(a0.labelling, a1.labelling)
        assert np.array_equal(a0.labelling, ar.labelling)
        assert a0.steps <= max(cc.h - 1, 0)
        trimmed, _ = induced_subnetwork(cc.network, a0.nodes)
        assert dynamics.is_stable(trimmed, a0.labelling)
        # every non-sink pair is valid and carries its gate's value
        lc = cc.layered
        values = evaluate_all_gates(lc.circuit, s)
        for g, p in enumerate(cc.gate_pairs):
            if p.true_rail in a0.as_dict():
                assert aux_bool(a0, p) == values[g]


def evaluate_all_gates(circuit, x):
    out = []
    for g in range(len(circuit.gates)):
        probe = Circuit(circuit.input_count, circuit.gates, (gate(g),))
        out.append(evaluate(probe, x)[0])
    return out


def aux_bool(aux, p):
    v = aux.pair(p)
    assert v is not PairValue.INVALID
    return int(v.as_bool())
