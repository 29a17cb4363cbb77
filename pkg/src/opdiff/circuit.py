"""Boolean circuits, equal-depth layering and compilation to diffusion networks."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import dynamics
from .gadgets import (BasePairHandle, DualPair, NetworkBuilder, PairValue, add_and,
                      add_base_pair, add_guard, add_nop, add_not, add_or, pair_value)
from .netcore import SocialNetwork, induced_subnetwork

ARITY = {"AND": 2, "OR": 2, "NOT": 1, "NOP": 1, "CONST_TRUE": 0, "CONST_FALSE": 0}
# GUARD(value, flag) only appears in layered circuits: it forwards value and
# invalidates the output pair when flag is true.
INTERNAL_ARITY = {**ARITY, "GUARD": 2}


class CircuitError(ValueError):
    pass


class InvalidOutput(RuntimeError):
    """A compiled circuit produced an invalid output pair."""

    def __init__(self, values):
        super().__init__(f"invalid output pairs: {[v.value for v in values]}")
        self.values = values


@dataclass(frozen=True)
class Ref:
    kind: str  # "input" | "gate"
    index: int

    def to_json(self) -> dict:
        return {self.kind: self.index}


def inp(j: int) -> Ref:
    return Ref("input", j)


def gate(i: int) -> Ref:
    return Ref("gate", i)


@dataclass(frozen=True)
class Gate:
    id: int
    op: str
    args: tuple[Ref, ...] = ()


@dataclass(frozen=True)
class Circuit:
    """Gates are numbered densely by list position; references must be acyclic.

    ``guard`` optionally names a halt flag: when it evaluates true, compiled
    networks drive every output pair invalid.
    """

    input_count: int
    gates: tuple[Gate, ...]
    outputs: tuple[Ref, ...]
    guard: Ref | None = None

    def __post_init__(self):
        if self.input_count < 0:
            raise CircuitError("input count must be non-negative")
        for pos, g in enumerate(self.gates):
            if g.id != pos:
                raise CircuitError(f"gate at position {pos} has id {g.id}; ids must be dense and ordered")
            if g.op not in INTERNAL_ARITY:
                raise CircuitError(f"gate {g.id}: unknown op {g.op!r}")
            if len(g.args) != INTERNAL_ARITY[g.op]:
                raise CircuitError(
                    f"gate {g.id}: {g.op} takes {INTERNAL_ARITY[g.op]} args, got {len(g.args)}")
            for r in g.args:
                self._check_ref(r, f"gate {g.id}")
        for r in self.outputs:
            self._check_ref(r, "outputs")
        if self.guard is not None:
            self._check_ref(self.guard, "guard")
        self.topo_order  # raises on cycles

    def _check_ref(self, r: Ref, where: str) -> None:
        if r.kind == "input":
            ok = 0 <= r.index < self.input_count
        elif r.kind == "gate":
            ok = 0 <= r.index < len(self.gates)
        else:
            raise CircuitError(f"{where}: bad reference kind {r.kind!r}")
        if not ok:
            raise CircuitError(f"{where}: reference {r.kind} {r.index} out of range")

    @cached_property
    def topo_order(self) -> tuple[int, ...]:
        state = [0] * len(self.gates)
        order: list[int] = []
        for root in range(len(self.gates)):
            if state[root]:
                continue
            stack = [(root, 0)]
            state[root] = 1
            while stack:
                g, pos = stack[-1]
                args = self.gates[g].args
                if pos < len(args):
                    stack[-1] = (g, pos + 1)
                    r = args[pos]
                    if r.kind != "gate":
                        continue
                    if state[r.index] == 1:
                        raise CircuitError(f"cyclic reference through gate {r.index}")
                    if state[r.index] == 0:
                        state[r.index] = 1
                        stack.append((r.index, 0))
                    continue
                stack.pop()
                state[g] = 2
                order.append(g)
        return tuple(order)

    @property
    def output_count(self) -> int:
        return len(self.outputs)


class CircuitBuilder:
    """Programmatic circuit construction with balanced AND/OR trees."""

    def __init__(self, input_count: int):
        self.input_count = input_count
        self.gates: list[Gate] = []
        self._consts: dict[bool, Ref] = {}

    def _add(self, op: str, *args: Ref) -> Ref:
        g = Gate(len(self.gates), op, tuple(args))
        self.gates.append(g)
        return gate(g.id)

    def input(self, j: int) -> Ref:
        return inp(j)

    def and_(self, a: Ref, b: Ref) -> Ref:
        return self._add("AND", a, b)

    def or_(self, a: Ref, b: Ref) -> Ref:
        return self._add("OR", a, b)

    def not_(self, a: Ref) -> Ref:
        return self._add("NOT", a)

    def nop(self, a: Ref) -> Ref:
        return self._add("NOP", a)

    def const(self, value: bool) -> Ref:
        if value not in self._consts:
            self._consts[value] = self._add("CONST_TRUE" if value else "CONST_FALSE")
        return self._consts[value]

    def _tree(self, op: str, refs: list[Ref], empty: bool) -> Ref:
        if not refs:
            return self.const(empty)
        while len(refs) > 1:
            nxt = [self._add(op, refs[i], refs[i + 1]) for i in range(0, len(refs) - 1, 2)]
            if len(refs) % 2:
                nxt.append(refs[-1])
            refs = nxt
        return refs[0]

    def or_many(self, refs: Iterable[Ref]) -> Ref:
        return self._tree("OR", list(refs), False)

    def and_many(self, refs: Iterable[Ref]) -> Ref:
        return self._tree("AND", list(refs), True)

    def build(self, outputs: Sequence[Ref], guard: Ref | None = None) -> Circuit:
        return Circuit(self.input_count, tuple(self.gates), tuple(outputs), guard)


def _eval_all(circuit: Circuit, x: Sequence[int]) -> list[int]:
    if len(x) != circuit.input_count:
        raise dynamics.SizeMismatch(f"circuit has {circuit.input_count} inputs, got {len(x)}")
    vals = [0] * len(circuit.gates)

    def get(r: Ref) -> int:
        return int(x[r.index]) & 1 if r.kind == "input" else vals[r.index]

    for g in circuit.topo_order:
        gt = circuit.gates[g]
        a = [get(r) for r in gt.args]
        if gt.op == "AND":
            v = a[0] & a[1]
        elif gt.op == "OR":
            v = a[0] | a[1]
        elif gt.op == "NOT":
            v = 1 - a[0]
        elif gt.op in ("NOP", "GUARD"):
            v = a[0]
        else:
            v = 1 if gt.op == "CONST_TRUE" else 0
        vals[g] = v
    return vals


def _ref_value(vals: list[int], x: Sequence[int], r: Ref) -> int:
    return int(x[r.index]) & 1 if r.kind == "input" else vals[r.index]


def evaluate(circuit: Circuit, x: Sequence[int]) -> tuple[int, ...]:
    """Reference Boolean semantics; the guard is not applied (see :func:`evaluate_guard`)."""
    vals = _eval_all(circuit, x)
    return tuple(_ref_value(vals, x, r) for r in circuit.outputs)


def evaluate_guard(circuit: Circuit, x: Sequence[int]) -> bool:
    if circuit.guard is None:
        return False
    vals = _eval_all(circuit, x)
    return bool(_ref_value(vals, x, circuit.guard))


# -- layering --------------------------------------------------------------

@dataclass(frozen=True)
class LayeredCircuit:
    circuit: Circuit
    layers: tuple[int, ...]
    h: int
    origin: dict = field(default_factory=dict)  # original gate id -> layered gate id

    def layer_of(self, r: Ref) -> int:
        return 0 if r.kind == "input" else self.layers[r.index]


def _prune(circuit: Circuit) -> tuple[Circuit, dict[int, int]]:
    live: set[int] = set()
    stack = [r.index for r in circuit.outputs if r.kind == "gate"]
    if circuit.guard is not None and circuit.guard.kind == "gate":
        stack.append(circuit.guard.index)
    while stack:
        g = stack.pop()
        if g in live:
            continue
        live.add(g)
        stack.extend(r.index for r in circuit.gates[g].args if r.kind == "gate")
    remap = {old: new for new, old in enumerate(sorted(live))}

    def fix(r: Ref) -> Ref:
        return gate(remap[r.index]) if r.kind == "gate" else r

    gates = tuple(Gate(remap[g.id], g.op, tuple(fix(r) for r in g.args))
                  for g in circuit.gates if g.id in remap)
    guard = fix(circuit.guard) if circuit.guard is not None else None
    return Circuit(circuit.input_count, gates, tuple(fix(r) for r in circuit.outputs), guard), remap


def layerize(circuit: Circuit) -> LayeredCircuit:
    """Pad with NOP gates so every input-to-output path has the same length ``h``.

    Gates feeding no output are dropped. Each output ends in its own sink
    gate at layer ``h``; with a guard, that last layer is made of GUARD
    gates combining each output with the flag.
    """
    pruned, remap = _prune(circuit)
    order = pruned.topo_order
    gates: list[Gate] = []
    layers: list[int] = []
    new_id: dict[int, int] = {}
    chains: dict[Ref, list[Ref]] = {}

    def layer(r: Ref) -> int:
        return 0 if r.kind == "input" else layers[r.index]

    def emit(op: str, args: tuple[Ref, ...], lay: int) -> Ref:
        gates.append(Gate(len(gates), op, args))
        layers.append(lay)
        return gate(len(gates) - 1)

    def pad(r: Ref, target: int) -> Ref:
        base = layer(r)
        if base >= target:
            return r
        chain = chains.setdefault(r, [])
        while base + len(chain) < target:
            prev = chain[-1] if chain else r
            chain.append(emit("NOP", (prev,), base + len(chain) + 1))
        return chain[target - base - 1]

    def mapped(r: Ref) -> Ref:
        return gate(new_id[r.index]) if r.kind == "gate" else r

    for g in order:
        gt = pruned.gates[g]
        op = gt.op
        args = tuple(mapped(r) for r in gt.args)
        if op in ("AND", "OR") and args[0] == args[1]:
            # x AND x = x OR x = x; a two-input gadget here would need a doubled edge
            op, args = "NOP", args[:1]
        lay = 1 + max((layer(r) for r in args), default=0)
        args = tuple(pad(r, lay - 1) for r in args)
        new_id[g] = emit(op, args, lay).index

    outs = [mapped(r) for r in pruned.outputs]
    guard = mapped(pruned.guard) if pruned.guard is not None else None
    top = max([layer(r) for r in outs] + ([layer(guard)] if guard is not None else []), default=0)
    final: list[Ref] = []
    if guard is not None:
        h = top + 1
        flag = pad(guard, h - 1)
        for r in outs:
            final.append(emit("GUARD", (pad(r, h - 1), flag), h))
    else:
        h = max(top, 1)
        at_top = [r for r in outs if layer(r) == h]
        if len(at_top) != len(set(at_top)):
            h += 1
        used: set[Ref] = set()
        for r in outs:
            if layer(r) == h and r not in used:
                final.append(r)
            else:
                final.append(emit("NOP", (pad(r, h - 1),), h))
            used.add(final[-1])
    out_circuit = Circuit(pruned.input_count, tuple(gates), tuple(final), guard)
    origin = {old: new_id[new] for old, new in remap.items()}
    return LayeredCircuit(out_circuit, tuple(layers), h, origin)


# -- compilation -----------------------------------------------------------

@dataclass
class CompiledParts:
    base: BasePairHandle
    input_pairs: list[DualPair]
    output_pairs: list[DualPair]
    gate_pairs: list[DualPair]
    pair_layer: dict[DualPair, int]


def compile_into(b: NetworkBuilder, layered: LayeredCircuit, identify_sinks: bool = False) -> CompiledParts:
    """Emit gadgets for ``layered`` into ``b``.

    With ``identify_sinks`` the gadget producing output ``i`` writes into
    input pair ``i`` rather than a fresh pair, closing the circuit into a
    loop of length ``h``.
    """
    c = layered.circuit
    if identify_sinks and c.output_count != c.input_count:
        raise CircuitError("sink identification needs as many outputs as inputs")
    base = b.base or add_base_pair(b)
    input_pairs = [b.new_pair() for _ in range(c.input_count)]
    sink_target: dict[int, DualPair] = {}
    if identify_sinks:
        for i, r in enumerate(c.outputs):
            sink_target[r.index] = input_pairs[i]
    pairs: list[DualPair | None] = [None] * len(c.gates)

    def get(r: Ref) -> DualPair:
        return input_pairs[r.index] if r.kind == "input" else pairs[r.index]

    for g in c.topo_order:
        gt = c.gates[g]
        out = sink_target.get(g)
        a = [get(r) for r in gt.args]
        if gt.op == "AND":
            p = add_and(b, a[0], a[1], base, out=out)
        elif gt.op == "OR":
            p = add_or(b, a[0], a[1], base, out=out)
        elif gt.op == "NOT":
            p = add_not(b, a[0], out=out)
        elif gt.op == "NOP":
            p = add_nop(b, a[0], out=out)
        elif gt.op == "GUARD":
            p = add_guard(b, a[0], a[1], base, out=out)
        elif gt.op == "CONST_TRUE":
            p = add_nop(b, base.pair, out=out)
        else:
            p = add_not(b, base.pair, out=out)
        pairs[g] = p
    layer_of = {p: 0 for p in input_pairs}
    for g, p in enumerate(pairs):
        if g not in sink_target:
            layer_of[p] = layered.layers[g]
    outputs = [get(r) for r in c.outputs]
    return CompiledParts(base, input_pairs, outputs, pairs, layer_of)


@dataclass(frozen=True)
class CompiledCircuit:
    network: SocialNetwork
    base: BasePairHandle
    input_pairs: tuple[DualPair, ...]
    output_pairs: tuple[DualPair, ...]
    gate_pairs: tuple[DualPair, ...]
    pair_layer: dict
    layered: LayeredCircuit

    @property
    def h(self) -> int:
        return self.layered.h

    def map_json(self) -> dict:
        return {
            "base_pair": self.base.pair.as_list(),
            "input_pairs": [p.as_list() for p in self.input_pairs],
            "output_pairs": [p.as_list() for p in self.output_pairs],
            "h": self.h,
        }

    def sink_nodes(self) -> set[int]:
        return {x for p in self.output_pairs for x in p}


def compile_circuit(layered: LayeredCircuit | Circuit) -> CompiledCircuit:
    """One dual pair per input and per gate; constants are gadgets on the base pair."""
    if isinstance(layered, Circuit):
        layered = layerize(layered)
    b = NetworkBuilder()
    add_base_pair(b)
    parts = compile_into(b, layered)
    return CompiledCircuit(b.build(), parts.base, tuple(parts.input_pairs),
                           tuple(parts.output_pairs), tuple(parts.gate_pairs),
                           parts.pair_layer, layered)


compile = compile_circuit  # noqa: A001  (public name used by the CLI and docs)


def source_labelling(cc: CompiledCircuit, x: Sequence[int], fill: np.ndarray | None = None) -> np.ndarray:
    """Labelling with the base pair at (1, 0) and input pairs carrying ``x``."""
    if len(x) != len(cc.input_pairs):
        raise dynamics.SizeMismatch(f"circuit has {len(cc.input_pairs)} inputs, got {len(x)}")
    f = np.zeros(cc.network.n, dtype=np.uint8) if fill is None else np.array(fill, dtype=np.uint8)
    f[cc.base.true_rail], f[cc.base.false_rail] = 1, 0
    for p, v in zip(cc.input_pairs, x):
        v = 1 if v else 0
        f[p.true_rail], f[p.false_rail] = v, 1 - v
    return f


def simulate_compiled_pairs(cc: CompiledCircuit, x: Sequence[int]) -> list[PairValue]:
    f = source_labelling(cc, x)
    for _ in range(cc.h):
        f = dynamics.synchronous_update(cc.network, f)
    return [pair_value(f, p) for p in cc.output_pairs]


def simulate_compiled(cc: CompiledCircuit, x: Sequence[int]) -> tuple[int, ...]:
    """Run the compiled network ``h`` steps from dual-rail ``x`` and decode the outputs."""
    vals = simulate_compiled_pairs(cc, x)
    if any(v is PairValue.INVALID for v in vals):
        raise InvalidOutput(vals)
    return tuple(int(v.as_bool()) for v in vals)


@dataclass(frozen=True, eq=False)
class AuxiliaryLabelling:
    """Limit labelling of the compiled network with its sink layer removed.

    ``nodes[i]`` is the compiled-network id of entry ``i`` of ``labelling``.
    """

    labelling: np.ndarray
    nodes: tuple[int, ...]
    steps: int

    def as_dict(self) -> dict[int, int]:
        return {node: int(v) for node, v in zip(self.nodes, self.labelling)}

    def pair(self, p: DualPair) -> PairValue:
        d = self.as_dict()
        return pair_value({p.true_rail: d[p.true_rail], p.false_rail: d[p.false_rail]}, p)


def auxiliary_labelling(cc: CompiledCircuit, s: Sequence[int], fill: int | np.ndarray = 0) -> AuxiliaryLabelling:
    """Fixed point of the sink-removed network with the source layer holding ``s``.

    ``fill`` is the arbitrary starting value of all other nodes (a constant
    or a full-length vector over the compiled network).
    """
    sinks = cc.sink_nodes()
    trimmed, mapping = induced_subnetwork(cc.network, [i for i in range(cc.network.n) if i not in sinks])
    if np.isscalar(fill):
        full = np.full(cc.network.n, int(fill), dtype=np.uint8)
    else:
        full = np.asarray(fill, dtype=np.uint8)
    full = source_labelling(cc, s, full)
    start = full[mapping]
    _, out = dynamics.run(trimmed, start, max_steps=max(cc.h - 1, 0) + 1, record=False)
    if not isinstance(out, dynamics.Converged) or out.steps > max(cc.h - 1, 0):
        raise RuntimeError("sink-removed network failed to settle within h-1 steps")
    return AuxiliaryLabelling(out.limit, tuple(mapping), out.steps)
