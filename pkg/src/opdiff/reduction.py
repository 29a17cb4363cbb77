"""Assembly of the main network from a toy machine's step circuit.

The step circuit is compiled with its sinks folded back onto its sources.
Every circuit dual pair is watched by a fuse line; the end of the line
feeds the valve pairs P and Q, which feed an alarm clique of 2k nodes. The
alarm in turn influences every dual pair (base pair included) and P. While
the alarm is evenly split it flips every step and leaves the circuit
alone; once any pair goes invalid the alarm goes off and drags the whole
network to agreement.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import dynamics
from .circuit import (CompiledCircuit, LayeredCircuit, auxiliary_labelling, compile_circuit,
                      compile_into, layerize)
from .gadgets import (DualPair, NetworkBuilder, PairValue, ROLE_ALARM, ROLE_FUSE,
                      ROLE_INTERMEDIATE, ROLE_VALVE_P, ROLE_VALVE_Q, add_base_pair, pair_value)
from .netcore import SocialNetwork
from .turing import Halted, MachineError, TMConfig, ToyTM, check_config, decode, encode, step_circuit, tm_step

FusePair = tuple[int, int]


class ReductionError(ValueError):
    pass


@dataclass(frozen=True)
class FuseLink:
    """One watched dual pair, its four intermediates and its fuse pair."""

    watched: DualPair
    intermediates: tuple[int, int, int, int]
    fuse: FusePair


def build_fuse_line(b: NetworkBuilder, monitored: Sequence[DualPair]) -> list[FuseLink]:
    """One fuse pair per monitored dual pair, chained in the given order.

    Two intermediates copy the true rail and two the false rail; each feeds
    both nodes of the fuse pair. Both nodes of fuse pair ``j`` feed both
    nodes of pair ``j + 1``.
    """
    if not monitored:
        raise ReductionError("a fuse line needs at least one monitored pair")
    links: list[FuseLink] = []
    prev: FusePair | None = None
    for p in monitored:
        b._require_pair(p)
        mids = tuple(b.node(ROLE_INTERMEDIATE) for _ in range(4))
        fuse = (b.node(ROLE_FUSE), b.node(ROLE_FUSE))
        b.edge(p.true_rail, mids[0])
        b.edge(p.true_rail, mids[1])
        b.edge(p.false_rail, mids[2])
        b.edge(p.false_rail, mids[3])
        for mid in mids:
            for x in fuse:
                b.edge(mid, x)
        if prev is not None:
            for u in prev:
                for x in fuse:
                    b.edge(u, x)
        b.fuse_pairs.append(fuse)
        links.append(FuseLink(p, mids, fuse))
        prev = fuse
    return links


@dataclass(frozen=True)
class Valve:
    p: FusePair
    q: FusePair
    alarm: tuple[int, ...]


def build_valve_alarm(b: NetworkBuilder, last_fuse: FusePair, k: int = 2) -> Valve:
    """P copies the last fuse pair nodewise, Q copies P, Q feeds a 2k-clique alarm, the alarm feeds P."""
    if k < 2:
        raise ReductionError(f"the alarm needs k >= 2, got {k}")
    P = (b.node(ROLE_VALVE_P), b.node(ROLE_VALVE_P))
    Q = (b.node(ROLE_VALVE_Q), b.node(ROLE_VALVE_Q))
    alarm = tuple(b.node(ROLE_ALARM) for _ in range(2 * k))
    for src, dst in zip(last_fuse, P):
        b.edge(src, dst)
    for src, dst in zip(P, Q):
        b.edge(src, dst)
    for a in alarm:
        for q in Q:
            b.edge(q, a)
        for other in alarm:
            if other != a:
                b.edge(other, a)
        for p in P:
            b.edge(a, p)
    b.valve_p, b.valve_q = P, Q
    b.alarm = list(alarm)
    return Valve(P, Q, alarm)


def connect_alarm(b: NetworkBuilder, alarm: Sequence[int], pairs: Sequence[DualPair]) -> None:
    for p in pairs:
        for x in p:
            for a in alarm:
                b.edge(a, x)


@dataclass(frozen=True, eq=False)
class MainNetwork:
    network: SocialNetwork
    tm: ToyTM
    k: int
    layered: LayeredCircuit
    step: CompiledCircuit  # standalone compilation, source of the auxiliary labelling
    base: DualPair
    source_pairs: tuple[DualPair, ...]
    gate_pairs: tuple[DualPair | None, ...]  # None for gates folded onto a source pair
    circuit_pairs: tuple[DualPair, ...]  # every monitored pair
    pair_layer: dict
    links: tuple[FuseLink, ...]
    valve: Valve

    @property
    def h(self) -> int:
        return self.layered.h

    @property
    def n_config(self) -> int:
        return self.tm.config_bits

    @property
    def fuse_pairs(self) -> tuple[FusePair, ...]:
        return tuple(link.fuse for link in self.links)

    @property
    def alarm(self) -> tuple[int, ...]:
        return self.valve.alarm

    def manifest(self) -> dict:
        net = self.network
        return {
            "h": self.h,
            "k": self.k,
            "n_config": self.n_config,
            "nodes": net.n,
            "edges": net.edge_count,
            "max_in_degree": net.max_in_degree,
            "pair_map": {
                "base_pair": list(self.base),
                "source_pairs": [list(p) for p in self.source_pairs],
                "dual_pairs": [list(p) for p in self.circuit_pairs],
                "layers": [self.pair_layer[p] for p in self.circuit_pairs],
                "fuse_pairs": [list(f) for f in self.fuse_pairs],
                "valve": {"P": list(self.valve.p), "Q": list(self.valve.q)},
                "alarm": list(self.alarm),
            },
        }

    def decode_sources(self, f) -> list[PairValue]:
        return [pair_value(f, p) for p in self.source_pairs]

    def source_config(self, f) -> TMConfig | None:
        """Configuration carried by the source layer, or None if invalid or malformed."""
        vals = self.decode_sources(f)
        if any(v is PairValue.INVALID for v in vals):
            return None
        return decode(self.tm, [int(v.as_bool()) for v in vals])


def assemble_main_network(tm: ToyTM, k: int = 2) -> MainNetwork:
    if k < 2:
        raise ReductionError(f"the alarm needs k >= 2, got {k}")
    layered = layerize(step_circuit(tm))
    b = NetworkBuilder()
    base = add_base_pair(b)
    parts = compile_into(b, layered, identify_sinks=True)
    folded = {r.index for r in layered.circuit.outputs}
    gate_pairs = tuple(None if g in folded else p for g, p in enumerate(parts.gate_pairs))
    circuit_pairs = tuple(parts.input_pairs) + tuple(p for p in gate_pairs if p is not None)
    links = build_fuse_line(b, circuit_pairs)
    valve = build_valve_alarm(b, links[-1].fuse, k)
    connect_alarm(b, valve.alarm, (base.pair,) + circuit_pairs)
    return MainNetwork(
        network=b.build(),
        tm=tm,
        k=k,
        layered=layered,
        step=compile_circuit(layered),
        base=base.pair,
        source_pairs=tuple(parts.input_pairs),
        gate_pairs=gate_pairs,
        circuit_pairs=circuit_pairs,
        pair_layer=dict(parts.pair_layer),
        links=tuple(links),
        valve=valve,
    )


def initial_labelling(mn: MainNetwork, s: TMConfig) -> np.ndarray:
    """Canonical start: circuit at the auxiliary labelling of ``s``, fuse and valve pairs at (1, 0),
    alarm with its first k nodes at 0, intermediates copying their watched rails."""
    try:
        check_config(mn.tm, s)
    except MachineError as exc:
        raise ReductionError(str(exc)) from exc
    aux = auxiliary_labelling(mn.step, encode(mn.tm, s))
    values = aux.as_dict()
    f = np.zeros(mn.network.n, dtype=np.uint8)
    f[mn.base.true_rail], f[mn.base.false_rail] = 1, 0

    def copy_pair(src: DualPair, dst: DualPair) -> None:
        f[dst.true_rail] = values[src.true_rail]
        f[dst.false_rail] = values[src.false_rail]

    for src, dst in zip(mn.step.input_pairs, mn.source_pairs):
        copy_pair(src, dst)
    for src, dst in zip(mn.step.gate_pairs, mn.gate_pairs):
        if dst is not None:
            copy_pair(src, dst)
    for link in mn.links:
        t, fl = f[link.watched.true_rail], f[link.watched.false_rail]
        for mid, v in zip(link.intermediates, (t, t, fl, fl)):
            f[mid] = v
        f[link.fuse[0]], f[link.fuse[1]] = 1, 0
    for pair in (mn.valve.p, mn.valve.q):
        f[pair[0]], f[pair[1]] = 1, 0
    for i, a in enumerate(mn.alarm):
        f[a] = 0 if i < mn.k else 1
    return f


def check_labelling_conditions(mn: MainNetwork, f) -> list[str]:
    """Which of the start conditions a labelling breaks (empty list: all hold).

    Checks validity of circuit, fuse and valve pairs, an evenly split alarm
    and a 2-2 split of each group of four intermediates. The circuit part is
    not compared against any particular auxiliary labelling.
    """
    problems = []
    for p in (mn.base,) + mn.circuit_pairs:
        if f[p.true_rail] == f[p.false_rail]:
            problems.append(f"dual pair {tuple(p)} invalid")
    for fp in mn.fuse_pairs + (mn.valve.p, mn.valve.q):
        if f[fp[0]] == f[fp[1]]:
            problems.append(f"pair {fp} invalid")
    zeros = sum(1 for a in mn.alarm if f[a] == 0)
    if zeros != mn.k:
        problems.append(f"alarm has {zeros} zeros, expected {mn.k}")
    for link in mn.links:
        if sum(1 for x in link.intermediates if f[x] == 0) != 2:
            problems.append(f"intermediates {link.intermediates} not split 2-2")
    return problems


@dataclass(frozen=True, eq=False)
class Verdict:
    kind: str  # "non_convergent" | "convergent" | "undetermined"
    steps: int | None = None
    limit: np.ndarray | None = None
    preperiod: int | None = None
    period: int | None = None
    budget: int | None = None

    def to_dict(self) -> dict:
        d: dict = {"verdict": self.kind}
        for key in ("steps", "preperiod", "period", "budget"):
            v = getattr(self, key)
            if v is not None:
                d[key] = v
        if self.limit is not None:
            d["limit_constant"] = bool(np.all(self.limit == self.limit[0]))
            d["limit_value"] = int(self.limit[0]) if d["limit_constant"] else None
        return d


def run_reduction_demo(mn: MainNetwork, s: TMConfig, budget: int | None = None) -> Verdict:
    f = initial_labelling(mn, s)
    _, out = dynamics.run(mn.network, f, max_steps=budget, record=False)
    if isinstance(out, dynamics.Converged):
        return Verdict("convergent", steps=out.steps, limit=out.limit)
    if isinstance(out, dynamics.Cycles):
        return Verdict("non_convergent", preperiod=out.preperiod, period=out.period)
    return Verdict("undetermined", budget=out.budget)


def pipeline_trace(mn: MainNetwork, f, steps: int) -> list[TMConfig | None]:
    """Configuration read off the source layer at each time ``0..steps``."""
    out = [mn.source_config(f)]
    for _ in range(steps):
        f = dynamics.synchronous_update(mn.network, f)
        out.append(mn.source_config(f))
    return out


def reference_iterates(mn: MainNetwork, c: TMConfig, count: int) -> list[TMConfig | None]:
    """``c`` and its successors; None from the first halt on."""
    seq: list[TMConfig | None] = [c]
    for _ in range(count - 1):
        prev = seq[-1]
        nxt = None if prev is None else tm_step(mn.tm, prev)
        seq.append(None if nxt is None or isinstance(nxt, Halted) else nxt)
    return seq


# -- isolated valve rig ------------------------------------------------------

@dataclass(frozen=True)
class Rig:
    """One dual pair, its fuse pair, the valve and the alarm; nothing else."""

    network: SocialNetwork
    pair: DualPair
    link: FuseLink
    valve: Valve
    k: int


def build_rig(k: int = 2) -> Rig:
    b = NetworkBuilder()
    p = b.new_pair()
    links = build_fuse_line(b, [p])
    valve = build_valve_alarm(b, links[0].fuse, k)
    connect_alarm(b, valve.alarm, [p])
    return Rig(b.build(), p, links[0], valve, k)
