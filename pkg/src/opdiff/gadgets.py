"""Dual-rail gadgets built from majority nodes.

A dual pair ``(true_rail, false_rail)`` is valid when its nodes disagree;
``(1, 0)`` reads as true and ``(0, 1)`` as false. Gate output nodes have one
influencer (copy) or three (majority), so each gadget has latency one step.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .netcore import Annotations, SocialNetwork, build_network


class GadgetError(ValueError):
    pass


@dataclass(frozen=True)
class DualPair:
    true_rail: int
    false_rail: int

    def __iter__(self):
        yield self.true_rail
        yield self.false_rail

    def as_list(self) -> list[int]:
        return [self.true_rail, self.false_rail]


@dataclass(frozen=True)
class BasePairHandle:
    pair: DualPair

    @property
    def true_rail(self) -> int:
        return self.pair.true_rail

    @property
    def false_rail(self) -> int:
        return self.pair.false_rail


class PairValue(enum.Enum):
    TRUE = "true"
    FALSE = "false"
    INVALID = "invalid"

    def as_bool(self) -> bool:
        if self is PairValue.INVALID:
            raise ValueError("invalid dual pair has no Boolean value")
        return self is PairValue.TRUE


def pair_value(f, p: DualPair) -> PairValue:
    a, b = int(f[p.true_rail]), int(f[p.false_rail])
    if a == b:
        return PairValue.INVALID
    return PairValue.TRUE if a else PairValue.FALSE


# node roles recorded by the builder
ROLE_BASE = "base"
ROLE_DUAL = "dual"
ROLE_FUSE = "fuse"
ROLE_INTERMEDIATE = "intermediate"
ROLE_VALVE_P = "valve_p"
ROLE_VALVE_Q = "valve_q"
ROLE_ALARM = "alarm"


class NetworkBuilder:
    """Accumulates nodes, edges and roles, then emits a validated network."""

    def __init__(self):
        self.n = 0
        self.edges: set[tuple[int, int]] = set()
        self.roles: dict[int, str] = {}
        self.base: BasePairHandle | None = None
        self.dual_pairs: list[DualPair] = []
        self.fuse_pairs: list[tuple[int, int]] = []
        self.valve_p: tuple[int, int] | None = None
        self.valve_q: tuple[int, int] | None = None
        self.alarm: list[int] = []

    def node(self, role: str) -> int:
        i = self.n
        self.n += 1
        self.roles[i] = role
        return i

    def edge(self, u: int, v: int) -> None:
        for x in (u, v):
            if not 0 <= x < self.n:
                raise GadgetError(f"node {x} has not been allocated")
        if u == v:
            raise GadgetError(f"self-loop on node {u}")
        if (u, v) in self.edges:
            raise GadgetError(f"duplicate edge ({u}, {v})")
        self.edges.add((u, v))

    def new_pair(self) -> DualPair:
        p = DualPair(self.node(ROLE_DUAL), self.node(ROLE_DUAL))
        self.dual_pairs.append(p)
        return p

    def _require_pair(self, p: DualPair) -> None:
        for x in p:
            if not 0 <= x < self.n:
                raise GadgetError(f"dangling input: node {x} does not exist")

    def annotations(self) -> Annotations:
        return Annotations(
            dual_pairs=tuple((p.true_rail, p.false_rail) for p in self.dual_pairs),
            base_pair=(self.base.true_rail, self.base.false_rail) if self.base else None,
            fuse_pairs=tuple(self.fuse_pairs),
            valve_p=self.valve_p,
            valve_q=self.valve_q,
            alarm=tuple(self.alarm),
            intermediates=tuple(i for i, r in sorted(self.roles.items()) if r == ROLE_INTERMEDIATE),
        )

    def build(self) -> SocialNetwork:
        return build_network(self.n, sorted(self.edges), self.annotations())


def add_base_pair(b: NetworkBuilder) -> BasePairHandle:
    if b.base is not None:
        raise GadgetError("the builder already has a base pair")
    b.base = BasePairHandle(DualPair(b.node(ROLE_BASE), b.node(ROLE_BASE)))
    return b.base


def _target(b: NetworkBuilder, out: DualPair | None) -> DualPair:
    if out is None:
        return b.new_pair()
    b._require_pair(out)
    return out


def add_nop(b: NetworkBuilder, x: DualPair, out: DualPair | None = None) -> DualPair:
    """Copy ``x`` one step later. ``out`` wires into an existing pair instead of a fresh one."""
    b._require_pair(x)
    o = _target(b, out)
    b.edge(x.true_rail, o.true_rail)
    b.edge(x.false_rail, o.false_rail)
    return o


def add_not(b: NetworkBuilder, x: DualPair, out: DualPair | None = None) -> DualPair:
    b._require_pair(x)
    o = _target(b, out)
    b.edge(x.false_rail, o.true_rail)
    b.edge(x.true_rail, o.false_rail)
    return o


def _base(b: NetworkBuilder, base: BasePairHandle | None) -> BasePairHandle:
    base = base or b.base
    if base is None:
        raise GadgetError("gadget needs the base pair; call add_base_pair first")
    return base


def add_and(b: NetworkBuilder, x: DualPair, y: DualPair, base: BasePairHandle | None = None,
            out: DualPair | None = None) -> DualPair:
    """True rail = maj(x.t, y.t, 0); false rail = maj(x.f, y.f, 1)."""
    base = _base(b, base)
    b._require_pair(x)
    b._require_pair(y)
    o = _target(b, out)
    for src in (x.true_rail, y.true_rail, base.false_rail):
        b.edge(src, o.true_rail)
    for src in (x.false_rail, y.false_rail, base.true_rail):
        b.edge(src, o.false_rail)
    return o


def add_or(b: NetworkBuilder, x: DualPair, y: DualPair, base: BasePairHandle | None = None,
           out: DualPair | None = None) -> DualPair:
    """True rail = maj(x.t, y.t, 1); false rail = maj(x.f, y.f, 0)."""
    base = _base(b, base)
    b._require_pair(x)
    b._require_pair(y)
    o = _target(b, out)
    for src in (x.true_rail, y.true_rail, base.true_rail):
        b.edge(src, o.true_rail)
    for src in (x.false_rail, y.false_rail, base.false_rail):
        b.edge(src, o.false_rail)
    return o


def add_guard(b: NetworkBuilder, x: DualPair, flag: DualPair, base: BasePairHandle | None = None,
              out: DualPair | None = None) -> DualPair:
    """Pass ``x`` through unless ``flag`` is true, in which case both rails go to 1.

    Both rails are ``rail OR flag.true_rail``, so a raised flag yields the
    invalid pair ``(1, 1)``. When ``x`` is its own flag the true rail is a
    plain copy, since ``x.t OR x.t = x.t``.
    """
    base = _base(b, base)
    b._require_pair(x)
    b._require_pair(flag)
    o = _target(b, out)
    if x == flag:
        b.edge(x.true_rail, o.true_rail)
        for src in (x.false_rail, x.true_rail, base.true_rail):
            b.edge(src, o.false_rail)
        return o
    for src in (x.true_rail, flag.true_rail, base.true_rail):
        b.edge(src, o.true_rail)
    for src in (x.false_rail, flag.true_rail, base.true_rail):
        b.edge(src, o.false_rail)
    return o


def dual_rail(bits) -> list[int]:
    """Flatten bits into their dual-rail node values ``[b0, 1-b0, b1, 1-b1, ...]``."""
    out = []
    for x in bits:
        x = 1 if x else 0
        out.extend((x, 1 - x))
    return out
