"""Directed social networks and their structural analysis.

A network is a simple irreflexive digraph over dense node ids ``0..n-1``.
An edge ``(u, v)`` means *u influences v*.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse


class NetworkError(ValueError):
    """Raised when a network violates one of its structural invariants."""


@dataclass(frozen=True)
class Annotations:
    """Role metadata attached to compiled networks.

    Only ``dual_pairs`` lists circuit pairs; the base pair is kept apart so
    that every node carries at most one role.
    """

    dual_pairs: tuple[tuple[int, int], ...] = ()
    base_pair: tuple[int, int] | None = None
    fuse_pairs: tuple[tuple[int, int], ...] = ()
    valve_p: tuple[int, int] | None = None
    valve_q: tuple[int, int] | None = None
    alarm: tuple[int, ...] = ()
    intermediates: tuple[int, ...] = ()

    def is_empty(self) -> bool:
        return not (self.dual_pairs or self.base_pair or self.fuse_pairs
                    or self.valve_p or self.valve_q or self.alarm
                    or self.intermediates)

    def role_sets(self) -> dict[str, list[int]]:
        roles = {
            "dual_pairs": [x for p in self.dual_pairs for x in p],
            "base_pair": list(self.base_pair or ()),
            "fuse_pairs": [x for p in self.fuse_pairs for x in p],
            "valve": list(self.valve_p or ()) + list(self.valve_q or ()),
            "alarm": list(self.alarm),
            "intermediates": list(self.intermediates),
        }
        return roles

    def role_of(self) -> dict[int, str]:
        """Map node id to a short role name (nodes without a role are absent)."""
        out: dict[int, str] = {}
        for a, b in self.dual_pairs:
            out[a] = out[b] = "dual"
        if self.base_pair:
            for x in self.base_pair:
                out[x] = "base"
        for a, b in self.fuse_pairs:
            out[a] = out[b] = "fuse"
        for x in self.valve_p or ():
            out[x] = "valve_p"
        for x in self.valve_q or ():
            out[x] = "valve_q"
        for x in self.alarm:
            out[x] = "alarm"
        for x in self.intermediates:
            out[x] = "intermediate"
        return out

    def validate(self, n: int) -> None:
        seen: dict[int, str] = {}
        for role, ids in self.role_sets().items():
            for x in ids:
                if not 0 <= x < n:
                    raise NetworkError(f"annotation {role}: node {x} out of range 0..{n - 1}")
                if x in seen:
                    raise NetworkError(
                        f"annotation {role}: node {x} already has role {seen[x]} (roles must be disjoint)")
                seen[x] = role
        for name, pair in (("base_pair", self.base_pair), ("valve.P", self.valve_p),
                           ("valve.Q", self.valve_q)):
            if pair is not None and len(pair) != 2:
                raise NetworkError(f"annotation {name} must be a pair")


@dataclass(frozen=True)
class SocialNetwork:
    """Immutable validated network. Build it with :func:`build_network`."""

    n: int
    edges: tuple[tuple[int, int], ...]
    influencer_index: tuple[tuple[int, ...], ...]
    influenced_index: tuple[tuple[int, ...], ...]
    annotations: Annotations = field(default_factory=Annotations)

    def influencers(self, i: int) -> list[int]:
        return influencers(self, i)

    def influenced(self, i: int) -> list[int]:
        _check_node(self, i)
        return list(self.influenced_index[i])

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @cached_property
    def in_degrees(self) -> np.ndarray:
        return np.array([len(x) for x in self.influencer_index], dtype=np.int64)

    @cached_property
    def influence_matrix(self) -> sparse.csr_matrix:
        """CSR matrix ``M`` with ``M[i, u] = 1`` iff u influences i."""
        if not self.edges:
            return sparse.csr_matrix((self.n, self.n), dtype=np.int32)
        src = np.fromiter((u for u, _ in self.edges), dtype=np.int64, count=len(self.edges))
        dst = np.fromiter((v for _, v in self.edges), dtype=np.int64, count=len(self.edges))
        data = np.ones(len(self.edges), dtype=np.int32)
        return sparse.csr_matrix((data, (dst, src)), shape=(self.n, self.n))

    @property
    def max_in_degree(self) -> int:
        return int(self.in_degrees.max()) if self.n else 0

    def with_annotations(self, annotations: Annotations) -> SocialNetwork:
        return build_network(self.n, self.edges, annotations)


def build_network(n: int, edges: Iterable[Sequence[int]],
                  annotations: Annotations | None = None) -> SocialNetwork:
    """Validate ``edges`` over ``n`` agents and index them both ways.

    Self-loops, duplicate edges and out-of-range endpoints are rejected.
    Edges are stored sorted so that every derived ordering is reproducible.
    """
    if n < 0:
        raise NetworkError(f"agent count must be non-negative, got {n}")
    norm: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for e in edges:
        if len(e) != 2:
            raise NetworkError(f"edge {e!r} is not an ordered pair")
        u, v = int(e[0]), int(e[1])
        if not (0 <= u < n and 0 <= v < n):
            raise NetworkError(f"edge ({u}, {v}) has an endpoint out of range 0..{n - 1}")
        if u == v:
            raise NetworkError(f"edge ({u}, {v}) is a self-loop; the relation must be irreflexive")
        if (u, v) in seen:
            raise NetworkError(f"duplicate edge ({u}, {v}); the graph must be simple")
        seen.add((u, v))
        norm.append((u, v))
    norm.sort()
    ins: list[list[int]] = [[] for _ in range(n)]
    outs: list[list[int]] = [[] for _ in range(n)]
    for u, v in norm:
        outs[u].append(v)
        ins[v].append(u)
    for lst in ins:
        lst.sort()
    ann = annotations if annotations is not None else Annotations()
    ann.validate(n)
    return SocialNetwork(
        n=n,
        edges=tuple(norm),
        influencer_index=tuple(tuple(x) for x in ins),
        influenced_index=tuple(tuple(x) for x in outs),
        annotations=ann,
    )


def _check_node(net: SocialNetwork, i: int) -> None:
    if not 0 <= i < net.n:
        raise IndexError(f"node {i} out of range 0..{net.n - 1}")


def influencers(net: SocialNetwork, i: int) -> list[int]:
    """The influencers of ``i``, sorted ascending."""
    _check_node(net, i)
    return list(net.influencer_index[i])


def _topological_order(net: SocialNetwork) -> list[int] | None:
    indeg = [len(x) for x in net.influencer_index]
    queue = deque(i for i in range(net.n) if indeg[i] == 0)
    order = []
    while queue:
        u = queue.popleft()
        order.append(u)
        for v in net.influenced_index[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                queue.append(v)
    return order if len(order) == net.n else None


def is_dag(net: SocialNetwork) -> bool:
    return _topological_order(net) is not None


def levels(net: SocialNetwork) -> list[int]:
    """Length of the longest path from a source to each node (DAGs only)."""
    order = _topological_order(net)
    if order is None:
        raise NetworkError("levels are only defined for acyclic networks")
    level = [0] * net.n
    for u in order:
        for v in net.influenced_index[u]:
            if level[u] + 1 > level[v]:
                level[v] = level[u] + 1
    return level


def longest_path(net: SocialNetwork) -> int:
    """Edge count of the longest path in an acyclic network."""
    lv = levels(net)
    return max(lv, default=0)


def strongly_connected_components(net: SocialNetwork) -> list[list[int]]:
    """Tarjan's algorithm, iterative. Components come out in reverse topological order."""
    n = net.n
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    adj = net.influenced_index
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, pos = work[-1]
            succ = adj[v]
            if pos < len(succ):
                work[-1] = (v, pos + 1)
                w = succ[pos]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w] and index[w] < low[v]:
                    low[v] = index[w]
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                if low[v] < low[parent]:
                    low[parent] = low[v]
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
    return comps


@dataclass(frozen=True)
class SCCDecomposition:
    membership: tuple[int, ...]
    components: tuple[tuple[int, ...], ...]
    condensation: SocialNetwork


def scc_decomposition(net: SocialNetwork) -> SCCDecomposition:
    """Partition into SCCs and build the condensation DAG.

    Components are numbered in topological order of the condensation.
    """
    comps = strongly_connected_components(net)
    comps.reverse()
    membership = [0] * net.n
    for c, nodes in enumerate(comps):
        for x in nodes:
            membership[x] = c
    cedges = {(membership[u], membership[v]) for u, v in net.edges
              if membership[u] != membership[v]}
    cond = build_network(len(comps), sorted(cedges))
    return SCCDecomposition(tuple(membership), tuple(tuple(c) for c in comps), cond)


def induced_subnetwork(net: SocialNetwork, nodes: Iterable[int]) -> tuple[SocialNetwork, list[int]]:
    """Subnetwork on ``nodes`` relabelled densely.

    Returns the network and ``mapping`` with ``mapping[new] = old``.
    Annotations are dropped.
    """
    mapping = sorted(set(int(x) for x in nodes))
    for x in mapping:
        _check_node(net, x)
    new_id = {old: new for new, old in enumerate(mapping)}
    edges = [(new_id[u], new_id[v]) for u, v in net.edges if u in new_id and v in new_id]
    return build_network(len(mapping), edges), mapping


def is_clique(net: SocialNetwork) -> bool:
    # simple + irreflexive, so the edge count alone decides
    return net.edge_count == net.n * (net.n - 1)


@dataclass(frozen=True)
class StructureReport:
    n: int
    edge_count: int
    is_dag: bool
    longest_path: int | None
    scc_count: int
    scc_membership: tuple[int, ...]
    scc_sizes: tuple[int, ...]
    is_clique: bool
    parity: str | None
    max_in_degree: int

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "edge_count": self.edge_count,
            "is_dag": self.is_dag,
            "longest_path": self.longest_path,
            "scc_count": self.scc_count,
            "scc_membership": list(self.scc_membership),
            "scc_sizes": list(self.scc_sizes),
            "is_clique": self.is_clique,
            "parity": self.parity,
            "max_in_degree": self.max_in_degree,
        }


def analyze(net: SocialNetwork) -> StructureReport:
    dag = is_dag(net)
    scc = scc_decomposition(net)
    clique = is_clique(net)
    return StructureReport(
        n=net.n,
        edge_count=net.edge_count,
        is_dag=dag,
        longest_path=longest_path(net) if dag else None,
        scc_count=len(scc.components),
        scc_membership=scc.membership,
        scc_sizes=tuple(len(c) for c in scc.components),
        is_clique=clique,
        parity=("odd" if net.n % 2 else "even") if clique else None,
        max_in_degree=net.max_in_degree,
    )


ALWAYS_CONVERGES = "always_converges"
NOT_ALWAYS_CONVERGES = "not_always_converges"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class Prediction:
    kind: str
    bound: int | None = None
    witness: tuple[int, ...] | None = None
    reason: str = ""

    def to_dict(self) -> dict:
        d = {"prediction": self.kind, "reason": self.reason}
        if self.bound is not None:
            d["bound"] = self.bound
        if self.witness is not None:
            d["witness"] = "".join(map(str, self.witness))
        return d


def predict_convergence(report: StructureReport) -> Prediction:
    """Decide convergence from structure alone where a closed-form answer exists.

    DAGs converge within their longest path; odd cliques within one step;
    even cliques cycle from any evenly split labelling.
    """
    if report.is_dag:
        return Prediction(ALWAYS_CONVERGES, bound=report.longest_path,
                          reason="acyclic: converges within the longest path length")
    if report.is_clique:
        if report.parity == "odd":
            return Prediction(ALWAYS_CONVERGES, bound=1,
                              reason="odd clique: converges after one step")
        half = report.n // 2
        witness = (0,) * half + (1,) * (report.n - half)
        return Prediction(NOT_ALWAYS_CONVERGES, witness=witness,
                          reason="even clique: any evenly split labelling flips forever")
    return Prediction(UNKNOWN, reason="neither acyclic nor a clique")
