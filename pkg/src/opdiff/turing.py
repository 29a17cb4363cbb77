"""Space-bounded toy Turing machines and their one-step circuits.

A configuration is encoded in ``n = |states| + 2m`` bits: a one-hot state
block, a one-hot head block and the tape. A move that would take the head
off the tape is a crash, and crashing configurations count as halting.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .circuit import Circuit, CircuitBuilder

MOVES = {"L": -1, "R": 1, "S": 0}


class MachineError(ValueError):
    pass


@dataclass(frozen=True)
class Transition:
    write: int
    move: str
    next: str


@dataclass(frozen=True)
class ToyTM:
    states: tuple[str, ...]
    initial: str
    halting: frozenset[str]
    tape_len: int
    delta: dict = field(hash=False)  # (state, read) -> Transition

    def __post_init__(self):
        if len(set(self.states)) != len(self.states) or not self.states:
            raise MachineError("states must be a non-empty list of distinct names")
        if self.initial not in self.states:
            raise MachineError(f"initial state {self.initial!r} is not a state")
        if not self.halting <= set(self.states):
            raise MachineError("halting states must be states")
        if self.tape_len < 1:
            raise MachineError("tape length must be at least 1")
        for (q, r), t in self.delta.items():
            if q not in self.states or t.next not in self.states:
                raise MachineError(f"transition ({q}, {r}) names an unknown state")
            if r not in (0, 1) or t.write not in (0, 1):
                raise MachineError(f"transition ({q}, {r}): symbols must be 0 or 1")
            if t.move not in MOVES:
                raise MachineError(f"transition ({q}, {r}): move must be L, R or S")
            if q in self.halting:
                raise MachineError(f"halting state {q!r} must not have transitions")
        for q in self.states:
            if q in self.halting:
                continue
            for r in (0, 1):
                if (q, r) not in self.delta:
                    raise MachineError(f"missing transition for ({q}, {r})")

    @property
    def config_bits(self) -> int:
        return len(self.states) + 2 * self.tape_len

    def state_index(self, q: str) -> int:
        return self.states.index(q)


@dataclass(frozen=True)
class TMConfig:
    state: str
    head: int
    tape: tuple[int, ...]

    def __str__(self) -> str:
        return f"{self.state},{self.head},{''.join(map(str, self.tape))}"


class Halted:
    """Marker returned by :func:`tm_step` for halting or crashing configurations."""

    def __init__(self, reason: str):
        self.reason = reason

    def __repr__(self) -> str:
        return f"Halted({self.reason!r})"


def check_config(tm: ToyTM, c: TMConfig) -> None:
    if c.state not in tm.states:
        raise MachineError(f"unknown state {c.state!r}")
    if not 0 <= c.head < tm.tape_len:
        raise MachineError(f"head {c.head} off the tape 0..{tm.tape_len - 1}")
    if len(c.tape) != tm.tape_len or any(x not in (0, 1) for x in c.tape):
        raise MachineError(f"tape must be {tm.tape_len} bits")


def tm_step(tm: ToyTM, c: TMConfig) -> TMConfig | Halted:
    check_config(tm, c)
    if c.state in tm.halting:
        return Halted("halting state")
    t = tm.delta[(c.state, c.tape[c.head])]
    head = c.head + MOVES[t.move]
    if not 0 <= head < tm.tape_len:
        return Halted("crash: moved off the tape")
    tape = list(c.tape)
    tape[c.head] = t.write
    return TMConfig(t.next, head, tuple(tape))


def tm_run(tm: ToyTM, c: TMConfig, max_steps: int) -> tuple[list[TMConfig], bool]:
    """Configurations visited from ``c``; the flag says whether it halted within the budget."""
    trace = [c]
    for _ in range(max_steps):
        nxt = tm_step(tm, trace[-1])
        if isinstance(nxt, Halted):
            return trace, True
        trace.append(nxt)
    return trace, False


def halts(tm: ToyTM, c: TMConfig) -> bool:
    """Exact: the configuration space is finite, so a repeat means divergence."""
    seen = {c}
    while True:
        nxt = tm_step(tm, c)
        if isinstance(nxt, Halted):
            return True
        if nxt in seen:
            return False
        seen.add(nxt)
        c = nxt


def encode(tm: ToyTM, c: TMConfig) -> tuple[int, ...]:
    check_config(tm, c)
    state = [1 if q == c.state else 0 for q in tm.states]
    head = [1 if j == c.head else 0 for j in range(tm.tape_len)]
    return tuple(state + head + list(c.tape))


def decode(tm: ToyTM, bits: Sequence[int]) -> TMConfig | None:
    """Inverse of :func:`encode`; None for malformed encodings."""
    k, m = len(tm.states), tm.tape_len
    if len(bits) != tm.config_bits:
        raise MachineError(f"expected {tm.config_bits} bits, got {len(bits)}")
    state, head, tape = bits[:k], bits[k:k + m], bits[k + m:]
    if sum(state) != 1 or sum(head) != 1:
        return None
    return TMConfig(tm.states[list(state).index(1)], list(head).index(1), tuple(int(x) for x in tape))


def all_configs(tm: ToyTM) -> Iterator[TMConfig]:
    for q in tm.states:
        for h in range(tm.tape_len):
            for tape in itertools.product((0, 1), repeat=tm.tape_len):
                yield TMConfig(q, h, tape)


def parse_config(tm: ToyTM, text: str) -> TMConfig:
    """Accept either ``state,head,tapebits`` or a raw encoding of ``n`` bits."""
    text = text.strip()
    if "," in text:
        state, head, tape = text.split(",")
        c = TMConfig(state, int(head), tuple(int(x) for x in tape))
        check_config(tm, c)
        return c
    c = decode(tm, [int(x) for x in text])
    if c is None:
        raise MachineError(f"malformed configuration encoding {text!r}")
    return c


def initial_config(tm: ToyTM, tape: Sequence[int] | None = None, head: int = 0) -> TMConfig:
    return TMConfig(tm.initial, head, tuple(tape) if tape is not None else (0,) * tm.tape_len)


# -- step circuit ----------------------------------------------------------

def _exactly_one_violated(cb: CircuitBuilder, bits):
    """Flag for 'not exactly one of bits is set'."""
    none_set = cb.not_(cb.or_many(bits))
    clashes = [cb.and_(a, b) for a, b in itertools.combinations(bits, 2)]
    if not clashes:
        return none_set
    return cb.or_(none_set, cb.or_many(clashes))


def step_circuit(tm: ToyTM) -> Circuit:
    """Circuit mapping the encoding of a configuration to that of its successor.

    The circuit's guard is raised for halting states, crashes and malformed
    encodings; compiled networks then emit invalid output pairs.
    """
    k, m = len(tm.states), tm.tape_len
    cb = CircuitBuilder(tm.config_bits)
    S = [cb.input(i) for i in range(k)]
    H = [cb.input(k + j) for j in range(m)]
    T = [cb.input(k + m + j) for j in range(m)]

    read = cb.or_many(cb.and_(H[j], T[j]) for j in range(m))
    not_read = cb.not_(read)
    # cond[(q, r)]: machine is in q and reads r
    cond = {}
    for q in tm.states:
        if q in tm.halting:
            continue
        s = S[tm.state_index(q)]
        cond[(q, 1)] = cb.and_(s, read)
        cond[(q, 0)] = cb.and_(s, not_read)

    def any_of(pred):
        return cb.or_many(c for key, c in cond.items() if pred(tm.delta[key]))

    move_l = any_of(lambda t: t.move == "L")
    move_r = any_of(lambda t: t.move == "R")
    stay = any_of(lambda t: t.move == "S")
    written = any_of(lambda t: t.write == 1)

    next_state = [any_of(lambda t, q=q: t.next == q) for q in tm.states]
    next_head = []
    for j in range(m):
        terms = [cb.and_(H[j], stay)]
        if j > 0:
            terms.append(cb.and_(H[j - 1], move_r))
        if j < m - 1:
            terms.append(cb.and_(H[j + 1], move_l))
        next_head.append(cb.or_many(terms))
    next_tape = []
    for j in range(m):
        keep = cb.and_(cb.not_(H[j]), T[j])
        put = cb.and_(H[j], written)
        next_tape.append(cb.or_(keep, put))

    flags = [S[tm.state_index(q)] for q in tm.states if q in tm.halting]
    flags.append(_exactly_one_violated(cb, S))
    flags.append(_exactly_one_violated(cb, H))
    flags.append(cb.and_(H[0], move_l))
    flags.append(cb.and_(H[m - 1], move_r))
    guard = cb.or_many(flags)
    return cb.build(next_state + next_head + next_tape, guard=guard)


def step_reference(tm: ToyTM, bits: Sequence[int]) -> tuple[int, ...] | None:
    """Successor encoding, or None when the circuit must flag the input."""
    c = decode(tm, bits)
    if c is None:
        return None
    nxt = tm_step(tm, c)
    if isinstance(nxt, Halted):
        return None
    return encode(tm, nxt)


# -- catalog ---------------------------------------------------------------

def _tm(states, initial, halting, m, table) -> ToyTM:
    delta = {(q, r): Transition(w, mv, nx) for (q, r), (w, mv, nx) in table.items()}
    return ToyTM(tuple(states), initial, frozenset(halting), m, delta)


def immediate_halt(m: int = 1) -> ToyTM:
    """Single halting state: every configuration halts at once."""
    return _tm(["h"], "h", ["h"], m, {})


def fixed_point_loop(m: int = 1) -> ToyTM:
    """Single state that rewrites the read symbol and stays: diverges, configuration constant."""
    return _tm(["q"], "q", [], m, {("q", 0): (0, "S", "q"), ("q", 1): (1, "S", "q")})


def ping_pong(m: int = 3) -> ToyTM:
    """Walks right while reading 0, turns on a 1; walking left likewise.

    From a tape with 1s at both ends the head bounces between them forever;
    with no 1 ahead it walks off the tape and crashes.
    """
    return _tm(["R", "L"], "R", [], m, {
        ("R", 0): (0, "R", "R"), ("R", 1): (1, "L", "L"),
        ("L", 0): (0, "L", "L"), ("L", 1): (1, "R", "R"),
    })


def binary_counter(m: int = 3) -> ToyTM:
    """Adds one to the number ending at the head cell (most significant bit at cell 0).

    The carry runs left; it halts after writing the 1, or crashes on overflow.
    """
    return _tm(["inc", "done"], "inc", ["done"], m, {
        ("inc", 1): (0, "L", "inc"), ("inc", 0): (1, "S", "done"),
    })


CATALOG = {
    "immediate_halt": immediate_halt,
    "fixed_point_loop": fixed_point_loop,
    "ping_pong": ping_pong,
    "binary_counter": binary_counter,
}
