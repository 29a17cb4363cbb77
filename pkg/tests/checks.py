"""Exhaustive checkers over small fuse/valve rigs, shared by unit and acceptance tests."""

from __future__ import annotations

import numpy as np

from opdiff.dynamics import step_many
from opdiff.gadgets import NetworkBuilder
from opdiff.reduction import build_fuse_line, build_rig


def _all_states(width: int) -> np.ndarray:
    values = np.arange(1 << width, dtype=np.int64)
    return ((values[:, None] >> np.arange(width)[None, :]) & 1).astype(np.uint8)


def fuse_line_rig(length: int = 3):
    b = NetworkBuilder()
    pairs = [b.new_pair() for _ in range(length)]
    links = build_fuse_line(b, pairs)
    return b.build(), pairs, links


def fuse_step_violations(length: int = 3, horizon: int = 3, consistent: bool = True) -> tuple[int, int]:
    """Check the fuse-line latch on every state that can occur at some time t >= 1.

    At such times each group of four intermediates is a copy of its watched
    pair's rails one step earlier, so it has the form (a, a, b, b). Monitored
    pairs and fuse pairs are unconstrained. Returns (cases checked,
    violations), where a case is one (state, invalid fuse pair) combination
    and a violation is the pair turning valid again, or its successor being
    valid, at any of the next ``horizon`` steps. With ``consistent`` off
    the intermediates are left unconstrained too, which the latch does not
    survive.
    """
    net, pairs, links = fuse_line_rig(length)
    free = [x for p in pairs for x in p] + [x for link in links for x in link.fuse]
    mids = [link.intermediates for link in links]
    if consistent:
        raw = _all_states(len(free) + 2 * length)
        states = np.zeros((raw.shape[0], net.n), dtype=np.uint8)
        states[:, free] = raw[:, :len(free)]
        for j, (m0, m1, m2, m3) in enumerate(mids):
            states[:, m0] = states[:, m1] = raw[:, len(free) + 2 * j]
            states[:, m2] = states[:, m3] = raw[:, len(free) + 2 * j + 1]
    else:
        states = _all_states(net.n)
    future = [states]
    for _ in range(horizon):
        future.append(step_many(net, future[-1]))
    cases = violations = 0
    for j, link in enumerate(links):
        u, v = link.fuse
        invalid = states[:, u] == states[:, v]
        cases += int(invalid.sum())
        bad = np.zeros(states.shape[0], dtype=bool)
        for later in future[1:]:
            bad |= later[:, u] != later[:, v]
            if j + 1 < len(links):
                su, sv = links[j + 1].fuse
                bad |= later[:, su] != later[:, sv]
        violations += int((bad & invalid).sum())
    return cases, violations


def alarm_conditions(rig, states: np.ndarray) -> dict[str, np.ndarray]:
    fu, fv = rig.link.fuse
    p0, p1 = rig.valve.p
    q0, q1 = rig.valve.q
    zeros = (states[:, list(rig.valve.alarm)] == 0).sum(axis=1)
    return {
        "a": states[:, fu] == states[:, fv],
        "b": states[:, p0] == states[:, p1],
        "c": states[:, q0] == states[:, q1],
        "d": zeros != rig.k,
    }


def alarm_violations(k: int = 2, starts: int = 0, alarm_by: int = 3,
                     agree_by: int = 6) -> dict[str, tuple[int, int, int]]:
    """For each trigger condition: (states satisfying it, alarm-late count, agreement-late count).

    Every rig state is used as the time-t state; ``starts`` extra updates are
    applied first so that only states reachable at time >= ``starts`` are
    checked. The alarm must agree at some time <= t + ``alarm_by`` and keep
    agreeing through t + ``agree_by``, when every rig node must agree.
    """
    rig = build_rig(k)
    net = rig.network
    states = _all_states(net.n)
    for _ in range(starts):
        states = np.unique(step_many(net, states), axis=0)
    horizon = max(alarm_by, agree_by)
    seq = [states]
    for _ in range(horizon):
        seq.append(step_many(net, seq[-1]))
    alarm = list(rig.valve.alarm)
    off = [(s[:, alarm] == s[:, alarm[:1]]).all(axis=1) for s in seq]
    went_off = np.any(off[:alarm_by + 1], axis=0)
    alarm_ok = went_off & np.all(off[alarm_by:], axis=0)
    final = seq[agree_by]
    agree = (final == final[:, :1]).all(axis=1)
    out = {}
    for name, mask in alarm_conditions(rig, states).items():
        out[name] = (int(mask.sum()), int((mask & ~alarm_ok).sum()), int((mask & ~agree).sum()))
    return out
