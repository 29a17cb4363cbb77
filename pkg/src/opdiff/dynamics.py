"""Synchronous majority opinion diffusion.

Labellings are ``uint8`` numpy vectors, bit ``i`` being the opinion of
agent ``i``. A node flips exactly when strictly more of its influencers
disagree with it than agree.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .netcore import SocialNetwork

log = logging.getLogger(__name__)

LabellingLike = Union[str, Sequence[int], np.ndarray]

DEFAULT_MEMORY_CAP = 1 << 26
DEFAULT_EXHAUSTIVE_CAP = 24


class SizeMismatch(ValueError):
    pass


class CapExceeded(RuntimeError):
    """A request that would exceed a configured exhaustive-search cap."""


class MemoryCapExceeded(RuntimeError):
    """Visited-state storage hit its cap and the exact fallback was disabled."""


def as_labelling(f: LabellingLike, n: int | None = None) -> np.ndarray:
    """Coerce a bit string, sequence or array into a labelling vector."""
    if isinstance(f, str):
        if any(c not in "01" for c in f):
            raise ValueError(f"labelling string may only contain 0 and 1: {f!r}")
        arr = np.frombuffer(f.encode("ascii"), dtype=np.uint8) - ord("0")
    else:
        arr = np.asarray(f)
        if arr.ndim != 1:
            raise ValueError("labelling must be one-dimensional")
        if arr.size and not np.isin(arr, (0, 1)).all():
            raise ValueError("labelling entries must be 0 or 1")
        arr = arr.astype(np.uint8)
    if n is not None and arr.size != n:
        raise SizeMismatch(f"labelling has length {arr.size}, network has {n} agents")
    return arr.copy()


def labelling_str(f: np.ndarray) -> str:
    return "".join("1" if x else "0" for x in f)


def labelling_value(f: np.ndarray) -> int:
    """Integer with bit ``i`` equal to ``f[i]``."""
    return sum(1 << i for i, x in enumerate(f) if x)


def labelling_from_value(value: int, n: int) -> np.ndarray:
    return np.array([(value >> i) & 1 for i in range(n)], dtype=np.uint8)


def complement(f: LabellingLike) -> np.ndarray:
    return 1 - as_labelling(f)


def opinion_change(net: SocialNetwork, f: LabellingLike, i: int) -> int:
    """Opinion of agent ``i`` after one update, from the influencer lists directly."""
    f = as_labelling(f, net.n)
    if not 0 <= i < net.n:
        raise IndexError(f"node {i} out of range 0..{net.n - 1}")
    mine = int(f[i])
    agree = sum(1 for j in net.influencer_index[i] if f[j] == mine)
    disagree = len(net.influencer_index[i]) - agree
    return 1 - mine if disagree > agree else mine


def _step(net: SocialNetwork, f: np.ndarray) -> np.ndarray:
    ones = net.influence_matrix @ f.astype(np.int32)
    twice = 2 * ones
    deg = net.in_degrees
    out = f.copy()
    out[twice > deg] = 1
    out[twice < deg] = 0
    return out


def step_many(net: SocialNetwork, states: np.ndarray) -> np.ndarray:
    """Synchronous update of a batch of labellings, shape ``(batch, n)``."""
    states = np.asarray(states, dtype=np.uint8)
    if states.ndim != 2 or states.shape[1] != net.n:
        raise SizeMismatch(f"expected shape (batch, {net.n}), got {states.shape}")
    ones = (net.influence_matrix @ states.T.astype(np.int32)).T
    twice = 2 * np.asarray(ones)
    deg = net.in_degrees[None, :]
    return np.where(twice > deg, 1, np.where(twice < deg, 0, states)).astype(np.uint8)


def synchronous_update(net: SocialNetwork, f: LabellingLike) -> np.ndarray:
    return _step(net, as_labelling(f, net.n))


def is_stable(net: SocialNetwork, f: LabellingLike) -> bool:
    f = as_labelling(f, net.n)
    return bool(np.array_equal(_step(net, f), f))


@dataclass(frozen=True, eq=False)
class Converged:
    steps: int
    limit: np.ndarray
    kind = "converged"

    def to_dict(self) -> dict:
        return {"outcome": "converged", "steps": self.steps, "limit": labelling_str(self.limit)}


@dataclass(frozen=True, eq=False)
class Cycles:
    preperiod: int
    period: int
    witness: np.ndarray
    kind = "cycle"

    def to_dict(self) -> dict:
        return {"outcome": "cycle", "preperiod": self.preperiod, "period": self.period}


@dataclass(frozen=True)
class Undetermined:
    budget: int
    kind = "undetermined"

    def to_dict(self) -> dict:
        return {"outcome": "undetermined", "budget": self.budget}


Outcome = Union[Converged, Cycles, Undetermined]


@dataclass
class Trajectory:
    """States ``f_0, f_1, ...``; see :func:`run` for how the list ends."""

    states: list[np.ndarray] = field(default_factory=list)
    terminal_info: str = ""
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.states)

    def lines(self) -> list[str]:
        return [labelling_str(s) for s in self.states]


def _brent(net: SocialNetwork, x0: np.ndarray, budget: int | None) -> tuple[int, int] | None:
    """Brent's cycle finding on the update map; returns (preperiod, period)."""
    used = 0

    def step(x):
        nonlocal used
        used += 1
        if budget is not None and used > budget:
            raise _BudgetOut
        return _step(net, x)

    try:
        power = lam = 1
        tortoise = x0
        hare = step(x0)
        while not np.array_equal(tortoise, hare):
            if power == lam:
                tortoise = hare
                power *= 2
                lam = 0
            hare = step(hare)
            lam += 1
        tortoise = hare = x0
        for _ in range(lam):
            hare = step(hare)
        mu = 0
        while not np.array_equal(tortoise, hare):
            tortoise = step(tortoise)
            hare = step(hare)
            mu += 1
    except _BudgetOut:
        return None
    return mu, lam


class _BudgetOut(Exception):
    pass


def run(net: SocialNetwork, f: LabellingLike, max_steps: int | None = None, *,
        memory_cap: int = DEFAULT_MEMORY_CAP, exact_fallback: bool = True,
        record: bool = True) -> tuple[Trajectory, Outcome]:
    """Iterate the synchronous update from ``f`` until a state repeats.

    Visited states are kept in a dict keyed by their raw bytes, so repeat
    detection compares whole states. Past ``memory_cap`` stored states the
    search restarts with Brent's algorithm (constant memory, still exact)
    unless ``exact_fallback`` is false, in which case
    :class:`MemoryCapExceeded` is raised.

    ``max_steps`` bounds the number of updates; without it the run always
    ends in :class:`Converged` or :class:`Cycles`.

    The trajectory ends on the limit for a converged run and on the state
    closing the cycle (equal to ``states[preperiod]``) otherwise.
    """
    x = as_labelling(f, net.n)
    traj = Trajectory()
    seen: dict[bytes, int] = {x.tobytes(): 0}
    if record:
        traj.states.append(x)
    t = 0
    while True:
        if max_steps is not None and t >= max_steps:
            traj.terminal_info = "budget"
            return traj, Undetermined(max_steps)
        y = _step(net, x)
        t += 1
        key = y.tobytes()
        first = seen.get(key)
        if first is not None:
            period = t - first
            if period == 1:
                traj.terminal_info = "fixed point"
                return traj, Converged(first, y)
            if record:
                traj.states.append(y)
            traj.terminal_info = "cycle closed"
            return traj, Cycles(first, period, y)
        if len(seen) >= memory_cap:
            if not exact_fallback:
                raise MemoryCapExceeded(f"visited-state store reached {memory_cap} states")
            log.info("memory cap %d reached at t=%d; switching to Brent", memory_cap, t)
            seen.clear()
            traj.truncated = True
            traj.terminal_info = "memory cap: Brent fallback"
            x0 = traj.states[0] if record else as_labelling(f, net.n)
            res = _brent(net, x0, None if max_steps is None else max_steps)
            if res is None:
                return traj, Undetermined(max_steps)
            mu, lam = res
            z = x0
            for _ in range(mu):
                z = _step(net, z)
            if lam == 1:
                return traj, Converged(mu, z)
            return traj, Cycles(mu, lam, z)
        seen[key] = t
        if record:
            traj.states.append(y)
        x = y


def converges(net: SocialNetwork, f: LabellingLike, max_steps: int | None = None) -> bool | None:
    """True/False for the convergence question; None if the budget ran out."""
    _, out = run(net, f, max_steps, record=False)
    if isinstance(out, Undetermined):
        return None
    return isinstance(out, Converged)


# -- exhaustive searches ---------------------------------------------------

def _gray(idx: np.ndarray) -> np.ndarray:
    return idx ^ (idx >> 1)


def _values_to_states(values: np.ndarray, n: int) -> np.ndarray:
    bits = (values[:, None] >> np.arange(n, dtype=np.int64)[None, :]) & 1
    return bits.astype(np.uint8)


def _settle(net: SocialNetwork, states: np.ndarray, steps: int) -> np.ndarray:
    """Boolean mask: which rows are stable after at most ``steps`` updates."""
    cur = states
    for _ in range(steps):
        cur = step_many(net, cur)
    return (step_many(net, cur) == cur).all(axis=1)


def _scan_chunk(net: SocialNetwork, lo: int, hi: int, first_only: bool) -> list[int]:
    """Non-convergent labelling values among Gray-ordered indices ``lo..hi-1`` with bit 0 = 0."""
    idx = np.arange(lo, hi, dtype=np.int64)
    values = _gray(idx) << 1
    states = _values_to_states(values, net.n)
    # cheap screen: rows stable after a short batch run certainly converge
    settled = _settle(net, states, min(2 * net.n + 2, 64))
    witnesses = []
    for v, st in zip(values[~settled], states[~settled]):
        _, out = run(net, st, record=False)
        if isinstance(out, Cycles):
            witnesses.append(int(v))
            if first_only:
                break
    return witnesses


def _check_cap(net: SocialNetwork, cap: int) -> None:
    if net.n > cap:
        raise CapExceeded(f"network has {net.n} agents; exhaustive cap is {cap}")


def guarantee_search(net: SocialNetwork, *, cap: int = DEFAULT_EXHAUSTIVE_CAP,
                     chunk_size: int = 1 << 14, jobs: int = 1,
                     verify: bool = False) -> np.ndarray | None:
    """Find a labelling from which ``net`` does not converge, or None.

    Only labellings with agent 0 at opinion 0 are enumerated: complementing a
    labelling complements its whole trajectory, so the other half adds
    nothing. Chunks of Gray-code indices are scanned in order; the
    witness returned is the smallest labelling value in the first chunk
    holding one, or the smallest overall when ``verify`` is set.
    """
    _check_cap(net, cap)
    if net.n == 0:
        return None
    total = 1 << (net.n - 1)
    bounds = [(lo, min(lo + chunk_size, total)) for lo in range(0, total, chunk_size)]
    found: list[int] = []
    if jobs > 1 and len(bounds) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_scan_chunk, net, lo, hi, False) for lo, hi in bounds]
            for fut in futures:
                res = fut.result()
                if res:
                    found.extend(res)
                    if not verify:
                        for other in futures:
                            other.cancel()
                        break
    else:
        for lo, hi in bounds:
            res = _scan_chunk(net, lo, hi, False)
            if res:
                found.extend(res)
                if not verify:
                    break
    if not found:
        return None
    return labelling_from_value(min(found), net.n)


def verify_bound(net: SocialNetwork, bound: int, *, cap: int = DEFAULT_EXHAUSTIVE_CAP,
                 chunk_size: int = 1 << 14) -> bool:
    """True iff every labelling is stable after at most ``bound`` updates."""
    _check_cap(net, cap)
    if net.n == 0:
        return True
    total = 1 << (net.n - 1)
    for lo in range(0, total, chunk_size):
        hi = min(lo + chunk_size, total)
        values = np.arange(lo, hi, dtype=np.int64) << 1
        if not _settle(net, _values_to_states(values, net.n), bound).all():
            return False
    return True


def default_jobs() -> int:
    return max(1, os.cpu_count() or 1)
