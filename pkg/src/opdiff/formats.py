"""JSON exchange formats for networks, circuits, machines and traces."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .circuit import Circuit, CircuitError, Gate, Ref, ARITY
from .dynamics import Outcome, Trajectory
from .netcore import Annotations, NetworkError, SocialNetwork, build_network
from .turing import MachineError, ToyTM, Transition


class FormatError(ValueError):
    pass


def _pair(x, what: str) -> tuple[int, int]:
    if not isinstance(x, (list, tuple)) or len(x) != 2:
        raise FormatError(f"{what} must be a two-element list")
    return int(x[0]), int(x[1])


def annotations_from_json(obj: dict | None) -> Annotations:
    if not obj:
        return Annotations()
    valve = obj.get("valve") or {}
    return Annotations(
        dual_pairs=tuple(_pair(p, "dual pair") for p in obj.get("dual_pairs", [])),
        base_pair=_pair(obj["base_pair"], "base_pair") if obj.get("base_pair") is not None else None,
        fuse_pairs=tuple(_pair(p, "fuse pair") for p in obj.get("fuse_pairs", [])),
        valve_p=_pair(valve["P"], "valve P") if "P" in valve else None,
        valve_q=_pair(valve["Q"], "valve Q") if "Q" in valve else None,
        alarm=tuple(int(x) for x in obj.get("alarm", [])),
        intermediates=tuple(int(x) for x in obj.get("intermediates", [])),
    )


def annotations_to_json(a: Annotations) -> dict:
    out: dict[str, Any] = {}
    if a.dual_pairs:
        out["dual_pairs"] = [list(p) for p in a.dual_pairs]
    if a.base_pair is not None:
        out["base_pair"] = list(a.base_pair)
    if a.fuse_pairs:
        out["fuse_pairs"] = [list(p) for p in a.fuse_pairs]
    if a.valve_p is not None or a.valve_q is not None:
        out["valve"] = {}
        if a.valve_p is not None:
            out["valve"]["P"] = list(a.valve_p)
        if a.valve_q is not None:
            out["valve"]["Q"] = list(a.valve_q)
    if a.alarm:
        out["alarm"] = list(a.alarm)
    if a.intermediates:
        out["intermediates"] = list(a.intermediates)
    return out


def network_from_json(obj: Any) -> SocialNetwork:
    if not isinstance(obj, dict) or "n" not in obj or "edges" not in obj:
        raise FormatError('network JSON needs "n" and "edges"')
    if not isinstance(obj["n"], int):
        raise FormatError('"n" must be an integer')
    edges = obj["edges"]
    if not isinstance(edges, list):
        raise FormatError('"edges" must be a list')
    return build_network(obj["n"], edges, annotations_from_json(obj.get("annotations")))


def network_to_json(net: SocialNetwork) -> dict:
    out: dict[str, Any] = {"n": net.n, "edges": [list(e) for e in net.edges]}
    if not net.annotations.is_empty():
        out["annotations"] = annotations_to_json(net.annotations)
    return out


def _ref(obj: Any) -> Ref:
    if not isinstance(obj, dict) or len(obj) != 1:
        raise FormatError(f'reference must be {{"input": j}} or {{"gate": i}}, got {obj!r}')
    (kind, idx), = obj.items()
    if kind not in ("input", "gate") or not isinstance(idx, int):
        raise FormatError(f"bad reference {obj!r}")
    return Ref(kind, idx)


def circuit_from_json(obj: Any) -> Circuit:
    try:
        k = obj["inputs"]
        gates = []
        for pos, g in enumerate(obj["gates"]):
            if g["op"] not in ARITY:
                raise FormatError(f"gate {g.get('id', pos)}: unknown op {g['op']!r}")
            gates.append(Gate(int(g["id"]), g["op"], tuple(_ref(r) for r in g.get("args", []))))
        gates.sort(key=lambda g: g.id)
        outputs = tuple(_ref(r) for r in obj["outputs"])
        guard = _ref(obj["halt_flag"]) if obj.get("halt_flag") is not None else None
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed circuit JSON: {exc}") from exc
    return Circuit(int(k), tuple(gates), outputs, guard)


def circuit_to_json(c: Circuit) -> dict:
    out: dict[str, Any] = {
        "inputs": c.input_count,
        "gates": [{"id": g.id, "op": g.op, "args": [r.to_json() for r in g.args]} for g in c.gates],
        "outputs": [r.to_json() for r in c.outputs],
    }
    if c.guard is not None:
        out["halt_flag"] = c.guard.to_json()
    return out


def tm_from_json(obj: Any) -> ToyTM:
    try:
        delta = {}
        for t in obj["delta"]:
            key = (t["state"], int(t["read"]))
            if key in delta:
                raise FormatError(f"duplicate transition for {key}")
            delta[key] = Transition(int(t["write"]), t["move"], t["next"])
        return ToyTM(tuple(obj["states"]), obj["initial"], frozenset(obj.get("halting", [])),
                     int(obj["tape_len"]), delta)
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed machine JSON: {exc}") from exc


def tm_to_json(tm: ToyTM) -> dict:
    return {
        "states": list(tm.states),
        "initial": tm.initial,
        "halting": sorted(tm.halting),
        "tape_len": tm.tape_len,
        "delta": [{"state": q, "read": r, "write": t.write, "move": t.move, "next": t.next}
                  for (q, r), t in sorted(tm.delta.items())],
    }


def read_json(path: str | Path) -> Any:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_json(path: str | Path, obj: Any) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=None, separators=(",", ":"))
        fh.write("\n")


def load_network(path: str | Path) -> SocialNetwork:
    return network_from_json(read_json(path))


def trace_text(traj: Trajectory, outcome: Outcome) -> str:
    lines = traj.lines()
    lines.append(json.dumps(outcome.to_dict(), separators=(",", ":")))
    return "\n".join(lines) + "\n"


def parse_trace(text: str) -> tuple[list[str], dict]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise FormatError("empty trace")
    return lines[:-1], json.loads(lines[-1])


LOAD_ERRORS = (FormatError, NetworkError, CircuitError, MachineError, json.JSONDecodeError)
