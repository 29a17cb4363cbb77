"""Command-line front end.

Exit codes: 0 success, 2 validation failure, 3 refusal (cap or budget), 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

from . import circuit as circ
from . import dynamics, formats, netcore, reduction, turing
from .dot import to_dot

EXIT_OK, EXIT_INVALID, EXIT_REFUSED, EXIT_IO = 0, 2, 3, 4


class CLIError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass
class RunReport:
    outcome: str
    steps: int | None = None
    preperiod: int | None = None
    period: int | None = None
    limit: str | None = None
    budget: int | None = None
    wall_time: float = 0.0
    states_explored: int = 0

    @classmethod
    def from_outcome(cls, out: dynamics.Outcome, wall_time: float) -> RunReport:
        if isinstance(out, dynamics.Converged):
            return cls("converged", steps=out.steps, limit=dynamics.labelling_str(out.limit),
                       wall_time=wall_time, states_explored=out.steps + 1)
        if isinstance(out, dynamics.Cycles):
            return cls("cycle", preperiod=out.preperiod, period=out.period, wall_time=wall_time,
                       states_explored=out.preperiod + out.period)
        return cls("undetermined", budget=out.budget, wall_time=wall_time,
                   states_explored=out.budget + 1)

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


def _emit(obj) -> None:
    print(json.dumps(obj, separators=(",", ":")))


def _load(path: str, parser):
    try:
        obj = formats.read_json(path)
    except OSError as exc:
        raise CLIError(f"cannot read {path}: {exc.strerror or exc}", EXIT_IO)
    except json.JSONDecodeError as exc:
        raise CLIError(f"{path}: JSON parse error: {exc}", EXIT_INVALID)
    try:
        return parser(obj)
    except formats.LOAD_ERRORS as exc:
        raise CLIError(f"{path}: {exc}", EXIT_INVALID)


def _write(path: str, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CLIError(f"cannot write {path}: {exc.strerror or exc}", EXIT_IO)


def _labelling(text: str, n: int):
    try:
        return dynamics.as_labelling(text, n)
    except ValueError as exc:
        raise CLIError(str(exc), EXIT_INVALID)


def cmd_validate(args) -> int:
    net = _load(args.network, formats.network_from_json)
    _emit({"ok": True, "n": net.n, "edges": net.edge_count})
    return EXIT_OK


def cmd_simulate(args) -> int:
    net = _load(args.network, formats.network_from_json)
    f = _labelling(args.labelling, net.n)
    t0 = time.perf_counter()
    traj, out = dynamics.run(net, f, max_steps=args.steps, record=args.trace_out is not None)
    report = RunReport.from_outcome(out, time.perf_counter() - t0)
    if args.trace_out:
        _write(args.trace_out, formats.trace_text(traj, out))
    _emit(report.to_dict())
    return EXIT_REFUSED if isinstance(out, dynamics.Undetermined) else EXIT_OK


def cmd_guarantee(args) -> int:
    net = _load(args.network, formats.network_from_json)
    try:
        w = dynamics.guarantee_search(net, cap=args.max_n, jobs=args.jobs, verify=args.verify)
    except dynamics.CapExceeded as exc:
        raise CLIError(str(exc), EXIT_REFUSED)
    if w is None:
        _emit({"result": "all labellings converge"})
    else:
        _emit({"result": "witness", "labelling": dynamics.labelling_str(w)})
    return EXIT_OK


def cmd_analyze(args) -> int:
    net = _load(args.network, formats.network_from_json)
    report = netcore.analyze(net)
    out = report.to_dict()
    out.update(netcore.predict_convergence(report).to_dict())
    _emit(out)
    return EXIT_OK


def cmd_compile(args) -> int:
    c = _load(args.circuit, formats.circuit_from_json)
    cc = circ.compile_circuit(c)
    _write(args.output, json.dumps(formats.network_to_json(cc.network)) + "\n")
    if args.map:
        _write(args.map, json.dumps(cc.map_json()) + "\n")
    _emit({"nodes": cc.network.n, "edges": cc.network.edge_count, "h": cc.h})
    return EXIT_OK


def _load_tm(spec: str) -> turing.ToyTM:
    if not Path(spec).exists() and spec in turing.CATALOG:
        return turing.CATALOG[spec]()
    return _load(spec, formats.tm_from_json)


def cmd_reduce(args) -> int:
    tm = _load_tm(args.machine)
    try:
        s = turing.parse_config(tm, args.start) if args.start else turing.initial_config(tm)
        mn = reduction.assemble_main_network(tm, args.k)
    except (turing.MachineError, reduction.ReductionError, ValueError) as exc:
        raise CLIError(str(exc), EXIT_INVALID)
    if args.output:
        _write(args.output, json.dumps(formats.network_to_json(mn.network)) + "\n")
    if args.labelling:
        f = reduction.initial_labelling(mn, s)
        _write(args.labelling, dynamics.labelling_str(f) + "\n")
    manifest = mn.manifest()
    if args.manifest:
        _write(args.manifest, json.dumps(manifest) + "\n")
    summary = {k: manifest[k] for k in ("h", "k", "n_config", "nodes", "edges", "max_in_degree")}
    summary["start"] = str(s)
    code = EXIT_OK
    if args.demo:
        verdict = reduction.run_reduction_demo(mn, s, args.budget)
        summary.update(verdict.to_dict())
        summary["machine_halts"] = turing.halts(tm, s)
        if verdict.kind == "undetermined":
            code = EXIT_REFUSED
    _emit(summary)
    return code


def cmd_export_dot(args) -> int:
    net = _load(args.network, formats.network_from_json)
    f = _labelling(args.labelling, net.n) if args.labelling else None
    text = to_dot(net, f)
    if args.output:
        _write(args.output, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_machine(args) -> int:
    if args.name not in turing.CATALOG:
        raise CLIError(f"unknown machine {args.name!r}; choose from {sorted(turing.CATALOG)}", EXIT_INVALID)
    tm = turing.CATALOG[args.name](args.tape_len) if args.tape_len else turing.CATALOG[args.name]()
    _emit(formats.tm_to_json(tm))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="opdiff", description="Majority opinion diffusion toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check a network JSON file")
    s.add_argument("network")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("simulate", help="run the synchronous update from a labelling")
    s.add_argument("network")
    s.add_argument("labelling", help="bit string, character i is agent i's opinion")
    s.add_argument("--steps", type=int, default=None, help="update budget")
    s.add_argument("--trace-out", default=None)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("guarantee", help="search for a non-convergent labelling")
    s.add_argument("network")
    s.add_argument("--max-n", type=int, default=dynamics.DEFAULT_EXHAUSTIVE_CAP)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--verify", action="store_true", help="scan everything, report the smallest witness")
    s.set_defaults(func=cmd_guarantee)

    s = sub.add_parser("analyze", help="structural report and convergence prediction")
    s.add_argument("network")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("compile", help="compile a circuit JSON to a network")
    s.add_argument("circuit")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--map", default=None)
    s.set_defaults(func=cmd_compile)

    s = sub.add_parser("reduce", help="assemble the main network for a toy machine")
    s.add_argument("machine", help="machine JSON path or catalog name")
    s.add_argument("--start", default=None, help="state,head,tape or an n-bit encoding")
    s.add_argument("-o", "--output", default=None)
    s.add_argument("--labelling", default=None)
    s.add_argument("--manifest", default=None)
    s.add_argument("-k", type=int, default=2)
    s.add_argument("--demo", action="store_true")
    s.add_argument("--budget", type=int, default=None)
    s.set_defaults(func=cmd_reduce)

    s = sub.add_parser("export-dot", help="render a network as Graphviz DOT")
    s.add_argument("network")
    s.add_argument("--labelling", default=None)
    s.add_argument("-o", "--output", default=None)
    s.set_defaults(func=cmd_export_dot)

    s = sub.add_parser("machine", help="print a catalog machine as JSON")
    s.add_argument("name")
    s.add_argument("--tape-len", type=int, default=None)
    s.set_defaults(func=cmd_machine)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
