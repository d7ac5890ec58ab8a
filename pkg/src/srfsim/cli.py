"""``srfsim`` command line: check, simulate, compare, derive.

Exit codes: 0 success, 1 usage, 2 scenario error, 3 simulation error.
"""

from __future__ import annotations

import argparse
import contextlib
import sys
from pathlib import Path

from .errors import (IllegalParent, ParseError, SrfSimError, TopologyMismatch,
                     ValidationError)
from .keychain import KeyLabel, derive_path, root_key
from .metrics import (RunResult, emit_csv, emit_transcript_tsv, savings_percent,
                      total_cost)
from .netmodel import Scenario, parse_scenario
from .simulator import run

EXIT_OK, EXIT_USAGE, EXIT_SCENARIO, EXIT_SIM = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _u64(text: str) -> int:
    value = int(text, 10)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="srfsim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("check", help="parse and validate a scenario")
    c.add_argument("--scenario", required=True)

    s = sub.add_parser("simulate", help="run one mode and write a CSV row")
    s.add_argument("--scenario", required=True)
    s.add_argument("--mode", required=True, choices=("baseline", "srf"))
    s.add_argument("--seed", type=_u64, default=0)
    s.add_argument("--csv")
    s.add_argument("--transcript")

    m = sub.add_parser("compare", help="run baseline and srf, write the savings row")
    m.add_argument("--scenario", required=True)
    m.add_argument("--seed", type=_u64, default=0)
    m.add_argument("--csv")

    d = sub.add_parser("derive", help="print keys along a label path below a root key")
    d.add_argument("--root", required=True, help="64 hex chars of K_SEAF material")
    d.add_argument("--path", required=True, help="comma-separated labels, e.g. K_AMF,K_SRF")
    d.add_argument("--node-id", default="node")
    d.add_argument("--counter", type=_u64, default=0)
    d.add_argument("--out")
    return p


def _load(path: str) -> Scenario:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    return parse_scenario(data)


@contextlib.contextmanager
def _sink(path: str | None):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _simulate(scn: Scenario, mode: str, seed: int):
    return run(scn.topology, scn.trace, mode, seed, scn.config)


def cmd_check(args) -> int:
    scn = _load(args.scenario)
    print(f"OK {len(scn.topology.nodes)} {len(scn.topology.links)} {len(scn.trace)}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    scn = _load(args.scenario)
    ledger, _, _ = _simulate(scn, args.mode, args.seed)
    row = RunResult(Path(args.scenario).stem, args.mode, args.seed, len(ledger),
                    total_cost(ledger))
    with _sink(args.csv) as fh:
        emit_csv([row], fh)
    if args.transcript:
        with _sink(args.transcript) as fh:
            emit_transcript_tsv(ledger, fh)
    return EXIT_OK


def cmd_compare(args) -> int:
    scn = _load(args.scenario)
    base, _, _ = _simulate(scn, "baseline", args.seed)
    srf, _, _ = _simulate(scn, "srf", args.seed)
    b, s = total_cost(base), total_cost(srf)
    pct = savings_percent(b, s)
    row = RunResult(Path(args.scenario).stem, "compare", args.seed, len(srf), s, pct)
    with _sink(args.csv) as fh:
        emit_csv([row], fh)
    if args.csv:
        print(f"baseline {len(base)} msgs {b} hops; srf {len(srf)} msgs {s} hops; "
              f"savings {pct}%")
    return EXIT_OK


def cmd_derive(args) -> int:
    try:
        root = bytes.fromhex(args.root)
        if len(args.root) != 64 or len(root) != 32:
            raise ValueError
    except ValueError:
        raise UsageError("--root must be 64 hex characters") from None
    try:
        labels = [KeyLabel.parse(x.strip()) for x in args.path.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not labels:
        raise UsageError("--path is empty")
    try:
        keys = derive_path(root_key(root), labels, args.node_id, args.counter)
    except (IllegalParent, ValueError) as exc:
        raise UsageError(f"illegal path: {exc}") from None
    with _sink(args.out) as fh:
        for key in keys:
            fh.write(key.hex() + "\n")
    return EXIT_OK


COMMANDS = {"check": cmd_check, "simulate": cmd_simulate, "compare": cmd_compare,
            "derive": cmd_derive}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ValidationError, TopologyMismatch) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except SrfSimError as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIM
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_SIM


if __name__ == "__main__":
    sys.exit(main())
