"""Command line front end: batch analysis, match play, and the server.

Subcommands: test (sigma report for a string), enumerate (level sets and
masses), play / tournament (matches), dovetail (universal sigma, with a
resumable state file), serve (the HTTP/WS service), audit (offline
commitment verification of a session log).

Exit codes: 0 success, 1 usage error, 2 budget refusal.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

from .arena import run_match, tournament
from .bank import BANK_NAMES, get_detector
from .bits import BitString
from .detectors import (
    Budget,
    BudgetExceeded,
    DEFAULT_FUEL,
    SIGNIFICANCE_THRESHOLD,
    enumerate_level_set,
    test_significance,
)
from .distributions import PDetector, make_distribution, p_level_set_mass
from .universal import Frontier, UniversalReport, dovetail_sigma

USAGE_ERROR = 1
BUDGET_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write("error: %s\n" % message)
        raise SystemExit(USAGE_ERROR)


def _read_bits(path: str) -> BitString:
    if path == "-":
        text = sys.stdin.read()
    else:
        with open(path, "r", encoding="ascii") as fh:
            text = fh.read()
    cleaned = "".join(text.split())
    if any(c not in "01" for c in cleaned):
        raise ValueError("input must contain only 0s, 1s, and whitespace")
    return BitString(cleaned)


def _write_out(path: Optional[str], text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _record(fields: dict) -> str:
    return " ".join("%s:%s" % (k, v) for k, v in fields.items()) + "\n"


# ---------------------------------------------------------------- commands

def _cmd_test(args) -> int:
    y = _read_bits(args.input)
    names = args.detectors.split(",") if args.detectors else list(BANK_NAMES)
    budget = Budget(fuel=args.fuel)
    out = []
    for name in names:
        d = get_detector(name)
        verdict = test_significance(d, y, args.threshold, budget)
        report = verdict.report
        if args.exact and not report.exact:
            sys.stderr.write(
                "error: no exact sigma for %s within the budget\n" % name
            )
            return BUDGET_ERROR
        out.append(
            _record(
                {
                    "detector": name,
                    "length": len(y),
                    "sigma": report.sigma,
                    "threshold": args.threshold,
                    "significant": "true" if verdict.significant else "false",
                    "exact": "true" if report.exact else "false",
                    "witness": str(report.witness) if report.witness else "-",
                }
            )
        )
    sys.stdout.write("".join(out))
    return 0


def _cmd_enumerate(args) -> int:
    d = get_detector(args.detector)
    fields = {"detector": args.detector, "n": args.n, "m": args.m}
    if args.distribution is not None:
        dist = make_distribution(args.distribution)
        mass = p_level_set_mass(PDetector(d, dist), args.n, args.m)
        fields["distribution"] = args.distribution
        fields["mass"] = mass
        fields["bound"] = "1/%d" % (1 << args.m)
    else:
        members = enumerate_level_set(d, args.n, args.m)
        fields["count"] = len(members)
        fields["bound"] = 1 << max(args.n - args.m, 0)
    sys.stdout.write(_record(fields))
    return 0


def _cmd_play(args) -> int:
    log = run_match(
        args.alice, args.bob, args.rounds, args.seed, args.threshold
    )
    _write_out(args.out, log.to_jsonl())
    return 0


def _cmd_tournament(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        config = json.load(fh)
    try:
        alice_specs = list(config["alice"])
        bob_specs = list(config["bob"])
        rounds = int(config["rounds"])
        seeds = [int(s) for s in config["seeds"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError("config needs alice, bob, rounds, seeds: %s" % exc)
    threshold = int(config.get("threshold", SIGNIFICANCE_THRESHOLD))
    rows = tournament(alice_specs, bob_specs, rounds, seeds, threshold)
    text = "".join(
        json.dumps(row, sort_keys=True, separators=(",", ":")) + "\n"
        for row in rows
    )
    _write_out(args.out, text)
    return 0


def _parse_frontier(text: str) -> Frontier:
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError("frontier must be program_bits,input_bits,fuel")
    return Frontier(int(parts[0]), int(parts[1]), int(parts[2]))


def _load_report(path: str) -> UniversalReport:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    witness = data["witness"]
    return UniversalReport(
        subject=BitString(data["subject"]),
        sigma_u=data["sigma_u"],
        witness=BitString(witness) if witness is not None else None,
        fuel_spent=data["fuel_spent"],
        frontier=Frontier(**data["frontier"]),
    )


def _dump_report(report: UniversalReport) -> dict:
    return {
        "subject": str(report.subject),
        "sigma_u": report.sigma_u,
        "witness": str(report.witness) if report.witness is not None else None,
        "fuel_spent": report.fuel_spent,
        "frontier": {
            "program_bits": report.frontier.program_bits,
            "input_bits": report.frontier.input_bits,
            "fuel": report.frontier.fuel,
        },
    }


def _cmd_dovetail(args) -> int:
    y = _read_bits(args.input)
    frontier = _parse_frontier(args.frontier)
    resume = None
    if args.state and os.path.exists(args.state):
        resume = _load_report(args.state)
    try:
        report = dovetail_sigma(y, frontier, resume_from=resume)
    except ValueError as exc:
        sys.stderr.write("error: %s\n" % exc)
        return BUDGET_ERROR
    if args.state:
        with open(args.state, "w", encoding="utf-8") as fh:
            json.dump(_dump_report(report), fh, sort_keys=True)
            fh.write("\n")
    sys.stdout.write(
        _record(
            {
                "sigma": report.sigma_u,
                "witness": str(report.witness) if report.witness else "-",
                "fuel_spent": report.fuel_spent,
                "frontier": "%d,%d,%d"
                % (frontier.program_bits, frontier.input_bits, frontier.fuel),
            }
        )
    )
    return 0


def _cmd_serve(args) -> int:
    from .http import serve

    serve(args.port, args.state_dir, args.seed)
    return 0


def _cmd_audit(args) -> int:
    from .service import audit_records

    if args.log:
        with open(args.log, "r", encoding="ascii") as fh:
            text = fh.read()
    else:
        path = os.path.join(args.state_dir, args.session + ".log")
        with open(path, "r", encoding="ascii") as fh:
            text = fh.read()
    report = audit_records(text)
    sys.stdout.write(
        _record(
            {
                "reveals": report["reveals"],
                "verified": report["verified"],
                "mismatches": ",".join(map(str, report["mismatches"])) or "-",
                "ok": "true" if report["ok"] else "false",
            }
        )
    )
    return 0 if report["ok"] else USAGE_ERROR


# ---------------------------------------------------------------- dispatch

def _build_parser() -> _Parser:
    parser = _Parser(prog="pennies", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("test", help="sigma report for a string")
    p.add_argument("--input", required=True, help="file of 0/1 text, or -")
    p.add_argument("--detectors", default=None, help="comma-separated names")
    p.add_argument("--threshold", type=int, default=SIGNIFICANCE_THRESHOLD)
    p.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    p.add_argument("--exact", action="store_true",
                   help="refuse lower-bound answers")
    p.set_defaults(run=_cmd_test)

    p = sub.add_parser("enumerate", help="level sets and masses")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--detector", default="per")
    p.add_argument("--distribution", default=None)
    p.set_defaults(run=_cmd_enumerate)

    p = sub.add_parser("play", help="one match, JSONL log")
    p.add_argument("--alice", default="tester")
    p.add_argument("--bob", required=True)
    p.add_argument("--rounds", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=int, default=SIGNIFICANCE_THRESHOLD)
    p.add_argument("--out", default=None)
    p.set_defaults(run=_cmd_play)

    p = sub.add_parser("tournament", help="spec cross-product over seeds")
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--out", default=None)
    p.set_defaults(run=_cmd_tournament)

    p = sub.add_parser("dovetail", help="universal sigma within a frontier")
    p.add_argument("--input", required=True)
    p.add_argument("--frontier", default="18,4,2048",
                   help="program_bits,input_bits,fuel")
    p.add_argument("--state", default=None,
                   help="resume file; read if present, always rewritten")
    p.set_defaults(run=_cmd_dovetail)

    p = sub.add_parser("serve", help="run the HTTP/WS service")
    p.add_argument("--port", type=int,
                   default=int(os.environ.get("PM_PORT", "8642")))
    p.add_argument("--state-dir",
                   default=os.environ.get("PM_STATE_DIR", "pennies-state"))
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(run=_cmd_serve)

    p = sub.add_parser("audit", help="verify commitments in a session log")
    p.add_argument("--log", default=None, help="session log file")
    p.add_argument("--state-dir", default=None)
    p.add_argument("--session", default=None)
    p.set_defaults(run=_cmd_audit)

    return parser


def cli_dispatch(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_ERROR
    if getattr(args, "command", None) is None:
        parser.print_usage(sys.stderr)
        return USAGE_ERROR
    if args.command == "audit" and not args.log and not (
        args.state_dir and args.session
    ):
        sys.stderr.write("error: audit needs --log or --state-dir/--session\n")
        return USAGE_ERROR
    try:
        return args.run(args)
    except BudgetExceeded as exc:
        sys.stderr.write("error: %s\n" % exc)
        return BUDGET_ERROR
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write("error: %s\n" % exc)
        return USAGE_ERROR


def main(argv=None) -> int:
    return cli_dispatch(argv)


if __name__ == "__main__":
    sys.exit(main())
