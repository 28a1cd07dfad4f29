"""Command-line entry points.

    syncroom run <scenario-file> [--clients N] [--out-dir DIR]
    syncroom fuzz --seed S --events N --clients N [--out-dir DIR]
    syncroom replay <log-file> [--pace F] [--seek MS] [--timed]
    syncroom report <log-file> [--format csv|table] [--out-dir DIR]
    syncroom serve [--host H] [--port P] [--assets DIR] ...
    syncroom validate [FILE]
    syncroom fixtures <dir>

Exit code is nonzero on any assertion failure.  The report path writes the
delimited per-second series and renders a bandwidth figure next to it.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import bandwidth, fixtures, handlers, harness, protocol, replay, server as server_mod


def _env(name: str, default):
    return os.environ.get(f"SYNCROOM_{name}", default)


def _cmd_run(args) -> int:
    path = Path(args.scenario)
    if not path.exists() and path.stem in fixtures.FIXTURE_NAMES:
        scenario = fixtures.build(path.stem)
    else:
        scenario = harness.load_scenario(path)
    result = harness.run_scenario(scenario, client_count=args.clients,
                                  seed=args.seed, out_dir=args.out_dir)
    print(bandwidth.emit_report(result.report, "table"))
    if args.out_dir:
        out = Path(args.out_dir)
        (out / f"{scenario.name}-bandwidth.csv").write_text(
            bandwidth.emit_report(result.report, "csv"))
        bandwidth.render_figure(result.report, out / f"{scenario.name}-bandwidth.png")
    if result.ok:
        print(f"{scenario.name}: consistent ({len(result.entries)} entries, "
              f"{result.report.event_bytes} event bytes)")
        return 0
    print(f"{scenario.name}: DIVERGED: {result.divergence}", file=sys.stderr)
    return 1


def _cmd_fuzz(args) -> int:
    result = harness.fuzz_session(args.seed, args.events, args.clients,
                                  out_dir=args.out_dir)
    if result.ok:
        print(f"fuzz seed {args.seed}: consistent ({len(result.entries)} entries)")
        return 0
    print(f"fuzz seed {args.seed}: DIVERGED: {result.divergence}", file=sys.stderr)
    return 1


def _cmd_replay(args) -> int:
    try:
        entries = server_mod.load_log(args.log)
    except server_mod.LogCorruptionError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    schedule = replay.ReplaySchedule(entries, pace=args.pace)
    states: dict = {}
    tree = handlers.build_tree()
    if args.seek is not None:
        replay.seek(schedule, states, tree, args.seek)
    elif args.timed:
        replay.run_timed(schedule, states, tree, args.pace,
                         sink=lambda e: print(server_mod.encode_entry(e).decode()))
    else:
        replay.replay_to(schedule, states, tree, schedule.span_ms)
    from .media import serialize_state
    for media_id in sorted(states):
        print(f"{media_id}\t{serialize_state(states[media_id])}")
    return 0


def _cmd_report(args) -> int:
    try:
        entries = server_mod.load_log(args.log)
    except server_mod.LogCorruptionError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    session_id = Path(args.log).stem
    report = bandwidth.report_from_log(session_id, entries)
    print(bandwidth.emit_report(report, args.format))
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{session_id}-bandwidth.csv").write_text(
            bandwidth.emit_report(report, "csv"))
        bandwidth.render_figure(report, out / f"{session_id}-bandwidth.png")
        print(f"wrote {out / f'{session_id}-bandwidth.csv'} and "
              f"{out / f'{session_id}-bandwidth.png'}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn
    from .service import create_app

    srv = server_mod.SessionServer(role_policy=args.role_policy)
    app = create_app(srv, assets_dir=args.assets, log_dir=args.log_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def _cmd_validate(args) -> int:
    """Check canonical-encoded messages, one per line; exit nonzero on the first bad one."""
    stream = open(args.file, "r", encoding="utf-8") if args.file else sys.stdin
    try:
        for number, line in enumerate(stream, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                protocol.deserialize(line)
            except protocol.ParseError as exc:
                print(f"line {number}: {exc}", file=sys.stderr)
                return 1
        print("ok")
        return 0
    finally:
        if args.file:
            stream.close()


def _cmd_fixtures(args) -> int:
    for path in fixtures.write_fixture_files(args.dir):
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="syncroom", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scripted scenario and check consistency")
    p.add_argument("scenario", help="scenario file, or a shipped fixture name")
    p.add_argument("--clients", type=int, default=0, help="extra silent audience clients")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("fuzz", help="random valid sessions, consistency-checked")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--events", type=int, default=500)
    p.add_argument("--clients", type=int, default=4)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=_cmd_fuzz)

    p = sub.add_parser("replay", help="replay a persisted session log")
    p.add_argument("log")
    p.add_argument("--pace", type=float, default=1.0)
    p.add_argument("--seek", type=int, default=None, metavar="MS")
    p.add_argument("--timed", action="store_true",
                   help="emit entries on the wall clock at the given pace")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("report", help="bandwidth accounting for a persisted log")
    p.add_argument("log")
    p.add_argument("--format", choices=("table", "csv"), default="table")
    p.add_argument("--out-dir", default=None,
                   help="also write the csv and render the bandwidth figure here")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("serve", help="websocket session service")
    p.add_argument("--host", default=_env("HOST", "127.0.0.1"))
    p.add_argument("--port", type=int, default=int(_env("PORT", "8707")))
    p.add_argument("--assets", default=_env("ASSETS", None),
                   help="static material directory served at /assets")
    p.add_argument("--log-dir", default=_env("LOG_DIR", None),
                   help="persist session logs here (default: in-memory only)")
    p.add_argument("--role-policy", choices=(server_mod.POLICY_PRESENTER_ONLY,
                                             server_mod.POLICY_ALL),
                   default=_env("ROLE_POLICY", server_mod.POLICY_PRESENTER_ONLY))
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("validate", help="validate canonical message encodings")
    p.add_argument("file", nargs="?", default=None)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("fixtures", help="write the shipped scenario files")
    p.add_argument("dir")
    p.set_defaults(func=_cmd_fixtures)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
