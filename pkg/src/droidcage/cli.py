"""Command-line interface.

Subcommands: ``run`` (full corpus experiment), ``explore`` (single app),
``monkey`` (random baseline, flags mirroring the real tool), ``proxy-check``
(pipeline verdict for a raw request file), ``decode-log`` (capture-log
round trip) and ``make-corpus`` (materialize the synthetic corpus).
Exit code is nonzero only for fatal errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .app_model import install_app, load_app_model
from .corpus import write_corpus
from .coverage import measure
from .explorer import ExplorationConfig, baseline_device, explore
from .harness import (
    METHODS,
    ExperimentConfig,
    ExperimentError,
    default_reputation,
    default_signatures,
    emit_results,
    run_experiment,
    write_outputs,
)
from .monkey import MonkeyConfig, run_monkey
from .netguard import (
    NetGuard,
    load_reputation,
    load_signature_db,
    parse_capture_log,
    write_log_entry,
)
from .session import SessionRunner


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="droidcage")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the experiment over a corpus")
    run.add_argument("--corpus", required=True, type=Path)
    run.add_argument("--methods", default=",".join(METHODS),
                     help="comma-separated subset of monkey,smart,smart_monkey")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--monkey-events", type=int, default=500)
    run.add_argument("--max-events", type=int, default=2000)
    run.add_argument("--threshold", type=int, default=60)
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--formats", default="human,csv")
    run.add_argument("--out", type=Path, default=Path("results"))

    exp = sub.add_parser("explore", help="explore a single app model")
    exp.add_argument("--app", required=True, type=Path)
    exp.add_argument("--seed", type=int, default=0)
    exp.add_argument("--max-events", type=int, default=2000)
    exp.add_argument("--monkey-first", action="store_true")

    mk = sub.add_parser("monkey", help="random-event baseline for one app")
    mk.add_argument("--app", required=True, type=Path)
    mk.add_argument("-s", "--seed", type=int, default=0)
    mk.add_argument("--pct-syskeys", type=int, default=0)
    mk.add_argument("--pct-appswitch", type=int, default=0)
    mk.add_argument("--throttle", type=int, default=50)
    mk.add_argument("-p", "--package", default="")
    mk.add_argument("-v", "--events", type=int, default=500,
                    help="number of events to send")

    px = sub.add_parser("proxy-check", help="pipeline verdict for a raw request")
    px.add_argument("--request", required=True, type=Path)
    px.add_argument("--protocol", default="http")
    px.add_argument("--signatures", type=Path)
    px.add_argument("--reputation", type=Path)
    px.add_argument("--threshold", type=int, default=60)

    dl = sub.add_parser("decode-log", help="decode a base64 capture log")
    dl.add_argument("--log", required=True, type=Path)
    dl.add_argument("--verify", action="store_true",
                    help="re-encode and check the round trip")

    mc = sub.add_parser("make-corpus", help="write the synthetic corpus")
    mc.add_argument("--out", required=True, type=Path)
    mc.add_argument("--seed", type=int, default=0)
    mc.add_argument("--count", type=int, default=20)
    return parser


def _cmd_run(args) -> int:
    config = ExperimentConfig(
        corpus=args.corpus,
        methods=tuple(m.strip() for m in args.methods.split(",") if m.strip()),
        seed=args.seed,
        monkey_events=args.monkey_events,
        max_events=args.max_events,
        reputation_threshold=args.threshold,
        workers=args.workers,
        formats=tuple(f.strip() for f in args.formats.split(",") if f.strip()),
    )
    result = run_experiment(config)
    write_outputs(result, args.out, config.formats)
    sys.stdout.write(emit_results(result.table, "human"))
    return 0


def _coverage_line(report) -> str:
    return (f"{report.package}: blocks {report.blocks_executed}/{report.blocks_total}"
            f" ({100 * report.block_ratio:.2f}%)"
            f" methods {report.methods_executed}/{report.methods_total}"
            f" classes {report.classes_executed}/{report.classes_total}"
            f"{' CRASHED' if report.crashed else ''}")


def _cmd_explore(args) -> int:
    app = load_app_model(args.app)
    config = ExplorationConfig(seed=args.seed, max_events=args.max_events,
                               run_monkey_first=args.monkey_first)
    session = explore(app, config, install_app(baseline_device(), app))
    report = measure(session, app)
    print(f"events sent: {len(session.events)}")
    print(_coverage_line(report))
    return 0


def _cmd_monkey(args) -> int:
    app = load_app_model(args.app)
    if args.package and args.package != app.package:
        print(f"package {args.package} does not match model {app.package}",
              file=sys.stderr)
        return 1
    config = MonkeyConfig(seed=args.seed, pct_syskeys=args.pct_syskeys,
                          pct_appswitch=args.pct_appswitch,
                          throttle_ms=args.throttle, event_count=args.events,
                          package=app.package)
    device = install_app(baseline_device(), app)
    session = run_monkey(app, device, config, runner=SessionRunner(app, device))
    report = measure(session, app)
    print(f"events sent: {len(session.events)}")
    print(_coverage_line(report))
    return 0


def _cmd_proxy_check(args) -> int:
    sigs = load_signature_db(args.signatures) if args.signatures else default_signatures()
    rep = load_reputation(args.reputation) if args.reputation else default_reputation()
    guard = NetGuard(sigs, rep, threshold=args.threshold)
    outcome = guard.handle(args.request.read_bytes(), args.protocol)
    if outcome.disposition == "malformed":
        print("malformed request (dropped)")
        return 0
    verdict = outcome.verdict
    detail = verdict.signature_id or verdict.reason
    print(f"verdict: {verdict.kind}" + (f" ({detail})" if detail else ""))
    return 0


def _cmd_decode_log(args) -> int:
    text = args.log.read_text(encoding="utf-8")
    transactions = parse_capture_log(text)
    for tx in transactions:
        print(f"{tx.method} {tx.scheme}://{tx.host}:{tx.port}{tx.path}"
              f" [{len(tx.headers)} headers, {len(tx.content)} content bytes]")
    if args.verify:
        reencoded = "".join(write_log_entry(tx) for tx in transactions)
        if parse_capture_log(reencoded) != transactions:
            print("round-trip FAILED", file=sys.stderr)
            return 1
        print(f"round-trip ok ({len(transactions)} records)")
    return 0


def _cmd_make_corpus(args) -> int:
    paths = write_corpus(args.out, seed=args.seed, count=args.count)
    print(f"wrote {len(paths)} app models to {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "explore": _cmd_explore,
        "monkey": _cmd_monkey,
        "proxy-check": _cmd_proxy_check,
        "decode-log": _cmd_decode_log,
        "make-corpus": _cmd_make_corpus,
    }
    try:
        return handlers[args.command](args)
    except (ExperimentError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
