"""Command-line interface: simulate, ingest, report, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bundle import write_bundle
from .config import EngineConfig
from .engine import Engine
from .records import parse_trace
from .store import EventLog
from .timebase import SECONDS_PER_DAY, format_iso, local_day_start


def _load_config(path: str | None) -> EngineConfig:
    if path is None:
        return EngineConfig()
    return EngineConfig.from_file(path)


def cmd_simulate(args) -> int:
    from .sim import Persona, StudyRunConfig, run_study
    from .sim.personas import default_cohort

    config = _load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    personas = default_cohort()
    if args.personas:
        raw = json.loads(Path(args.personas).read_text(encoding="utf-8"))
        personas = [Persona.from_dict(p) for p in raw]
    run_config = StudyRunConfig(
        seed=config.seed, weeks=args.weeks, personas=personas, engine_config=config
    )
    result = run_study(run_config)
    out = Path(args.out)
    summary = {
        "seed": config.seed,
        "weeks": args.weeks,
        "personas": sorted(p.participant_id for p in personas),
        "confirmed_accuracy": result.confirmed_accuracy,
        "gt_match_rate": result.gt_match_rate,
    }
    span_end = run_config.start + args.weeks * 7 * SECONDS_PER_DAY
    write_bundle(
        result.engine, out, scoring=result.scoring, traces=True, summary=summary, span_end=span_end
    )
    if args.store:
        store_dir = Path(args.store)
        store_dir.mkdir(parents=True, exist_ok=True)
        result.engine.store.log.dump(store_dir / "events.jsonl")
        (store_dir / "config.json").write_text(
            json.dumps(config.to_dict(), indent=2, sort_keys=True), encoding="utf-8"
        )
    acc = "n/a" if result.confirmed_accuracy is None else f"{result.confirmed_accuracy:.3f}"
    print(f"simulated {args.weeks} weeks x {len(personas)} personas (seed {config.seed})")
    print(f"participant-confirmed accuracy: {acc}")
    print(f"bundle written to {out}")
    return 0


def _open_store(store_dir: Path, config: EngineConfig) -> Engine:
    events_path = store_dir / "events.jsonl"
    if events_path.exists():
        return Engine.replay(config, EventLog.load(events_path))
    return Engine(config)


def cmd_ingest(args) -> int:
    config = _load_config(args.config)
    store_dir = Path(args.store)
    store_dir.mkdir(parents=True, exist_ok=True)
    engine = _open_store(store_dir, config)

    all_records = []
    for trace_path in args.traces:
        records, report = parse_trace(Path(trace_path).read_bytes())
        all_records.extend(records)
        for err in report.errors:
            print(f"{trace_path}:{err.line_no}: {err.reason}", file=sys.stderr)
    if not all_records:
        print("no valid records", file=sys.stderr)
        return 1

    upload_s = config.processing.upload_interval_min * 60
    tick_s = config.processing.processing_interval_min * 60
    transit = config.processing.transit_s
    by_pid: dict[str, list] = {}
    for record in all_records:
        by_pid.setdefault(record.participant_id, []).append(record)

    first = min(r.captured_at for r in all_records)
    last = max(r.captured_at for r in all_records)
    for pid in sorted(by_pid):
        if pid not in engine.store.participants:
            engine.enroll(pid, now=local_day_start(by_pid[pid][0].captured_at))

    # replay the device cadence: batches close at k*upload_s and arrive
    # after the transit delay; ticks run at the processing interval
    events: list[tuple[int, int, object]] = []
    for pid, records in sorted(by_pid.items()):
        batches: dict[int, list] = {}
        for record in records:
            batches.setdefault(record.captured_at // upload_s, []).append(record)
        for k, batch in sorted(batches.items()):
            sent = (k + 1) * upload_s
            events.append((sent + transit, 0, (pid, sent, batch)))
    t = first - (first % tick_s)
    while t <= last + 5 * 3600:
        events.append((t, 1, None))
        t += tick_s
    events.sort(key=lambda e: (e[0], e[1]))
    for when, _, payload in events:
        if payload is None:
            engine.process_tick(when)
        else:
            pid, sent, batch = payload
            engine.ingest_batch(pid, batch, device_sent_at=sent, received_at=when)

    engine.store.log.dump(store_dir / "events.jsonl")
    (store_dir / "config.json").write_text(
        json.dumps(config.to_dict(), indent=2, sort_keys=True), encoding="utf-8"
    )
    print(f"ingested {len(all_records)} records for {len(by_pid)} participant(s) into {store_dir}")
    print(f"span {format_iso(first)} .. {format_iso(last)}")
    return 0


def cmd_report(args) -> int:
    store_dir = Path(args.store)
    config_path = store_dir / "config.json"
    config = (
        EngineConfig.from_file(config_path) if config_path.exists() else _load_config(args.config)
    )
    engine = _open_store(store_dir, config)
    if not engine.store.participants:
        print("store is empty", file=sys.stderr)
        return 1
    if args.out:
        write_bundle(engine, Path(args.out))
        print(f"bundle written to {args.out}")
    else:
        from .bundle import plaintext_summary

        reports = {pid: engine.participant_report(pid) for pid in engine.store.ids()}
        if args.participant:
            reports = {args.participant: reports[args.participant]}
        print(plaintext_summary(reports))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import serve_api

    config = _load_config(args.config)
    if args.listen:
        config.listen = args.listen
    store_dir = Path(args.store) if args.store else None
    engine = _open_store(store_dir, config) if store_dir else Engine(config)
    app = serve_api(engine, wall_clock=not args.virtual_clock)
    host, _, port = config.listen.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000), log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contextema",
        description="Context-aware sensing and EMA intervention engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a deterministic synthetic study")
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--weeks", type=int, default=8, choices=None)
    sim.add_argument("--personas", help="JSON file with a persona list")
    sim.add_argument("--config", help="engine config JSON")
    sim.add_argument("--out", required=True, help="output bundle directory")
    sim.add_argument("--store", help="also persist the event store here")
    sim.set_defaults(func=cmd_simulate)

    ing = sub.add_parser("ingest", help="ingest trace files into a store")
    ing.add_argument("--store", required=True)
    ing.add_argument("--config", help="engine config JSON")
    ing.add_argument("traces", nargs="+", help="trace files (core grammar)")
    ing.set_defaults(func=cmd_ingest)

    rep = sub.add_parser("report", help="render metrics from a store")
    rep.add_argument("--store", required=True)
    rep.add_argument("--config")
    rep.add_argument("--participant")
    rep.add_argument("--out", help="write the full CSV bundle here instead of stdout")
    rep.set_defaults(func=cmd_report)

    srv = sub.add_parser("serve", help="run the HTTP sync service")
    srv.add_argument("--store")
    srv.add_argument("--config")
    srv.add_argument("--listen", help="host:port")
    srv.add_argument(
        "--virtual-clock",
        action="store_true",
        help="no background ticks; time advances via POST /v1/admin/tick",
    )
    srv.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
