"""Operator command line tying the pipeline together.

Subcommands: simulate, ingest, train, benchmark, serve, replay. Logs go
to standard error, data to standard output or files. Exit codes: 0 ok,
1 usage, 2 data error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
import urllib.error
import urllib.request
from pathlib import Path

from . import errors as _errors
from .catalog import load_catalog
from .errors import (
    EmptyDataset, InsufficientData, NetworkError, ParseError, TwinError,
)
from .forecast.bench import Benchmark, benchmark
from .forecast.metrics import Dataset, ForecastTask
from .forecast.nets import load_model, make_model, save_model
from .forecast.train import TrainConfig, finetune, pretrain_persistence, train
from .server import StreamHub, TimeConductor, TwinServer, replay_records
from .simulator import SimConfig, generate, parse_scenario
from .store import TimeseriesStore, read_records, write_records
from .timeutil import grid_ceil, grid_floor
from .weather import ForecastEndpoint, WeatherClient

log = logging.getLogger("windtwin.cli")

TIMESCALES = ("seconds", "minutes", "hours")

# config-file keys and how to read them; everything else stays a string
_CONFIG_COERCE = {
    "seed": int,
    "verbose": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
    "duration": float, "step": float, "speed": float, "hours": float,
    "budget": int, "threshold": float, "epochs": int, "batch_size": int,
    "patience": int, "learning_rate": float, "validation_fraction": float,
    "m": int, "k": int, "capacity": int,
}
_CONFIG_KEYS = set(_CONFIG_COERCE) | {
    "scenario", "out", "url", "token", "data", "kind", "timescale",
    "params", "hidden", "csv", "bind", "store", "weather", "file",
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        raise _UsageError(f"{self.prog}: {message}")


def read_config(path: str | Path) -> dict:
    """Plain key = value lines; # comments; unknown keys are errors."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip().replace("-", "_"), val.strip()
        if key not in _CONFIG_KEYS:
            raise ParseError(f"{path}:{lineno}: unknown config key {key!r}")
        try:
            out[key] = _CONFIG_COERCE.get(key, str)(val)
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from exc
    return out


def _build_parser() -> _Parser:
    parser = _Parser(prog="windtwin", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="key = value config file; flags win")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--verbose", action="store_true", default=None)
    sub = parser.add_subparsers(dest="subcommand", required=True,
                                parser_class=_Parser)

    # "required" flags stay optional here so a --config file can supply
    # them; _require() enforces presence after config merging.
    p = sub.add_parser("simulate", help="write synthetic telemetry records")
    p.add_argument("--duration", type=float, help="seconds")
    p.add_argument("--out")
    p.add_argument("--scenario", help="scenario file overriding the defaults")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("ingest", help="post record files to a running server")
    p.add_argument("files", nargs="+")
    p.add_argument("--url")
    p.add_argument("--token", default="let-me-in")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("train", help="fit a forecaster on a record file")
    p.add_argument("--data")
    p.add_argument("--out")
    p.add_argument("--kind", choices=("dnn", "lstm"), default="lstm")
    p.add_argument("--timescale", choices=TIMESCALES, default="seconds")
    p.add_argument("--m", type=int, default=30, help="input window length")
    p.add_argument("--k", type=int, default=10, help="forecast horizon")
    p.add_argument("--params", help="comma-separated parameter ids")
    p.add_argument("--hidden", help="layer widths, e.g. 64,64")
    p.add_argument("--pretrain", action="store_true",
                   help="start from a persistence-emulating network")
    p.add_argument("--budget", type=int, default=200_000,
                   help="synthetic sample budget for --pretrain")
    p.add_argument("--threshold", type=float, default=0.01)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--patience", type=int, default=1)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--validation-fraction", type=float, default=0.10)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("benchmark", help="score models against persistence")
    p.add_argument("models", nargs="+", help="model files")
    p.add_argument("--data")
    p.add_argument("--csv", help="also write machine-readable rows here")
    p.set_defaults(fn=cmd_benchmark)

    p = sub.add_parser("serve", help="run the HTTP hub until interrupted")
    p.add_argument("--bind", default="127.0.0.1:8080")
    p.add_argument("--token", default="let-me-in")
    p.add_argument("--store", help="record file to load and flush on exit")
    p.add_argument("--model", action="append", default=[],
                   metavar="NAME=PATH", help="load a forecaster (repeatable)")
    p.add_argument("--weather", help="wind-field endpoint url or file")
    p.add_argument("--step", type=float, default=1.0)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("replay", help="feed a record file through the pipeline")
    p.add_argument("--file")
    p.add_argument("--speed", type=float, default=1.0)
    p.add_argument("--step", type=float, default=1.0)
    p.add_argument("--params", help="comma-separated parameter ids to frame")
    p.add_argument("--bind", help="serve while replaying instead of printing")
    p.add_argument("--token", default="let-me-in")
    p.set_defaults(fn=cmd_replay)
    parser._command_parsers = list(sub.choices.values())
    return parser


_MAIN_KEYS = {"seed", "verbose"}


def _parse(argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    parser = _build_parser()
    if known.config:
        conf = read_config(known.config)
        # subcommands parse into a fresh namespace that is copied over the
        # parent's, so their defaults must carry the config values; main
        # flags (parsed before the subcommand) keep theirs on the parent.
        parser.set_defaults(**{k: v for k, v in conf.items() if k in _MAIN_KEYS})
        for p in parser._command_parsers:
            p.set_defaults(**{k: v for k, v in conf.items() if k not in _MAIN_KEYS})
    return parser.parse_args(argv)


# -- subcommands -------------------------------------------------------------


def _require(args, *names) -> None:
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise _UsageError(f"{args.subcommand}: missing {flags}")


def cmd_simulate(args) -> int:
    _require(args, "duration", "out")
    config = SimConfig()
    if args.scenario:
        config = parse_scenario(Path(args.scenario).read_text())
    if args.seed is not None:
        config.seed = args.seed
    records = generate(config, args.duration)
    n = write_records(args.out, records)
    by_node: dict[str, int] = {}
    for rec in records:
        node = rec.parameter.split(".", 1)[0]
        by_node[node] = by_node.get(node, 0) + 1
    print(f"records {n}")
    for node in sorted(by_node):
        print(f"node {node} {by_node[node]}")
    log.info("wrote %d records to %s", n, args.out)
    return 0


def _exit_for(code: str) -> int:
    cls = getattr(_errors, code, None)
    if isinstance(cls, type) and issubclass(cls, TwinError):
        return cls.exit_code
    return 3


def cmd_ingest(args) -> int:
    _require(args, "url")
    url = args.url.rstrip("/") + "/api/v1/ingest"
    totals = {"accepted": 0, "rejected_unphysical": 0,
              "rejected_unknown": 0, "deduplicated": 0}
    for name in args.files:
        body = Path(name).read_bytes()
        req = urllib.request.Request(
            url, data=body, method="POST",
            headers={"Authorization": f"Bearer {args.token}"})
        try:
            with urllib.request.urlopen(req, timeout=30) as resp:
                report = json.loads(resp.read())
        except urllib.error.HTTPError as exc:
            doc = {}
            try:
                doc = json.loads(exc.read())
            except (json.JSONDecodeError, OSError):
                pass
            code = doc.get("error", "NetworkError")
            print(f"error: {code}: {doc.get('message', exc)}", file=sys.stderr)
            return _exit_for(code)
        except (urllib.error.URLError, OSError) as exc:
            raise NetworkError(f"cannot reach {url}: {exc}") from exc
        print(f"{name} " + " ".join(f"{k} {report[k]}" for k in sorted(report)))
        for k in totals:
            totals[k] += report.get(k, 0)
    print("total " + " ".join(f"{k} {totals[k]}" for k in sorted(totals)))
    return 0


def _parse_hidden(kind: str, text: str | None):
    if not text:
        return None
    widths = tuple(int(x) for x in text.split(",") if x)
    if kind == "lstm":
        return widths[0] if len(widths) == 1 else widths
    return widths


def _task_from_args(args) -> ForecastTask:
    if args.params:
        params = tuple(p for p in args.params.split(",") if p)
    else:
        params = load_catalog().forecast_set()
    return ForecastTask(args.timescale, args.m, args.k, params)


def _dataset_from_records(path, task: ForecastTask) -> Dataset:
    store = TimeseriesStore()
    report = store.ingest_batch(read_records(path))
    log.info("loaded %s: %s", path, report)
    extent = store.time_extent()
    if extent is None:
        raise InsufficientData(f"no usable records in {path}")
    fs = store.resample(extent[0], extent[1], task.parameters, task.step)
    try:
        return Dataset.from_frames(fs, task)
    except EmptyDataset as exc:
        raise InsufficientData(str(exc)) from exc


def cmd_train(args) -> int:
    _require(args, "data", "out")
    task = _task_from_args(args)
    data = _dataset_from_records(args.data, task)
    seed = args.seed if args.seed is not None else 0
    config = TrainConfig(batch_size=args.batch_size,
                         validation_fraction=args.validation_fraction,
                         max_epochs=args.epochs, patience=args.patience,
                         learning_rate=args.learning_rate, seed=seed)
    hidden = _parse_hidden(args.kind, args.hidden)
    try:
        if args.pretrain:
            base = pretrain_persistence(args.kind, task, args.budget,
                                        threshold=args.threshold,
                                        hidden=hidden, seed=seed)
            pre = base.provenance["pretrain"]
            log.info("pretrain used %d/%d samples, nrmse %.4g",
                     pre["samples_used"], pre["budget"], pre["nrmse"])
            trained = finetune(base, data, config)
        else:
            trained = train(make_model(args.kind, task, seed=seed,
                                       hidden=hidden), data, config)
    except EmptyDataset as exc:
        raise InsufficientData(str(exc)) from exc
    for entry in trained.history:
        if "epoch" not in entry:
            continue
        t = entry["train_loss"]
        t_txt = "-" if t is None else f"{math.sqrt(t):.6f}"
        print(f"epoch {entry['epoch']} train_nrmse {t_txt} "
              f"val_nrmse {math.sqrt(entry['val_loss']):.6f}")
    save_model(trained, args.out)
    log.info("model written to %s", args.out)
    return 0


def cmd_benchmark(args) -> int:
    _require(args, "data")
    models = [load_model(p) for p in args.models]
    first = models[0].task
    for m in models[1:]:
        if (m.task.m, m.task.k, m.task.parameters) != \
                (first.m, first.k, first.parameters):
            raise _errors.TaskMismatch(
                f"model task {m.task} is not comparable to {first}")
    table: Benchmark | None = None
    for timescale in TIMESCALES:
        group = [m for m in models if m.task.timescale == timescale]
        if not group:
            continue
        test = _dataset_from_records(args.data, group[0].task)
        part = benchmark(group, test)
        table = part if table is None else table.merge(part)
    assert table is not None  # argparse enforces >= 1 model
    sys.stdout.write(table.text())
    if args.csv:
        Path(args.csv).write_text(table.machine_rows())
        log.info("machine rows written to %s", args.csv)
    return 0


def _parse_bind(text: str) -> tuple:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise _UsageError(f"bind must be host:port, got {text!r}")
    return host, int(port)


def _build_server(args, store: TimeseriesStore) -> TwinServer:
    models = {}
    for item in getattr(args, "model", []):
        name, _, path = item.partition("=")
        if not path:
            raise _UsageError(f"--model needs NAME=PATH, got {item!r}")
        models[name] = load_model(path)
    weather = None
    if getattr(args, "weather", None):
        weather = WeatherClient(ForecastEndpoint(args.weather))
    return TwinServer(store, token=args.token, models=models, weather=weather,
                      step=args.step, bind=_parse_bind(args.bind))


def cmd_serve(args) -> int:
    store = TimeseriesStore()
    if args.store and Path(args.store).exists():
        report = store.load(args.store)
        log.info("restored %d records from %s", report.accepted, args.store)
    server = _build_server(args, store).start(pump=True)
    print(f"listening on {server.url}", file=sys.stderr)
    try:
        while True:
            time.sleep(3600.0)
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
        if args.store:
            n = store.save(args.store)
            log.info("flushed %d records to %s", n, args.store)
    return 0


def cmd_replay(args) -> int:
    _require(args, "file")
    records = read_records(args.file)
    if args.params:
        params = [p for p in args.params.split(",") if p]
    else:
        params = sorted({r.parameter for r in records})
    if args.bind:
        store = TimeseriesStore()
        server = _build_server(args, store).start()
        print(f"listening on {server.url}", file=sys.stderr)
        try:
            n = replay_records(records, store, server.hub, server.conductor,
                               speed=args.speed, step=args.step)
        finally:
            server.stop()
        print(f"replayed {n} frames", file=sys.stderr)
        return 0
    store = TimeseriesStore()
    if records:
        span = grid_floor(max(r.timestamp for r in records), args.step) \
            - grid_ceil(min(r.timestamp for r in records), args.step)
        capacity = int(span / args.step) + 8
    else:
        capacity = 8
    hub = StreamHub(store, step=args.step, capacity=capacity)
    sub = hub.subscribe(params)
    n = replay_records(records, store, hub, TimeConductor(),
                       speed=args.speed, step=args.step)
    for _ in range(n):
        frame = sub.get()
        print(json.dumps(frame.to_payload()))
    return 0


# -- entry -------------------------------------------------------------------


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        args = _parse(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except TwinError as exc:  # bad config file
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return exc.exit_code
    logging.basicConfig(
        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s",
        level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.fn(args)
    except TwinError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return exc.exit_code
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # one greppable line, never a bare traceback
        if args.verbose:
            import traceback
            traceback.print_exc()
        print(f"error: Internal: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
