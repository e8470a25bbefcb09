"""Command line entry points.

Exit codes: 0 success, 1 validation or runtime failure, 2 usage error.
``--format json`` output goes through the same serializer the wire protocol
uses, so schemas stay in lockstep.
"""

from __future__ import annotations

import csv
import os
import signal
import sys
import threading
from pathlib import Path

import click

from .backend import (
    Backend,
    EventStore,
    MessageBus,
    canonical_weights_json,
    dumps_canonical,
    load_records,
    replay_weights,
)
from .backend.http import serve_http
from .backend.serialize import assessment_to_payload, weights_to_jsonable
from .bgsim import Simulator, SimulatorDataSource, load_scenario
from .errors import KlafateError
from .fmea import load_workbook
from .knowledge import KnowledgeModel, assess
from .kpi import (
    anova_one_way,
    moving_average,
    production_rate,
    read_events_csv,
    validate_rule,
    write_events_csv,
)
from .ruledsl import Snapshot
from .weights import prior_rule_weight, workbook_panel_weight

LOG_DIR_ENV = "KLAFATE_LOG_DIR"


def _fail(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _emit(rows: list[dict], fmt: str, table_order: list[str]):
    if fmt == "json":
        click.echo(dumps_canonical(rows))
        return
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(table_order)
    for row in rows:
        writer.writerow([row.get(column, "") for column in table_order])


format_option = click.option(
    "--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
    help="Machine-readable output format.",
)


@click.group()
def main():
    """Evidential production assessment toolkit."""


@main.command()
@click.argument("workbook_dir", type=click.Path(exists=True, file_okay=False))
def validate(workbook_dir):
    """Load a workbook, typecheck every rule and verify mutual exclusivity."""
    try:
        workbook = load_workbook(workbook_dir)
        KnowledgeModel.from_workbook(workbook)
    except KlafateError as err:
        _fail(str(err))
    click.echo(
        f"OK: {len(workbook.system_fms)} system FMs, mutual exclusivity verified"
    )
    click.echo(
        f"    {len(workbook.component_fms)} component FMs, "
        f"{len(workbook.profiles)} profiles, panel weight "
        f"{workbook_panel_weight(workbook):.2f}"
    )


@main.command()
@click.argument("scenario_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, required=True, help="Simulator seed (reproducible traces).")
@click.option("--minutes", type=float, required=True, help="Simulated duration.")
@click.option("--recipe", default="NP", show_default=True, help="Initial recipe label.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Completion-trace CSV destination (default stdout).")
def simulate(scenario_file, seed, minutes, recipe, out):
    """Run the plant simulator over a scenario script and export the trace."""
    try:
        scenario = load_scenario(scenario_file)
        simulator = Simulator(recipe, seed=seed, scenario=scenario)
        events = simulator.run(minutes)
    except KlafateError as err:
        _fail(str(err))
    if out:
        write_events_csv(events, out)
        click.echo(f"{len(events)} completions over {minutes:g} min -> {out}")
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(["timestamp", "value"])
        for index, timestamp in enumerate(events, start=1):
            writer.writerow([repr(timestamp), index])


@main.command("assess")
@click.option("--workbook", "workbook_dir", type=click.Path(exists=True, file_okay=False),
              required=True)
@click.option("--snapshot", "snapshot_file", type=click.Path(exists=True, dir_okay=False),
              required=True, help="CSV with header name,value.")
@click.option("--log", "log_dir", type=click.Path(exists=True), default=None,
              help="Event log directory; resumes its rule weights instead of priors.")
@format_option
def assess_command(workbook_dir, snapshot_file, log_dir, fmt):
    """One-shot assessment of a variable snapshot."""
    try:
        workbook = load_workbook(workbook_dir)
        model = KnowledgeModel.from_workbook(workbook)
        snapshot = _read_snapshot(snapshot_file)
        if log_dir:
            weights = {
                rule_id: w.current
                for rule_id, w in replay_weights(load_records(Path(log_dir))).items()
            }
        else:
            panel = workbook_panel_weight(workbook)
            weights = {fm.fm_id: panel for fm in workbook.system_fms}
        result = assess(model, workbook, weights, snapshot)
    except KlafateError as err:
        _fail(str(err))
    payload = assessment_to_payload(result)
    if fmt == "json":
        click.echo(dumps_canonical(payload))
    else:
        click.echo(f"active: {payload['fm_id']}")
        if result.is_fault:
            click.echo(f"effect: {payload['effect']}")
            click.echo(f"confidence weight: {payload['w_r']:.4f}")
            click.echo(f"evidence: {[round(m, 4) for m in payload['evidence']]}")
            click.echo(f"uncertainty: {payload['uncertainty']:.4f}")
            for pair in payload["pairs"]:
                click.echo(f"  cause: {pair['cause']}")
                click.echo(f"  recommendation: {pair['recommendation']}")


def _read_snapshot(path) -> Snapshot:
    values: dict[str, float | bool] = {}
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["name", "value"]:
            raise KlafateError(f"{path}: expected header 'name,value', got {header!r}")
        for row in reader:
            if not row or all(not cell.strip() for cell in row):
                continue
            name, raw = row[0].strip(), row[1].strip()
            if raw.lower() in ("true", "false"):
                values[name] = raw.lower() == "true"
            else:
                values[name] = float(raw)
    return Snapshot(values)


@main.command("recipe-validate")
@click.option("--traces", required=True,
              help="Comma-separated completion-trace CSVs, one per recipe.")
@click.option("--window", type=click.Choice(["10", "20", "30"]), required=True,
              help="Evaluation window in minutes.")
@click.option("--target", type=float, required=True, help="Estimated KPI target (prod/min).")
@click.option("--threshold", type=float, default=1.0, show_default=True,
              help="Acceptance threshold on the KPI ratio.")
@click.option("--ma", "ma_samples", type=int, default=5, show_default=True,
              help="Moving-average span for the smoothed column.")
@format_option
def recipe_validate(traces, window, target, threshold, ma_samples, fmt):
    """KPI validation of recorded recipe traces against a target."""
    window_min = float(window)
    rows = []
    try:
        for trace in traces.split(","):
            trace = trace.strip()
            events = read_events_csv(trace)
            horizon = window_min * 60.0
            windowed = [t for t in events if t <= horizon]
            rate = len(windowed) / window_min
            per_minute = production_rate(windowed, window_minutes=1.0, end=horizon)
            smoothed = moving_average(per_minute, ma_samples)
            verdict = validate_rule([rate], [target], threshold=threshold)
            rows.append(
                {
                    "trace": Path(trace).stem,
                    "window_min": window_min,
                    "k_c": round(rate, 4),
                    "k_t": target,
                    "k_v": round(verdict.k_v, 4),
                    "accepted": verdict.accepted,
                    "smoothed_last": round(smoothed.values()[-1], 4) if smoothed.samples else 0.0,
                }
            )
    except KlafateError as err:
        _fail(str(err))
    _emit(rows, fmt, ["trace", "window_min", "k_c", "k_t", "k_v", "accepted", "smoothed_last"])
    if any(not row["accepted"] for row in rows):
        sys.exit(1)


@main.command()
@click.argument("trace_files", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--window", type=float, default=1.0, show_default=True,
              help="Sampling window in minutes for the per-trace rate series.")
@click.option("--alpha", type=float, default=0.05, show_default=True)
@format_option
def anova(trace_files, window, alpha, fmt):
    """One-way ANOVA across recipe traces (null: equal production rates)."""
    if len(trace_files) < 2:
        raise click.UsageError("anova needs at least two traces")
    try:
        groups = []
        for trace in trace_files:
            events = read_events_csv(trace)
            series = production_rate(events, window_minutes=window)
            groups.append(series.values())
        result = anova_one_way(groups)
    except KlafateError as err:
        _fail(str(err))
    payload = {
        "f_stat": result.f_stat,
        "p_value": result.p_value,
        "df_between": result.df_between,
        "df_within": result.df_within,
        "alpha": alpha,
        "reject_null": result.p_value < alpha,
    }
    if fmt == "json":
        click.echo(dumps_canonical(payload))
    else:
        click.echo(f"F({result.df_between}, {result.df_within}) = {result.f_stat:.4f}")
        click.echo(f"p-value = {result.p_value:.6g}")
        click.echo(
            "null hypothesis rejected" if payload["reject_null"]
            else "null hypothesis not rejected"
        )


@main.command()
@click.argument("log_dir", type=click.Path(exists=True))
@format_option
def replay(log_dir, fmt):
    """Rebuild rule weights from an event log."""
    try:
        weights = replay_weights(load_records(Path(log_dir)))
    except KlafateError as err:
        _fail(str(err))
    if fmt == "json":
        click.echo(canonical_weights_json(weights).decode("utf-8"))
    else:
        rows = [
            {
                "rule_id": rule_id,
                "current": round(w.current, 6),
                "accumulated": round(w.accumulated, 6),
                "updates": len(w.history),
            }
            for rule_id, w in sorted(weights.items())
        ]
        _emit(rows, "csv", ["rule_id", "current", "accumulated", "updates"])


@main.command()
@click.option("--workbook", "workbook_dir", type=click.Path(exists=True, file_okay=False),
              required=True)
@click.option("--scenario", "scenario_file", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Fault/recipe script applied on the simulator clock.")
@click.option("--port", type=int, default=8080, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--seed", type=int, required=True, help="Simulator seed.")
@click.option("--recipe", default="NP", show_default=True)
@click.option("--accel", type=float, default=60.0, show_default=True,
              help="Simulated seconds per wall-clock poll second.")
@click.option("--poll-period", type=float, default=1.0, show_default=True)
@click.option("--log-dir", type=click.Path(), default=None,
              help=f"Event log directory (default ${LOG_DIR_ENV} or ./klafate-log).")
@click.option("--console-dir", type=click.Path(exists=True, file_okay=False), default=None,
              help="Static directory with the built operator console.")
def serve(workbook_dir, scenario_file, port, host, seed, recipe, accel, poll_period,
          log_dir, console_dir):
    """Run the backend service against the simulated plant."""
    try:
        workbook = load_workbook(workbook_dir)
        scenario = load_scenario(scenario_file) if scenario_file else None
        simulator = Simulator(recipe, seed=seed, scenario=scenario)
        source = SimulatorDataSource(simulator, seconds_per_poll=accel * poll_period)
        log_path = log_dir or os.environ.get(LOG_DIR_ENV) or "klafate-log"
        backend = Backend(
            workbook,
            source,
            bus=MessageBus(),
            store=EventStore(log_path),
            poll_period=poll_period,
        )
        backend.start_first_run()
    except KlafateError as err:
        _fail(str(err))
    server = serve_http(backend, host=host, port=port,
                        static_dir=Path(console_dir) if console_dir else None)
    click.echo(f"serving on http://{host}:{port} (log: {log_path}, accel {accel:g}x)")
    stop = threading.Event()
    signal.signal(signal.SIGINT, lambda *_: stop.set())
    signal.signal(signal.SIGTERM, lambda *_: stop.set())
    try:
        backend.run(stop)
    finally:
        server.shutdown()
        backend.store.close()
    click.echo("stopped")


if __name__ == "__main__":
    main()
