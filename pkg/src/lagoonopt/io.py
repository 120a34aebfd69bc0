"""Series ingestion, synthetic tides and result files."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from lagoonopt.core import (
    LagoonConfig,
    PriceSeries,
    Schedule,
    SolverResult,
    TideSeries,
)

DEFAULT_T0 = "2000-01-01T00:00:00"
M2_PERIOD_S = 44_700.0
FLOAT_FORMAT = ".12g"


class SeriesFormatError(ValueError):
    def __init__(self, path, line: int | None, message: str):
        self.line = line
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")


def _seconds(label: str) -> float:
    try:
        return float(label)
    except ValueError:
        pass
    stamp = datetime.fromisoformat(label)
    return (stamp - datetime(1970, 1, 1, tzinfo=stamp.tzinfo)).total_seconds()


def timestamps(t0: str, dt_s: float, n: int) -> list[str]:
    """Labels for ``n`` uniformly spaced points starting at ``t0``."""
    try:
        start = float(t0)
    except ValueError:
        base = datetime.fromisoformat(t0)
        return [(base + timedelta(seconds=k * dt_s)).isoformat() for k in range(n)]
    return [format(start + k * dt_s, "g") if (start + k * dt_s) % 1 else str(int(start + k * dt_s))
            for k in range(n)]


def load_series_csv(path, kind: str, dt_s: float | None = None) -> TideSeries | PriceSeries:
    """Read a ``timestamp,value`` table as a tide or price series.

    Timestamps may be ISO-8601 or plain seconds; spacing must be uniform and,
    when ``dt_s`` is given, equal to it.
    """
    if kind not in ("tide", "price"):
        raise ValueError(f"kind must be 'tide' or 'price', not {kind!r}")
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip().lower() for c in rows[0]] != ["timestamp", "value"]:
        raise SeriesFormatError(path, 1, "header must be 'timestamp,value'")
    labels, values, seconds = [], [], []
    for line, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise SeriesFormatError(path, line, f"expected 2 columns, got {len(row)}")
        label, raw = row[0].strip(), row[1].strip()
        try:
            value = float(raw)
            when = _seconds(label)
        except ValueError as exc:
            raise SeriesFormatError(path, line, f"malformed row ({exc})") from None
        if not math.isfinite(value):
            raise SeriesFormatError(path, line, "value must be finite")
        if seconds:
            step = when - seconds[-1]
            expected = dt_s if dt_s is not None else (seconds[1] - seconds[0] if len(seconds) > 1 else step)
            if step <= 0 or not math.isclose(step, expected, rel_tol=1e-9, abs_tol=1e-6):
                raise SeriesFormatError(
                    path, line, f"non-uniform spacing: {step:g} s after previous row, expected {expected:g} s")
        labels.append(label)
        values.append(value)
        seconds.append(when)
    minimum = 2 if kind == "tide" else 1
    if len(values) < minimum:
        raise SeriesFormatError(path, None, f"too few rows: a {kind} series needs at least {minimum}")
    if dt_s is None:
        if len(seconds) < 2:
            raise SeriesFormatError(path, None, "cannot infer the step from a single row")
        dt_s = seconds[1] - seconds[0]
    if kind == "tide":
        return TideSeries(labels[0], float(dt_s), np.array(values))
    return PriceSeries(labels[0], float(dt_s), np.array(values))


def write_series_csv(path, t0: str, dt_s: float, columns: dict[str, Sequence[Any]]) -> None:
    names = list(columns)
    n = len(columns[names[0]])
    if any(len(columns[c]) != n for c in names):
        raise ValueError("all columns must have the same length")
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["timestamp"] + names)
        for k, stamp in enumerate(timestamps(t0, dt_s, n)):
            writer.writerow([stamp] + [_cell(columns[c][k]) for c in names])


def _cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), FLOAT_FORMAT)
    return str(value)


def read_table_csv(path) -> dict[str, list[str]]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    return {name: [r[j] for r in rows[1:]] for j, name in enumerate(header)}


def synth_tide(mean_m: float = 0.0, amplitude_m: float = 4.0, period_s: float = M2_PERIOD_S,
               phase_rad: float = 0.0, t0: str = DEFAULT_T0, dt_s: float = 1800.0,
               steps: int = 48) -> TideSeries:
    """Single-harmonic tide sampled at ``steps + 1`` step boundaries."""
    if amplitude_m < 0:
        raise ValueError("amplitude must be non-negative")
    if period_s <= 0:
        raise ValueError("period must be positive")
    k = np.arange(steps + 1)
    levels = mean_m + amplitude_m * np.sin(2.0 * np.pi * k * dt_s / period_s + phase_rad)
    return TideSeries(t0, dt_s, levels)


def parse_synth_spec(text: str) -> tuple[float, float, float, float]:
    parts = text.split(",")
    if len(parts) != 4:
        raise ValueError("--synth-tide expects mean,amplitude,period,phase")
    return tuple(float(p) for p in parts)  # type: ignore[return-value]


def load_prices(spec: str, tide: TideSeries) -> PriceSeries:
    """``flat:<value>`` or a CSV path, checked against the tide's horizon."""
    if spec.startswith("flat:"):
        value = float(spec.split(":", 1)[1])
        return PriceSeries(tide.t0, tide.dt_s, np.full(tide.n_steps, value))
    prices = load_series_csv(spec, "price", dt_s=tide.dt_s)
    if prices.n_steps != tide.n_steps:
        raise ValueError(f"price file has {prices.n_steps} rows, the tide needs {tide.n_steps}")
    return prices


def load_config(path) -> LagoonConfig:
    with Path(path).open() as fh:
        return LagoonConfig.from_dict(json.load(fh))


@dataclass(frozen=True)
class OutputTargets:
    schedule: Path | None = None
    series: Path | None = None
    lp: Path | None = None
    simulation: Path | None = None
    storage: Path | None = None

    def __post_init__(self):
        paths = [Path(p).resolve() for p in (self.schedule, self.series, self.lp, self.simulation,
                                             self.storage) if p is not None]
        if len(set(paths)) != len(paths):
            raise ValueError("output paths must be distinct")

    @classmethod
    def in_dir(cls, out_dir, lp=False, simulation=False, storage=False) -> OutputTargets:
        out = Path(out_dir)
        return cls(schedule=out / "schedule.json", series=out / "series.csv",
                   lp=out / "model.lp" if lp else None,
                   simulation=out / "simulation.csv" if simulation else None,
                   storage=out / "storage.csv" if storage else None)


# Run-dependent fields kept out of files so identical runs give identical bytes.
_VOLATILE_STATS = {"wall_time_s", "backend"}


def schedule_document(result: SolverResult, config: LagoonConfig, tide: TideSeries,
                      prices: PriceSeries | None) -> dict[str, Any]:
    from lagoonopt.storage import summarize

    totals = summarize(result.schedule, prices, config)
    return {
        "objective": result.objective.value,
        "objective_value": result.objective_value,
        "totals": {"energy_mwh": totals.energy_mwh, "revenue": totals.revenue,
                   "capacity_factor": totals.capacity_factor},
        "solver": {k: v for k, v in sorted(result.solver_stats.items()) if k not in _VOLATILE_STATS},
        "t0": tide.t0,
        "config": config.to_dict(),
        "prices": None if prices is None else [float(p) for p in prices.prices],
        "schedule": result.schedule.to_dict(),
    }


def load_schedule_document(path) -> tuple[Schedule, LagoonConfig, TideSeries, PriceSeries | None, dict]:
    with Path(path).open() as fh:
        doc = json.load(fh)
    try:
        schedule = Schedule.from_dict(doc["schedule"])
        config = LagoonConfig.from_dict(doc["config"])
        tide = TideSeries(doc["t0"], schedule.dt_s, schedule.z_out_m)
        prices = None
        if doc.get("prices") is not None:
            prices = PriceSeries(doc["t0"], schedule.dt_s, np.array(doc["prices"], dtype=float))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: not a schedule document ({exc})") from None
    return schedule, config, tide, prices, doc


def schedule_columns(schedule, prices: PriceSeries | None = None) -> dict[str, list]:
    price = prices.prices if prices is not None else np.zeros(schedule.n_steps)
    return {
        "mode": [str(m) for m in schedule.modes],
        "n_active": [m.n_active for m in schedule.modes],
        "z_out_m": list(schedule.z_out_m[:-1]),
        "z_in_m": list(schedule.z_in_m[:-1]),
        "z_in_end_m": list(schedule.z_in_m[1:]),
        "head_m": list(schedule.head_m),
        "q_total_m3s": list(schedule.q_total_m3s),
        "q_sluice_m3s": list(schedule.q_sluice_m3s),
        "q_turbine_fill_m3s": list(schedule.q_turbine_fill_m3s),
        "q_turbine_gen_m3s": list(schedule.q_turbine_gen_m3s),
        "power_mw": list(schedule.power_mw),
        "energy_mwh": list(schedule.energy_mwh),
        "price": [float(p) for p in price],
        "revenue": list(schedule.revenue),
    }


def write_outputs(result: SolverResult, config: LagoonConfig, tide: TideSeries,
                  prices: PriceSeries | None, targets: OutputTargets, sim=None, storage=None,
                  model=None) -> list[Path]:
    """Write every requested artefact; returns the paths written."""
    written = []
    if targets.schedule is not None:
        doc = schedule_document(result, config, tide, prices)
        targets.schedule.write_text(json.dumps(doc, indent=1) + "\n")
        written.append(targets.schedule)
    if targets.series is not None:
        write_series_csv(targets.series, tide.t0, tide.dt_s, schedule_columns(result.schedule, prices))
        written.append(targets.series)
    if targets.simulation is not None and sim is not None:
        write_series_csv(targets.simulation, tide.t0, tide.dt_s, schedule_columns(sim, prices))
        written.append(targets.simulation)
    if targets.storage is not None and storage is not None:
        write_series_csv(targets.storage, tide.t0, tide.dt_s, storage_columns(storage, tide))
        written.append(targets.storage)
    if targets.lp is not None and model is not None:
        from lagoonopt.milp import export_lp

        targets.lp.write_text(export_lp(model))
        written.append(targets.lp)
    return written


def storage_columns(storage, tide: TideSeries) -> dict[str, list]:
    return {
        "z_out_m": list(tide.levels_m[:-1]),
        "z_full_m": [storage.z_max_m] * len(storage.head_m),
        "head_m": list(storage.head_m),
        "stored_energy_mwh": list(storage.stored_energy_mwh),
    }
