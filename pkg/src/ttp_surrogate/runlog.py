"""Run-log CSV: one line per restart, preceded by ``# key: value`` metadata."""

from __future__ import annotations

import csv
import io
import json
import math

from .instance import Tour
from .solver import RestartRecord, RunLog

HEADER = ["restart_index", "decision", "tour", "g", "predicted_n_g", "solve_seconds"]


class RunLogError(ValueError):
    """Malformed, truncated or incomplete run log."""


def _num(x: float | None, fmt=repr) -> str:
    return "" if x is None else fmt(float(x))


def format_runlog(log: RunLog, timings: bool = False) -> str:
    """Serialize ``log``; wall-clock seconds are written only when ``timings`` is set."""
    out = io.StringIO()
    out.write(f"# instance: {log.instance_name}\n")
    out.write(f"# seed: {log.seed}\n")
    out.write(f"# config: {json.dumps(log.config, sort_keys=True)}\n")
    out.write(",".join(HEADER) + "\n")
    for rec in log.records:
        tour = " ".join(str(c) for c in rec.tour.cities())
        secs = _num(rec.solve_seconds, lambda s: f"{s:.6f}") if timings else ""
        out.write(f'{rec.index},{rec.decision},"{tour}",{_num(rec.g)},'
                  f"{_num(rec.predicted_n_g)},{secs}\n")
    return out.getvalue()


def parse_runlog(text: str) -> RunLog:
    meta: dict[str, str] = {}
    lines = text.splitlines()
    idx = 0
    while idx < len(lines) and lines[idx].startswith("#"):
        key, _, value = lines[idx][1:].partition(":")
        meta[key.strip()] = value.strip()
        idx += 1
    reader = csv.reader(lines[idx:])
    try:
        header = next(reader)
    except StopIteration:
        raise RunLogError("run log has no header line") from None
    if header != HEADER:
        raise RunLogError(f"unexpected run-log header {header}")
    try:
        seed = int(meta.get("seed", "0"))
        config = json.loads(meta["config"]) if "config" in meta else {}
    except ValueError as exc:
        raise RunLogError(f"bad run-log metadata: {exc}") from None
    log = RunLog(meta.get("instance", ""), seed, config=config)
    for lineno, row in enumerate(reader, start=idx + 2):
        if not row:
            continue
        if len(row) != len(HEADER):
            raise RunLogError(f"line {lineno}: expected {len(HEADER)} fields, got {len(row)}")
        try:
            index = int(row[0])
            tour = Tour.from_cities([int(c) for c in row[2].split()])
            g = float(row[3]) if row[3] else None
            pred = float(row[4]) if row[4] else None
            secs = float(row[5]) if row[5] else None
        except ValueError as exc:
            raise RunLogError(f"line {lineno}: {exc}") from None
        if row[1] not in ("solved", "skipped"):
            raise RunLogError(f"line {lineno}: unknown decision {row[1]!r}")
        if row[1] == "solved" and (g is None or not math.isfinite(g)):
            raise RunLogError(f"line {lineno}: solved record without a finite objective")
        if index != len(log.records):
            raise RunLogError(f"line {lineno}: restart index {index} out of sequence")
        log.records.append(RestartRecord(index, row[1], tour, g, pred, secs))
    if not log.records:
        raise RunLogError("run log has no records")
    return log


def write_runlog(path, log: RunLog, timings: bool = False):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_runlog(log, timings))


def read_runlog(path) -> RunLog:
    with open(path, encoding="utf-8") as fh:
        return parse_runlog(fh.read())
