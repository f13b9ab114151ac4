"""CSV schemas for experiment outputs, with a writer and a matching reader.

Floats are written in the shortest form that round-trips (``repr``), so a
dataset read back compares equal to the values that produced it.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

SCHEMAS: dict[str, tuple[tuple[str, type], ...]] = {
    "trajectory": (("t_s", float), ("mx", float), ("my", float), ("mz", float)),
    "switchprob": (
        ("v_volts", float), ("alpha_me_over_c", float), ("p_switch", float),
        ("ci_low", float), ("ci_high", float), ("n_trials", int),
    ),
    "tmr-sweep": (
        ("t_mgo_nm", float), ("w_over_l", float), ("r_p_ohm", float),
        ("r_ap_ohm", float), ("tmr_device", float), ("tmr_bitcell", float),
    ),
    "dualport-demo": (
        ("op", str), ("row", int), ("bits", str), ("write_energy_fJ_per_bit", float),
        ("read_energy_fJ_per_bit", float), ("latency_ns", float),
    ),
    "cam-demo": (
        ("row", int), ("stored_word", str), ("key", str), ("matchline", str),
        ("read_energy_fJ_per_bit", float), ("write_energy_fJ_per_bit", float),
    ),
    "memory-report": (
        ("check", str), ("measured", float), ("target", float), ("rel_tolerance", float),
        ("passed", int),
    ),
}


def _fmt(v, kind: type) -> str:
    if kind is float:
        return repr(float(v))
    if kind is int:
        return str(int(v))
    return str(v)


def columns(schema: str) -> list[str]:
    return [name for name, _ in SCHEMAS[schema]]


def dumps(schema: str, rows) -> str:
    """Render dict rows as CSV text with LF line endings."""
    spec = SCHEMAS[schema]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([name for name, _ in spec])
    for row in rows:
        extra = set(row) - {name for name, _ in spec}
        if extra:
            raise KeyError(f"unexpected columns {sorted(extra)} for {schema}")
        w.writerow([_fmt(row[name], kind) for name, kind in spec])
    return buf.getvalue()


def write_csv(path, schema: str, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(dumps(schema, rows))
    return path


def loads(schema: str, text: str) -> list[dict]:
    spec = SCHEMAS[schema]
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != [name for name, _ in spec]:
        raise ValueError(f"header {header} does not match {schema} schema")
    out = []
    for line in reader:
        if len(line) != len(spec):
            raise ValueError(f"row {line} has {len(line)} fields, expected {len(spec)}")
        out.append({name: kind(v) for (name, kind), v in zip(spec, line)})
    return out


def read_csv(path, schema: str) -> list[dict]:
    with open(path, newline="") as fh:
        return loads(schema, fh.read())
