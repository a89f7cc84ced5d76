"""Deterministic JSON/CSV serialization of records and reports.

Every float is written with 17 significant digits, which round-trips a
double exactly; re-serializing a loaded document therefore reproduces it
byte for byte.  The JSON emitter is a small recursive formatter rather
than :mod:`json` because the stdlib encoder offers no control over float
rendering.  Documents are parsed back with the stdlib parser.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .model import SystemParams
from .trajectory import ClickEvent, CycleClass, CycleTag, TrajectoryRecord


def format_float(x: float) -> str:
    """17-significant-digit decimal form (exact double round-trip)."""
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite float {x}")
    return format(float(x), ".17g")


def dumps(value, indent: int = 0) -> str:
    """Serialize nested dict/list/str/int/float/bool/None to JSON text."""
    pieces: list[str] = []
    _emit(value, pieces, indent, 0)
    return "".join(pieces)


def _emit(value, out: list[str], indent: int, level: int):
    pad = " " * (indent * (level + 1)) if indent else ""
    close_pad = " " * (indent * level) if indent else ""
    sep = ",\n" if indent else ", "
    if value is None:
        out.append("null")
    elif isinstance(value, bool):
        out.append("true" if value else "false")
    elif isinstance(value, (int, np.integer)):
        out.append(str(int(value)))
    elif isinstance(value, (float, np.floating)):
        out.append(format_float(float(value)))
    elif isinstance(value, str):
        out.append(json.dumps(value))
    elif isinstance(value, dict):
        if not value:
            out.append("{}")
            return
        out.append("{\n" if indent else "{")
        for i, (key, item) in enumerate(value.items()):
            if not isinstance(key, str):
                raise TypeError(f"JSON object keys must be str, got {type(key)}")
            if i:
                out.append(sep)
            out.append(f"{pad}{json.dumps(key)}: ")
            _emit(item, out, indent, level + 1)
        out.append(("\n" + close_pad + "}") if indent else "}")
    elif isinstance(value, (list, tuple, np.ndarray)):
        seq = value.tolist() if isinstance(value, np.ndarray) else list(value)
        if not seq:
            out.append("[]")
            return
        out.append("[\n" if indent else "[")
        for i, item in enumerate(seq):
            if i:
                out.append(sep)
            out.append(pad)
            _emit(item, out, indent, level + 1)
        out.append(("\n" + close_pad + "]") if indent else "]")
    else:
        raise TypeError(f"cannot serialize {type(value)}")


def loads(text: str):
    return json.loads(text)


def complex_vector_to_dict(vec) -> dict:
    v = np.asarray(vec, dtype=complex)
    return {"re": [float(x) for x in v.real], "im": [float(x) for x in v.imag]}


def complex_vector_from_dict(d) -> np.ndarray:
    return np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)


def complex_matrix_to_dict(mat) -> dict:
    m = np.asarray(mat, dtype=complex)
    return {
        "re": [[float(x) for x in row] for row in m.real],
        "im": [[float(x) for x in row] for row in m.imag],
    }


def complex_matrix_from_dict(d) -> np.ndarray:
    return np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)


def record_to_dict(record: TrajectoryRecord) -> dict:
    doc = {
        "params": {"r": record.params.r, "epsilon": record.params.epsilon},
        "seed": record.seed,
        "initial": complex_vector_to_dict(record.initial),
        "t_end": record.t_end,
        "dark": record.dark,
        "terminal": {"tag": record.terminal.tag.value,
                     "confidence": record.terminal.confidence},
        "events": [{"t": e.time, "detector": e.detector} for e in record.events],
        "samples": [
            {"t": float(t),
             "re": [float(x) for x in s.real],
             "im": [float(x) for x in s.imag]}
            for t, s in zip(record.sample_times, record.sample_states)
        ],
        "final_state": complex_vector_to_dict(record.final_state),
        "dark_state": (complex_vector_to_dict(record.dark_state)
                       if record.dark_state is not None else None),
    }
    return doc


def record_from_dict(doc: dict) -> TrajectoryRecord:
    samples = doc["samples"]
    times = np.array([s["t"] for s in samples], dtype=float)
    states = np.array(
        [np.asarray(s["re"], dtype=float) + 1j * np.asarray(s["im"], dtype=float)
         for s in samples],
        dtype=complex).reshape(len(samples), 4)
    return TrajectoryRecord(
        params=SystemParams(r=doc["params"]["r"], epsilon=doc["params"]["epsilon"]),
        seed=int(doc["seed"]),
        initial=complex_vector_from_dict(doc["initial"]),
        events=[ClickEvent(time=e["t"], detector=int(e["detector"]))
                for e in doc["events"]],
        sample_times=times,
        sample_states=states,
        terminal=CycleClass(tag=CycleTag(doc["terminal"]["tag"]),
                            confidence=doc["terminal"]["confidence"]),
        t_end=doc["t_end"],
        final_state=complex_vector_from_dict(doc["final_state"]),
        dark=bool(doc["dark"]),
        dark_state=(complex_vector_from_dict(doc["dark_state"])
                    if doc["dark_state"] is not None else None),
    )


def dump_record(record: TrajectoryRecord) -> str:
    return dumps(record_to_dict(record), indent=2) + "\n"


def load_record(text: str) -> TrajectoryRecord:
    return record_from_dict(loads(text))


def dump_records_ndjson(records) -> str:
    """One compact JSON document per line (ensemble persistence)."""
    return "".join(dumps(record_to_dict(r)) + "\n" for r in records)


def load_records_ndjson(text: str) -> list[TrajectoryRecord]:
    return [record_from_dict(loads(line))
            for line in text.splitlines() if line.strip()]


def csv_table(header: list[str], rows) -> str:
    """CSV text with 17-significant-digit floats and fixed LF newlines."""
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, (float, np.floating)):
                cells.append(format_float(float(cell)))
            elif isinstance(cell, (int, np.integer)):
                cells.append(str(int(cell)))
            else:
                cells.append(str(cell))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
