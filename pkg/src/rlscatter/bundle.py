"""Result bundles: per-energy CSV tables, a JSON summary and a metadata file.

Tables start with ``#`` comment lines naming units and conventions, followed
by one header row.  Complex columns are stored as ``re_<name>`` and
``im_<name>`` pairs.  Floats are written with 17 significant digits, so
:func:`read_table` reproduces them exactly.  Everything that varies between
identical runs (timestamps, timings, host details) goes to ``metadata.json``
only.
"""

from __future__ import annotations

import csv
import json
import platform
from pathlib import Path

import numpy as np

__all__ = ["write_table", "read_table", "write_json", "read_json", "read_bundle", "encode", "decode"]


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def write_table(path, columns: dict, comments=()) -> None:
    """Write ``columns`` (name -> 1D array) as CSV, splitting complex columns."""
    names, data = [], []
    for name, col in columns.items():
        col = np.asarray(col)
        if np.iscomplexobj(col):
            names += [f"re_{name}", f"im_{name}"]
            data += [col.real, col.imag]
        else:
            names.append(name)
            data.append(col)
    lengths = {len(c) for c in data}
    if len(lengths) > 1:
        raise ValueError("all columns must have the same length")
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*data):
            w.writerow([_fmt(x) for x in row])


def _parse_column(vals: list):
    try:
        return np.array([int(v) for v in vals], dtype=int)
    except ValueError:
        pass
    try:
        return np.array([float(v) for v in vals], dtype=float)
    except ValueError:
        return np.array(vals, dtype=object)


def read_table(path) -> tuple[list, dict]:
    """Inverse of :func:`write_table`: ``(comments, columns)`` with complex pairs recombined."""
    comments, rows = [], []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                comments.append(line[1:].strip())
            else:
                rows.append(line)
    reader = csv.reader(rows)
    header = next(reader)
    body = list(reader)
    raw = {name: _parse_column([r[i] for r in body]) for i, name in enumerate(header)}
    out = {}
    for name in header:
        if name.startswith("re_") and f"im_{name[3:]}" in raw:
            base = name[3:]
            out[base] = raw[name].astype(float) + 1j * raw[f"im_{base}"].astype(float)
        elif name.startswith("im_") and f"re_{name[3:]}" in raw:
            continue
        else:
            out[name] = raw[name]
    return comments, out


def encode(obj):
    """JSON-friendly form: complex -> ``{"re", "im"}``, arrays -> lists, non-finite floats -> strings."""
    if isinstance(obj, dict):
        return {str(k): encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [encode(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [encode(v) for v in obj.tolist()]
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": encode(float(obj.real)), "im": encode(float(obj.imag))}
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if np.isfinite(f) else repr(f)
    return obj


def decode(obj):
    """Inverse of :func:`encode` for complex entries and non-finite floats."""
    if isinstance(obj, dict):
        if set(obj) == {"re", "im"}:
            return complex(decode(obj["re"]), decode(obj["im"]))
        return {k: decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [decode(v) for v in obj]
    if obj in ("nan", "inf", "-inf"):
        return float(obj)
    return obj


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(encode(obj), indent=2, sort_keys=True) + "\n")


def read_json(path):
    return decode(json.loads(Path(path).read_text()))


def read_bundle(directory) -> dict:
    """Load ``summary.json`` and every CSV/text table of a run directory."""
    d = Path(directory)
    out = {"summary": read_json(d / "summary.json"), "tables": {}}
    for p in sorted(d.glob("*.csv")):
        out["tables"][p.stem] = read_table(p)
    meta = d / "metadata.json"
    if meta.exists():
        out["metadata"] = read_json(meta)
    return out


def environment_info() -> dict:
    import scipy

    from . import __version__

    return {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__,
            "rlscatter": __version__, "platform": platform.platform()}
