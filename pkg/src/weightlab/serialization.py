"""Artifact serialization helpers.

All on-disk artifacts share three rules:

1. floats are written with 17 significant digits (``%.17g``), which is enough
   to round-trip any IEEE double bit-exactly;
2. files are written atomically (temp file in the target directory, then
   ``os.replace``), so an interrupted run never leaves a partial artifact;
3. every artifact is stamped with ``schema_version`` — JSON documents carry a
   field, CSV files start with a ``# schema_version=N`` comment line ahead of
   the pinned header row.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Sequence

from . import SCHEMA_VERSION

FLOAT_FMT = ".17g"


def fmt_float(x: float) -> str:
    """Render one float with 17 significant digits (nan/inf spelled out)."""
    return format(float(x), FLOAT_FMT)


def dumps_canonical(obj: Any, *, indent: int | None = None) -> str:
    """Deterministic JSON: sorted keys, ``%.17g`` floats, no NaN tokens.

    NaN/inf are not representable in strict JSON; they appear in artifacts as
    the strings "nan"/"inf"/"-inf" and are revived by :func:`parse_float`.
    The emitter is hand-rolled because ``json.dumps`` hardwires shortest-repr
    float formatting (it never consults subclass ``__repr__``), and the
    artifact contract pins 17 significant digits.
    """
    pieces: list[str] = []
    _emit(_jsonable(obj), pieces, indent, 0)
    return "".join(pieces)


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            return fmt_float(obj)
        return obj
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "tolist"):  # numpy arrays and scalars
        return _jsonable(obj.tolist())
    raise TypeError(f"cannot serialize {type(obj).__name__} canonically")


def _emit(value: Any, out: list[str], indent: int | None, level: int) -> None:
    if value is None or isinstance(value, bool):
        out.append(json.dumps(value))
    elif isinstance(value, float):
        out.append(fmt_float(value))
    elif isinstance(value, int):
        out.append(str(value))
    elif isinstance(value, str):
        out.append(json.dumps(value))  # proper escaping
    elif isinstance(value, list):
        _emit_items(value, [(None, v) for v in value], "[]", out, indent, level)
    elif isinstance(value, dict):
        items = [(json.dumps(k) + ": ", v) for k, v in sorted(value.items())]
        _emit_items(value, items, "{}", out, indent, level)
    else:  # _jsonable leaves nothing else through
        raise TypeError(f"cannot serialize {type(value).__name__} canonically")


def _emit_items(container, items, brackets: str, out: list[str],
                indent: int | None, level: int) -> None:
    if not container:
        out.append(brackets)
        return
    pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
    sep = "," + pad
    out.append(brackets[0] + pad)
    for j, (prefix, v) in enumerate(items):
        if j:
            out.append(sep)
        if prefix is not None:
            out.append(prefix)
        _emit(v, out, indent, level + 1)
    out.append(("" if indent is None else "\n" + " " * (indent * level)) + brackets[1])


def parse_float(token: str) -> float:
    """Inverse of :func:`fmt_float` (accepts nan/inf spellings)."""
    return float(token)


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write ``text`` to ``path`` via temp-file-then-rename in one directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def config_digest(config: Any) -> str:
    """Digest of a config mapping, stable under key reordering."""
    return sha256_text(dumps_canonical(config))


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
    """Write a CSV artifact: schema comment, pinned header, preformatted cells."""
    lines = [f"# schema_version={SCHEMA_VERSION}", ",".join(header)]
    lines.extend(",".join(row) for row in rows)
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]], int]:
    """Read a CSV artifact; returns (header, rows, schema_version).

    Comment lines (leading ``#``) are skipped; a ``# schema_version=N`` comment
    sets the reported version (files written before versioning count as 1).
    """
    version = SCHEMA_VERSION
    header: list[str] | None = None
    rows: list[list[str]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                stripped = line[1:].strip()
                if stripped.startswith("schema_version="):
                    version = int(stripped.split("=", 1)[1])
                continue
            if header is None:
                header = line.split(",")
            else:
                rows.append(line.split(","))
    if header is None:
        raise ValueError(f"{path}: no header row found")
    return header, rows, version


def write_json(path: str | Path, obj: Any) -> None:
    atomic_write_text(path, dumps_canonical(obj, indent=2) + "\n")


def read_json(path: str | Path) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
