"""Flat-file helpers shared by the command-line stages.

Floats are written with 17 significant digits by default so that every
value read back is bit-identical to the one written.  ``ADOPTPATHS_PRECISION``
lowers that for human-sized output.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from pathlib import Path
from typing import Iterable, Optional, Sequence

PRECISION_ENV = "ADOPTPATHS_PRECISION"
DEFAULT_PRECISION = 17


class MissingStageFile(FileNotFoundError):
    pass


def precision() -> int:
    raw = os.environ.get(PRECISION_ENV, "").strip()
    if not raw:
        return DEFAULT_PRECISION
    try:
        p = int(raw)
    except ValueError:
        raise ValueError(f"{PRECISION_ENV} must be an integer, got {raw!r}") from None
    if not 1 <= p <= 17:
        raise ValueError(f"{PRECISION_ENV} must be in 1..17, got {p}")
    return p


def fmt(value, digits: Optional[int] = None) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if hasattr(value, "value") and isinstance(value.value, str):
        return value.value
    if isinstance(value, str):
        return value
    x = float(value)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, f".{digits or precision()}g")


def parse_float(text: str) -> Optional[float]:
    return None if text == "" else float(text)


def parse_bool(text: str) -> bool:
    if text not in ("true", "false"):
        raise ValueError(f"expected true/false, got {text!r}")
    return text == "true"


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_csv(path: Path) -> list[dict[str, str]]:
    if not path.is_file():
        raise MissingStageFile(f"missing {path.name} in {path.parent}; run the earlier stage first")
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2, allow_nan=False)
        fh.write("\n")


def read_json(path: Path) -> dict:
    if not path.is_file():
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
