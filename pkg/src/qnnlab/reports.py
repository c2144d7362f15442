"""CSV tables and run manifests.

CSV files use '.' decimals, '\\n' line endings and a header row; floats are
written with 17 significant digits so they read back bit-exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
import time
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import numpy as np

from qnnlab import __version__

MANIFEST = "manifest.json"


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating, Fraction)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        row = list(row)
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} fields, header has {len(header)}")
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(csv_text(header, rows))
    return path


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, Fraction)):
        return float(v)
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, Path):
        return str(v)
    return v


def write_json_atomic(path, doc) -> Path:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


class Run:
    """Output directory of one subcommand run.

    Existing files are never replaced unless ``force`` is set; the manifest is
    written last, atomically, with every verdict recorded.
    """

    def __init__(self, out, command: str, config: dict, force: bool = False):
        self.out = Path(out)
        self.command = command
        self.config = dict(config)
        self.force = force
        self.files: list = []
        self.verdicts: dict = {}
        self.summary: dict = {}
        self._t0 = time.perf_counter()
        self._started = datetime.now(timezone.utc).isoformat(timespec="seconds")
        self.out.mkdir(parents=True, exist_ok=True)
        self.claim(MANIFEST)

    def claim(self, name: str) -> Path:
        path = self.out / name
        if path.exists() and not self.force:
            raise FileExistsError(f"{path} exists; pass --force to overwrite")
        return path

    def _register(self, path: Path):
        if path.name not in self.files:
            self.files.append(path.name)

    def csv(self, name: str, header, rows) -> Path:
        path = write_csv(self.claim(name), header, rows)
        self._register(path)
        return path

    def json(self, name: str, doc) -> Path:
        path = write_json_atomic(self.claim(name), doc)
        self._register(path)
        return path

    def text(self, name: str, text: str) -> Path:
        path = self.claim(name)
        path.write_text(text, encoding="utf-8")
        self._register(path)
        return path

    def figure(self, name: str, render) -> Path:
        """``render(path)`` draws a figure to ``path``."""
        path = self.claim(name)
        render(path)
        self._register(path)
        return path

    def verdict(self, name: str, ok: bool):
        self.verdicts[name] = bool(ok)

    @property
    def passed(self):
        return all(self.verdicts.values())

    def finish(self) -> Path:
        doc = {
            "command": self.command,
            "config": self.config,
            "version": __version__,
            "started": self._started,
            "wall_clock_seconds": round(time.perf_counter() - self._t0, 6),
            "files": sorted(self.files),
            "verdicts": self.verdicts,
            "passed": self.passed,
            "summary": self.summary,
        }
        return write_json_atomic(self.claim(MANIFEST), doc)
