"""L-value cache and CSV/JSON export."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np

from . import __version__
from .characters import ModulusContext
from .lcentral import central_values, l_central_afe

log = logging.getLogger(__name__)

CACHE_ENV = "LQLAB_CACHE_DIR"
METHOD = "afe"
# below this many missing characters, evaluate them one by one instead of a full batch
SMALL_MISS = 64


def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "lqlab"


class LValueCache:
    """Append-only line-delimited JSON store of central values keyed by (q, character index)."""

    def __init__(self, path, version: str = __version__, method: str = METHOD):
        self.path = Path(path)
        self.version = version
        self.method = method
        self.computed = 0

    def _file(self, q: int) -> Path:
        return self.path / f"lvalues_q{q}.jsonl"

    def load(self, q: int) -> Dict[int, tuple]:
        out: Dict[int, tuple] = {}
        f = self._file(q)
        if not f.exists():
            return out
        with f.open() as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                    if rec["q"] != q or rec["version"] != self.version or rec["method"] != self.method:
                        continue
                    out[int(rec["index"])] = (complex(rec["re"], rec["im"]), float(rec["est_error"]))
                except (ValueError, KeyError, TypeError):
                    log.warning("skipping corrupt cache line %d in %s", lineno, f)
        return out

    def values(self, ctx: ModulusContext, indices: Optional[np.ndarray] = None):
        """(indices, values, est_error) for the even primitive class, filling gaps."""
        all_idx = ctx.class_indices("even_primitive")
        want = all_idx if indices is None else np.asarray(indices)
        have = self.load(ctx.q)
        missing = [int(i) for i in want if int(i) not in have]
        new: Dict[int, tuple] = {}
        if missing:
            if len(missing) <= SMALL_MISS:
                for i in missing:
                    cv = l_central_afe(ctx.character(i))
                    new[i] = (cv.value, cv.est_error)
            else:
                idx, vals, err = central_values(ctx)
                pos = {int(i): k for k, i in enumerate(idx)}
                for i in missing:
                    new[i] = (complex(vals[pos[i]]), err)
            self._append(ctx.q, new)
            self.computed += len(new)
        have.update(new)
        vals = np.array([have[int(i)][0] for i in want], dtype=complex)
        err = max((have[int(i)][1] for i in want), default=0.0)
        return want, vals, err

    def _append(self, q: int, entries: Mapping[int, tuple]) -> None:
        self.path.mkdir(parents=True, exist_ok=True)
        with self._file(q).open("a") as fh:
            for i in sorted(entries):
                v, e = entries[i]
                rec = {"q": q, "index": i, "re": v.real, "im": v.imag, "est_error": e, "method": self.method, "version": self.version}
                fh.write(json.dumps(rec) + "\n")


def format_value(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.17g}"
    return str(x)


def _json_value(x) -> str:
    if isinstance(x, (float, np.floating)) and not math.isfinite(float(x)):
        return json.dumps(format_value(x))
    if isinstance(x, (bool, np.bool_, int, np.integer, float, np.floating)):
        return format_value(x)
    return json.dumps(str(x))


def export(rows: Sequence[Mapping], path, fmt: str = "csv", columns: Optional[List[str]] = None) -> Path:
    if not rows:
        raise ValueError("nothing to export")
    columns = columns or list(rows[0].keys())
    path = Path(path)
    if str(path) != "-":
        path.parent.mkdir(parents=True, exist_ok=True)
    text = render(rows, fmt, columns)
    if str(path) == "-":
        print(text, end="")
    else:
        path.write_text(text)
    return path


def render(rows: Sequence[Mapping], fmt: str = "csv", columns: Optional[List[str]] = None) -> str:
    columns = columns or list(rows[0].keys())
    if fmt == "csv":
        import io

        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([format_value(r[c]) for c in columns])
        return buf.getvalue()
    if fmt == "json":
        lines = []
        for r in rows:
            body = ", ".join(f"{json.dumps(c)}: {_json_value(r[c])}" for c in columns)
            lines.append("  {" + body + "}")
        return "[\n" + ",\n".join(lines) + "\n]\n"
    raise ValueError(f"unknown format {fmt!r}")
