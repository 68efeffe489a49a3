"""File formats.

Datasets are UTF-8 CSV with either the header ``group,value`` (one
observation per row) or ``group,n,mean,sd`` (one group per row).  Lines
starting with ``#`` and blank lines are ignored.  Group order is the order of
first appearance.  Values are written with ``repr`` so they read back
bit-identically.

Scenario files are flat ``key = value`` lines::

    name = S1-like
    distribution = normal        # normal | gamma_mix | uniform_mix (one, or one per group)
    theta = 1, 1, 1.2
    sigma = 5                    # scalar or one per group
    n = 40                       # scalar or one per group
    w = 0.1                      # mixtures only
    labels = low, mid, high      # optional
"""

from __future__ import annotations

import csv
import io as _io
from pathlib import Path
from typing import Optional

import numpy as np

from .model import Dataset, GroupObservations, GroupSummary, ValidationError
from .scenarios import GammaNormalMix, Normal, Scenario, UniformNormalMix

SUBJECT_HEADER = ["group", "value"]
SUMMARY_HEADER = ["group", "n", "mean", "sd"]


class ParseError(ValidationError):
    def __init__(self, path, line: int, msg: str):
        super().__init__(f"{path}:{line}: {msg}")
        self.line = line


def _rows(text: str):
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        yield lineno, next(csv.reader([line]))


def _float(path, lineno, field, raw):
    try:
        return float(raw)
    except ValueError:
        raise ParseError(path, lineno, f"{field} is not a number: {raw!r}") from None


def parse_dataset(text: str, fmt: Optional[str] = None, path="<input>") -> Dataset:
    """Parse CSV text; ``fmt`` is 'subject', 'summary' or None to infer it from the header."""
    rows = _rows(text)
    try:
        lineno, header = next(rows)
    except StopIteration:
        raise ParseError(path, 1, "empty file") from None
    header = [h.strip().lower() for h in header]
    inferred = {tuple(SUBJECT_HEADER): "subject", tuple(SUMMARY_HEADER): "summary"}.get(tuple(header))
    if inferred is None:
        raise ParseError(path, lineno, f"header must be {','.join(SUBJECT_HEADER)} or {','.join(SUMMARY_HEADER)}")
    if fmt is not None and fmt != inferred:
        raise ParseError(path, lineno, f"header is {inferred} format but --format {fmt} was given")

    try:
        if inferred == "subject":
            groups: dict[str, list] = {}
            for lineno, r in rows:
                if len(r) != 2:
                    raise ParseError(path, lineno, f"expected 2 fields, got {len(r)}")
                groups.setdefault(r[0].strip(), []).append(_float(path, lineno, "value", r[1]))
            if not groups:
                raise ParseError(path, lineno, "no data rows")
            return Dataset(tuple(GroupObservations(k, v) for k, v in groups.items()))

        out = []
        for lineno, r in rows:
            if len(r) != 4:
                raise ParseError(path, lineno, f"expected 4 fields, got {len(r)}")
            n = _float(path, lineno, "n", r[1])
            if n != int(n):
                raise ParseError(path, lineno, f"n must be an integer: {r[1]!r}")
            try:
                out.append(GroupSummary(r[0].strip(), int(n), _float(path, lineno, "mean", r[2]),
                                        _float(path, lineno, "sd", r[3])))
            except ValidationError as e:
                raise ParseError(path, lineno, str(e)) from None
        if not out:
            raise ParseError(path, lineno, "no data rows")
        return Dataset(tuple(out))
    except ParseError:
        raise
    except ValidationError as e:
        raise ParseError(path, lineno, str(e)) from None


def read_dataset(path, fmt: Optional[str] = None) -> Dataset:
    path = Path(path)
    return parse_dataset(path.read_text(encoding="utf-8"), fmt, path)


def format_dataset(d: Dataset) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if d.subject_level:
        w.writerow(SUBJECT_HEADER)
        for g in d.groups:
            for v in g.values:
                w.writerow([g.label, repr(float(v))])
    else:
        w.writerow(SUMMARY_HEADER)
        for g in d.groups:
            w.writerow([g.label, g.n, repr(float(g.mean)), repr(float(g.sd))])
    return buf.getvalue()


def write_dataset(d: Dataset, path) -> None:
    Path(path).write_text(format_dataset(d), encoding="utf-8")


_DISTRIBUTIONS = {"normal": Normal, "gamma_mix": GammaNormalMix, "uniform_mix": UniformNormalMix}
_KEYS = {"name", "distribution", "theta", "sigma", "n", "w", "labels"}


def parse_scenario(text: str, path="<scenario>") -> Scenario:
    kv: dict[str, tuple[int, list[str]]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            raise ParseError(path, lineno, "expected 'key = value'")
        key, val = (p.strip() for p in s.split("=", 1))
        if key not in _KEYS:
            raise ParseError(path, lineno, f"unknown key {key!r}")
        if key in kv:
            raise ParseError(path, lineno, f"duplicate key {key!r}")
        kv[key] = (lineno, [val] if key == "name" else [v.strip() for v in val.split(",")])

    if "theta" not in kv:
        raise ParseError(path, 1, "missing required key 'theta'")
    line_t, raw_t = kv["theta"]
    theta = [_float(path, line_t, "theta", v) for v in raw_t]
    I = len(theta)

    def vector(key, default, conv):
        if key not in kv:
            if default is None:
                raise ParseError(path, 1, f"missing required key {key!r}")
            return [default] * I
        lineno, vals = kv[key]
        if len(vals) == 1:
            vals = vals * I
        if len(vals) != I:
            raise ParseError(path, lineno, f"{key} has {len(vals)} entries, theta has {I}")
        return [conv(lineno, v) for v in vals]

    def dist(lineno, v):
        if v not in _DISTRIBUTIONS:
            raise ParseError(path, lineno, f"unknown distribution {v!r}; use {sorted(_DISTRIBUTIONS)}")
        return v

    def count(lineno, v):
        x = _float(path, lineno, "n", v)
        if x != int(x) or x < 1:
            raise ParseError(path, lineno, f"n must be a positive integer: {v!r}")
        return int(x)

    dists = vector("distribution", "normal", dist)
    sigma = vector("sigma", None, lambda ln, v: _float(path, ln, "sigma", v))
    n = vector("n", None, count)
    needs_w = any(d != "normal" for d in dists)
    w = vector("w", None if needs_w else 0.0, lambda ln, v: _float(path, ln, "w", v))
    labels = vector("labels", "", lambda ln, v: v)
    if not any(labels):
        labels = [f"g{i + 1}" for i in range(I)]
    name = kv["name"][1][0] if "name" in kv else "custom"

    gens = []
    for i in range(I):
        try:
            cls = _DISTRIBUTIONS[dists[i]]
            gens.append(cls(theta[i], sigma[i]) if cls is Normal else cls(theta[i], sigma[i], w[i]))
        except ValidationError as e:
            raise ParseError(path, kv["theta"][0], f"group {i + 1}: {e}") from None
    param = "(" + ", ".join(f"{t:g}" for t in theta) + ")"
    return Scenario(name, tuple(gens), tuple(n), "custom", param, tuple(labels))


def read_scenario(path) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(encoding="utf-8"), path)


def write_rows_csv(rows: list[dict], columns: list[str], path) -> None:
    """Write rows with full double precision (``repr``) for floats."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(r.get(c)) for c in columns])


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(float(v))
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    return v
