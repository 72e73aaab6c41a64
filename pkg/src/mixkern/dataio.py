"""CSV datasets and result tables, and 8-bit grayscale PGM images."""
from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CorruptHeader, DimensionMismatch, NonFiniteValue, SchemaMismatch, UnsupportedFormat


@dataclass(frozen=True)
class Dataset:
    """Inputs ``X`` (n x p) and outputs ``y`` (length n, or n x m)."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.y, dtype=float)
        if X.ndim != 2 or y.ndim not in (1, 2) or y.shape[0] != X.shape[0]:
            raise DimensionMismatch(f"X {X.shape} and y {y.shape} do not describe the same rows")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def m(self):
        return 1 if self.y.ndim == 1 else self.y.shape[1]

    def subset(self, idx):
        return Dataset(self.X[idx], self.y[idx])


_X_COL = re.compile(r"x(\d+)$")
_Y_COL = re.compile(r"y(\d+)$")


def dataset_schema(p, m=1):
    """Header for ``p`` inputs and ``m`` outputs (``y`` alone when m == 1)."""
    ys = ["y"] if m == 1 else [f"y{j + 1}" for j in range(m)]
    return [f"x{i + 1}" for i in range(p)] + ys


def _infer_schema(header):
    xs = [h for h in header if _X_COL.match(h)]
    p = len(xs)
    m = len(header) - p
    if p == 0 or m == 0:
        raise SchemaMismatch(f"header {header} needs x1..xp followed by y or y1..ym")
    expected = dataset_schema(p, m)
    if header != expected:
        raise SchemaMismatch(f"header {header}, expected {expected}")
    return p, m


def read_csv_dataset(path, schema=None) -> Dataset:
    """Read a numeric dataset. ``schema`` is the expected header (inferred when None).

    Non-finite or unparsable values raise :class:`NonFiniteValue` carrying the
    zero-based data row index.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaMismatch("empty file")
    header = [h.strip() for h in rows[0]]
    if schema is not None and header != list(schema):
        raise SchemaMismatch(f"header {header}, expected {list(schema)}")
    p, m = _infer_schema(header)
    values = np.empty((len(rows) - 1, p + m))
    for r, row in enumerate(rows[1:]):
        if len(row) != p + m:
            raise SchemaMismatch(f"row {r} has {len(row)} fields, expected {p + m}")
        try:
            values[r] = [float(v) for v in row]
        except ValueError:
            raise NonFiniteValue(r, f"unparsable value at row {r}") from None
        if not np.all(np.isfinite(values[r])):
            raise NonFiniteValue(r)
    y = values[:, p] if m == 1 else values[:, p:]
    return Dataset(values[:, :p], y)


def read_csv_inputs(path) -> np.ndarray:
    """Input matrix from a CSV with header ``x1..xp``, optionally followed by outputs (ignored)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaMismatch("empty file")
    header = [h.strip() for h in rows[0]]
    p = 0
    while p < len(header) and header[p] == f"x{p + 1}":
        p += 1
    if p == 0:
        raise SchemaMismatch(f"header {header} must start with x1")
    X = np.empty((len(rows) - 1, p))
    for r, row in enumerate(rows[1:]):
        if len(row) != len(header):
            raise SchemaMismatch(f"row {r} has {len(row)} fields, expected {len(header)}")
        try:
            X[r] = [float(v) for v in row[:p]]
        except ValueError:
            raise NonFiniteValue(r, f"unparsable value at row {r}") from None
        if not np.all(np.isfinite(X[r])):
            raise NonFiniteValue(r)
    return X


def write_dataset(data: Dataset, path):
    y = data.y[:, None] if data.y.ndim == 1 else data.y
    rows = [list(x) + list(t) for x, t in zip(data.X, y)]
    write_csv(rows, path, header=dataset_schema(data.p, data.m))


def format_value(v):
    """Text for one CSV cell; floats use 17 significant digits."""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def csv_text(rows, header=None):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    if header is not None:
        writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def write_csv(rows, path, header=None):
    """Write rows with minimal RFC 4180 quoting and ``\\n`` line endings."""
    Path(path).write_text(csv_text(rows, header), encoding="utf-8", newline="")


# ------------------------------------------------------------------ PGM


def _pgm_tokens(data: bytes, count, start=0):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens, i = [], start
    while len(tokens) < count:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if i >= len(data):
            raise CorruptHeader("truncated header")
        if data[i : i + 1] == b"#":
            while i < len(data) and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < len(data) and not data[j : j + 1].isspace() and data[j : j + 1] != b"#":
            j += 1
        tokens.append(data[i:j])
        i = j
    return tokens, i


def read_pgm(path) -> np.ndarray:
    """Grayscale grid (rows x cols) of floats in [0, 255] from a P2 or P5 file."""
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic in (b"P1", b"P3", b"P4", b"P6"):
        raise UnsupportedFormat(f"{magic.decode()} images are not grayscale PGM")
    if magic not in (b"P2", b"P5"):
        raise CorruptHeader("missing P2/P5 magic number")
    tokens, end = _pgm_tokens(data, 3, 2)
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise CorruptHeader("non-integer size or maxval") from None
    if width < 1 or height < 1 or not 1 <= maxval <= 255:
        raise CorruptHeader(f"bad size {width}x{height} or maxval {maxval}")
    count = width * height
    if magic == b"P5":
        pixels = np.frombuffer(data[end + 1 : end + 1 + count], dtype=np.uint8)
        if pixels.size != count:
            raise CorruptHeader("truncated pixel data")
    else:
        body = re.sub(rb"#[^\n]*", b"", data[end:]).split()
        if len(body) != count:
            raise CorruptHeader(f"expected {count} pixels, found {len(body)}")
        pixels = np.array([int(t) for t in body])
        if pixels.min() < 0 or pixels.max() > maxval:
            raise CorruptHeader("pixel value outside [0, maxval]")
    grid = pixels.reshape(height, width).astype(float)
    if maxval != 255:
        grid = grid * (255.0 / maxval)
    return grid


def write_pgm(grid, path, binary=False):
    """Write an 8-bit PGM; values are clamped to [0, 255] and rounded half-to-even."""
    g = np.asarray(grid, dtype=float)
    if g.ndim != 2:
        raise DimensionMismatch("PGM grid must be two-dimensional")
    pix = np.clip(np.rint(g), 0, 255).astype(np.uint8)
    h, w = pix.shape
    if binary:
        Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode() + pix.tobytes())
        return
    lines = [f"P2\n{w} {h}\n255"] + [" ".join(str(v) for v in row) for row in pix]
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii", newline="")
