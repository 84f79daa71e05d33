"""CSV and hashing helpers used for reproducible artifacts."""

import hashlib
import io
from pathlib import Path

import numpy as np


def format_value(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def csv_text(header, rows):
    """Render rows as CSV text: '.' decimals, 17 significant digits, LF newlines."""
    buf = io.StringIO(newline="")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(format_value(v) for v in row) + "\n")
    return buf.getvalue()


def write_csv(path, header, rows):
    path = Path(path)
    with open(path, "w", newline="", encoding="ascii") as fh:
        fh.write(csv_text(header, rows))
    return path


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
