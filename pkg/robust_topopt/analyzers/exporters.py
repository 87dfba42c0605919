import csv
import logging
from typing import List, Optional, Tuple

import numpy as np

from robust_topopt.models import ReportRow

log = logging.getLogger(__name__)

FIELD_KINDS = ("density", "delta", "effective-modulus")

REPORT_COLUMNS = ["budget", "compliance_reference", "wc_topo_reference_delta", "nom_topo_worst_delta",
                  "wc_topo_worst_delta"]
CONTINUATION_COLUMNS = ["nom_contin", "nom_direct", "nom_inverse", "wc_contin", "wc_direct", "wc_inverse"]

# Percent columns are written with an explicit sign
PERCENT_COLUMNS = set(REPORT_COLUMNS[2:] + CONTINUATION_COLUMNS)


def field_to_pixels(field: np.ndarray, nx: int, ny: int) -> np.ndarray:
    """
    Gray levels of a per-element field, 0 -> white, 1 -> black, top row first
    """
    field = np.asarray(field, dtype=float)
    if field.shape != (nx * ny,):
        raise ValueError(f"field has {field.size} values, the mesh has {nx * ny} elements")
    levels = np.rint(255.0 * (1.0 - np.clip(field, 0.0, 1.0))).astype(np.uint8)
    return levels.reshape(ny, nx)[::-1]


def export_field(field: np.ndarray, nx: int, ny: int, kind: str, path: str, e0: float = 1.0):
    """
    Write a per-element field as a binary PGM image, one pixel per element

    Parameters
    ----------
    kind:
        ``density``, ``delta`` or ``effective-modulus`` (divided by ``e0``)
    """
    if kind not in FIELD_KINDS:
        raise ValueError(f"Unknown field kind: {kind}")
    values = np.asarray(field, dtype=float)
    if kind == "effective-modulus":
        values = values / e0
    pixels = field_to_pixels(values, nx, ny)
    with open(path, "wb") as f:
        f.write(f"P5\n{nx} {ny}\n255\n".encode("ascii"))
        f.write(pixels.tobytes())
    log.info(f"Exported {kind} field to {path}")


def read_pgm(path: str) -> Tuple[np.ndarray, int, int]:
    """
    Read a binary PGM written by export_field back into a per-element field in [0, 1]

    Returns
    -------
    (field, nx, ny)
    """
    with open(path, "rb") as f:
        data = f.read()
    tokens = []
    position = 0
    while len(tokens) < 4:
        while data[position:position + 1].isspace():
            position += 1
        start = position
        while not data[position:position + 1].isspace():
            position += 1
        tokens.append(data[start:position].decode("ascii"))
    if tokens[0] != "P5" or tokens[3] != "255":
        raise ValueError(f"{path} is not an 8-bit binary PGM")
    nx, ny = int(tokens[1]), int(tokens[2])
    pixels = np.frombuffer(data[position + 1:position + 1 + nx * ny], dtype=np.uint8)
    if pixels.size != nx * ny:
        raise ValueError(f"{path} is truncated")
    field = 1.0 - pixels.reshape(ny, nx)[::-1].astype(float) / 255.0
    return field.ravel(), nx, ny


def _format(column: str, value: Optional[float]) -> str:
    if value is None:
        return ""
    if column in PERCENT_COLUMNS:
        return f"{value:+.6f}"
    return repr(float(value))


def report_columns(rows: List[ReportRow], continuation: Optional[bool] = None) -> List[str]:
    if continuation is None:
        continuation = any(row.has_continuation for row in rows)
    return REPORT_COLUMNS + (CONTINUATION_COLUMNS if continuation else [])


def export_report(rows: List[ReportRow], path: str, continuation: Optional[bool] = None):
    """
    Write report rows as CSV, sorted by budget; an empty report leaves the header only
    """
    columns = report_columns(rows, continuation)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(columns)
        for row in sorted(rows, key=lambda r: r.budget):
            writer.writerow([_format(column, getattr(row, column)) for column in columns])
    log.info(f"Wrote {len(rows)} report rows to {path}")


def read_report(path: str) -> List[ReportRow]:
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        rows = []
        for record in reader:
            values = {key: float(value) for key, value in record.items() if value not in (None, "")}
            rows.append(ReportRow(**values))
    return rows
