"""
File utilities module.
Writes result records, delimited curve files and the run manifest.
"""

import csv
import hashlib
import json
import math
import os

import numpy as np
from loguru import logger

from modules.benchmarking.analysis import DecayCurve

CURVE_HEADER = ("length", "mean", "std", "n_sequences")
RESULT_FILE = "result.json"
SUMMARY_FILE = "summary.csv"
MANIFEST_FILE = "manifest.json"


def ensure_directory_exists(directory):
    """
    Ensure that a directory exists, creating it if necessary.

    Args:
        directory (str): Directory path

    Raises:
        OSError: If the directory cannot be created
    """
    if not directory:
        return
    if not os.path.isdir(directory):
        logger.debug(f"Creating directory: {directory}")
        os.makedirs(directory, exist_ok=True)


def format_number(value):
    """17 significant digits, integers unchanged, empty for missing values."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def to_jsonable(value):
    """Plain Python types for json; NaN and inf become None."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def write_result_record(record, out_dir):
    """
    Write the result record as sorted-key JSON.

    Args:
        record (dict): Result record; must not contain timestamps
        out_dir (str): Output directory

    Returns:
        str: Path of the written file
    """
    ensure_directory_exists(out_dir)
    path = os.path.join(out_dir, RESULT_FILE)
    text = json.dumps(to_jsonable(record), sort_keys=True, indent=2, allow_nan=False)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(text + "\n")
    logger.info(f"Result record saved to {path}")
    return path


def write_table(path, header, rows):
    """Delimited text file with a header row; numbers use format_number."""
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_number(v) for v in row])
    return path


def curve_rows(curve):
    return [(int(m), mean, std, int(n))
            for m, mean, std, n in zip(curve.lengths, curve.mean, curve.std, curve.n_sequences)]


def emit_curves(curves, out_dir, tables=None):
    """
    One file per decay curve (length, mean, std, n_sequences) plus one per plot table.

    Args:
        curves (dict): File stem -> DecayCurve; an empty curve gives a header-only file
        out_dir (str): Output directory
        tables (dict, optional): File stem -> (header, rows)

    Returns:
        list: Paths of the written files, in name order
    """
    ensure_directory_exists(out_dir)
    paths = []
    for stem, curve in sorted(curves.items()):
        paths.append(write_table(os.path.join(out_dir, f"{stem}.csv"), CURVE_HEADER, curve_rows(curve)))
    for stem, (header, rows) in sorted((tables or {}).items()):
        paths.append(write_table(os.path.join(out_dir, f"{stem}.csv"), header, rows))
    logger.info(f"Wrote {len(paths)} curve files to {out_dir}")
    return paths


def write_summary(rows, out_dir):
    """summary.csv with the union of the row keys as columns, first-seen order."""
    columns = []
    for row in rows:
        columns.extend(k for k in row if k not in columns)
    path = os.path.join(out_dir, SUMMARY_FILE)
    return write_table(path, columns, [[row.get(c) for c in columns] for row in rows])


def read_curve(path, name=None):
    """
    Parse a file written by emit_curves back into a DecayCurve.

    Raises:
        ValueError: If the header is not the curve header
    """
    with open(path, encoding='utf-8', newline='') as f:
        reader = csv.reader(f)
        header = tuple(next(reader, ()))
        if header != CURVE_HEADER:
            raise ValueError(f"{path}: not a decay-curve file (header {header})")
        rows = [r for r in reader if r]
    stem = name or os.path.splitext(os.path.basename(path))[0]
    if not rows:
        empty = np.zeros(0)
        return DecayCurve(stem, empty, empty, empty, np.zeros(0, dtype=int))
    arr = np.array([[float(x) for x in r] for r in rows])
    return DecayCurve(stem, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3].astype(int))


def file_checksum(path):
    """SHA-256 hex digest of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 16), b''):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(out_dir, files, config_hash, toolkit_version, started, finished):
    """
    Write manifest.json listing every output file with its checksum.

    Args:
        out_dir (str): Output directory
        files (list): Paths of the files to list
        config_hash (str): Hash of the resolved config
        toolkit_version (str): Version string
        started (str): ISO-8601 start time
        finished (str): ISO-8601 end time

    Returns:
        str: Path of the manifest
    """
    entries = [
        {"path": os.path.relpath(p, out_dir), "sha256": file_checksum(p), "bytes": os.path.getsize(p)}
        for p in sorted(files)
    ]
    manifest = {
        "config_hash": config_hash,
        "toolkit_version": toolkit_version,
        "started": started,
        "finished": finished,
        "files": entries,
    }
    path = os.path.join(out_dir, MANIFEST_FILE)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info(f"Manifest with {len(entries)} files saved to {path}")
    return path
