"""Schema-stable CSV output and per-record seed derivation.

Files are UTF-8 with LF line endings, a single comment line carrying the
config hash, then a header row and data rows.  Floats are written with repr,
which round-trips exactly; missing values (unknown phi, skipped theta) are
empty cells.
"""

from __future__ import annotations

import csv
import hashlib
import math

ACCURACY_COLUMNS = [
    "experiment_id", "function", "n", "estimator", "method", "N", "sigma",
    "trial", "seed", "theta", "log10_theta", "evals", "status",
]

SUMMARY_COLUMNS = [
    "experiment_id", "function", "n", "estimator", "method", "N", "sigma",
    "count", "skipped", "mean_log10_theta", "q1_log10_theta",
    "median_log10_theta", "q3_log10_theta",
]

TRACE_COLUMNS = [
    "k", "evals", "f", "phi", "grad_norm_true", "g_norm", "alpha", "theta_k",
    "status",
]

AGGREGATE_COLUMNS = [
    "function", "method", "k", "n_seeds", "phi_mean", "phi_min", "phi_max",
    "grad_norm_true_mean", "evals_mean",
]


def record_seed(*parts) -> int:
    """Stable 64-bit seed from the identifying parts of one record.

    Every record derives its own root seed this way, so any single trial can
    be reproduced in isolation from the values in its output row.
    """
    key = ":".join(str(p) for p in parts)
    return int.from_bytes(hashlib.blake2b(key.encode(), digest_size=8).digest(), "big")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return repr(value)
    return str(value)


def write_csv(path, columns: list[str], rows, cfg_hash: str) -> None:
    """Write rows (dicts keyed by column) under a config-hash comment line."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# config_sha256={cfg_hash}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in columns])


def read_csv(path) -> tuple[str, list[dict]]:
    """Read back a harness CSV; returns (config hash, rows as string dicts)."""
    with open(path, encoding="utf-8", newline="") as fh:
        first = fh.readline().rstrip("\n")
        prefix = "# config_sha256="
        cfg_hash = first[len(prefix):] if first.startswith(prefix) else ""
        return cfg_hash, list(csv.DictReader(fh))
