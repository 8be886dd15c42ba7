"""TSV serialization helpers shared by the table writers."""

from __future__ import annotations

import os


def format_float(value: float) -> str:
    """17 significant digits: parses back to the identical double."""
    return f"{value:.17g}"


def write_tsv(path, header: list[str], rows, comments: list[str] | None = None) -> None:
    """Write `#`-prefixed comment lines, a header row, then data rows."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in comments or []:
            fh.write(f"# {line}\n")
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(row) + "\n")


def read_rows(path) -> tuple[list[str], list[tuple[int, list[str]]]]:
    """Read a TSV written by write_tsv: (header, [(line number, fields), ...]).

    Comment lines and blank lines are skipped; line numbers are 1-based file
    positions so parsers can name the offending line in error messages.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such file: {path}")
    header: list[str] | None = None
    rows: list[tuple[int, list[str]]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split("\t")
            else:
                rows.append((lineno, line.split("\t")))
    if header is None:
        raise ValueError(f"{path}: no header row found")
    return header, rows
