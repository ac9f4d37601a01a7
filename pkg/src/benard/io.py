"""Output files: ledger CSV, verdict lines and key/value summaries.

All files are written to a temporary name in the target directory and then
renamed, so readers never see a partial file.
"""
from __future__ import annotations

import csv
import io
import os
import tempfile
from typing import Iterable, Mapping

from .ledger import LedgerRow, Verdict


def atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt(v: float) -> str:
    """17 significant digits; enough to round-trip any float64."""
    return format(float(v), ".17g")


def ledger_csv(rows: Iterable[LedgerRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LedgerRow.columns())
    for r in rows:
        w.writerow([fmt(v) for v in r.values()])
    return buf.getvalue()


def read_ledger_csv(path: str) -> list[LedgerRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != LedgerRow.columns():
            raise ValueError(f"unexpected ledger header in {path}")
        return [LedgerRow(*(float(v) for v in row)) for row in reader]


def verdicts_text(verdicts: Iterable[Verdict]) -> str:
    return "".join(v.line() + "\n" for v in verdicts)


def summary_text(summary: Mapping) -> str:
    lines = []
    for k, v in summary.items():
        lines.append(f"{k} = {fmt(v) if isinstance(v, float) else v}\n")
    return "".join(lines)


def table_csv(header: list[str], rows: Iterable[Iterable]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def write_outputs(
    rows: Iterable[LedgerRow],
    verdicts: Iterable[Verdict],
    directory: str,
    summary: Mapping | None = None,
    resolved_config: str | None = None,
) -> None:
    """Write ``ledger.csv``, ``verdicts.txt`` and, when given, ``summary.txt`` and ``resolved_config.txt``."""
    os.makedirs(directory, exist_ok=True)
    atomic_write(os.path.join(directory, "ledger.csv"), ledger_csv(rows))
    atomic_write(os.path.join(directory, "verdicts.txt"), verdicts_text(verdicts))
    if summary is not None:
        atomic_write(os.path.join(directory, "summary.txt"), summary_text(summary))
    if resolved_config is not None:
        atomic_write(os.path.join(directory, "resolved_config.txt"), resolved_config)
