"""Render benchmark CSVs into the three experiment-family figures."""

from __future__ import annotations

import csv
import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .errors import SchemaError
from .harness import CSV_HEADER

__all__ = ["emit_plots", "load_records"]

PLOT_FILES = ["runtime_vs_n.svg", "runtime_vs_k.svg", "sampling_vs_n.svg",
              "sampling_vs_k.svg", "l1_vs_snr.svg"]


def load_records(csv_path: str) -> list[dict]:
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{csv_path} is empty") from None
        if header != CSV_HEADER:
            raise SchemaError(f"unexpected header {header!r}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(CSV_HEADER):
                raise SchemaError(f"row {lineno} has {len(row)} fields")
            rec = dict(zip(CSV_HEADER, row))
            try:
                rec["n"] = int(rec["n"])
                rec["k"] = int(rec["k"])
                rec["snr_db"] = None if rec["snr_db"] == "exact" else float(rec["snr_db"])
                rec["runtime_s"] = float(rec["runtime_s"])
                rec["sampling_fraction"] = float(rec["sampling_fraction"])
                rec["l0"] = int(rec["l0"])
                rec["l1"] = float(rec["l1"])
                rec["l2"] = float(rec["l2"])
                rec["converged"] = rec["converged"] == "true"
            except ValueError as exc:
                raise SchemaError(f"row {lineno}: {exc}") from exc
            rows.append(rec)
    return rows


def _series(rows, x_key, y_key):
    grouped = defaultdict(list)
    any_gap = False
    for rec in rows:
        grouped[rec["algorithm"]].append(rec)
    out = {}
    for algo, recs in sorted(grouped.items()):
        recs.sort(key=lambda r: (r[x_key] if r[x_key] is not None else 0))
        xs = [r[x_key] for r in recs]
        ys = [r[y_key] if r["converged"] else float("nan") for r in recs]
        if any(not r["converged"] for r in recs):
            any_gap = True
        out[algo] = (xs, ys)
    return out, any_gap


def _plot(rows, x_key, y_key, xlabel, ylabel, path, loglog=False):
    series, any_gap = _series(rows, x_key, y_key)
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    has_positive = False
    for algo, (xs, ys) in series.items():
        label = algo + (" (gaps = not converged)" if any(y != y for y in ys) else "")
        ax.plot(xs, ys, marker="o", label=label)
        has_positive = has_positive or any(y == y and y > 0 for y in ys)
    if loglog and has_positive:
        ax.set_xscale("log", base=2)
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)
    if series:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    del any_gap


def emit_plots(csv_path: str, out_dir: str) -> list[str]:
    """Write the five standard figures; returns the created file paths.

    Non-converged rows are plotted as gaps.  Rows missing for a given
    figure (for example an SNR-only CSV rendered as runtime-vs-N) still
    produce a valid, possibly empty, figure file.
    """
    rows = load_records(csv_path)
    os.makedirs(out_dir, exist_ok=True)
    paths = [os.path.join(out_dir, name) for name in PLOT_FILES]
    _plot(rows, "n", "runtime_s", "signal size N", "runtime [s]", paths[0], loglog=True)
    _plot(rows, "k", "runtime_s", "sparsity K", "runtime [s]", paths[1])
    _plot(rows, "n", "sampling_fraction", "signal size N", "fraction sampled",
          paths[2], loglog=True)
    _plot(rows, "k", "sampling_fraction", "sparsity K", "fraction sampled", paths[3])
    snr_rows = [dict(r, snr_db=(r["snr_db"] if r["snr_db"] is not None else 80.0))
                for r in rows]
    _plot(snr_rows, "snr_db", "l1", "SNR [dB] (exact plotted at 80)",
          "per-coefficient L1 error", paths[4])
    return paths
