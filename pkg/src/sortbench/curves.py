"""Measured-versus-model curve files (CSV plus one SVG chart per algorithm)."""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .config import UsageError  # noqa: E402
from .harness import write_csv  # noqa: E402
from .models import Calibration, Measurement, ModelParams, calibrate, memory_model, model_time  # noqa: E402

CURVE_COLUMNS = ("algorithm", "n", "m", "P", "measured", "t_model_s", "mem_model_elements")


def read_rows(path: str | Path) -> list[dict[str, str]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _time_value(row: dict[str, str]) -> str:
    # wall-mode CSVs carry seconds; counted-mode ones only weighted ops
    return row["time_s"] if row.get("time_s") else row.get("weighted_ops", "")


def fit_experiment1(rows: Sequence[dict[str, str]]) -> dict[str, Calibration]:
    by_algo: dict[str, list[Measurement]] = defaultdict(list)
    for row in rows:
        value = _time_value(row)
        if value:
            by_algo[row["algorithm"]].append(
                Measurement(int(row["n"]), int(row["m"]), int(row["k"]), float(value))
            )
    return {algo: calibrate(algo, ms) for algo, ms in by_algo.items()}


def emit_model_curves(
    params: dict[str, ModelParams],
    grids: Iterable[tuple[str, int, int, int]],
    path: str | Path,
    measured: dict[tuple[str, int, int, int], str] | None = None,
    memory: bool = False,
) -> list[Path]:
    """Write model values (and measured values when given) for each grid point.

    ``grids`` yields ``(algorithm, n, m, P)``. ``measured`` maps the same keys
    to the measured cell copied verbatim from the experiment CSV. Returns the
    CSV path followed by the SVG chart paths.
    """
    measured = measured or {}
    rows = []
    for algo, n, m, P in grids:
        p = params.get(algo)
        rows.append({
            "algorithm": algo, "n": n, "m": m, "P": P,
            "measured": measured.get((algo, n, m, P)),
            "t_model_s": None if p is None or memory else model_time(algo, n, m, P, p),
            "mem_model_elements": memory_model(algo, max(n, 1)),
        })
    path = Path(path)
    write_csv(path, CURVE_COLUMNS, rows)
    return [path, *_charts(rows, path, memory)]


def _charts(rows: list[dict], path: Path, memory: bool) -> list[Path]:
    out = []
    by_algo = defaultdict(list)
    for r in rows:
        by_algo[r["algorithm"]].append(r)
    for algo, rs in sorted(by_algo.items()):
        fig, ax = plt.subplots(figsize=(6, 4))
        if memory:
            rs = sorted(rs, key=lambda r: r["n"])
            xs = [r["n"] for r in rs]
            ax.plot(xs, [r["mem_model_elements"] for r in rs], "-", label="model")
            meas = [(r["n"], float(r["measured"])) for r in rs if r["measured"]]
            if meas:
                ax.plot(*zip(*meas), "o", label="measured")
            ax.set_xlabel("data size n")
            ax.set_ylabel("elements")
        else:
            for P in sorted({r["P"] for r in rs}):
                sub = sorted((r for r in rs if r["P"] == P), key=lambda r: r["m"])
                line, = ax.plot([r["m"] for r in sub], [r["t_model_s"] for r in sub], "-",
                                label=f"model, {P} core(s)")
                meas = [(r["m"], float(r["measured"])) for r in sub if r["measured"]]
                if meas:
                    ax.plot(*zip(*meas), "o", color=line.get_color(), label=f"measured, {P} core(s)")
            ax.set_xscale("log", base=2)
            ax.set_xlabel("processes m")
            ax.set_ylabel("time")
        ax.set_title(algo)
        ax.legend()
        fig.tight_layout()
        svg = path.with_name(f"{path.stem}_{algo}.svg")
        fig.savefig(svg, format="svg", metadata={"Date": None})
        plt.close(fig)
        out.append(svg)
    return out


def model_from_csv(fit_path: str | Path, out_path: str | Path) -> dict:
    """Fit (time) or compare (memory) an experiment CSV and write curve files.

    Returns a summary with the fitted parameters and residuals, also written
    next to ``out_path`` as ``<stem>.params.json``.
    """
    rows = read_rows(fit_path)
    if not rows:
        raise UsageError(f"{fit_path} has no data rows")
    out_path = Path(out_path)
    summary: dict = {"source": str(fit_path)}
    if "peak_elements" in rows[0]:
        grid = [(r["algorithm"], int(r["n"]), 2, 2) for r in rows]
        measured = {(r["algorithm"], int(r["n"]), 2, 2): r["peak_elements"] for r in rows}
        files = emit_model_curves({}, grid, out_path, measured, memory=True)
        summary["kind"] = "memory"
    elif "time_s" in rows[0]:
        fits = fit_experiment1(rows)
        grid = [(r["algorithm"], int(r["n"]), int(r["m"]), int(r["k"])) for r in rows]
        measured = {(r["algorithm"], int(r["n"]), int(r["m"]), int(r["k"])): _time_value(r) for r in rows}
        files = emit_model_curves({a: c.params for a, c in fits.items()}, grid, out_path, measured)
        summary["kind"] = "time"
        summary["fits"] = {
            a: {"params": c.params.as_dict(),
                "max_abs_relative_residual": float(abs(c.relative_residuals).max())}
            for a, c in fits.items()
        }
    else:
        raise UsageError(f"{fit_path} is neither an exp1 nor an exp2 CSV")
    summary["files"] = [str(f) for f in files]
    params_path = out_path.with_name(out_path.stem + ".params.json")
    params_path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return summary
