"""Benchmark harness: data generation, the two experiments, trace export.

Units: in ``wall`` mode trace times are nanoseconds and the ``*_s`` report
fields are seconds. In ``counted`` mode every time quantity is a weighted
operation count (comparisons + element moves + per-message cost), including
the ``compute_s``/``overhead_s`` CSV columns.
"""

from __future__ import annotations

import csv
import json
import math
import os
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .config import ALGORITHMS, RunConfig, UsageError
from .kernels import ELEMENT_DTYPE, is_sorted
from .models import memory_model
from .parallel import scatter_merge_sort
from .runtime import COMMUNICATION_KINDS, CostCounters, TraceEvent, WorldReport

SEED_ENV = "SORTBENCH_SEED"
DEFAULT_SEED = 42

DEFAULT_SIZES = {"bubble": 20_000, "merge": 600_000, "quick": 600_000}
DEFAULT_PROCS = (1, 2, 4, 8, 16, 32, 64)
DEFAULT_CORES = (1, 2)
DEFAULT_MEMORY_SIZES = {
    "bubble": tuple(range(50_000, 100_001, 10_000)),
    "merge": tuple(range(250_000, 500_001, 50_000)),
    "quick": tuple(range(250_000, 500_001, 50_000)),
}
MEMORY_PROCS = 2
MEMORY_CORES = 2

EXP1_COLUMNS = ("algorithm", "n", "m", "k", "time_s", "weighted_ops", "compute_s", "overhead_s", "ratio")
EXP2_COLUMNS = ("algorithm", "n", "peak_elements", "model_elements", "ratio")

_UINT64 = (1 << 64) - 1


class VerificationError(RuntimeError):
    """A run produced output that is not the sorted input."""


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    return int(raw) if raw not in (None, "") else DEFAULT_SEED


def gen_data(n: int, seed: int) -> np.ndarray:
    """Uniform int64 values from numpy's PCG64 generator seeded with ``seed``.

    PCG64 output is fixed by numpy across platforms, so ``(n, seed)`` always
    gives the same list. Seeds are taken modulo 2**64.
    """
    if n < 0:
        raise UsageError("n must be non-negative")
    rng = np.random.Generator(np.random.PCG64(int(seed) & _UINT64))
    info = np.iinfo(ELEMENT_DTYPE)
    return rng.integers(info.min, info.max, size=n, dtype=ELEMENT_DTYPE, endpoint=True)


# ------------------------------------------------------------------ runs ---

@dataclass
class OverheadRatio:
    per_rank: list[float]
    aggregate: float
    infinite: bool = False


@dataclass
class RunReport:
    config: RunConfig
    wall_seconds: float
    world: WorldReport
    rep_seconds: list[float] = field(default_factory=list)

    @property
    def counted(self) -> bool:
        return self.config.mode == "counted"

    @property
    def trace(self) -> list[TraceEvent]:
        return self.world.trace

    @property
    def counters(self) -> list[CostCounters]:
        return self.world.counters

    @property
    def weighted_ops(self) -> int | None:
        return self.world.makespan if self.counted else None

    @property
    def peak_mem_elements(self) -> list[int]:
        return [c.peak_tracked_elements for c in self.world.counters]

    @property
    def sort_peak_elements(self) -> list[int]:
        return [w.get("sort", 0) for w in self.world.window_peaks]

    def _unit(self) -> float:
        return 1.0 if self.counted else 1e-9

    def rank_totals(self, rank: int) -> dict[str, int]:
        by_kind = self.world.time_by_kind(rank)
        return {
            "compute": by_kind["compute"],
            "communication": sum(by_kind[k] for k in COMMUNICATION_KINDS),
            "idle": by_kind["idle"],
            "wall": self.world.rank_time[rank],
        }

    @property
    def compute_seconds(self) -> float:
        return sum(self.rank_totals(r)["compute"] for r in range(self.world.p)) * self._unit()

    @property
    def overhead_seconds(self) -> float:
        tot = 0
        for r in range(self.world.p):
            t = self.rank_totals(r)
            tot += t["communication"] + t["idle"]
        return tot * self._unit()


def _verify(data: np.ndarray, out: np.ndarray, config: RunConfig) -> None:
    if out is None or out.shape != data.shape or not is_sorted(out):
        raise VerificationError(f"{config.run_id}: gathered output is not sorted")
    if not np.array_equal(out, np.sort(data, kind="stable")):
        raise VerificationError(f"{config.run_id}: gathered output is not a permutation of the input")


def run(config: RunConfig, data: np.ndarray | None = None) -> RunReport:
    """Execute one configuration, verify the output and build its report.

    Counted mode runs once. Wall mode runs ``config.repetitions`` times and
    keeps the world report of the median repetition.
    """
    if data is None:
        data = gen_data(config.n, config.seed)
    reps = 1 if config.mode == "counted" else config.repetitions
    worlds = []
    for _ in range(reps):
        out, world = scatter_merge_sort(config, data)
        _verify(data, out, config)
        worlds.append(world)
    times = [w.wall_seconds for w in worlds]
    median = statistics.median(times)
    chosen = min(worlds, key=lambda w: abs(w.wall_seconds - median))
    return RunReport(config, median, chosen, times)


def overhead_ratio(report: RunReport) -> OverheadRatio:
    """(communication + idle) / compute per rank; the aggregate is their mean."""
    per_rank = []
    infinite = False
    for r in range(report.world.p):
        t = report.rank_totals(r)
        over = t["communication"] + t["idle"]
        if t["compute"] == 0:
            if over == 0:
                per_rank.append(0.0)
            else:
                per_rank.append(math.inf)
                infinite = True
        else:
            per_rank.append(over / t["compute"])
    agg = sum(per_rank) / len(per_rank) if per_rank else 0.0
    return OverheadRatio(per_rank, agg, infinite)


def accounting_gap(report: RunReport) -> float:
    """Largest relative mismatch between a rank's event total and its wall time."""
    worst = 0.0
    for r in range(report.world.p):
        t = report.rank_totals(r)
        total = t["compute"] + t["communication"] + t["idle"]
        if t["wall"] == 0:
            gap = 0.0 if total == 0 else math.inf
        else:
            gap = abs(total - t["wall"]) / t["wall"]
        worst = max(worst, gap)
    return worst


# ----------------------------------------------------------------- output ---

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isinf(x):
            return "inf"
        return format(x, ".9g")
    return str(x)


def write_csv(path: str | Path, columns: Sequence[str], rows: Iterable[dict]) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                w.writerow([_fmt(row.get(c)) for c in columns])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def emit_trace(report: RunReport, path: str | Path) -> tuple[Path, Path, Path]:
    """Write the trace as JSON Lines plus counter and summary companions.

    Returns the paths of ``<path>``, ``<path>.counters.jsonl`` and
    ``<path>.summary.json``.
    """
    path = Path(path)
    run_id = report.config.run_id
    counters_path = path.with_name(path.name + ".counters.jsonl")
    summary_path = path.with_name(path.name + ".summary.json")
    events = sorted(report.trace, key=lambda e: (e.rank, e.t_start, e.t_end))
    ratio = overhead_ratio(report)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fh:
            for e in events:
                fh.write(json.dumps({
                    "run_id": run_id, "rank": e.rank, "kind": e.kind,
                    "t_start_ns": e.t_start, "t_end_ns": e.t_end, "bytes": e.bytes,
                }) + "\n")
        with counters_path.open("w", encoding="utf-8") as fh:
            for rank, c in enumerate(report.counters):
                fh.write(json.dumps({"run_id": run_id, "rank": rank, **c.as_dict()}) + "\n")
        summary = {
            "run_id": run_id,
            "mode": report.config.mode,
            "time_unit": "weighted_ops" if report.counted else "ns",
            "cores": report.world.k,
            "slot_high_water": report.world.slot_high_water,
            "ranks": [
                {"rank": r, **report.rank_totals(r), "overhead_ratio": _json_float(ratio.per_rank[r])}
                for r in range(report.world.p)
            ],
            "aggregate_overhead_ratio": _json_float(ratio.aggregate),
        }
        summary_path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write trace files at {path}: {exc}") from exc
    return path, counters_path, summary_path


def _json_float(x: float):
    return "inf" if math.isinf(x) else x


# ------------------------------------------------------------- experiments ---

def _check_grid(name: str, values: Sequence) -> None:
    if not values:
        raise UsageError(f"{name} must not be empty")


def experiment1(
    algorithms: Sequence[str] = ALGORITHMS,
    n_per_algorithm: dict[str, int] | None = None,
    proc_list: Sequence[int] = DEFAULT_PROCS,
    core_list: Sequence[int] = DEFAULT_CORES,
    seed: int | None = None,
    mode: str = "counted",
    repetitions: int = 3,
    trace_dir: str | Path | None = None,
    csv_path: str | Path | None = None,
) -> tuple[list[dict], list[RunReport]]:
    """Time every (algorithm, processes, cores) combination on fixed data.

    Any failed verification aborts the whole experiment before a CSV is
    written.
    """
    for name, grid in (("algorithms", algorithms), ("proc_list", proc_list), ("core_list", core_list)):
        _check_grid(name, grid)
    sizes = {**DEFAULT_SIZES, **(n_per_algorithm or {})}
    seed = default_seed() if seed is None else seed
    rows, reports = [], []
    for algo in algorithms:
        n = sizes[algo]
        data = gen_data(n, seed)
        for k in core_list:
            for m in proc_list:
                cfg = RunConfig(algo, n, m, k, seed, mode, repetitions)
                rep = run(cfg, data)
                ratio = overhead_ratio(rep)
                rows.append({
                    "algorithm": algo, "n": n, "m": m, "k": k,
                    "time_s": None if rep.counted else rep.wall_seconds,
                    "weighted_ops": rep.weighted_ops,
                    "compute_s": rep.compute_seconds,
                    "overhead_s": rep.overhead_seconds,
                    "ratio": ratio.aggregate,
                })
                reports.append(rep)
                if trace_dir is not None:
                    emit_trace(rep, Path(trace_dir) / f"{cfg.run_id}.jsonl")
    if csv_path is not None:
        write_csv(csv_path, EXP1_COLUMNS, rows)
    return rows, reports


def memory_peak(report: RunReport) -> int:
    """List storage plus every rank's auxiliary buffers during local sorting.

    The per-rank sort-phase peak covers the rank's block (its share of the
    list) and the scratch space or recursion frames the kernel needs.
    """
    return sum(report.sort_peak_elements)


def experiment2(
    algorithms: Sequence[str] = ALGORITHMS,
    size_lists: dict[str, Sequence[int]] | None = None,
    seed: int | None = None,
    csv_path: str | Path | None = None,
) -> tuple[list[dict], list[RunReport]]:
    """Peak tracked memory against data size on two processes and two cores."""
    _check_grid("algorithms", algorithms)
    sizes = {**DEFAULT_MEMORY_SIZES, **(size_lists or {})}
    seed = default_seed() if seed is None else seed
    rows, reports = [], []
    for algo in algorithms:
        _check_grid(f"sizes for {algo}", sizes[algo])
        for n in sizes[algo]:
            cfg = RunConfig(algo, n, MEMORY_PROCS, MEMORY_CORES, seed, "counted", 1)
            rep = run(cfg)
            peak = memory_peak(rep)
            model = memory_model(algo, n)
            rows.append({"algorithm": algo, "n": n, "peak_elements": peak,
                         "model_elements": model, "ratio": peak / model})
            reports.append(rep)
    if csv_path is not None:
        write_csv(csv_path, EXP2_COLUMNS, rows)
    return rows, reports
