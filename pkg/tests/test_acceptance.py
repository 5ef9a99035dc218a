"""Acceptance suite: one PASS/FAIL line per criterion at its stated tolerance.

Run on its own with ``pytest tests/test_acceptance.py -v``; the lines are
printed in the "acceptance criteria" section of the terminal summary.
"""

import itertools
import json
import math
import os
import statistics
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from sortbench import harness
from sortbench.config import RunConfig
from sortbench.kernels import as_block, bubble_sort, quick_sort
from sortbench.models import ModelParams, bubble_time, calibrate, model_time
from sortbench.parallel import plan_partition, scatter_merge_sort

SEED = 20240607


def check(log, number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  [{number:>2}] {title}: {detail}"
    log.append(line)
    print(line)
    assert ok, line


# -------------------------------------------------------------- 1 ---

def test_c01_oracle_equivalence(acceptance_log):
    rng = np.random.default_rng(SEED)
    algos, procs = ("bubble", "merge", "quick"), (1, 2, 3, 4, 8)
    failures, start = [], time.perf_counter()
    for case in range(1000):
        n = (0, 1, 2, 4096)[case] if case < 4 else int(rng.integers(0, 4097))
        algo, p = algos[case % 3], procs[(case // 3) % 5]
        hi = int(rng.choice([4, 1000, 2**62]))  # small ranges force duplicates
        data = rng.integers(-hi, hi, size=n, dtype=np.int64)
        out, _ = scatter_merge_sort(RunConfig(algo, n, p, 2), data)
        if not np.array_equal(out, np.sort(data)):
            failures.append((case, algo, n, p))
    elapsed = time.perf_counter() - start
    check(acceptance_log, 1, "oracle equivalence",
          not failures and elapsed < 60,
          f"{1000 - len(failures)}/1000 exact in {elapsed:.1f} s (need 1000/1000, < 60 s)"
          + (f"; first failures {failures[:3]}" if failures else ""))


# -------------------------------------------------------------- 2 ---

def test_c02_zero_one_completeness(acceptance_log):
    failures, worlds = [], 0
    for p in (2, 3, 4):
        for n in range(13):
            for bits in itertools.product((0, 1), repeat=n):
                out, _ = scatter_merge_sort(RunConfig("merge", n, p, 1), list(bits))
                worlds += 1
                if out.tolist() != sorted(bits):
                    failures.append((p, n, bits))
    by_case = sorted({(p, n) for p, n, _ in failures})
    check(acceptance_log, 2, "odd-even completeness after p phases",
          not failures,
          f"{len(failures)} failures over {worlds} 0/1 inputs (need 0)"
          + (f"; failing (p, n): {by_case}, e.g. {failures[0][2]}" if failures else ""))


# -------------------------------------------------------------- 3 ---

def test_c03_bubble_obliviousness(acceptance_log):
    rng = np.random.default_rng(SEED)
    bad = 0
    for _ in range(100):
        s = int(rng.integers(0, 600))
        block = as_block(rng.integers(-50, 50, size=s))
        if bubble_sort(block).comparisons != s * (s - 1) // 2:
            bad += 1
    par_bad = []
    for n, p in [(2000, 2), (2001, 3), (1999, 4), (4096, 8), (517, 7)]:
        local = {}
        data = harness.gen_data(n, SEED)
        scatter_merge_sort(RunConfig("bubble", n, p, 1), data,
                           on_local_sort=lambda r, st: local.__setitem__(r, st.comparisons))
        want = sum(s * (s - 1) // 2 for s in plan_partition(n, p).sizes)
        if sum(local.values()) != want:
            par_bad.append((n, p, sum(local.values()), want))
    check(acceptance_log, 3, "bubble obliviousness",
          bad == 0 and not par_bad,
          f"{100 - bad}/100 blocks with s(s-1)/2 comparisons; "
          f"{5 - len(par_bad)}/5 parallel runs with local comparisons = sum s_i(s_i-1)/2")


# -------------------------------------------------------------- 4 ---

def test_c04_bubble_trend(acceptance_log):
    rows, _ = harness.experiment1(["bubble"], {"bubble": 20_000}, [1, 2, 4], [1], seed=SEED)
    ops = {r["m"]: r["weighted_ops"] for r in rows}
    r2, r4 = ops[1] / ops[2], ops[1] / ops[4]
    check(acceptance_log, 4, "bubble weighted-ops trend, k=1",
          1.8 <= r2 <= 2.2 and 3.5 <= r4 <= 4.5,
          f"m1/m2 = {r2:.3f} (need [1.8, 2.2]), m1/m4 = {r4:.3f} (need [3.5, 4.5])")


# -------------------------------------------------------------- 5 ---

def test_c05_core_effect_wall(acceptance_log):
    start = time.perf_counter()
    data = harness.gen_data(20_000, SEED)
    medians = {}
    for k in (1, 2):
        rep = harness.run(RunConfig("bubble", 20_000, 2, k, SEED, "wall", 3), data)
        medians[k] = statistics.median(rep.rep_seconds)
    elapsed = time.perf_counter() - start
    ratio = medians[1] / medians[2]
    check(acceptance_log, 5, "core effect, wall mode",
          1.6 <= ratio <= 2.4 and elapsed < 120,
          f"median k=1 / k=2 = {medians[1]:.3f}/{medians[2]:.3f} s = {ratio:.3f} "
          f"(need [1.6, 2.4]) in {elapsed:.1f} s on {os.cpu_count()} CPU(s)")


# -------------------------------------------------------------- 6 ---

def test_c06_nlogn_direction(acceptance_log):
    procs = [2, 4, 8, 16, 32, 64]
    rows, _ = harness.experiment1(["merge", "quick"], {"merge": 600_000, "quick": 600_000},
                                  procs, [1], seed=SEED)
    details, ok = [], True
    for algo in ("merge", "quick"):
        ops = [r["weighted_ops"] for r in rows if r["algorithm"] == algo]
        worst = min(b / a for a, b in zip(ops, ops[1:]))
        ok &= worst >= 0.95
        details.append(f"{algo} {ops[0]} -> {ops[-1]}, worst step ratio {worst:.3f}")
    check(acceptance_log, 6, "merge/quick weighted ops non-decreasing m=2..64, k=1",
          ok, "; ".join(details) + " (need every step >= 0.95)")


# -------------------------------------------------------------- 7 ---

def test_c07_memory_model(acceptance_log):
    merge_rows, _ = harness.experiment2(["merge"], {"merge": [250_000, 500_000]}, seed=SEED)
    merge_ok = all(0 <= r["peak_elements"] - 2 * r["n"] <= 64
                   and abs(r["peak_elements"] / (2 * r["n"]) - 1) <= 1e-3 for r in merge_rows)
    merge_c = [r["peak_elements"] - 2 * r["n"] for r in merge_rows]

    bubble_rows, _ = harness.experiment2(["bubble"], seed=SEED)
    offsets = {r["peak_elements"] - r["n"] for r in bubble_rows}

    depth_bad = []
    for exp in range(10, 17):
        s = 2**exp
        for seed in (SEED, SEED + 1, SEED + 2):
            stats = quick_sort(harness.gen_data(s, seed))
            if stats.max_depth > 4 * exp:
                depth_bad.append((s, seed, stats.max_depth))
    _, quick_reps = harness.experiment2(["quick"], seed=SEED)
    for rep in quick_reps:
        for size, c in zip(plan_partition(rep.config.n, 2).sizes, rep.counters):
            if c.max_recursion_depth > 4 * math.ceil(math.log2(size)):
                depth_bad.append((size, rep.config.seed, c.max_recursion_depth))
    check(acceptance_log, 7, "memory model",
          merge_ok and len(offsets) == 1 and not depth_bad,
          f"merge peak - 2n = {merge_c} (need 0..64, ratio within 0.1%); "
          f"bubble peak - n over {len(bubble_rows)} sizes = {sorted(offsets)} (need one value); "
          f"quick depth violations {depth_bad} (need none)")


# ---------------------------------------------------------- 8, 9, 10 ---

@pytest.fixture(scope="module")
def exp1_cli_runs(tmp_path_factory):
    """Two identical counted-mode ``sortbench exp1`` invocations over the default grid."""
    root = tmp_path_factory.mktemp("exp1")
    outs = []
    for tag in ("a", "b"):
        out = root / tag
        cmd = [sys.executable, "-m", "sortbench.cli", "exp1", "--mode", "counted", "--seed", str(SEED),
               "--trace-dir", str(out / "traces"), "--csv", str(out / "exp1.csv")]
        subprocess.run(cmd, check=True, capture_output=True, text=True)
        outs.append(out)
    return outs


def _summaries(out: Path):
    return [json.loads(p.read_text()) for p in sorted((out / "traces").glob("*.summary.json"))]


def test_c08_accounting_closure(acceptance_log, exp1_cli_runs):
    worst, count = 0.0, 0
    for summary in _summaries(exp1_cli_runs[0]):
        for r in summary["ranks"]:
            total = r["compute"] + r["communication"] + r["idle"]
            gap = abs(total - r["wall"]) / r["wall"] if r["wall"] else float(total != 0)
            worst = max(worst, gap)
        count += 1
    # wall-mode reports, one per algorithm
    for algo, n in (("bubble", 5000), ("merge", 60_000), ("quick", 60_000)):
        rep = harness.run(RunConfig(algo, n, 4, 2, SEED, "wall", 3))
        worst = max(worst, harness.accounting_gap(rep))
        count += 1
    check(acceptance_log, 8, "accounting closure",
          count > 0 and worst <= 0.02,
          f"largest per-rank |compute + communication + idle - wall| / wall = {worst:.2e} "
          f"over {count} reports (need <= 0.02)")


def test_c09_core_slot_bound(acceptance_log, exp1_cli_runs):
    counted = [(s["run_id"], s["slot_high_water"], s["cores"]) for s in _summaries(exp1_cli_runs[0])]
    _, wall_reports = harness.experiment1(seed=SEED, mode="wall", repetitions=1)
    wall = [(r.config.run_id, r.world.slot_high_water, r.config.cores) for r in wall_reports]
    over = [x for x in counted + wall if x[1] > x[2]]
    peak = {k: max(h for _, h, c in counted + wall if c == k) for k in (1, 2)}
    check(acceptance_log, 9, "core-slot bound over the full experiment 1 grid",
          len(counted) == len(wall) == 42 and not over,
          f"{len(counted)} counted + {len(wall)} wall runs, highest high-water per k {peak} "
          f"(need <= k), violations {over}")


def test_c10_determinism(acceptance_log, exp1_cli_runs):
    a, b = exp1_cli_runs
    files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    differ = [str(f) for f in files_a if (a / f).read_bytes() != (b / f).read_bytes()]
    check(acceptance_log, 10, "counted-mode determinism",
          files_a == files_b and len(files_a) > 1 and not differ,
          f"{len(files_a)} files (CSV + traces) compared, {len(differ)} differ (need 0)")


# ------------------------------------------------------------- 11 ---

def test_c11_model_round_trip(acceptance_log):
    worst = 0.0
    for algo in ("bubble", "merge", "quick"):
        for truth in (ModelParams(3e-9, 4e-3, 2e-4, 7e-9), ModelParams(1.0, 1000.0, 1000.0, 1.0)):
            ms = [(n, m, k, model_time(algo, n, m, k, truth))
                  for n in (20_000, 200_000, 600_000) for m in (1, 2, 4, 8, 16, 32, 64) for k in (1, 2)]
            fit = calibrate(algo, ms)
            for name, want in truth.as_dict().items():
                worst = max(worst, abs(getattr(fit.params, name) - want) / want)

    rows, _ = harness.experiment1(["bubble"], {"bubble": 20_000}, [1, 2, 4, 8], [1, 2], seed=SEED)
    zero = {"c_init": 0.0, "c_msg": 0.0, "c_byte": 0.0}
    fit = calibrate("bubble", [(r["n"], r["m"], r["k"], r["weighted_ops"]) for r in rows], fixed=zero)
    curves = {k: [bubble_time(20_000, m, k, fit.params) for m in range(1, 65)] for k in (1, 2)}
    decreasing = fit.params.c_comp > 0 and all(
        all(a > b for a, b in zip(c, c[1:])) for c in curves.values())
    check(acceptance_log, 11, "model round trip and bubble curve shape",
          worst <= 1e-9 and decreasing,
          f"max relative parameter error {worst:.2e} (need <= 1e-9); calibrated bubble curve "
          f"strictly decreasing in m for k=1,2: {decreasing}")
