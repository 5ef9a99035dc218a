"""
Running the experiments
=======================

Experiment 1 varies processes and cores; experiment 2 varies data size.
The same runs are available from the ``sortbench`` command.
"""

import tempfile
from pathlib import Path

from sortbench import harness
from sortbench.config import RunConfig
from sortbench.curves import model_from_csv

out = Path(tempfile.mkdtemp())

# a reduced experiment 1 grid in counted mode
rows, reports = harness.experiment1(
    ["bubble", "quick"], {"bubble": 4000, "quick": 50_000}, [1, 2, 4, 8], [1, 2],
    seed=42, trace_dir=out / "traces", csv_path=out / "exp1.csv",
)
for r in rows:
    print(f"{r['algorithm']:6s} m={r['m']} k={r['k']} ops={r['weighted_ops']:>10,d} ratio={r['ratio']:.3f}")

# experiment 2: tracked peak elements against the memory model
rows, _ = harness.experiment2(["merge", "quick"], {"merge": [50_000, 100_000], "quick": [50_000, 100_000]},
                              seed=42, csv_path=out / "exp2.csv")
for r in rows:
    print(f"{r['algorithm']:6s} n={r['n']:>7,d} peak={r['peak_elements']:>7,d} model={r['model_elements']:>7,d}")

# fit the models and write curve files next to the CSVs
summary = model_from_csv(out / "exp1.csv", out / "curves.csv")
print("wrote", *summary["files"], sep="\n  ")

# overhead against computation for one traced run
rep = harness.run(RunConfig("merge", 50_000, 8, 2))
print("overhead ratio per rank:", [round(x, 3) for x in harness.overhead_ratio(rep).per_rank])
