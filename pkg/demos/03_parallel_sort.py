"""
Scatter, sort, merge
====================

Blocks are scattered, sorted locally and combined by odd-even transposition.
"""

import numpy as np

from sortbench.config import RunConfig
from sortbench.parallel import build_schedule, plan_partition, scatter_merge_sort

print("partition of 8 over 3 ranks:", plan_partition(8, 3).sizes)
print("phases for 4 ranks:", [build_schedule(4).pairs(i) for i in range(4)])

# watch each merge-split of a small run
def show(step, rank, before, after):
    print(f"  phase {step} rank {rank}: {before.tolist()} -> {after.tolist()}")

out, report = scatter_merge_sort(RunConfig("bubble", 8, 4, 2), [8, 7, 6, 5, 4, 3, 2, 1], on_phase=show)
print("sorted:", out.tolist())

# more ranks shrink bubble sort's total work
data = np.random.default_rng(1).integers(-(2**63), 2**63 - 1, size=4000, dtype=np.int64)
for m in (1, 2, 4, 8):
    out, report = scatter_merge_sort(RunConfig("bubble", len(data), m, 1), data)
    assert (out == np.sort(data)).all()
    print(f"m={m}: comparisons={report.totals.comparisons:,d} weighted ops={report.makespan:,d}")

# with unequal blocks, p phases are not always enough
out, _ = scatter_merge_sort(RunConfig("merge", 5, 4, 1), [1, 1, 1, 0, 0])
print("n=5 on 4 ranks:", out.tolist())
