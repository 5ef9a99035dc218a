"""
Instrumented sort kernels
=========================

The three sequential kernels sort int64 blocks in place and count what they do.
"""

import numpy as np

from sortbench.kernels import as_block, bubble_sort, merge, merge_sort, quick_sort

rng = np.random.default_rng(0)
data = rng.integers(0, 1000, size=2000)

# every kernel returns a SortStats record
for kernel in (bubble_sort, merge_sort, quick_sort):
    block = as_block(data)
    stats = kernel(block)
    assert (block == np.sort(data)).all()
    print(f"{kernel.__name__:12s} comparisons={stats.comparisons:>9,d} moves={stats.moves:>9,d} "
          f"depth={stats.max_depth}")

# bubble sort's loops ignore the data: s(s-1)/2 comparisons for any input
s = len(data)
print("bubble closed form:", s * (s - 1) // 2)

# merge is stable, ties come from the first run
out, stats = merge([1, 1], [1])
print("merge([1, 1], [1]) ->", out.tolist(), "with", stats.comparisons, "comparisons")

# the naive pivot recurses once per element on constant input
print("quick on constant input, depth:", quick_sort(as_block([5] * 50)).max_depth)
