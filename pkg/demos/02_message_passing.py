"""
A message-passing world in threads
==================================

``spawn_world`` runs one program on p ranks; ranks talk only through messages.
"""

import numpy as np

from sortbench.kernels import SortStats
from sortbench.runtime import DeadlockError, spawn_world


def program(comm):
    header = comm.broadcast((8, 2) if comm.rank == 0 else None)
    block = comm.scatter(np.arange(8) if comm.rank == 0 else None, [2] * comm.size)
    # a compute section holds one of the k core slots
    comm.compute_section(lambda: comm.record(SortStats(comparisons=100 * (comm.rank + 1))))
    comm.barrier()
    return header, comm.gather(block * 10)


# counted mode: time is a weighted operation count and runs are reproducible
report = spawn_world(4, 2, "counted", program)
print("root gathered:", report.results[0][1].tolist())
print("makespan (weighted ops):", report.makespan)
print("core-slot high-water:", report.slot_high_water)
for rank in range(report.p):
    print(rank, [(e.kind, e.t_start, e.t_end) for e in report.rank_events(rank)])

# the same program on the wall clock
wall = spawn_world(4, 2, "wall", program)
print("wall makespan (ns):", wall.makespan)

# a receive nobody answers is diagnosed rather than hanging
try:
    spawn_world(2, 1, "counted", lambda comm: comm.recv(1 - comm.rank))
except DeadlockError as exc:
    print(exc)
