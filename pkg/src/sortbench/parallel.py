"""Scatter / sort / odd-even merge driver running on the message-passing runtime."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .config import ALGORITHMS, STACK_FRAME_ELEMENTS, RunConfig
from .kernels import ELEMENT_DTYPE, SortStats
from .runtime import Communicator, ConfigurationError, WorldReport, spawn_world

MASTER = 0


@dataclass(frozen=True)
class PartitionPlan:
    n: int
    p: int
    sizes: tuple[int, ...]

    @property
    def offsets(self) -> tuple[int, ...]:
        return tuple(np.concatenate([[0], np.cumsum(self.sizes, dtype=np.int64)]).tolist())


def plan_partition(n: int, p: int) -> PartitionPlan:
    """Near-equal contiguous blocks; the first ``n % p`` ranks get one extra."""
    if p < 1:
        raise ConfigurationError(f"process count must be >= 1, got {p}")
    if n < 0:
        raise ConfigurationError(f"list length must be >= 0, got {n}")
    base, extra = divmod(n, p)
    return PartitionPlan(n, p, tuple(base + 1 if i < extra else base for i in range(p)))


@dataclass(frozen=True)
class PhaseSchedule:
    p: int
    phases: tuple[dict[int, int], ...]

    def partner(self, phase: int, rank: int) -> int | None:
        return self.phases[phase].get(rank)

    def pairs(self, phase: int) -> list[tuple[int, int]]:
        return sorted((a, b) for a, b in self.phases[phase].items() if a < b)


def build_schedule(p: int) -> PhaseSchedule:
    """Odd-even transposition of blocks over ``p`` phases.

    Even phases pair ``(0,1), (2,3), ...``; odd phases pair ``(1,2), (3,4), ...``.
    Ranks without a partner sit the phase out.
    """
    if p < 1:
        raise ConfigurationError(f"process count must be >= 1, got {p}")
    phases = []
    for step in range(p):
        partners = {}
        for r in range(step % 2, p - 1, 2):
            partners[r] = r + 1
            partners[r + 1] = r
        phases.append(partners)
    return PhaseSchedule(p, tuple(phases))


def merge_split(mine, theirs, keep: str, stats: SortStats | None = None) -> tuple[np.ndarray, SortStats]:
    """Merge two sorted blocks and keep the ``len(mine)`` lowest or highest.

    Only the kept part is produced, so the cost is at most ``len(mine)``
    comparisons and exactly ``len(mine)`` moves.
    """
    a = np.ascontiguousarray(mine, dtype=ELEMENT_DTYPE)
    b = np.ascontiguousarray(theirs, dtype=ELEMENT_DTYPE)
    out = np.empty(a.shape[0], ELEMENT_DTYPE)
    acc = np.zeros(4, np.int64)
    if keep == "low":
        kernels._merge_low(a, b, out, acc)
    elif keep == "high":
        kernels._merge_high(a, b, out, acc)
    else:
        raise ValueError(f"keep must be 'low' or 'high', got {keep!r}")
    return out, kernels._finish(acc, stats)


def select_kernel(algorithm: str) -> Callable[..., SortStats]:
    try:
        return {
            "bubble": kernels.bubble_sort,
            "merge": kernels.merge_sort,
            "quick": kernels.quick_sort,
        }[algorithm]
    except KeyError:
        raise ConfigurationError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}") from None


def _local_sort(comm: Communicator, block: np.ndarray, algorithm: str) -> SortStats:
    s = block.shape[0]
    if algorithm == "bubble":
        comm.tracked_alloc(1)  # exchange temporary
        stats = kernels.bubble_sort(block)
        comm.tracked_free(1)
    elif algorithm == "merge":
        scratch = np.empty(s, ELEMENT_DTYPE)
        comm.tracked_alloc(s)
        stats = kernels.merge_sort(block, scratch=scratch)
        comm.tracked_free(s)
    else:
        stats = kernels.quick_sort(block)
        # frames are live only while the kernel runs; charge the deepest chain
        frames = STACK_FRAME_ELEMENTS * stats.max_depth
        comm.tracked_alloc(frames)
        comm.tracked_free(frames)
    comm.record(stats)
    return stats


def rank_program(
    comm: Communicator,
    data: np.ndarray | None,
    algorithm: str,
    on_phase: Callable[[int, int, np.ndarray, np.ndarray], None] | None = None,
    on_local_sort: Callable[[int, SortStats], None] | None = None,
) -> np.ndarray:
    """What every rank executes; ``data`` is only looked at on the master.

    ``on_phase(step, rank, before, after)`` is called after every merge-split
    with the rank's block before and after the exchange, and
    ``on_local_sort(rank, stats)`` once the rank's block is sorted.
    """
    rank, p = comm.rank, comm.size
    schedule = build_schedule(p)

    header = None
    if rank == MASTER:
        plan = plan_partition(data.shape[0], p)
        comm.tracked_alloc(plan.n)
        header = (plan.n, *plan.sizes)
    header = comm.broadcast(header, root=MASTER)
    n, sizes = int(header[0]), [int(x) for x in header[1:]]

    block = comm.scatter(data if rank == MASTER else None, sizes, root=MASTER)
    comm.tracked_alloc(block.shape[0])
    if rank == MASTER:
        # the list now lives in the distributed blocks
        comm.tracked_free(n)

    with comm.memory_window("sort"):
        stats = comm.compute_section(lambda: _local_sort(comm, block, algorithm))
    if on_local_sort is not None:
        on_local_sort(rank, stats)

    for step in range(p):
        partner = schedule.partner(step, rank)
        if partner is None:
            continue
        if rank < partner:
            comm.send(block, partner)
            theirs = comm.recv(partner)
        else:
            theirs = comm.recv(partner)
            comm.send(block, partner)
        comm.tracked_alloc(theirs.shape[0])
        keep = "low" if rank < partner else "high"

        def work(mine=block, other=theirs, keep=keep):
            out, stats = merge_split(mine, other, keep)
            comm.record(stats)
            return out

        out = comm.compute_section(work)
        comm.tracked_alloc(out.shape[0])
        comm.tracked_free(block.shape[0] + theirs.shape[0])
        if on_phase is not None:
            on_phase(step, rank, block, out)
        block = out

    result = comm.gather(block, root=MASTER)
    comm.tracked_free(block.shape[0])
    if rank == MASTER:
        comm.tracked_alloc(result.shape[0])
    return result


def scatter_merge_sort(
    config: RunConfig,
    data,
    *,
    latency: int | None = None,
    bandwidth: int | None = None,
    on_phase: Callable[[int, int, np.ndarray, np.ndarray], None] | None = None,
    on_local_sort: Callable[[int, SortStats], None] | None = None,
) -> tuple[np.ndarray, WorldReport]:
    """Sort ``data`` on ``config.procs`` ranks and ``config.cores`` core slots.

    Returns the list gathered at the master together with the world report.
    """
    select_kernel(config.algorithm)
    arr = kernels.as_block(data)
    kwargs = {}
    if latency is not None:
        kwargs["latency"] = latency
    if bandwidth is not None:
        kwargs["bandwidth"] = bandwidth
    report = spawn_world(
        config.procs,
        config.cores,
        config.mode,
        lambda comm: rank_program(comm, arr if comm.rank == MASTER else None, config.algorithm,
                                  on_phase, on_local_sort),
        **kwargs,
    )
    return report.results[MASTER], report
