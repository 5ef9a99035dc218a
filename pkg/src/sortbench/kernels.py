"""Instrumented sequential sort kernels.

All kernels sort ``int64`` numpy arrays in place and report operation counts
through :class:`SortStats`. The heavy loops are compiled with numba in
``nogil`` mode so that several ranks can sort their blocks concurrently from
different threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

ELEMENT_DTYPE = np.dtype(np.int64)
ELEMENT_WIDTH = ELEMENT_DTYPE.itemsize

# indices into the accumulator array used by the compiled kernels
_CMP, _SWP, _MOV, _DEP = 0, 1, 2, 3


@dataclass
class SortStats:
    comparisons: int = 0
    swaps: int = 0
    moves: int = 0
    max_depth: int = 0

    def add(self, other: "SortStats") -> "SortStats":
        self.comparisons += other.comparisons
        self.swaps += other.swaps
        self.moves += other.moves
        self.max_depth = max(self.max_depth, other.max_depth)
        return self

    @property
    def work(self) -> int:
        """Unit-weight work: one per comparison, one per element move."""
        return self.comparisons + self.moves

    @classmethod
    def _from_acc(cls, acc: np.ndarray) -> "SortStats":
        return cls(int(acc[_CMP]), int(acc[_SWP]), int(acc[_MOV]), int(acc[_DEP]))


def _check_block(block) -> np.ndarray:
    if not isinstance(block, np.ndarray) or block.dtype != ELEMENT_DTYPE or block.ndim != 1:
        raise TypeError("kernels sort 1-d int64 numpy arrays in place")
    return block


def as_block(values) -> np.ndarray:
    """Copy any integer sequence into a fresh contiguous int64 block."""
    return np.array(values, dtype=ELEMENT_DTYPE).reshape(-1)


# ---------------------------------------------------------------- compiled ---

@numba.njit(nogil=True, cache=True, inline="always")
def _swap(a, i, j, acc):
    temp = a[i]
    a[i] = a[j]
    a[j] = temp
    acc[1] += 1
    acc[2] += 3


@numba.njit(nogil=True, cache=True)
def _bubble(a, acc):
    s = a.shape[0]
    cmp = 0
    swaps = 0
    for i in range(s - 2, -1, -1):
        for j in range(0, i + 1):
            cmp += 1
            if a[j] > a[j + 1]:
                temp = a[j]
                a[j] = a[j + 1]
                a[j + 1] = temp
                swaps += 1
    acc[0] += cmp
    acc[1] += swaps
    acc[2] += 3 * swaps


@numba.njit(nogil=True, cache=True)
def _merge_into(a, b, out, acc):
    i = 0
    j = 0
    k = 0
    na = a.shape[0]
    nb = b.shape[0]
    cmp = 0
    while i < na and j < nb:
        cmp += 1
        if b[j] < a[i]:
            out[k] = b[j]
            j += 1
        else:
            out[k] = a[i]
            i += 1
        k += 1
    while i < na:
        out[k] = a[i]
        i += 1
        k += 1
    while j < nb:
        out[k] = b[j]
        j += 1
        k += 1
    acc[0] += cmp
    acc[2] += na + nb


@numba.njit(nogil=True, cache=True)
def _merge_sort(a, first, last, scratch, acc, depth):
    if depth > acc[3]:
        acc[3] = depth
    if last <= first:
        return
    mid = (first + last) // 2
    _merge_sort(a, first, mid, scratch, acc, depth + 1)
    _merge_sort(a, mid + 1, last, scratch, acc, depth + 1)
    _merge_into(a[first:mid + 1], a[mid + 1:last + 1], scratch[first:last + 1], acc)
    for t in range(first, last + 1):
        a[t] = scratch[t]
    acc[2] += last - first + 1


@numba.njit(nogil=True, cache=True)
def _quick(a, start, length, acc):
    # Explicit frame stack standing in for the two-sided recursion; frames are
    # popped left-before-right so the visiting order matches the recursive form.
    cap = 2 * length + 4
    st_start = np.empty(cap, np.int64)
    st_len = np.empty(cap, np.int64)
    st_depth = np.empty(cap, np.int64)
    top = 0
    st_start[0] = start
    st_len[0] = length
    st_depth[0] = 1
    top = 1
    while top > 0:
        top -= 1
        start = st_start[top]
        length = st_len[top]
        depth = st_depth[top]
        if depth > acc[3]:
            acc[3] = depth
        if length <= 1:
            continue
        pivot = a[start + length // 2]
        _swap(a, start, start + length // 2, acc)
        pstart = start
        swaps = 0
        for i in range(start + 1, start + length):
            if a[i] < pivot:
                pstart += 1
                temp = a[i]
                a[i] = a[pstart]
                a[pstart] = temp
                swaps += 1
        acc[0] += length - 1
        acc[1] += swaps
        acc[2] += 3 * swaps
        _swap(a, start, pstart, acc)
        # push right first so the left call runs first
        st_start[top] = pstart + 1
        st_len[top] = start + length - pstart - 1
        st_depth[top] = depth + 1
        top += 1
        st_start[top] = start
        st_len[top] = pstart - start
        st_depth[top] = depth + 1
        top += 1


@numba.njit(nogil=True, cache=True)
def _merge_low(mine, theirs, out, acc):
    i = 0
    j = 0
    na = mine.shape[0]
    nb = theirs.shape[0]
    for k in range(out.shape[0]):
        if i < na and j < nb:
            acc[0] += 1
            if theirs[j] < mine[i]:
                out[k] = theirs[j]
                j += 1
            else:
                out[k] = mine[i]
                i += 1
        elif i < na:
            out[k] = mine[i]
            i += 1
        else:
            out[k] = theirs[j]
            j += 1
    acc[2] += out.shape[0]


@numba.njit(nogil=True, cache=True)
def _merge_high(mine, theirs, out, acc):
    i = mine.shape[0] - 1
    j = theirs.shape[0] - 1
    for k in range(out.shape[0] - 1, -1, -1):
        if i >= 0 and j >= 0:
            acc[0] += 1
            if theirs[j] >= mine[i]:
                out[k] = theirs[j]
                j -= 1
            else:
                out[k] = mine[i]
                i -= 1
        elif i >= 0:
            out[k] = mine[i]
            i -= 1
        else:
            out[k] = theirs[j]
            j -= 1
    acc[2] += out.shape[0]


# ------------------------------------------------------------------ public ---

def _finish(acc: np.ndarray, stats: SortStats | None) -> SortStats:
    got = SortStats._from_acc(acc)
    if stats is not None:
        stats.add(got)
        return stats
    return got


def swap(block: np.ndarray, i: int, j: int, stats: SortStats | None = None) -> SortStats:
    """Exchange ``block[i]`` and ``block[j]`` (one swap, three moves)."""
    _check_block(block)
    n = block.shape[0]
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"swap indices ({i}, {j}) outside block of length {n}")
    acc = np.zeros(4, np.int64)
    _swap(block, i, j, acc)
    return _finish(acc, stats)


def bubble_sort(block: np.ndarray, stats: SortStats | None = None) -> SortStats:
    """Sort ``block`` in place with the adjacent-exchange bubble sort.

    The loops do not depend on the data, so a block of length ``s`` always
    costs exactly ``s*(s-1)/2`` comparisons.
    """
    _check_block(block)
    acc = np.zeros(4, np.int64)
    _bubble(block, acc)
    return _finish(acc, stats)


def merge(run_a, run_b, stats: SortStats | None = None) -> tuple[np.ndarray, SortStats]:
    """Stable merge of two sorted runs; ties are taken from ``run_a`` first."""
    a = np.ascontiguousarray(run_a, dtype=ELEMENT_DTYPE)
    b = np.ascontiguousarray(run_b, dtype=ELEMENT_DTYPE)
    out = np.empty(a.shape[0] + b.shape[0], ELEMENT_DTYPE)
    acc = np.zeros(4, np.int64)
    _merge_into(a, b, out, acc)
    return out, _finish(acc, stats)


def merge_sort(
    block: np.ndarray,
    first: int = 0,
    last: int | None = None,
    scratch: np.ndarray | None = None,
    stats: SortStats | None = None,
) -> SortStats:
    """Top-down merge sort of ``block[first..last]`` (inclusive bounds).

    One scratch buffer of at least ``len(block)`` elements is threaded through
    the whole recursion; it is allocated here when not supplied. ``max_depth``
    counts recursion levels, the top call being level 1.
    """
    _check_block(block)
    n = block.shape[0]
    if last is None:
        last = n - 1
    if scratch is None:
        scratch = np.empty(n, ELEMENT_DTYPE)
    elif scratch.shape[0] < n:
        raise ValueError(f"scratch holds {scratch.shape[0]} elements, block needs {n}")
    acc = np.zeros(4, np.int64)
    if first <= last:
        if first < 0 or last >= n:
            raise IndexError(f"range [{first}, {last}] outside block of length {n}")
        _merge_sort(block, first, last, scratch, acc, 1)
    return _finish(acc, stats)


def quick_sort(
    block: np.ndarray,
    start: int = 0,
    length: int | None = None,
    stats: SortStats | None = None,
) -> SortStats:
    """Quick sort of ``block[start:start+length]``.

    Middle-element pivot swapped to the front, a single forward partition pass
    on ``< pivot``, then both sides are sorted. ``max_depth`` is the deepest
    call level reached, trivial calls on segments of length <= 1 included.
    Inputs with many equal keys degrade to quadratic time and linear depth.
    """
    _check_block(block)
    if length is None:
        length = block.shape[0] - start
    if start < 0 or length < 0 or start + length > block.shape[0]:
        raise IndexError(f"segment ({start}, {length}) outside block of length {block.shape[0]}")
    acc = np.zeros(4, np.int64)
    _quick(block, start, length, acc)
    return _finish(acc, stats)


def is_sorted(seq) -> bool:
    a = np.asarray(seq)
    if a.size < 2:
        return True
    return bool(np.all(a[:-1] <= a[1:]))
