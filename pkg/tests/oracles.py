"""Slow, literal pure-Python sorts with counters, used to cross-check the
compiled kernels. Recursion here is real recursion."""


class Counts:
    def __init__(self):
        self.comparisons = 0
        self.swaps = 0
        self.moves = 0
        self.max_depth = 0


def _swap(v, i, j, c):
    temp = v[i]
    v[i] = v[j]
    v[j] = temp
    c.swaps += 1
    c.moves += 3


def bubble(v):
    c = Counts()
    s = len(v)
    i = s - 2
    while i >= 0:
        j = 0
        while j <= i:
            c.comparisons += 1
            if v[j] > v[j + 1]:
                _swap(v, j, j + 1, c)
            j += 1
        i -= 1
    return c


def quick(v):
    c = Counts()

    def qs(start, length, depth):
        c.max_depth = max(c.max_depth, depth)
        if length <= 1:
            return
        pivot = v[start + length // 2]
        _swap(v, start, start + length // 2, c)
        pstart = start
        for i in range(start + 1, start + length):
            c.comparisons += 1
            if v[i] < pivot:
                pstart += 1
                _swap(v, i, pstart, c)
        _swap(v, start, pstart, c)
        qs(start, pstart - start, depth + 1)
        qs(pstart + 1, start + length - pstart - 1, depth + 1)

    qs(0, len(v), 1)
    return c


def merge_sort(v):
    c = Counts()
    scratch = [0] * len(v)

    def ms(first, last, depth):
        c.max_depth = max(c.max_depth, depth)
        if last <= first:
            return
        mid = (first + last) // 2
        ms(first, mid, depth + 1)
        ms(mid + 1, last, depth + 1)
        i, j, k = first, mid + 1, first
        while i <= mid and j <= last:
            c.comparisons += 1
            if v[j] < v[i]:
                scratch[k] = v[j]
                j += 1
            else:
                scratch[k] = v[i]
                i += 1
            k += 1
        while i <= mid:
            scratch[k] = v[i]
            i += 1
            k += 1
        while j <= last:
            scratch[k] = v[j]
            j += 1
            k += 1
        c.moves += last - first + 1
        for t in range(first, last + 1):
            v[t] = scratch[t]
        c.moves += last - first + 1

    if v:
        ms(0, len(v) - 1, 1)
    return c


def merge_split_bruteforce(mine, theirs, keep):
    merged = sorted(list(mine) + list(theirs))
    s = len(mine)
    return merged[:s] if keep == "low" else merged[len(merged) - s:]
