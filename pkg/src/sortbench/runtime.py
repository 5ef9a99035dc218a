"""A small rank-based message-passing runtime.

``spawn_world`` runs one program on ``p`` logical processes (threads) that
only talk through :class:`Communicator` messages. At most ``k`` ranks may be
inside a compute section at once, which stands in for the number of physical
cores.

Two clocks are supported:

``wall``
    Ranks run freely; events carry nanoseconds since the world started.
``counted``
    Ranks run one at a time under a cooperative scheduler that always resumes
    the rank with the smallest logical clock. Time is a weighted operation
    count (comparisons + element moves for compute, ``latency + bandwidth *
    elements`` per message), so runs are bit-for-bit reproducible.

Trace events of one rank are contiguous: each event starts where the previous
one ended, so local bookkeeping between runtime calls is charged to the next
event and the per-rank totals add up to the rank's wall time.
"""

from __future__ import annotations

import contextlib
import threading
import time
from collections import defaultdict, deque
from dataclasses import asdict, dataclass, fields
from typing import Any, Callable

import numpy as np

from .kernels import ELEMENT_DTYPE, ELEMENT_WIDTH, SortStats

TRACE_KINDS = ("compute", "send", "recv", "bcast", "scatter", "gather", "barrier", "idle")
COMMUNICATION_KINDS = ("send", "recv", "bcast", "scatter", "gather", "barrier")
MODES = ("wall", "counted")

DEFAULT_LATENCY = 1000
DEFAULT_BANDWIDTH = 1

# reserved tags for collective traffic; user tags must be >= 0
_TAG_BCAST, _TAG_SCATTER, _TAG_GATHER, _TAG_BARRIER = -1, -2, -3, -4


class ConfigurationError(ValueError):
    """Invalid ranks, sizes or world parameters."""


class DeadlockError(RuntimeError):
    """Every live rank is blocked and no message can unblock any of them."""

    def __init__(self, message: str, blocked: dict[int, str]):
        super().__init__(message)
        self.blocked = blocked


class AccountingError(RuntimeError):
    """Tracked allocation went negative."""


@dataclass(frozen=True)
class TraceEvent:
    rank: int
    kind: str
    t_start: int
    t_end: int
    bytes: int = 0

    @property
    def duration(self) -> int:
        return self.t_end - self.t_start


@dataclass
class CostCounters:
    comparisons: int = 0
    swaps: int = 0
    element_moves: int = 0
    messages_sent: int = 0
    bytes_sent: int = 0
    messages_received: int = 0
    bytes_received: int = 0
    peak_tracked_elements: int = 0
    max_recursion_depth: int = 0

    def as_dict(self) -> dict[str, int]:
        return asdict(self)

    @classmethod
    def total(cls, many: list["CostCounters"]) -> "CostCounters":
        out = cls()
        for c in many:
            for f in fields(cls):
                if f.name in ("peak_tracked_elements", "max_recursion_depth"):
                    setattr(out, f.name, max(getattr(out, f.name), getattr(c, f.name)))
                else:
                    setattr(out, f.name, getattr(out, f.name) + getattr(c, f.name))
        return out


@dataclass
class Message:
    src: int
    dst: int
    tag: int
    payload: np.ndarray
    seq: int = -1
    arrival: int = 0

    @property
    def byte_size(self) -> int:
        return int(self.payload.size) * ELEMENT_WIDTH


@dataclass
class WorldReport:
    """Everything one world execution produced."""

    p: int
    k: int
    mode: str
    results: list[Any]
    trace: list[TraceEvent]
    counters: list[CostCounters]
    rank_time: list[int]
    window_peaks: list[dict[str, int]]
    slot_high_water: int
    wall_seconds: float

    @property
    def makespan(self) -> int:
        """Latest rank end, in ns (wall) or weighted operations (counted)."""
        return max(self.rank_time) if self.rank_time else 0

    @property
    def totals(self) -> CostCounters:
        return CostCounters.total(self.counters)

    def rank_events(self, rank: int) -> list[TraceEvent]:
        return [e for e in self.trace if e.rank == rank]

    def time_by_kind(self, rank: int) -> dict[str, int]:
        out = dict.fromkeys(TRACE_KINDS, 0)
        for e in self.rank_events(rank):
            out[e.kind] += e.duration
        return out


class _RankState:
    __slots__ = ("clock", "cursor", "waiting", "done", "in_compute", "counters", "tracked",
                 "windows", "window_peaks", "coll_seq", "quiet", "events", "sem")

    def __init__(self):
        self.clock = 0  # counted mode: logical time of the rank
        self.cursor = 0  # end of the last emitted trace event
        self.waiting: tuple[int, int] | None = None
        self.done = False
        self.in_compute = False
        self.counters = CostCounters()
        self.tracked = 0
        self.windows: dict[str, int] = {}
        self.window_peaks: dict[str, int] = {}
        self.coll_seq = 0
        self.quiet = 0
        self.events: list[TraceEvent] = []
        self.sem = threading.Semaphore(0)


class _World:
    def __init__(self, p: int, k: int, mode: str, latency: int, bandwidth: int):
        self.p = p
        self.k = k
        self.mode = mode
        self.latency = latency
        self.bandwidth = bandwidth
        self.ranks = [_RankState() for _ in range(p)]
        self.mailbox: dict[tuple[int, int, int], deque[Message]] = defaultdict(deque)
        self.cv = threading.Condition()
        self.failure: BaseException | None = None
        self.active = 0
        self.high_water = 0
        self.slot_free = [0] * k
        self.t0 = 0

    @property
    def counted(self) -> bool:
        return self.mode == "counted"

    def now(self) -> int:
        return time.perf_counter_ns() - self.t0

    # -- trace ------------------------------------------------------------

    def emit(self, rank: int, kind: str, t_end: int, nbytes: int = 0) -> None:
        st = self.ranks[rank]
        if st.quiet:
            return
        t_end = max(t_end, st.cursor)
        st.events.append(TraceEvent(rank, kind, st.cursor, t_end, nbytes))
        st.cursor = t_end

    # -- blocking / scheduling -------------------------------------------

    def blocked_description(self) -> dict[int, str]:
        out = {}
        for r, st in enumerate(self.ranks):
            if st.done:
                continue
            if st.waiting is not None:
                src, tag = st.waiting
                out[r] = f"recv(src={src}, tag={tag})"
        return out

    def _deadlock(self) -> DeadlockError:
        blocked = self.blocked_description()
        names = ", ".join(f"rank {r} in {w}" for r, w in sorted(blocked.items()))
        return DeadlockError(f"deadlock: all live ranks blocked ({names})", blocked)

    def _satisfiable(self, rank: int) -> bool:
        src, tag = self.ranks[rank].waiting
        return bool(self.mailbox.get((src, rank, tag)))

    def wall_deadlocked(self) -> bool:
        live = False
        for r, st in enumerate(self.ranks):
            if st.done:
                continue
            live = True
            if st.waiting is None or self._satisfiable(r):
                return False
        return live

    def pick_next(self) -> int | None:
        best = None
        for r, st in enumerate(self.ranks):
            if st.done:
                continue
            if st.waiting is None:
                key = (st.clock, r)
            else:
                q = self.mailbox.get((st.waiting[0], r, st.waiting[1]))
                if not q:
                    continue
                key = (max(st.clock, q[0].arrival), r)
            if best is None or key < best:
                best = key
        return None if best is None else best[1]

    def fail(self, exc: BaseException) -> None:
        if self.failure is None:
            self.failure = exc
        if self.counted:
            for st in self.ranks:
                st.sem.release()
        else:
            self.cv.notify_all()

    def handoff(self, me: int) -> None:
        """Counted mode: pass control to the rank with the smallest clock."""
        nxt = self.pick_next()
        if nxt is None:
            if not all(st.done for st in self.ranks):
                self.fail(self._deadlock())
        elif nxt != me:
            self.ranks[nxt].sem.release()
        else:
            return
        if self.ranks[me].done:
            return
        self.ranks[me].sem.acquire()
        if self.failure is not None:
            raise self.failure


class Communicator:
    """Rank-private handle on a world; not to be shared between threads."""

    def __init__(self, world: _World, rank: int):
        self._w = world
        self._rank = rank

    @property
    def rank(self) -> int:
        return self._rank

    @property
    def size(self) -> int:
        return self._w.p

    @property
    def mode(self) -> str:
        return self._w.mode

    @property
    def counters(self) -> CostCounters:
        return self._st.counters

    @property
    def _st(self) -> _RankState:
        return self._w.ranks[self._rank]

    def _check_rank(self, r: int, what: str) -> None:
        if not isinstance(r, (int, np.integer)) or not 0 <= r < self.size:
            raise ConfigurationError(f"{what} rank {r!r} outside [0, {self.size})")

    # -- point to point ---------------------------------------------------

    def send(self, payload, dest: int, tag: int = 0) -> None:
        """Copy ``payload`` into a message for ``dest`` (FIFO per src/dst/tag)."""
        self._check_rank(dest, "destination")
        if dest == self._rank:
            raise ConfigurationError(f"rank {self._rank} cannot send to itself")
        self._send(payload, dest, tag, seq=-1)

    def _send(self, payload, dest: int, tag: int, seq: int) -> None:
        w, st = self._w, self._st
        data = np.array(payload, dtype=ELEMENT_DTYPE, copy=True)
        msg = Message(self._rank, dest, tag, data, seq)
        st.counters.messages_sent += 1
        st.counters.bytes_sent += msg.byte_size
        if w.counted:
            st.clock += w.latency + w.bandwidth * int(data.size)
            msg.arrival = st.clock
            w.mailbox[(self._rank, dest, tag)].append(msg)
            w.emit(self._rank, "send", st.clock, msg.byte_size)
        else:
            with w.cv:
                w.mailbox[(self._rank, dest, tag)].append(msg)
                w.cv.notify_all()
            w.emit(self._rank, "send", w.now(), msg.byte_size)

    def recv(self, source: int, tag: int = 0) -> np.ndarray:
        """Block until the oldest message from ``source`` with ``tag`` arrives."""
        self._check_rank(source, "source")
        if source == self._rank:
            raise ConfigurationError(f"rank {self._rank} cannot receive from itself")
        return self._recv(source, tag, seq=-1)

    def _recv(self, source: int, tag: int, seq: int) -> np.ndarray:
        w, st = self._w, self._st
        key = (source, self._rank, tag)
        if w.counted:
            st.waiting = (source, tag)
            while not w.mailbox.get(key):
                w.handoff(self._rank)
            st.waiting = None
            msg = w.mailbox[key].popleft()
            st.clock = t_end = max(st.clock, msg.arrival)
        else:
            with w.cv:
                st.waiting = (source, tag)
                try:
                    while not w.mailbox.get(key):
                        if w.failure is None and w.wall_deadlocked():
                            w.fail(w._deadlock())
                        if w.failure is not None:
                            raise w.failure
                        w.cv.wait()
                finally:
                    st.waiting = None
                msg = w.mailbox[key].popleft()
            t_end = w.now()
        if seq >= 0 and msg.seq != seq:
            raise ConfigurationError(
                f"rank {self._rank}: collective sequence mismatch with rank {source} "
                f"(expected #{seq}, got #{msg.seq}); ranks disagree on collective order or root"
            )
        st.counters.messages_received += 1
        st.counters.bytes_received += msg.byte_size
        w.emit(self._rank, "recv", t_end, msg.byte_size)
        return msg.payload

    # -- collectives (flat, root-centric, built on point to point) --------

    @contextlib.contextmanager
    def _collective(self, kind: str):
        st = self._st
        seq = st.coll_seq
        st.coll_seq += 1
        st.quiet += 1
        box = {"bytes": 0}
        try:
            yield seq, box
        finally:
            st.quiet -= 1
        if self.size > 1:
            t_end = st.clock if self._w.counted else self._w.now()
            self._w.emit(self._rank, kind, t_end, box["bytes"])

    def broadcast(self, value=None, root: int = 0):
        """Return ``root``'s value on every rank.

        Integers come back as ``int``, sequences as int64 arrays.
        """
        self._check_rank(root, "root")
        with self._collective("bcast") as (seq, box):
            if self._rank == root:
                arr = np.array(value, dtype=ELEMENT_DTYPE)
                for r in range(self.size):
                    if r != root:
                        self._send(arr, r, _TAG_BCAST, seq)
                        box["bytes"] += arr.size * ELEMENT_WIDTH
            else:
                arr = self._recv(root, _TAG_BCAST, seq)
                box["bytes"] += arr.size * ELEMENT_WIDTH
        return int(arr) if arr.ndim == 0 else arr

    def scatter(self, data, sizes, root: int = 0) -> np.ndarray:
        """Hand rank ``i`` the ``i``-th contiguous slice of length ``sizes[i]``."""
        self._check_rank(root, "root")
        sizes = [int(s) for s in sizes]
        if len(sizes) != self.size:
            raise ConfigurationError(f"scatter needs {self.size} block sizes, got {len(sizes)}")
        with self._collective("scatter") as (seq, box):
            if self._rank == root:
                arr = np.asarray(data, dtype=ELEMENT_DTYPE).reshape(-1)
                if any(s < 0 for s in sizes) or sum(sizes) != arr.size:
                    raise ConfigurationError(
                        f"scatter sizes {sizes} do not partition a list of {arr.size} elements"
                    )
                offsets = np.concatenate([[0], np.cumsum(sizes)])
                for r in range(self.size):
                    if r != root:
                        self._send(arr[offsets[r]:offsets[r + 1]], r, _TAG_SCATTER, seq)
                        box["bytes"] += sizes[r] * ELEMENT_WIDTH
                return arr[offsets[root]:offsets[root + 1]].copy()
            got = self._recv(root, _TAG_SCATTER, seq)
            box["bytes"] += got.size * ELEMENT_WIDTH
            return got

    def gather(self, block, root: int = 0) -> np.ndarray:
        """Rank-order concatenation of every block at ``root``; empty elsewhere."""
        self._check_rank(root, "root")
        block = np.asarray(block, dtype=ELEMENT_DTYPE).reshape(-1)
        with self._collective("gather") as (seq, box):
            if self._rank != root:
                self._send(block, root, _TAG_GATHER, seq)
                box["bytes"] += block.size * ELEMENT_WIDTH
                return np.empty(0, ELEMENT_DTYPE)
            parts = []
            for r in range(self.size):
                if r == root:
                    parts.append(block)
                else:
                    got = self._recv(r, _TAG_GATHER, seq)
                    box["bytes"] += got.size * ELEMENT_WIDTH
                    parts.append(got)
            return np.concatenate(parts) if parts else np.empty(0, ELEMENT_DTYPE)

    def barrier(self) -> None:
        with self._collective("barrier") as (seq, _):
            if self.size == 1:
                return
            empty = np.empty(0, ELEMENT_DTYPE)
            if self._rank == 0:
                for r in range(1, self.size):
                    self._recv(r, _TAG_BARRIER, seq)
                for r in range(1, self.size):
                    self._send(empty, r, _TAG_BARRIER, seq)
            else:
                self._send(empty, 0, _TAG_BARRIER, seq)
                self._recv(0, _TAG_BARRIER, seq)

    # -- computation ------------------------------------------------------

    def record(self, stats: SortStats) -> None:
        """Fold kernel statistics into this rank's counters."""
        c = self._st.counters
        c.comparisons += stats.comparisons
        c.swaps += stats.swaps
        c.element_moves += stats.moves
        c.max_recursion_depth = max(c.max_recursion_depth, stats.max_depth)

    def compute_section(self, work: Callable[[], Any]) -> Any:
        """Run ``work`` while holding one of the ``k`` core slots.

        In counted mode the section lasts as many time units as the
        comparisons and element moves that ``work`` records.
        """
        w, st = self._w, self._st
        if st.in_compute:
            raise RuntimeError(f"rank {self._rank}: nested compute_section")
        st.in_compute = True
        try:
            if w.counted:
                return self._compute_counted(work)
            return self._compute_wall(work)
        finally:
            st.in_compute = False

    def _compute_counted(self, work):
        w, st = self._w, self._st
        w.handoff(self._rank)
        slot = min(range(w.k), key=lambda i: (w.slot_free[i], i))
        start = max(st.clock, w.slot_free[slot])
        before = st.counters.comparisons + st.counters.element_moves
        result = work()
        cost = st.counters.comparisons + st.counters.element_moves - before
        end = start + cost
        w.slot_free[slot] = st.clock = end
        if start > st.cursor:
            w.emit(self._rank, "idle", start)
        w.emit(self._rank, "compute", end)
        return result

    def _compute_wall(self, work):
        w = self._w
        with w.cv:
            waited = False
            while w.active >= w.k:
                waited = True
                w.cv.wait()
            w.active += 1
            w.high_water = max(w.high_water, w.active)
            assert w.active <= w.k, "core-slot bound violated"
        if waited:
            w.emit(self._rank, "idle", w.now())
        try:
            result = work()
        finally:
            t_end = w.now()
            with w.cv:
                w.active -= 1
                w.cv.notify_all()
        w.emit(self._rank, "compute", t_end)
        return result

    # -- allocation accounting -------------------------------------------

    def tracked_alloc(self, n_elements: int) -> None:
        st = self._st
        st.tracked += int(n_elements)
        if st.tracked > st.counters.peak_tracked_elements:
            st.counters.peak_tracked_elements = st.tracked
        for label in st.windows:
            st.windows[label] = max(st.windows[label], st.tracked)

    def tracked_free(self, n_elements: int) -> None:
        st = self._st
        if n_elements > st.tracked:
            raise AccountingError(
                f"rank {self._rank}: freeing {n_elements} elements with only {st.tracked} tracked"
            )
        st.tracked -= int(n_elements)

    @property
    def tracked_current(self) -> int:
        return self._st.tracked

    @contextlib.contextmanager
    def memory_window(self, label: str):
        """Record the peak tracked allocation reached while the block runs."""
        st = self._st
        st.windows[label] = st.tracked
        try:
            yield
        finally:
            st.window_peaks[label] = st.windows.pop(label)


def spawn_world(
    p: int,
    k: int,
    mode: str,
    program: Callable[[Communicator], Any],
    *,
    latency: int = DEFAULT_LATENCY,
    bandwidth: int = DEFAULT_BANDWIDTH,
) -> WorldReport:
    """Run ``program(comm)`` on ``p`` ranks with ``k`` core slots.

    Raises :class:`DeadlockError` when every live rank waits on a message that
    can never arrive, and re-raises the first exception raised by any rank.
    """
    if not isinstance(p, int) or p < 1:
        raise ConfigurationError(f"process count must be >= 1, got {p!r}")
    if not isinstance(k, int) or k < 1:
        raise ConfigurationError(f"core slots must be >= 1, got {k!r}")
    if mode not in MODES:
        raise ConfigurationError(f"mode must be one of {MODES}, got {mode!r}")
    if latency < 0 or bandwidth < 0:
        raise ConfigurationError("message weights must be non-negative")

    world = _World(p, k, mode, int(latency), int(bandwidth))
    comms = [Communicator(world, r) for r in range(p)]
    results: list[Any] = [None] * p
    errors: list[BaseException | None] = [None] * p

    def run(rank: int) -> None:
        st = world.ranks[rank]
        try:
            if world.counted:
                st.sem.acquire()
                if world.failure is not None:
                    raise world.failure
            results[rank] = program(comms[rank])
        except BaseException as exc:  # noqa: BLE001 - reported by spawn_world
            errors[rank] = exc
        finally:
            if world.counted:
                st.done = True
                if world.failure is None:
                    try:
                        world.handoff(rank)
                    except BaseException:
                        pass
            else:
                with world.cv:
                    st.done = True
                    if world.failure is None and world.wall_deadlocked():
                        world.fail(world._deadlock())
                    world.cv.notify_all()

    threads = [threading.Thread(target=run, args=(r,), name=f"rank-{r}", daemon=True) for r in range(p)]
    start = time.perf_counter()
    world.t0 = time.perf_counter_ns()
    for t in threads:
        t.start()
    if world.counted:
        world.ranks[0].sem.release()
    for t in threads:
        t.join()
    wall = time.perf_counter() - start

    first = next((e for e in errors if e is not None and not isinstance(e, DeadlockError)), None)
    if first is not None:
        raise first
    if world.failure is not None:
        raise world.failure
    leftover = {key: len(q) for key, q in world.mailbox.items() if q}
    if leftover:
        raise ConfigurationError(f"undelivered messages at world end: {leftover}")

    if world.counted:
        high_water = _max_overlap([e for st in world.ranks for e in st.events if e.kind == "compute"])
    else:
        high_water = world.high_water
    trace = [e for st in world.ranks for e in st.events]
    return WorldReport(
        p=p,
        k=k,
        mode=mode,
        results=results,
        trace=trace,
        counters=[st.counters for st in world.ranks],
        rank_time=[st.cursor for st in world.ranks],
        window_peaks=[st.window_peaks for st in world.ranks],
        slot_high_water=high_water,
        wall_seconds=wall,
    )


def _max_overlap(events: list[TraceEvent]) -> int:
    points = []
    for e in events:
        if e.t_end > e.t_start:
            points.append((e.t_start, 1))
            points.append((e.t_end, -1))
    points.sort(key=lambda x: (x[0], x[1]))
    cur = best = 0
    for _, d in points:
        cur += d
        best = max(best, cur)
    return best
