"""Shared configuration types and constants."""

from __future__ import annotations

from dataclasses import dataclass

ALGORITHMS = ("bubble", "merge", "quick")

# fixed allowance for small bookkeeping buffers (swap temporaries etc.)
MEMORY_BASE_ELEMENTS = 64
# tracked elements charged per live quick sort frame
STACK_FRAME_ELEMENTS = 2


class UsageError(ValueError):
    """Bad command-line or experiment grid arguments."""


@dataclass(frozen=True)
class RunConfig:
    algorithm: str
    n: int
    procs: int = 1
    cores: int = 1
    seed: int = 0
    mode: str = "counted"
    repetitions: int = 1

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise UsageError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if self.n < 0:
            raise UsageError("n must be non-negative")
        if self.procs < 1 or self.cores < 1 or self.repetitions < 1:
            raise UsageError("procs, cores and repetitions must be >= 1")
        if self.mode not in ("wall", "counted"):
            raise UsageError(f"mode must be 'wall' or 'counted', got {self.mode!r}")

    @property
    def run_id(self) -> str:
        return f"{self.algorithm}-n{self.n}-m{self.procs}-k{self.cores}-s{self.seed}-{self.mode}"
