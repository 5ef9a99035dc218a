"""Analytic time and memory models for the parallel sorts, plus calibration.

Time models (``m`` processes, ``P`` cores, ``P' = min(P, m)``)::

    bubble:        c_comp * n**2 / (m * P')                 + overhead(m, n)
    merge, quick:  c_comp * m * 2n / (m * P') * log2(n / m) + overhead(m, n)
    overhead:      m * c_init + [m > 1] * m * (c_msg + (n / m) * c_byte)

Bubble sort's total work drops as ``n**2/m`` because each block is sorted
quadratically; the n log n sorts keep roughly constant total work, the
``m`` per-process shares being spread over ``P'`` cores. A single process
pays only its start-up cost; with two or more there are ``m`` merge phases,
each moving one block. Memory models count elements::

    bubble: n + C0      merge: 2n + C0      quick: n + C1 * ceil(log2 n) + C0
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import nnls

from .config import ALGORITHMS, MEMORY_BASE_ELEMENTS, STACK_FRAME_ELEMENTS

PARAM_NAMES = ("c_comp", "c_init", "c_msg", "c_byte")


class CalibrationError(ValueError):
    """The measurements cannot pin down the requested parameters."""


@dataclass(frozen=True)
class ModelParams:
    c_comp: float = 0.0
    c_init: float = 0.0
    c_msg: float = 0.0
    c_byte: float = 0.0

    def __post_init__(self):
        for name in PARAM_NAMES:
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class ModelPoint:
    algorithm: str
    n: int
    m: int
    P: int
    t_model: float
    mem_model: int


@dataclass(frozen=True)
class Measurement:
    n: int
    m: int
    P: int
    seconds: float


@dataclass
class Calibration:
    algorithm: str
    params: ModelParams
    residuals: np.ndarray
    relative_residuals: np.ndarray


def _effective_cores(m: int, P: int) -> int:
    return min(P, m)


def _check(m: int, P: int) -> None:
    if m < 1 or P < 1:
        raise ValueError(f"process and core counts must be >= 1 (m={m}, P={P})")


def _features(algorithm: str, n: float, m: int, P: int) -> np.ndarray:
    """Coefficients of (c_comp, c_init, c_msg, c_byte) in the time model."""
    _check(m, P)
    eff = _effective_cores(m, P)
    if algorithm == "bubble":
        comp = n * n / (m * eff)
    elif algorithm in ("merge", "quick"):
        # m shares of (2n/m) log2(n/m) work time-shared on eff cores
        comp = (2.0 * n / eff) * math.log2(max(n / m, 1.0))
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    exchanging = m > 1
    return np.array([comp, m, m if exchanging else 0.0, n if exchanging else 0.0])


def model_time(algorithm: str, n: float, m: int, P: int, params: ModelParams) -> float:
    f = _features(algorithm, n, m, P)
    return float(f @ np.array([params.c_comp, params.c_init, params.c_msg, params.c_byte]))


def bubble_time(n: float, m: int, P: int, params: ModelParams) -> float:
    """Predicted seconds for parallel bubble sort; total work shrinks as n**2/m."""
    return model_time("bubble", n, m, P, params)


def nlogn_time(algorithm: str, n: float, m: int, P: int, params: ModelParams) -> float:
    """Predicted seconds for parallel merge or quick sort."""
    if algorithm not in ("merge", "quick"):
        raise ValueError(f"nlogn_time covers merge and quick, not {algorithm!r}")
    return model_time(algorithm, n, m, P, params)


def memory_model(
    algorithm: str,
    n: int,
    base: int = MEMORY_BASE_ELEMENTS,
    frame: int = STACK_FRAME_ELEMENTS,
) -> int:
    if n < 1:
        raise ValueError("memory model needs n >= 1")
    if algorithm == "bubble":
        return n + base
    if algorithm == "merge":
        return 2 * n + base
    if algorithm == "quick":
        return n + frame * math.ceil(math.log2(n)) + base
    raise ValueError(f"unknown algorithm {algorithm!r}")


def calibrate(
    algorithm: str,
    measurements: Sequence[Measurement | tuple],
    fixed: dict[str, float] | None = None,
) -> Calibration:
    """Non-negative least-squares fit of the time model to measurements.

    Parameters named in ``fixed`` are held at the given value and the rest
    are fitted. The fit fails with :class:`CalibrationError` when the
    measurements do not separate the free parameters.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    fixed = dict(fixed or {})
    unknown = set(fixed) - set(PARAM_NAMES)
    if unknown:
        raise ValueError(f"unknown parameters {sorted(unknown)}")
    ms = [m if isinstance(m, Measurement) else Measurement(*m) for m in measurements]
    free = [i for i, name in enumerate(PARAM_NAMES) if name not in fixed]
    if not ms:
        raise CalibrationError("no measurements")

    X = np.array([_features(algorithm, x.n, x.m, x.P) for x in ms])
    y = np.array([x.seconds for x in ms], dtype=float)
    fixed_vec = np.array([fixed.get(name, 0.0) for name in PARAM_NAMES])
    target = y - X @ fixed_vec
    A = X[:, free]

    if len(ms) < len(free) or np.linalg.matrix_rank(A) < len(free):
        raise CalibrationError(_missing_configurations(ms, [PARAM_NAMES[i] for i in free]))

    scale = np.linalg.norm(A, axis=0)
    # row weights make the fit relative, so large and small runs count alike
    w = 1.0 / np.where(np.abs(y) > 0, np.abs(y), 1.0)
    coef, _ = nnls((A / scale) * w[:, None], target * w)
    theta = fixed_vec.copy()
    theta[free] = coef / scale
    params = ModelParams(*theta.tolist())
    pred = X @ theta
    resid = y - pred
    rel = resid / np.where(y != 0, y, 1.0)
    return Calibration(algorithm, params, resid, rel)


def _missing_configurations(ms: list[Measurement], free: list[str]) -> str:
    hints = []
    ones = [x for x in ms if x.m == 1]
    multi = [x for x in ms if x.m > 1]
    if "c_comp" in free and not ones:
        hints.append("a single-process (m=1, P=1) run")
    if "c_init" in free and "c_msg" in free and (not ones or not multi):
        hints.append("runs with both m=1 and m>1 to separate start-up from message cost")
    if "c_msg" in free and "c_byte" in free and len({(x.n, x.m) for x in multi}) < 2:
        hints.append("multi-process runs at two or more distinct (n, m) settings")
    if len(ms) < len(free):
        hints.append(f"at least {len(free)} measurements (have {len(ms)})")
    if not hints:
        hints.append("more distinct (n, m, P) configurations")
    return f"cannot fit {', '.join(free)}: need " + "; ".join(hints)


def model_points(
    algorithm: str,
    params: ModelParams,
    sizes: Iterable[int],
    procs: Iterable[int],
    cores: Iterable[int],
) -> list[ModelPoint]:
    pts = []
    for n in sizes:
        for P in cores:
            for m in procs:
                pts.append(
                    ModelPoint(algorithm, n, m, P, model_time(algorithm, n, m, P, params),
                               memory_model(algorithm, max(n, 1)))
                )
    return pts
