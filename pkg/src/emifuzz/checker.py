"""Distribution comparison: Hellinger metric, shot budgets, early stopping.

The budget math implements the sample-complexity bound

    S(delta, N) = min(N^(2/3) / delta^(8/3),  N^(3/4) / delta^2)

with N = 2^n outcomes: ``s_std`` is S at the full output space, ``s_round``
is S at an effective space of sqrt(N) (the per-round batch), and ``s_max``
caps total sampling at twice ``s_std``. Comparison merges rounds
cumulatively and declares equivalence after two consecutive rounds whose
merged Hellinger distance stays below delta.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

from .simulator import Counts, ExecOutcome

__all__ = [
    "Budget",
    "ConsistencyResult",
    "DomainError",
    "ErrorComparison",
    "NormalizationError",
    "budget",
    "compare_errors",
    "early_stop_compare",
    "hellinger",
    "sample_bound",
    "speedup_ratio",
]

Distribution = dict  # bitstring -> probability

_NORM_TOL = 1e-6


class NormalizationError(ValueError):
    """A distribution's probabilities do not sum to 1 within tolerance."""


class DomainError(ValueError):
    """Budget parameters outside their legal domain."""


def hellinger(p: Distribution, q: Distribution) -> float:
    """Hellinger distance in [0, 1]; 0 iff equal, 1 iff disjoint supports.

    Missing keys read as probability zero, so the two maps may use different
    key sets.
    """
    for name, dist in (("first", p), ("second", q)):
        total = sum(dist.values())
        if abs(total - 1.0) > _NORM_TOL:
            raise NormalizationError(
                f"{name} distribution sums to {total}, expected 1 +/- {_NORM_TOL}"
            )
        if any(v < 0 for v in dist.values()):
            raise NormalizationError(f"{name} distribution has negative mass")
    acc = 0.0
    for key in p.keys() | q.keys():
        diff = math.sqrt(p.get(key, 0.0)) - math.sqrt(q.get(key, 0.0))
        acc += diff * diff
    return min(1.0, math.sqrt(acc / 2.0))


def sample_bound(delta: float, n_outcomes: float) -> float:
    """The raw (real-valued) sample-complexity bound S(delta, N)."""
    return min(
        n_outcomes ** (2.0 / 3.0) / delta ** (8.0 / 3.0),
        n_outcomes ** 0.75 / delta**2,
    )


def _ceil(x: float) -> int:
    # tolerate a few ulps of dust so exact powers stay exact
    return math.ceil(x * (1.0 - 1e-12))


@dataclass(frozen=True)
class Budget:
    delta: float
    n_qubits: int
    n_outcomes: int
    s_round: int
    s_std: int
    s_max: int


def budget(delta: float, n_qubits: int) -> Budget:
    """Shot budgets for comparing n-qubit output distributions at ``delta``."""
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    if n_qubits < 1:
        raise DomainError(f"n_qubits must be >= 1, got {n_qubits}")
    n_out = 2**n_qubits
    s_std = _ceil(sample_bound(delta, float(n_out)))
    s_round = _ceil(sample_bound(delta, math.sqrt(n_out)))
    return Budget(
        delta=delta,
        n_qubits=n_qubits,
        n_outcomes=n_out,
        s_round=max(1, s_round),
        s_std=max(1, s_std),
        s_max=2 * max(1, s_std),
    )


@dataclass(frozen=True)
class ConsistencyResult:
    equivalent: bool
    total_shots: int
    rounds: int
    final_h: float
    h_trace: tuple[float, ...]


Sampler = Callable[[int], Counts]
Metric = Callable[[Distribution, Distribution], float]


def early_stop_compare(
    sample_a: Sampler,
    sample_b: Sampler,
    b: Budget,
    metric: Metric = hellinger,
) -> ConsistencyResult:
    """Adaptive comparison of two shot samplers.

    Each round draws ``s_round`` shots per side and merges them into the
    cumulative counts. Equivalence is declared after two consecutive rounds
    with merged distance below delta; inequivalence once another full round
    would push past ``s_max``. Sampler exceptions propagate unchanged (the
    caller owns crash classification).

    ``metric`` may be swapped for any symmetric [0, 1]-valued distance that
    is 0 iff its arguments are equal; the Hellinger distance is the default
    and the only metric shipped.
    """
    merged_a = Counts({}, 0)
    merged_b = Counts({}, 0)
    trace: list[float] = []
    consecutive = 0
    shots = 0
    while shots + b.s_round <= b.s_max:
        merged_a = merged_a.merged(sample_a(b.s_round))
        merged_b = merged_b.merged(sample_b(b.s_round))
        shots += b.s_round
        h = metric(merged_a.to_distribution(), merged_b.to_distribution())
        trace.append(h)
        consecutive = consecutive + 1 if h < b.delta else 0
        if consecutive >= 2:
            return ConsistencyResult(True, shots, len(trace), h, tuple(trace))
    return ConsistencyResult(False, shots, len(trace), trace[-1], tuple(trace))


class ErrorComparison(Enum):
    BOTH_OK = "both_ok"
    SAME_ERROR = "same_error"
    CRASH_DIVERGENCE = "crash_divergence"


def compare_errors(a: ExecOutcome, b: ExecOutcome) -> ErrorComparison:
    """Classify an outcome pair; identical failures are not a bug signal."""
    if a.ok and b.ok:
        return ErrorComparison.BOTH_OK
    if not a.ok and not b.ok and a.error.signature == b.error.signature:
        return ErrorComparison.SAME_ERROR
    return ErrorComparison.CRASH_DIVERGENCE


def speedup_ratio(early_shots: list[int], s_std: int) -> float:
    """Measurement saving of early stopping against a fixed s_std baseline."""
    if not early_shots:
        raise DomainError("need at least one comparison")
    if any(s < 0 for s in early_shots):
        raise DomainError("shot counts must be non-negative")
    if s_std < 1:
        raise DomainError("s_std must be >= 1")
    return 1.0 - sum(early_shots) / (len(early_shots) * s_std)
