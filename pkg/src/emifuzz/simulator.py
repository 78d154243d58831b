"""Shot-based statevector execution and exact path enumeration.

Two deliberately separate interpreters live here:

* :func:`run` samples measurement shots. Shots are independent, so they are
  executed in vectorized batches (one statevector row per shot) with each
  shot drawing measurement randomness from its own ``(seed, shot index)``
  stream; results are bit-identical regardless of batching or ordering.
* :func:`enumerate_distribution` computes the exact output distribution by
  branching a single statevector at every measurement and pruning impossible
  outcomes. It is the brute-force oracle the rest of the test suite checks
  sampled behaviour against; beyond the gate-matrix table and register
  layout helpers it shares no execution kernels with :func:`run` (separate
  gate application, separate control-flow walk), so the two interpreters
  genuinely cross-check each other.

Amplitude indexing: flattened qubit ``g`` (registers concatenated in
declaration order) is bit ``g`` of the amplitude index. Program outcomes are
read from the classical register named ``result`` when present, otherwise
from all classical registers concatenated (declaration order, most recently
declared most significant).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .ir import (
    BreakLoop,
    ClassicalCond,
    ContinueLoop,
    ControlledOnInt,
    ForRange,
    Gate,
    GateKind,
    IfTest,
    Instruction,
    Measure,
    Program,
    Reset,
    Switch,
    ValidationError,
    WhileLoop,
    child_blocks,
    format_path,
    validate,
)

__all__ = [
    "Counts",
    "EnumCaps",
    "EnumerationError",
    "ErrKind",
    "ErrorRecord",
    "ExecOutcome",
    "DEFAULT_FUEL",
    "PRUNE_EPS",
    "enumerate_distribution",
    "normalize_signature",
    "output_width",
    "run",
]

DEFAULT_FUEL = 10_000
PRUNE_EPS = 1e-12

_FLAG_NORMAL = 0
_FLAG_BREAK = 1
_FLAG_CONTINUE = 2


class EnumerationError(RuntimeError):
    """Raised when path enumeration exceeds its qubit/path/fuel caps."""


# ---------------------------------------------------------------------------
# Outcome types
# ---------------------------------------------------------------------------

class ErrKind(Enum):
    VALIDATION = "validation"
    PASS = "pass"
    INFINITE_LOOP = "infinite_loop"
    ENUMERATION = "enumeration"
    INTERNAL = "internal"


def normalize_signature(kind: ErrKind, message: str) -> str:
    """Collapse a concrete message to a stable template signature."""
    msg = re.sub(r"0x[0-9a-fA-F]+", "<hex>", message)
    msg = re.sub(r"(?:/[\w.\-]+){2,}", "<path>", msg)
    msg = re.sub(r"\d+", "#", msg)
    return f"{kind.value}:{msg}"


@dataclass(frozen=True)
class ErrorRecord:
    kind: ErrKind
    message: str
    signature: str = ""

    def __post_init__(self) -> None:
        if not self.signature:
            object.__setattr__(
                self, "signature", normalize_signature(self.kind, self.message)
            )


@dataclass(frozen=True)
class Counts:
    """Histogram of outcome bitstrings. Keys share one fixed width."""

    counts: dict[str, int]
    total: int

    @staticmethod
    def from_values(values: np.ndarray, width: int) -> "Counts":
        uniq, cnt = np.unique(values, return_counts=True)
        fmt = (lambda v: format(int(v), f"0{width}b")) if width else (lambda v: "")
        return Counts({fmt(v): int(c) for v, c in zip(uniq, cnt)}, int(values.size))

    def merged(self, other: "Counts") -> "Counts":
        out = dict(self.counts)
        for k, v in other.counts.items():
            out[k] = out.get(k, 0) + v
        return Counts(dict(sorted(out.items())), self.total + other.total)

    def to_distribution(self) -> dict[str, float]:
        if self.total == 0:
            return {}
        return {k: v / self.total for k, v in sorted(self.counts.items())}


@dataclass(frozen=True)
class ExecOutcome:
    counts: Counts | None = None
    error: ErrorRecord | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @staticmethod
    def of(counts: Counts) -> "ExecOutcome":
        return ExecOutcome(counts=counts)

    @staticmethod
    def err(kind: ErrKind, message: str) -> "ExecOutcome":
        return ExecOutcome(error=ErrorRecord(kind, message))


# CoverageMap: instruction path -> execution count. A path is the enclosing
# block path (tuple of (index, label) steps) plus the instruction index.
CoverageMap = dict


# ---------------------------------------------------------------------------
# Gate matrices (local bit j of the matrix index corresponds to targets[j])
# ---------------------------------------------------------------------------

def _perm_matrix(k: int, fn: Callable[[int], int]) -> np.ndarray:
    dim = 1 << k
    m = np.zeros((dim, dim), dtype=np.complex128)
    for b in range(dim):
        m[fn(b), b] = 1.0
    return m


_SQ2 = 1.0 / math.sqrt(2.0)

_FIXED_MATRICES: dict[GateKind, np.ndarray] = {
    GateKind.H: np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=np.complex128),
    GateKind.X: np.array([[0, 1], [1, 0]], dtype=np.complex128),
    GateKind.Y: np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    GateKind.Z: np.array([[1, 0], [0, -1]], dtype=np.complex128),
    GateKind.S: np.diag([1, 1j]).astype(np.complex128),
    GateKind.SDG: np.diag([1, -1j]).astype(np.complex128),
    GateKind.T: np.diag([1, np.exp(0.25j * np.pi)]).astype(np.complex128),
    GateKind.TDG: np.diag([1, np.exp(-0.25j * np.pi)]).astype(np.complex128),
    GateKind.CX: _perm_matrix(2, lambda b: b ^ 2 if b & 1 else b),
    GateKind.CZ: np.diag([1, 1, 1, -1]).astype(np.complex128),
    GateKind.SWAP: _perm_matrix(2, lambda b: ((b & 1) << 1) | ((b >> 1) & 1)),
    GateKind.CCX: _perm_matrix(3, lambda b: b ^ 4 if (b & 3) == 3 else b),
}


def gate_matrix(kind: GateKind, params: tuple[float, ...]) -> np.ndarray:
    if kind in _FIXED_MATRICES:
        return _FIXED_MATRICES[kind]
    (theta,) = params
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    if kind is GateKind.RX:
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)
    if kind is GateKind.RY:
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    if kind is GateKind.RZ:
        return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)]).astype(
            np.complex128
        )
    if kind is GateKind.RZZ:
        ph = np.exp(0.5j * theta)
        return np.diag([1.0 / ph, ph, ph, 1.0 / ph]).astype(np.complex128)
    raise ValueError(f"no matrix for {kind}")


# ---------------------------------------------------------------------------
# Program layout helpers
# ---------------------------------------------------------------------------

class _Layout:
    """Flattened register layout shared by both interpreters."""

    def __init__(self, p: Program):
        self.program = p
        self.qbase: list[int] = []
        acc = 0
        for r in p.qregs:
            self.qbase.append(acc)
            acc += r.width
        self.n = acc
        self.cwidths = [r.width for r in p.cregs]
        ri = p.creg_index("result")
        self.out_regs = [ri] if ri is not None else list(range(len(p.cregs)))
        self.out_width = sum(self.cwidths[i] for i in self.out_regs)

    def qubit(self, ref) -> int:
        return self.qbase[ref.reg] + ref.offset

    def out_value(self, creg_values) -> int:
        val, shift = 0, 0
        for i in self.out_regs:
            val |= int(creg_values[i]) << shift
            shift += self.cwidths[i]
        return val


def output_width(p: Program) -> int:
    return _Layout(p).out_width


def _controlled_subspace(n: int, ctrl: tuple[int, ...], value: int) -> np.ndarray:
    idx = np.arange(1 << n)
    mask = np.ones(1 << n, dtype=bool)
    for j, c in enumerate(ctrl):
        mask &= ((idx >> c) & 1) == ((value >> j) & 1)
    return np.nonzero(mask)[0]


def _free_positions(n: int, ctrl: tuple[int, ...]) -> dict[int, int]:
    free = [q for q in range(n) if q not in set(ctrl)]
    return {q: j for j, q in enumerate(free)}


class _InfiniteLoop(Exception):
    def __init__(self, path, static: bool = False):
        super().__init__(path)
        self.path = path
        self.static = static


def _writes_creg(body, creg: int) -> bool:
    for ins in body:
        if isinstance(ins, Measure) and ins.clbit.reg == creg:
            return True
        for _, blk in child_blocks(ins):
            if _writes_creg(blk, creg):
                return True
    return False


def _has_own_break(body) -> bool:
    """Break statements bound to the enclosing loop (nested loop bodies
    capture their own breaks, so they are not descended into)."""
    for ins in body:
        if isinstance(ins, BreakLoop):
            return True
        if isinstance(ins, (IfTest, Switch)):
            for _, blk in child_blocks(ins):
                if _has_own_break(blk):
                    return True
    return False


def _while_can_terminate(ins: WhileLoop) -> bool:
    """False when the loop provably spins once entered: nothing in the body
    ever writes the condition register and no break can fire."""
    return _writes_creg(ins.body, ins.cond.creg) or _has_own_break(ins.body)


def _loop_error_message(fuel: int, path, static: bool) -> str:
    if static:
        return f"loop condition can never change at {format_path(path)}"
    return f"loop fuel exhausted after {fuel} iterations at {format_path(path)}"


def _cond_text(cond: ClassicalCond) -> str:
    return f"creg{cond.creg}" + ("" if cond.bit is None else f"[{cond.bit}]")


# ---------------------------------------------------------------------------
# Sampled execution (batched over shots)
# ---------------------------------------------------------------------------

# Measurement randomness: shot i owns the counter-based stream keyed by
# (seed, i) through the SplitMix64 finalizer; its m-th measurement event
# reads word m of that stream. Order-independent and batch-independent.
_MIX_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_M1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX_M2 = np.uint64(0x94D049BB133111EB)


def _mix64(x: np.ndarray) -> np.ndarray:
    z = x.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= _MIX_M1
    z ^= z >> np.uint64(27)
    z *= _MIX_M2
    z ^= z >> np.uint64(31)
    return z


def _shot_keys(seed: int, first_shot: int, count: int) -> np.ndarray:
    idx = np.arange(first_shot + 1, first_shot + count + 1, dtype=np.uint64)
    return _mix64(np.uint64(seed & ((1 << 64) - 1)) + idx * _MIX_GOLDEN)


def _shot_uniforms(keys: np.ndarray, draws: np.ndarray) -> np.ndarray:
    words = _mix64(keys + (draws.astype(np.uint64) + np.uint64(1)) * _MIX_GOLDEN)
    return (words >> np.uint64(11)).astype(np.float64) * (2.0**-53)


@dataclass
class _Batch:
    sv: np.ndarray  # (S, 2**n) complex128
    cregs: np.ndarray  # (S, n_cregs) int64
    keys: np.ndarray  # (S,) uint64 per-shot stream key
    draws: np.ndarray  # (S,) int64 measurement-event counter
    flags: np.ndarray  # (S,) int8

    @property
    def size(self) -> int:
        return self.sv.shape[0]

    def take(self, idx: np.ndarray) -> "_Batch":
        return _Batch(
            self.sv[idx], self.cregs[idx], self.keys[idx], self.draws[idx], self.flags[idx]
        )

    def scatter(self, idx: np.ndarray, sub: "_Batch") -> None:
        self.sv[idx] = sub.sv
        self.cregs[idx] = sub.cregs
        self.draws[idx] = sub.draws
        self.flags[idx] = sub.flags


def _apply_1q(sv: np.ndarray, n: int, q: int, m: np.ndarray) -> None:
    v = sv.reshape(-1, 1 << (n - 1 - q), 2, 1 << q)
    a = v[:, :, 0, :].copy()
    b = v[:, :, 1, :]
    v[:, :, 0, :] = m[0, 0] * a + m[0, 1] * b
    v[:, :, 1, :] = m[1, 0] * a + m[1, 1] * b


def _reorder_matrix(m: np.ndarray, perm: list[int]) -> np.ndarray:
    k = len(perm)
    dim = 1 << k
    reorder = np.zeros(dim, dtype=np.int64)
    for old in range(dim):
        new = 0
        for j in range(k):
            new |= ((old >> j) & 1) << perm[j]
        reorder[new] = old
    return m[np.ix_(reorder, reorder)]


def _apply_2q(sv: np.ndarray, n: int, qubits: tuple[int, int], m: np.ndarray) -> None:
    lo, hi = min(qubits), max(qubits)
    # rewrite the matrix into (hi = local bit 1, lo = local bit 0) order
    perm = [0 if q == lo else 1 for q in qubits]
    mm = m if perm == [0, 1] else _reorder_matrix(m, perm)
    v = sv.reshape(
        -1, 1 << (n - 1 - hi), 2, 1 << (hi - lo - 1), 2, 1 << lo
    )
    s = [
        v[:, :, 0, :, 0, :].copy(),
        v[:, :, 0, :, 1, :].copy(),
        v[:, :, 1, :, 0, :].copy(),
        v[:, :, 1, :, 1, :],
    ]
    for b in range(4):
        hi_b, lo_b = b >> 1, b & 1
        acc = mm[b, 0] * s[0] + mm[b, 1] * s[1] + mm[b, 2] * s[2] + mm[b, 3] * s[3]
        v[:, :, hi_b, :, lo_b, :] = acc


def _apply_kq(sv: np.ndarray, n: int, qubits: tuple[int, ...], m: np.ndarray) -> np.ndarray:
    k = len(qubits)
    S = sv.shape[0]
    view = sv.reshape((S,) + (2,) * n)
    axes = [1 + (n - 1 - q) for q in reversed(qubits)]  # local MSB first
    moved = np.moveaxis(view, axes, range(1, k + 1))
    rest_shape = moved.shape[1 + k:]
    block = np.ascontiguousarray(moved).reshape(S, 1 << k, -1)
    out = np.einsum("ij,sjr->sir", m, block)
    out = out.reshape((S, ) + (2,) * k + rest_shape)
    back = np.moveaxis(out, range(1, k + 1), axes)
    return np.ascontiguousarray(back).reshape(S, 1 << n)


def _apply_gate_batch(sv: np.ndarray, n: int, qubits: tuple[int, ...], m: np.ndarray) -> np.ndarray:
    if len(qubits) == 1:
        _apply_1q(sv, n, qubits[0], m)
        return sv
    if len(qubits) == 2:
        _apply_2q(sv, n, (qubits[0], qubits[1]), m)
        return sv
    return _apply_kq(sv, n, qubits, m)


class _Sampler:
    def __init__(self, p: Program, fuel: int):
        self.layout = _Layout(p)
        self.fuel = fuel
        self.coverage: CoverageMap = {}
        self._mats: dict = {}
        self._subspaces: dict = {}
        self._escapes: dict = {}

    def mat(self, g: Gate) -> np.ndarray:
        key = (g.kind, g.params)
        m = self._mats.get(key)
        if m is None:
            m = gate_matrix(g.kind, g.params)
            self._mats[key] = m
        return m

    def _cover(self, path, count: int) -> None:
        if count:
            self.coverage[path] = self.coverage.get(path, 0) + count

    def _eval_cond(self, cond: ClassicalCond, st: _Batch) -> np.ndarray:
        return self._eval_subject(cond.creg, cond.bit, st) == cond.value

    @staticmethod
    def _eval_subject(creg: int, bit: int | None, st: _Batch) -> np.ndarray:
        vals = st.cregs[:, creg]
        return vals if bit is None else (vals >> bit) & 1

    def _measure(self, q: int, st: _Batch) -> np.ndarray:
        n = self.layout.n
        v = st.sv.reshape(-1, 1 << (n - 1 - q), 2, 1 << q)
        p1 = (np.abs(v[:, :, 1, :]) ** 2).sum(axis=(1, 2))
        u = _shot_uniforms(st.keys, st.draws)
        st.draws += 1
        outcomes = u < p1
        keep = np.where(outcomes, p1, 1.0 - p1)
        scale = 1.0 / np.sqrt(np.maximum(keep, 1e-300))
        mask = np.zeros((st.size, 1, 2, 1))
        mask[np.arange(st.size), 0, outcomes.astype(np.int64), 0] = scale
        v *= mask
        return outcomes

    def exec_block(self, body, block, st: _Batch) -> _Batch:
        for i, ins in enumerate(body):
            if st.size == 0:
                break
            if (st.flags != _FLAG_NORMAL).any():
                idx = np.nonzero(st.flags == _FLAG_NORMAL)[0]
                if idx.size == 0:
                    break
                sub = self.exec_ins(ins, block, i, st.take(idx))
                st.scatter(idx, sub)
            else:
                st = self.exec_ins(ins, block, i, st)
        return st

    def exec_ins(self, ins: Instruction, block, i: int, st: _Batch) -> _Batch:
        path = block + (i,)
        self._cover(path, st.size)
        lay = self.layout
        if isinstance(ins, Gate):
            targets = tuple(lay.qubit(t) for t in ins.targets)
            st.sv = _apply_gate_batch(st.sv, lay.n, targets, self.mat(ins))
            return st
        if isinstance(ins, Measure):
            outcomes = self._measure(lay.qubit(ins.qubit), st)
            creg, bit = ins.clbit.reg, ins.clbit.offset
            st.cregs[:, creg] = (st.cregs[:, creg] & ~(1 << bit)) | (
                outcomes.astype(np.int64) << bit
            )
            return st
        if isinstance(ins, Reset):
            q = lay.qubit(ins.qubit)
            outcomes = self._measure(q, st)
            idx = np.nonzero(outcomes)[0]
            if idx.size:
                v = st.sv.reshape(-1, 1 << (lay.n - 1 - q), 2, 1 << q)
                v[idx, :, 0, :] = v[idx, :, 1, :]
                v[idx, :, 1, :] = 0.0
            return st
        if isinstance(ins, IfTest):
            sel = self._eval_cond(ins.cond, st)
            for label, body, mask in (
                ("then", ins.then_body, sel),
                ("else", ins.else_body, ~sel),
            ):
                idx = np.nonzero(mask)[0]
                if idx.size:
                    sub = self.exec_block(body, block + ((i, label),), st.take(idx))
                    st.scatter(idx, sub)
            return st
        if isinstance(ins, Switch):
            subject = self._eval_subject(ins.creg, ins.bit, st)
            matched = np.zeros(st.size, dtype=bool)
            for v, body in ins.cases:
                mask = (subject == v) & ~matched
                matched |= mask
                idx = np.nonzero(mask)[0]
                if idx.size:
                    sub = self.exec_block(body, block + ((i, f"case{v}"),), st.take(idx))
                    st.scatter(idx, sub)
            idx = np.nonzero(~matched)[0]
            if idx.size:
                sub = self.exec_block(
                    ins.default_body, block + ((i, "default"),), st.take(idx)
                )
                st.scatter(idx, sub)
            return st
        if isinstance(ins, ForRange):
            if ins.count > self.fuel:
                raise _InfiniteLoop(path)
            looping = np.arange(st.size)
            for _ in range(ins.count):
                if looping.size == 0:
                    break
                sub = self.exec_block(ins.body, block + ((i, "body"),), st.take(looping))
                broke = sub.flags == _FLAG_BREAK
                sub.flags[:] = _FLAG_NORMAL
                st.scatter(looping, sub)
                looping = looping[~broke]
            return st
        if isinstance(ins, WhileLoop):
            active = np.nonzero(self._eval_cond(ins.cond, st))[0]
            if active.size:
                escapes = self._escapes.get(id(ins))
                if escapes is None:
                    escapes = _while_can_terminate(ins)
                    self._escapes[id(ins)] = escapes
                if not escapes:
                    raise _InfiniteLoop(path, static=True)
            iters = 0
            while active.size:
                iters += 1
                if iters > self.fuel:
                    raise _InfiniteLoop(path)
                sub = self.exec_block(ins.body, block + ((i, "body"),), st.take(active))
                broke = sub.flags == _FLAG_BREAK
                sub.flags[:] = _FLAG_NORMAL
                st.scatter(active, sub)
                alive = active[~broke]
                if alive.size == 0:
                    break
                vals = st.cregs[alive, ins.cond.creg]
                if ins.cond.bit is not None:
                    vals = (vals >> ins.cond.bit) & 1
                active = alive[vals == ins.cond.value]
            return st
        if isinstance(ins, BreakLoop):
            st.flags[:] = _FLAG_BREAK
            return st
        if isinstance(ins, ContinueLoop):
            st.flags[:] = _FLAG_CONTINUE
            return st
        if isinstance(ins, ControlledOnInt):
            ctrl = tuple(lay.qubit(q) for q in ins.controls)
            key = (ctrl, ins.value)
            if key not in self._subspaces:
                self._subspaces[key] = _controlled_subspace(lay.n, ctrl, ins.value)
            sel = self._subspaces[key]
            sub = st.sv[:, sel]
            p_match = (np.abs(sub) ** 2).sum(axis=1)
            live = int((p_match > PRUNE_EPS).sum())
            pos = _free_positions(lay.n, ctrl)
            nfree = lay.n - len(ctrl)
            body_block = block + ((i, "body"),)
            for j, g in enumerate(ins.body):
                self._cover(body_block + (j,), live)
                targets = tuple(pos[lay.qubit(t)] for t in g.targets)
                sub = _apply_gate_batch(sub, nfree, targets, self.mat(g))
            st.sv[:, sel] = sub
            return st
        raise ValidationError(f"cannot execute {type(ins).__name__}", path)


def run(
    program: Program,
    shots: int,
    seed: int,
    *,
    fuel: int = DEFAULT_FUEL,
    chunk_bytes: int = 1 << 25,
) -> tuple[ExecOutcome, CoverageMap]:
    """Sample ``shots`` measurement outcomes; deterministic in ``seed``.

    Execution errors are returned inside the outcome, never raised: a
    program that a transformation pass broke is a result to classify, not a
    caller bug.
    """
    try:
        validate(program)
    except ValidationError as exc:
        return ExecOutcome.err(ErrKind.VALIDATION, str(exc)), {}
    sampler = _Sampler(program, fuel)
    lay = sampler.layout
    dim = 1 << lay.n
    chunk = max(1, min(shots, chunk_bytes // (16 * dim)))
    counts: Counts = Counts({}, 0)
    try:
        base = 0
        while base < shots:
            size = min(chunk, shots - base)
            sv = np.zeros((size, dim), dtype=np.complex128)
            sv[:, 0] = 1.0
            st = _Batch(
                sv=sv,
                cregs=np.zeros((size, len(program.cregs)), dtype=np.int64),
                keys=_shot_keys(seed, base, size),
                draws=np.zeros(size, dtype=np.int64),
                flags=np.zeros(size, dtype=np.int8),
            )
            st = sampler.exec_block(program.body, (), st)
            vals = np.zeros(st.size, dtype=np.int64)
            shift = 0
            for ri in lay.out_regs:
                vals |= st.cregs[:, ri] << shift
                shift += lay.cwidths[ri]
            counts = counts.merged(Counts.from_values(vals, lay.out_width))
            base += size
    except _InfiniteLoop as exc:
        msg = _loop_error_message(fuel, exc.path, exc.static)
        return ExecOutcome.err(ErrKind.INFINITE_LOOP, msg), sampler.coverage
    except EnumerationError as exc:  # pragma: no cover - not raised on this path
        return ExecOutcome.err(ErrKind.ENUMERATION, str(exc)), sampler.coverage
    except Exception as exc:
        return ExecOutcome.err(ErrKind.INTERNAL, f"{type(exc).__name__}: {exc}"), sampler.coverage
    return ExecOutcome.of(counts), sampler.coverage


# ---------------------------------------------------------------------------
# Exact path enumeration (the oracle)
# ---------------------------------------------------------------------------

@dataclass
class EnumCaps:
    max_qubits: int = 14
    max_paths: int = 4096
    fuel: int = DEFAULT_FUEL
    prune_eps: float = PRUNE_EPS
    # cumulative-weight floor: keeps geometric measurement loops finite while
    # losing far less mass than the 1e-12 normalization tolerance
    weight_cut: float = 1e-14


@dataclass
class _EnumBranch:
    sv: np.ndarray
    cregs: list[int]
    weight: float
    flag: int = _FLAG_NORMAL


def _state_key(sv: np.ndarray) -> bytes:
    """Canonical bytes of a state up to global phase (for branch merging)."""
    idx = int(np.argmax(np.abs(sv) > 1e-9))
    amp = sv[idx]
    if abs(amp) > 0:
        sv = sv * (abs(amp) / amp)
    return np.round(sv, 12).tobytes()


def _merge_branches(branches: list[_EnumBranch]) -> list[_EnumBranch]:
    """Sum the weights of branches that are physically indistinguishable.

    Two branches with equal classical registers, control flags and equal
    statevectors up to a global phase evolve identically forever, so
    folding them is exact. This is what keeps measurement loops (geometric
    exits) from multiplying the path count.
    """
    if len(branches) < 2:
        return branches
    merged: dict = {}
    order: list = []
    for b in branches:
        key = (b.flag, tuple(b.cregs), _state_key(b.sv))
        if key in merged:
            merged[key].weight += b.weight
        else:
            merged[key] = b
            order.append(key)
    return [merged[k] for k in order]


def _enum_apply_gate(sv: np.ndarray, n: int, qubits: tuple[int, ...], m: np.ndarray) -> np.ndarray:
    """Simple tensor-reshape gate application; kept independent of the
    batched kernels so the two interpreters can cross-check each other."""
    k = len(qubits)
    view = sv.reshape((2,) * n)
    axes = [n - 1 - q for q in reversed(qubits)]
    moved = np.moveaxis(view, axes, range(k))
    block = np.ascontiguousarray(moved).reshape(1 << k, -1)
    out = m @ block
    out = out.reshape((2,) * k + moved.shape[k:])
    return np.ascontiguousarray(np.moveaxis(out, range(k), axes)).reshape(1 << n)


class _Enumerator:
    def __init__(self, p: Program, caps: EnumCaps):
        self.layout = _Layout(p)
        self.caps = caps
        self.coverage: CoverageMap = {}
        self.live_branches = 1

    def _cover(self, path) -> None:
        self.coverage[path] = self.coverage.get(path, 0) + 1

    def _eval_cond(self, cond: ClassicalCond, b: _EnumBranch) -> bool:
        val = b.cregs[cond.creg]
        if cond.bit is not None:
            val = (val >> cond.bit) & 1
        return val == cond.value

    def exec_block(self, body, block, branches: list[_EnumBranch]) -> list[_EnumBranch]:
        cur = branches
        for i, ins in enumerate(body):
            nxt: list[_EnumBranch] = []
            for b in cur:
                if b.flag != _FLAG_NORMAL:
                    nxt.append(b)
                else:
                    nxt.extend(self.exec_ins(ins, block, i, b))
            cur = nxt
            if len(cur) >= 8:
                cur = _merge_branches(cur)
            if len(cur) > self.caps.max_paths:
                raise EnumerationError(
                    f"path budget exceeded ({len(cur)} > {self.caps.max_paths})"
                )
        return cur

    def exec_ins(self, ins: Instruction, block, i: int, b: _EnumBranch) -> list[_EnumBranch]:
        path = block + (i,)
        self._cover(path)
        lay = self.layout
        if isinstance(ins, Gate):
            targets = tuple(lay.qubit(t) for t in ins.targets)
            b.sv = _enum_apply_gate(b.sv, lay.n, targets, gate_matrix(ins.kind, ins.params))
            return [b]
        if isinstance(ins, Measure):
            return self._measure_split(ins, b)
        if isinstance(ins, Reset):
            out = []
            q = lay.qubit(ins.qubit)
            for br, outcome in self._split(b, q):
                if outcome:
                    v = br.sv.reshape(1 << (lay.n - 1 - q), 2, 1 << q)
                    v[:, 0, :] = v[:, 1, :]
                    v[:, 1, :] = 0.0
                out.append(br)
            return out
        if isinstance(ins, IfTest):
            label, body = (
                ("then", ins.then_body)
                if self._eval_cond(ins.cond, b)
                else ("else", ins.else_body)
            )
            return self.exec_block(body, block + ((i, label),), [b])
        if isinstance(ins, Switch):
            val = b.cregs[ins.creg]
            if ins.bit is not None:
                val = (val >> ins.bit) & 1
            for v, body in ins.cases:
                if val == v:
                    return self.exec_block(body, block + ((i, f"case{v}"),), [b])
            return self.exec_block(ins.default_body, block + ((i, "default"),), [b])
        if isinstance(ins, ForRange):
            if ins.count > self.caps.fuel:
                raise EnumerationError(f"loop count {ins.count} above fuel cap")
            done: list[_EnumBranch] = []
            live = [b]
            for _ in range(ins.count):
                if not live:
                    break
                after = self.exec_block(ins.body, block + ((i, "body"),), live)
                live = []
                for br in after:
                    if br.flag == _FLAG_BREAK:
                        br.flag = _FLAG_NORMAL
                        done.append(br)
                    else:
                        br.flag = _FLAG_NORMAL
                        live.append(br)
                live = _merge_branches(live)
                done = _merge_branches(done)
            return done + live
        if isinstance(ins, WhileLoop):
            done = []
            live = [b]
            iters = 0
            while live:
                iters += 1
                if iters > self.caps.fuel:
                    raise EnumerationError(
                        f"loop fuel exhausted at {format_path(path)}"
                    )
                entering = []
                for br in live:
                    (entering if self._eval_cond(ins.cond, br) else done).append(br)
                if entering and not _while_can_terminate(ins):
                    raise EnumerationError(
                        f"loop condition can never change at {format_path(path)}"
                    )
                if not entering:
                    break
                after = self.exec_block(ins.body, block + ((i, "body"),), entering)
                live = []
                for br in after:
                    if br.flag == _FLAG_BREAK:
                        br.flag = _FLAG_NORMAL
                        done.append(br)
                    else:
                        br.flag = _FLAG_NORMAL
                        live.append(br)
                live = _merge_branches(live)
                done = _merge_branches(done)
            return done
        if isinstance(ins, BreakLoop):
            b.flag = _FLAG_BREAK
            return [b]
        if isinstance(ins, ContinueLoop):
            b.flag = _FLAG_CONTINUE
            return [b]
        if isinstance(ins, ControlledOnInt):
            ctrl = tuple(lay.qubit(q) for q in ins.controls)
            sel = _controlled_subspace(lay.n, ctrl, ins.value)
            sub = b.sv[sel]
            p_match = float((np.abs(sub) ** 2).sum())
            pos = _free_positions(lay.n, ctrl)
            nfree = lay.n - len(ctrl)
            body_block = block + ((i, "body"),)
            for j, g in enumerate(ins.body):
                if p_match > self.caps.prune_eps:
                    self._cover(body_block + (j,))
                targets = tuple(pos[lay.qubit(t)] for t in g.targets)
                sub = _enum_apply_gate(sub, nfree, targets, gate_matrix(g.kind, g.params))
            b.sv = b.sv.copy()
            b.sv[sel] = sub
            return [b]
        raise ValidationError(f"cannot execute {type(ins).__name__}", path)

    def _split(self, b: _EnumBranch, q: int):
        """Yield (branch, outcome) for each possible measurement result."""
        n = self.layout.n
        v = b.sv.reshape(1 << (n - 1 - q), 2, 1 << q)
        p1 = float((np.abs(v[:, 1, :]) ** 2).sum())
        p0 = 1.0 - p1
        eps = self.caps.prune_eps
        outs = []
        for outcome, p in ((0, p0), (1, p1)):
            if p <= eps or b.weight * p <= self.caps.weight_cut:
                continue
            sv = b.sv.copy()
            vv = sv.reshape(1 << (n - 1 - q), 2, 1 << q)
            vv[:, 1 - outcome, :] = 0.0
            sv /= math.sqrt(p)
            outs.append((_EnumBranch(sv, list(b.cregs), b.weight * p, b.flag), outcome))
        return outs

    def _measure_split(self, ins: Measure, b: _EnumBranch) -> list[_EnumBranch]:
        lay = self.layout
        out = []
        for br, outcome in self._split(b, lay.qubit(ins.qubit)):
            creg, bit = ins.clbit.reg, ins.clbit.offset
            br.cregs[creg] = (br.cregs[creg] & ~(1 << bit)) | (outcome << bit)
            out.append(br)
        return out


def enumerate_distribution(
    program: Program, caps: EnumCaps | None = None, output_reg: str | None = None
) -> tuple[dict[str, float], CoverageMap]:
    """Exact output distribution via measurement branching.

    ``output_reg`` narrows the reported keys to one named classical
    register (useful for inspecting guard registers); the default follows
    the standard output convention.

    Raises :class:`EnumerationError` when the qubit count, live path count
    or loop fuel cap is exceeded; raises :class:`ValidationError` for
    structurally invalid programs.
    """
    caps = caps or EnumCaps()
    validate(program)
    lay = _Layout(program)
    if output_reg is not None:
        ri = program.creg_index(output_reg)
        if ri is None:
            raise ValidationError(f"no classical register named {output_reg!r}")
        lay.out_regs = [ri]
        lay.out_width = lay.cwidths[ri]
    if lay.n > caps.max_qubits:
        raise EnumerationError(f"{lay.n} qubits above cap {caps.max_qubits}")
    enum = _Enumerator(program, caps)
    enum.layout = lay
    sv = np.zeros(1 << lay.n, dtype=np.complex128)
    sv[0] = 1.0
    start = _EnumBranch(sv=sv, cregs=[0] * len(program.cregs), weight=1.0)
    final = enum.exec_block(program.body, (), [start])
    dist: dict[str, float] = {}
    width = lay.out_width
    for br in final:
        val = lay.out_value(br.cregs)
        key = format(val, f"0{width}b") if width else ""
        dist[key] = dist.get(key, 0.0) + br.weight
    return dict(sorted(dist.items())), enum.coverage
