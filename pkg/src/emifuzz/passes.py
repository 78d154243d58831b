"""Circuit transformation passes and pipelines.

Correct passes preserve the exact output distribution; they are what a
healthy toolchain would run. The registry also quarantines deliberately
buggy passes modelled on real optimizer defect classes (reordering that
ignores classical dependencies, moment handling during reversal, missing
inverse support for loops, unsafe final-measurement removal). Buggy passes
never run unless a pipeline explicitly opts in, and exist so the framework
can validate its own bug-finding power end to end.

Transformed programs drop their dead-region marks: spans are positional and
would go stale under reordering or deletion. Variant derivation therefore
happens before any pipeline runs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Union

from .ir import (
    BreakLoop,
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
    WhileLoop,
    child_blocks,
    replace_child_block,
)
from .simulator import ErrKind, ErrorRecord

__all__ = [
    "CORRECT_PASSES",
    "PassCrash",
    "PassInfo",
    "Pipeline",
    "PipelineError",
    "REGISTRY",
    "SEEDED_BUG_PASSES",
    "apply",
    "get_pass",
]


class PassCrash(RuntimeError):
    """Raised inside a pass; surfaces as a pass-kind error record."""


class PipelineError(ValueError):
    """Pipeline references unknown passes or unguarded seeded bugs."""


# ---------------------------------------------------------------------------
# Shared tree helpers
# ---------------------------------------------------------------------------

def _map_blocks(
    ins: Instruction, fn: Callable[[tuple[Instruction, ...]], tuple[Instruction, ...]]
) -> Instruction:
    out = ins
    for label, blk in child_blocks(ins):
        new = fn(blk)
        if new != blk:
            out = replace_child_block(out, label, new)
    return out


def _transform_blocks(
    body: tuple[Instruction, ...],
    fn: Callable[[tuple[Instruction, ...]], tuple[Instruction, ...]],
) -> tuple[Instruction, ...]:
    """Apply ``fn`` to every block, children first."""
    rebuilt = tuple(
        _map_blocks(ins, lambda blk: _transform_blocks(blk, fn)) for ins in body
    )
    return fn(rebuilt)


def _gate_qubits(g: Gate) -> frozenset:
    return frozenset(g.targets)


def _node_qubits(ins: Instruction) -> frozenset:
    """Every qubit an instruction may act on (classical links ignored)."""
    if isinstance(ins, Gate):
        return _gate_qubits(ins)
    if isinstance(ins, Measure):
        return frozenset((ins.qubit,))
    if isinstance(ins, Reset):
        return frozenset((ins.qubit,))
    if isinstance(ins, ControlledOnInt):
        qs = set(ins.controls)
        for g in ins.body:
            qs.update(g.targets)
        return frozenset(qs)
    acc: set = set()
    for _, blk in child_blocks(ins):
        for sub in blk:
            acc |= _node_qubits(sub)
    return frozenset(acc)


def _qubit_key(qs: frozenset) -> tuple:
    return min(((q.reg, q.offset) for q in qs), default=(1 << 30, 0))


# ---------------------------------------------------------------------------
# Correct passes
# ---------------------------------------------------------------------------

_SELF_INVERSE = {
    GateKind.H,
    GateKind.X,
    GateKind.Y,
    GateKind.Z,
    GateKind.CX,
    GateKind.CZ,
    GateKind.CCX,
    GateKind.SWAP,
}
_DAGGER = {
    GateKind.S: GateKind.SDG,
    GateKind.SDG: GateKind.S,
    GateKind.T: GateKind.TDG,
    GateKind.TDG: GateKind.T,
}


def _cancels(a: Gate, b: Gate) -> bool:
    if a.targets != b.targets:
        return False
    if a.kind in _SELF_INVERSE and a.kind is b.kind:
        return True
    return _DAGGER.get(a.kind) is b.kind


def _cancel_block(body: tuple[Instruction, ...]) -> tuple[Instruction, ...]:
    out: list[Instruction] = []
    for ins in body:
        if isinstance(ins, Gate) and out and isinstance(out[-1], Gate) and _cancels(out[-1], ins):
            out.pop()
        else:
            out.append(ins)
    return tuple(out)


def cancel_inverses(p: Program) -> Program:
    """Remove adjacent gate pairs that multiply to the identity."""
    return p.with_body(_transform_blocks(p.body, _cancel_block))


_ROTATIONS = {GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.RZZ}
_TWO_PI = 2.0 * math.pi


def _merge_block(body: tuple[Instruction, ...]) -> tuple[Instruction, ...]:
    out: list[Instruction] = []
    for ins in body:
        if (
            isinstance(ins, Gate)
            and ins.kind in _ROTATIONS
            and out
            and isinstance(out[-1], Gate)
            and out[-1].kind is ins.kind
            and (
                out[-1].targets == ins.targets
                or (ins.kind is GateKind.RZZ and out[-1].targets == ins.targets[::-1])
            )
        ):
            prev = out.pop()
            angle = math.fmod(prev.params[0] + ins.params[0], _TWO_PI)
            if angle < 0:
                angle += _TWO_PI
            out.append(replace(prev, params=(angle,)))
        else:
            out.append(ins)
    return tuple(out)


def merge_rotations(p: Program) -> Program:
    """Fuse adjacent same-axis rotations on identical targets."""
    return p.with_body(_transform_blocks(p.body, _merge_block))


def _elide_block(body: tuple[Instruction, ...]) -> tuple[Instruction, ...]:
    out = []
    for ins in body:
        if isinstance(ins, IfTest) and not ins.then_body and not ins.else_body:
            continue
        if isinstance(ins, ForRange) and not ins.body:
            continue
        if isinstance(ins, ControlledOnInt) and not ins.body:
            continue
        out.append(ins)
    return tuple(out)


def elide_empty_blocks(p: Program) -> Program:
    """Drop branch-free conditionals, bodiless for-loops and empty
    controlled blocks. Empty while loops stay: removing one would turn a
    potential hang into silent success."""
    return p.with_body(_transform_blocks(p.body, _elide_block))


def _measure_sort_key(ins: Measure) -> tuple:
    return (ins.qubit.reg, ins.qubit.offset)


def canonicalize_final_measures(p: Program) -> Program:
    """Order the trailing run of measurements by measured qubit.

    Applies only when the trailing measurements touch pairwise-distinct
    qubits and classical bits, which is what makes the reorder sound.
    """
    body = list(p.body)
    k = len(body)
    while k > 0 and isinstance(body[k - 1], Measure):
        k -= 1
    tail = body[k:]
    if len(tail) > 1:
        qubits = [m.qubit for m in tail]
        clbits = [m.clbit for m in tail]
        if len(set(qubits)) == len(qubits) and len(set(clbits)) == len(clbits):
            tail = sorted(tail, key=_measure_sort_key)
    return p.with_body(tuple(body[:k] + tail))


def _commute_block(body: tuple[Instruction, ...]) -> tuple[Instruction, ...]:
    out = list(body)
    changed = True
    while changed:
        changed = False
        for i in range(len(out) - 1):
            a, b = out[i], out[i + 1]
            if not (isinstance(a, Gate) and isinstance(b, Gate)):
                continue  # measurements and control flow are barriers
            qa, qb = _gate_qubits(a), _gate_qubits(b)
            if qa & qb:
                continue
            if _qubit_key(qb) < _qubit_key(qa):
                out[i], out[i + 1] = b, a
                changed = True
    return tuple(out)


def commute_disjoint(p: Program) -> Program:
    """Canonically order adjacent gates on disjoint qubits. Measurements,
    resets and control flow act as barriers, so classically linked
    operations never move relative to each other."""
    return p.with_body(_transform_blocks(p.body, _commute_block))


# ---------------------------------------------------------------------------
# Seeded-bug passes (quarantined behind Pipeline.include_seeded_bugs)
# ---------------------------------------------------------------------------

def _bug_commute_block(body: tuple[Instruction, ...]) -> tuple[Instruction, ...]:
    out = list(body)
    changed = True
    while changed:
        changed = False
        for i in range(len(out) - 1):
            a, b = out[i], out[i + 1]
            if isinstance(a, (BreakLoop, ContinueLoop)) or isinstance(
                b, (BreakLoop, ContinueLoop)
            ):
                continue
            qa, qb = _node_qubits(a), _node_qubits(b)
            if qa & qb:
                continue
            if _qubit_key(qb) < _qubit_key(qa):
                out[i], out[i + 1] = b, a
                changed = True
    return tuple(out)


def bug_commute_skip_classical(p: Program) -> Program:
    """Reorders anything whose qubit sets are disjoint, including
    measurements and classically controlled blocks: the classical
    write/read dependency between a measurement and a conditional is
    ignored, so a conditional can move ahead of the measurement feeding
    it."""
    return p.with_body(_transform_blocks(p.body, _bug_commute_block))


def _moments(body: list[Instruction]) -> list[list[Instruction]]:
    """Greedy earliest-slot scheduling by qubit availability only."""
    moments: list[list[Instruction]] = []
    busy_until: dict = {}
    for ins in body:
        qs = _node_qubits(ins)
        slot = max((busy_until.get(q, 0) for q in qs), default=0)
        while len(moments) <= slot:
            moments.append([])
        moments[slot].append(ins)
        for q in qs:
            busy_until[q] = slot + 1
    return moments


def _bug_reverse_block(body: tuple[Instruction, ...]) -> tuple[Instruction, ...]:
    cur = list(body)
    for _ in range(2):
        moments = _moments(cur)
        cur = [ins for m in reversed(moments) for ins in m]
    return tuple(cur)


def bug_reverse_moments(p: Program) -> Program:
    """Double moment-order reversal meant to be a no-op normalization.

    Moments are built from qubit availability alone and the order inside a
    moment is kept while reversing, so a measurement and a conditional that
    reads its bit (qubit-disjoint, hence schedulable into one moment) can
    come out permuted.
    """
    return p.with_body(_transform_blocks(p.body, _bug_reverse_block))


def _contains_dynamic(body: tuple[Instruction, ...]) -> bool:
    for ins in body:
        if isinstance(ins, (IfTest, WhileLoop, Switch, ControlledOnInt)):
            return True
        for _, blk in child_blocks(ins):
            if _contains_dynamic(blk):
                return True
    return False


def _invert_walk(body: tuple[Instruction, ...]) -> None:
    for ins in body:
        if isinstance(ins, ForRange):
            raise PassCrash("inverse is not implemented for for-loop blocks")
        for _, blk in child_blocks(ins):
            _invert_walk(blk)


def bug_invert_forloop(p: Program) -> Program:
    """Inverse-based cleanup that silently skips programs containing
    dynamic constructs it cannot handle, but believes plain counted loops
    are fine and then fails on them while building inverses."""
    if _contains_dynamic(p.body):
        return p  # silently skipped optimization
    _invert_walk(p.body)
    return p.with_body(_transform_blocks(p.body, _cancel_block))


def _flatten(body: tuple[Instruction, ...]) -> list[Instruction]:
    out: list[Instruction] = []
    for ins in body:
        out.append(ins)
        for _, blk in child_blocks(ins):
            out.extend(_flatten(blk))
    return out


def _reads_clbit(ins: Instruction, clbit) -> bool:
    # WhileLoop conditions are (wrongly) not consulted here
    if isinstance(ins, IfTest):
        c = ins.cond
        return c.creg == clbit.reg and (c.bit is None or c.bit == clbit.offset)
    if isinstance(ins, Switch):
        return ins.creg == clbit.reg and (ins.bit is None or ins.bit == clbit.offset)
    return False


def _unitary_touches_qubit(ins: Instruction, qubit) -> bool:
    # measurements and resets are (wrongly) not treated as qubit consumers
    if isinstance(ins, Gate):
        return qubit in ins.targets
    if isinstance(ins, ControlledOnInt):
        return qubit in ins.controls or any(qubit in g.targets for g in ins.body)
    return False


def bug_remove_final_measures(p: Program) -> Program:
    """Removes measurements classified as final by a linear scan that
    checks later unitary uses of the qubit and if/switch condition reads,
    but forgets while-loop condition reads, loop back-edges, and that a
    later measurement also consumes the qubit."""
    flat = _flatten(p.body)
    removable: set[int] = set()
    for k, ins in enumerate(flat):
        if not isinstance(ins, Measure):
            continue
        needed = False
        for later in flat[k + 1:]:
            if _unitary_touches_qubit(later, ins.qubit) or _reads_clbit(later, ins.clbit):
                needed = True
                break
        if not needed:
            removable.add(id(ins))

    def prune(body: tuple[Instruction, ...]) -> tuple[Instruction, ...]:
        return tuple(ins for ins in body if id(ins) not in removable)

    return p.with_body(_transform_blocks(p.body, prune))


def bug_elide_unaware(p: Program) -> Program:
    """Empty-block elision that never learned about controlled blocks."""

    def walk(body: tuple[Instruction, ...]) -> None:
        for ins in body:
            if isinstance(ins, ControlledOnInt):
                raise PassCrash("cannot analyze controlled block for emptiness")
            for _, blk in child_blocks(ins):
                walk(blk)

    walk(p.body)
    return p.with_body(_transform_blocks(p.body, _elide_block))


# ---------------------------------------------------------------------------
# Registry and application
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PassInfo:
    id: str
    fn: Callable[[Program], Program]
    seeded_bug: bool
    summary: str


_PASSES = [
    PassInfo("cancel-inverses", cancel_inverses, False, "adjacent inverse-pair removal"),
    PassInfo("merge-rotations", merge_rotations, False, "adjacent rotation fusion"),
    PassInfo("elide-empty-blocks", elide_empty_blocks, False, "empty control-flow removal"),
    PassInfo(
        "commute-disjoint",
        commute_disjoint,
        False,
        "canonical ordering of disjoint adjacent gates",
    ),
    PassInfo(
        "canonicalize-final-measures",
        canonicalize_final_measures,
        False,
        "stable ordering of trailing measurements",
    ),
    PassInfo(
        "commute-skip-classical",
        bug_commute_skip_classical,
        True,
        "B1: reorder ignoring classical read/write dependencies",
    ),
    PassInfo(
        "reverse-moments",
        bug_reverse_moments,
        True,
        "B2: double moment reversal keeping intra-moment order",
    ),
    PassInfo(
        "invert-forloop",
        bug_invert_forloop,
        True,
        "B3: inverse cleanup crashing on counted loops",
    ),
    PassInfo(
        "remove-final-measures",
        bug_remove_final_measures,
        True,
        "B4: final-measure removal blind to while conditions",
    ),
    PassInfo(
        "elide-empty-unaware",
        bug_elide_unaware,
        True,
        "empty-block elision crashing on controlled blocks",
    ),
]

REGISTRY: dict[str, PassInfo] = {info.id: info for info in _PASSES}
CORRECT_PASSES: tuple[str, ...] = tuple(i.id for i in _PASSES if not i.seeded_bug)
SEEDED_BUG_PASSES: tuple[str, ...] = tuple(i.id for i in _PASSES if i.seeded_bug)


def get_pass(pass_id: str) -> PassInfo:
    info = REGISTRY.get(pass_id)
    if info is None:
        raise PipelineError(f"unknown pass {pass_id!r}")
    return info


@dataclass(frozen=True)
class Pipeline:
    passes: tuple[str, ...]
    include_seeded_bugs: bool = False

    def __post_init__(self) -> None:
        for pid in self.passes:
            info = get_pass(pid)
            if info.seeded_bug and not self.include_seeded_bugs:
                raise PipelineError(
                    f"pass {pid!r} is a seeded bug; enable include_seeded_bugs to use it"
                )

    @property
    def id(self) -> str:
        return "+".join(self.passes) if self.passes else "identity"


def apply(pipeline: Pipeline, p: Program) -> Union[Program, ErrorRecord]:
    """Run a pipeline; pass failures come back as error records.

    Output programs carry no dead-region marks (spans would be stale).
    """
    out = replace(p, dead_regions=())
    for pid in pipeline.passes:
        info = get_pass(pid)
        try:
            out = info.fn(out)
        except PassCrash as exc:
            return ErrorRecord(ErrKind.PASS, f"{pid}: {exc}")
        except Exception as exc:  # a pass blowing up is a result, not a crash
            return ErrorRecord(ErrKind.PASS, f"{pid}: {type(exc).__name__}: {exc}")
    return out
