"""Dead-code pattern catalog and instantiation.

Each pattern is a control-flow template whose marked region provably never
executes. Input-dependent kinds earn that guarantee by preparing a fresh
ancilla in |1> and guarding on the measured bit being 0; input-independent
kinds are dead by construction (zero-trip loops, code after break/continue).
The controlled-on-int kind leaves a fresh control register in all-zeros and
fires only on a nonzero comparison value, so its unitary body never applies.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .ir import (
    BreakLoop,
    ClassicalCond,
    ClbitRef,
    ContinueLoop,
    ControlledOnInt,
    DeadRegion,
    ForRange,
    Gate,
    GateKind,
    IfTest,
    Instruction,
    Measure,
    PatternCategory,
    PatternKind,
    QubitRef,
    Register,
    Span,
    Switch,
    WhileLoop,
)

__all__ = [
    "AllocContext",
    "PatternError",
    "PatternInfo",
    "catalog",
    "category",
    "filler_site",
    "instantiate",
    "remap_regions",
]


class PatternError(ValueError):
    """Filler or context violates the requested pattern's constraints."""


_CATEGORY = {
    PatternKind.IF_TEST_DEAD: PatternCategory.INPUT_DEPENDENT,
    PatternKind.WHILE_DEAD: PatternCategory.INPUT_DEPENDENT,
    PatternKind.SWITCH_DEAD: PatternCategory.INPUT_DEPENDENT,
    PatternKind.CONTROLLED_ON_INT_DEAD: PatternCategory.INPUT_DEPENDENT,
    PatternKind.FOR_ZERO: PatternCategory.INPUT_INDEPENDENT,
    PatternKind.FOR_CONTINUE: PatternCategory.INPUT_INDEPENDENT,
    PatternKind.FOR_BREAK: PatternCategory.INPUT_INDEPENDENT,
}

# Ancilla qubits a single instantiation allocates (guard qubit or control reg).
_ANCILLA_QUBITS = {
    PatternKind.IF_TEST_DEAD: 1,
    PatternKind.WHILE_DEAD: 1,
    PatternKind.SWITCH_DEAD: 1,
    PatternKind.FOR_ZERO: 0,
    PatternKind.FOR_CONTINUE: 0,
    PatternKind.FOR_BREAK: 0,
}


@dataclass(frozen=True)
class PatternInfo:
    kind: PatternKind
    category: PatternCategory
    allows_nested: bool


def category(kind: PatternKind) -> PatternCategory:
    return _CATEGORY[kind]


def catalog() -> list[PatternInfo]:
    """All seven pattern kinds, each exactly once.

    ``allows_nested`` reports whether further dead regions may live inside
    the kind's dead span; only the controlled-on-int kind forbids it (its
    body is unitary-only).
    """
    return [
        PatternInfo(k, _CATEGORY[k], k is not PatternKind.CONTROLLED_ON_INT_DEAD)
        for k in PatternKind
    ]


def ancilla_qubits_needed(kind: PatternKind, ctx: "AllocContext") -> int:
    if kind is PatternKind.CONTROLLED_ON_INT_DEAD:
        return ctx.ctrl_width
    return _ANCILLA_QUBITS[kind]


@dataclass
class AllocContext:
    """Register allocation context shared by pattern instantiation.

    Mutating methods append fresh registers; names are derived from the
    region id so repeated generation from one seed stays byte-stable.
    """

    qregs: list[Register]
    cregs: list[Register]
    data_qubits: tuple[QubitRef, ...]
    for_trip: int = 5
    ctrl_width: int = 3
    _next_region: int = 0
    _names: set = field(default_factory=set)

    def __post_init__(self) -> None:
        self._names = {r.name for r in self.qregs} | {r.name for r in self.cregs}

    def next_region_id(self) -> int:
        rid = self._next_region
        self._next_region += 1
        return rid

    def _fresh_name(self, prefix: str, rid: int) -> str:
        name = f"{prefix}{rid}"
        k = 0
        while name in self._names:
            k += 1
            name = f"{prefix}{rid}_{k}"
        self._names.add(name)
        return name

    def alloc_qreg(self, prefix: str, rid: int, width: int) -> int:
        self.qregs.append(Register(self._fresh_name(prefix, rid), width))
        return len(self.qregs) - 1

    def alloc_creg(self, prefix: str, rid: int, width: int) -> int:
        self.cregs.append(Register(self._fresh_name(prefix, rid), width))
        return len(self.cregs) - 1


# Where each template places its filler: (path steps from the fragment root,
# index offset of the filler's first instruction inside that block).
_FILLER_SITE = {
    PatternKind.IF_TEST_DEAD: (((2, "then"),), 0),
    PatternKind.WHILE_DEAD: (((2, "body"),), 0),
    PatternKind.SWITCH_DEAD: (((2, "case0"),), 0),
    PatternKind.FOR_ZERO: (((0, "body"),), 0),
    PatternKind.FOR_CONTINUE: (((0, "body"),), 2),
    PatternKind.FOR_BREAK: (((0, "body"),), 2),
    PatternKind.CONTROLLED_ON_INT_DEAD: (((0, "body"),), 0),
}


def filler_site(kind: PatternKind) -> tuple[tuple, int]:
    """Path steps and index offset of the filler inside a fresh fragment."""
    return _FILLER_SITE[kind]


def remap_regions(regions, kind: PatternKind) -> list[DeadRegion]:
    """Re-root regions expressed relative to a filler into the fragment
    produced by instantiating ``kind`` around that filler."""
    steps, offset = _FILLER_SITE[kind]
    return [replace(r, span=r.span.shifted(steps, offset)) for r in regions]


def _live_gate(ctx: AllocContext, rng: np.random.Generator) -> Gate:
    target = ctx.data_qubits[int(rng.integers(0, len(ctx.data_qubits)))]
    return Gate(GateKind.H, (), (target,))


def instantiate(
    kind: PatternKind,
    filler: list[Instruction] | tuple[Instruction, ...],
    ctx: AllocContext,
    rng: np.random.Generator,
) -> tuple[list[Instruction], DeadRegion]:
    """Build a program fragment hosting ``filler`` as a dead region.

    Returns the fragment and the region marking the filler's span, expressed
    relative to the fragment root. Raises :class:`PatternError` when the
    filler breaks the kind's constraints (only gates may appear inside a
    controlled-on-int body).
    """
    filler = tuple(filler)
    rid = ctx.next_region_id()
    cat = _CATEGORY[kind]

    if kind is PatternKind.CONTROLLED_ON_INT_DEAD:
        if not all(isinstance(ins, Gate) for ins in filler):
            raise PatternError(
                "controlled-on-int dead block accepts only plain gates"
            )
        width = ctx.ctrl_width
        qi = ctx.alloc_qreg("ctrl", rid, width)
        controls = tuple(QubitRef(qi, k) for k in range(width))
        value = int(rng.integers(1, 1 << width))
        node = ControlledOnInt(value, controls, filler)  # ctrl stays all-zeros
        region = DeadRegion(
            id=rid,
            kind=kind,
            span=Span(((0, "body"),), 0, len(filler)),
            category=cat,
            ancilla_qubits=controls,
        )
        return [node], region

    if kind in (PatternKind.IF_TEST_DEAD, PatternKind.WHILE_DEAD, PatternKind.SWITCH_DEAD):
        qi = ctx.alloc_qreg("anc", rid, 1)
        ci = ctx.alloc_creg("g", rid, 1)
        anc = QubitRef(qi, 0)
        guard = ClbitRef(ci, 0)
        prep = [Gate(GateKind.X, (), (anc,)), Measure(anc, guard)]
        cond = ClassicalCond(ci, None, 0)  # measured 1, so ==0 never holds
        if kind is PatternKind.IF_TEST_DEAD:
            node: Instruction = IfTest(cond, filler, (_live_gate(ctx, rng),))
            span = Span(((2, "then"),), 0, len(filler))
        elif kind is PatternKind.WHILE_DEAD:
            node = WhileLoop(cond, filler)
            span = Span(((2, "body"),), 0, len(filler))
        else:
            node = Switch(
                ci, None, ((0, filler), (1, (_live_gate(ctx, rng),))), ()
            )
            span = Span(((2, "case0"),), 0, len(filler))
        region = DeadRegion(
            id=rid,
            kind=kind,
            span=span,
            category=cat,
            ancilla_qubits=(anc,),
            ancilla_clbits=(guard,),
        )
        return prep + [node], region

    if kind is PatternKind.FOR_ZERO:
        node = ForRange(0, filler)
        region = DeadRegion(
            id=rid, kind=kind, span=Span(((0, "body"),), 0, len(filler)), category=cat
        )
        return [node], region

    if kind in (PatternKind.FOR_CONTINUE, PatternKind.FOR_BREAK):
        stopper: Instruction = (
            ContinueLoop() if kind is PatternKind.FOR_CONTINUE else BreakLoop()
        )
        body = (_live_gate(ctx, rng), stopper) + filler
        node = ForRange(ctx.for_trip, body)
        region = DeadRegion(
            id=rid,
            kind=kind,
            span=Span(((0, "body"),), 2, 2 + len(filler)),
            category=cat,
        )
        return [node], region

    raise PatternError(f"unknown pattern kind {kind}")
