"""Variant derivation: delete marked dead regions, keep the scaffolding.

The variant keeps every enclosing control construct, ancilla allocation and
guard preparation; only the instructions inside marked spans disappear. A
controlled-on-int node whose body was emptied is dropped whole (the guard
is its own control register, which stays allocated). Emptied if/while/
switch/for constructs are retained so downstream passes still see the
control structure.
"""
from __future__ import annotations

from dataclasses import replace

from .ir import (
    ControlledOnInt,
    Instruction,
    Program,
    child_blocks,
    replace_child_block,
    validate,
)
from .simulator import EnumCaps, enumerate_distribution

__all__ = ["check_equivalence_exact", "derive_variant"]


def _rebuild(
    body: tuple[Instruction, ...],
    block: tuple,
    spans_by_block: dict,
) -> tuple[Instruction, ...]:
    ranges = spans_by_block.get(block, ())
    out: list[Instruction] = []
    for i, ins in enumerate(body):
        if any(start <= i < stop for start, stop in ranges):
            continue
        new_ins = ins
        for label, blk in child_blocks(ins):
            rebuilt = _rebuild(blk, block + ((i, label),), spans_by_block)
            if rebuilt != blk:
                new_ins = replace_child_block(new_ins, label, rebuilt)
        if (
            isinstance(new_ins, ControlledOnInt)
            and not new_ins.body
            and isinstance(ins, ControlledOnInt)
            and ins.body
        ):
            # whole-call removal once the dead body is gone
            continue
        out.append(new_ins)
    return tuple(out)


def derive_variant(p: Program) -> Program:
    """Return the equivalent program with all dead-region contents removed."""
    if not p.dead_regions:
        return replace(p, dead_regions=())
    spans_by_block: dict[tuple, list[tuple[int, int]]] = {}
    for r in p.dead_regions:
        spans_by_block.setdefault(r.span.block, []).append((r.span.start, r.span.stop))
    body = _rebuild(p.body, (), spans_by_block)
    variant = replace(p, body=body, dead_regions=())
    validate(variant)
    return variant


def check_equivalence_exact(
    p: Program, p_prime: Program, limit: int = 12, caps: EnumCaps | None = None
) -> float:
    """Max pointwise probability gap between the exact output distributions."""
    caps = caps or EnumCaps(max_qubits=limit)
    da, _ = enumerate_distribution(p, caps)
    db, _ = enumerate_distribution(p_prime, caps)
    keys = set(da) | set(db)
    if not keys:
        return 0.0
    return max(abs(da.get(k, 0.0) - db.get(k, 0.0)) for k in keys)
