"""Quantum program IR: registers, gates, control flow, dead-region marks.

The representation is a tree of immutable instructions. Blocks (instruction
sequences) appear at the program top level and inside control-flow nodes;
positions in the tree are addressed by *paths* so that marked dead regions
can point at a contiguous slice of any block.

Conventions used everywhere (also see docs/qir-txt.md):

* classical bit ``c[0]`` is the least-significant bit of its register value;
* when no register named ``result`` exists, the program outcome concatenates
  all classical registers in declaration order, most-recently-declared most
  significant; with a ``result`` register, only that register is reported;
* qubit 0 of the flattened qubit ordering is the least-significant bit of
  the statevector amplitude index.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterator, Union

__all__ = [
    "BreakLoop",
    "ClassicalCond",
    "ClbitRef",
    "ContinueLoop",
    "ControlledOnInt",
    "DeadRegion",
    "ForRange",
    "Gate",
    "GateKind",
    "IfTest",
    "Instruction",
    "Measure",
    "Meta",
    "ParseError",
    "PatternCategory",
    "PatternKind",
    "Program",
    "QubitRef",
    "Register",
    "Reset",
    "Span",
    "Switch",
    "ValidationError",
    "WhileLoop",
    "block_at",
    "deserialize",
    "serialize",
    "span_instruction_paths",
    "validate",
]


class ValidationError(ValueError):
    """Structural invariant violation; carries the path of the first bad node."""

    def __init__(self, message: str, path: tuple = ()):  # type: ignore[type-arg]
        super().__init__(f"{message} (at {format_path(path)})" if path else message)
        self.path = path


class ParseError(ValueError):
    """Raised by :func:`deserialize` with 1-based line/column information."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, col {column}: {message}")
        self.line = line
        self.column = column


# ---------------------------------------------------------------------------
# Gate set
# ---------------------------------------------------------------------------

class GateKind(Enum):
    H = "h"
    X = "x"
    Y = "y"
    Z = "z"
    S = "s"
    SDG = "sdg"
    T = "t"
    TDG = "tdg"
    RX = "rx"
    RY = "ry"
    RZ = "rz"
    RZZ = "rzz"
    CX = "cx"
    CZ = "cz"
    CCX = "ccx"
    SWAP = "swap"

    @property
    def arity(self) -> int:
        if self in (GateKind.RZZ, GateKind.CX, GateKind.CZ, GateKind.SWAP):
            return 2
        if self is GateKind.CCX:
            return 3
        return 1

    @property
    def n_params(self) -> int:
        return 1 if self in (GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.RZZ) else 0


_GATE_BY_NAME = {k.value: k for k in GateKind}


# ---------------------------------------------------------------------------
# References and instructions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Register:
    name: str
    width: int


@dataclass(frozen=True)
class QubitRef:
    reg: int
    offset: int


@dataclass(frozen=True)
class ClbitRef:
    reg: int
    offset: int


@dataclass(frozen=True)
class ClassicalCond:
    """Equality test against a classical bit or a whole classical register.

    ``bit is None`` compares the full register value; otherwise the single
    bit at that offset.
    """

    creg: int
    bit: int | None
    value: int


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    params: tuple[float, ...]
    targets: tuple[QubitRef, ...]


@dataclass(frozen=True)
class Measure:
    qubit: QubitRef
    clbit: ClbitRef


@dataclass(frozen=True)
class Reset:
    qubit: QubitRef


@dataclass(frozen=True)
class IfTest:
    cond: ClassicalCond
    then_body: tuple["Instruction", ...]
    else_body: tuple["Instruction", ...] = ()


@dataclass(frozen=True)
class WhileLoop:
    cond: ClassicalCond
    body: tuple["Instruction", ...]


@dataclass(frozen=True)
class ForRange:
    count: int
    body: tuple["Instruction", ...]


@dataclass(frozen=True)
class Switch:
    creg: int
    bit: int | None
    cases: tuple[tuple[int, tuple["Instruction", ...]], ...]
    default_body: tuple["Instruction", ...] = ()


@dataclass(frozen=True)
class BreakLoop:
    pass


@dataclass(frozen=True)
class ContinueLoop:
    pass


@dataclass(frozen=True)
class ControlledOnInt:
    """Unitary block applied iff the control register pattern equals ``value``.

    ``controls[0]`` is the least-significant bit of the compared integer.
    The body is restricted to plain gates (no measurement, no control flow).
    """

    value: int
    controls: tuple[QubitRef, ...]
    body: tuple[Gate, ...]


Instruction = Union[
    Gate,
    Measure,
    Reset,
    IfTest,
    WhileLoop,
    ForRange,
    Switch,
    BreakLoop,
    ContinueLoop,
    ControlledOnInt,
]


# ---------------------------------------------------------------------------
# Dead regions
# ---------------------------------------------------------------------------

class PatternKind(Enum):
    IF_TEST_DEAD = "if_test_dead"
    WHILE_DEAD = "while_dead"
    SWITCH_DEAD = "switch_dead"
    FOR_ZERO = "for_zero"
    FOR_CONTINUE = "for_continue"
    FOR_BREAK = "for_break"
    CONTROLLED_ON_INT_DEAD = "controlled_on_int_dead"


class PatternCategory(Enum):
    INPUT_DEPENDENT = "input-dependent"
    INPUT_INDEPENDENT = "input-independent"


# A path step addresses one child block of an instruction: (index in the
# parent block, branch label). Branch labels: "then", "else", "body",
# "case<value>", "default".
Step = tuple[int, str]


@dataclass(frozen=True)
class Span:
    """A contiguous instruction slice ``block[start:stop]`` inside the tree."""

    block: tuple[Step, ...]
    start: int
    stop: int

    def shifted(self, prefix: tuple[Step, ...], offset: int) -> "Span":
        """Re-root the span under ``prefix`` with the first step/index offset."""
        if self.block:
            (i, br), rest = self.block[0], self.block[1:]
            return Span(prefix + ((i + offset, br),) + rest, self.start, self.stop)
        return Span(prefix, self.start + offset, self.stop + offset)


@dataclass(frozen=True)
class DeadRegion:
    id: int
    kind: PatternKind
    span: Span
    category: PatternCategory
    ancilla_qubits: tuple[QubitRef, ...] = ()
    ancilla_clbits: tuple[ClbitRef, ...] = ()


# ---------------------------------------------------------------------------
# Program
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Meta:
    n_qubits: int
    seed: int | None = None
    patterns: tuple[str, ...] = ()
    optimize: bool = True


@dataclass(frozen=True)
class Program:
    qregs: tuple[Register, ...]
    cregs: tuple[Register, ...] = ()
    body: tuple[Instruction, ...] = ()
    dead_regions: tuple[DeadRegion, ...] = ()
    meta: Meta | None = None

    def __post_init__(self) -> None:
        if self.meta is None:
            width = sum(r.width for r in self.qregs)
            object.__setattr__(self, "meta", Meta(n_qubits=width))

    @property
    def n_qubits(self) -> int:
        return sum(r.width for r in self.qregs)

    def qreg_index(self, name: str) -> int | None:
        for i, r in enumerate(self.qregs):
            if r.name == name:
                return i
        return None

    def creg_index(self, name: str) -> int | None:
        for i, r in enumerate(self.cregs):
            if r.name == name:
                return i
        return None

    def with_body(self, body: tuple[Instruction, ...]) -> "Program":
        return replace(self, body=body)


def child_blocks(ins: Instruction) -> list[tuple[str, tuple[Instruction, ...]]]:
    """Labelled child blocks of an instruction, in canonical order."""
    if isinstance(ins, IfTest):
        return [("then", ins.then_body), ("else", ins.else_body)]
    if isinstance(ins, (WhileLoop, ForRange)):
        return [("body", ins.body)]
    if isinstance(ins, Switch):
        out: list[tuple[str, tuple[Instruction, ...]]] = [
            (f"case{v}", b) for v, b in ins.cases
        ]
        out.append(("default", ins.default_body))
        return out
    if isinstance(ins, ControlledOnInt):
        return [("body", ins.body)]
    return []


def replace_child_block(
    ins: Instruction, label: str, new_block: tuple[Instruction, ...]
) -> Instruction:
    if isinstance(ins, IfTest):
        if label == "then":
            return replace(ins, then_body=new_block)
        if label == "else":
            return replace(ins, else_body=new_block)
    elif isinstance(ins, (WhileLoop, ForRange, ControlledOnInt)):
        if label == "body":
            return replace(ins, body=new_block)
    elif isinstance(ins, Switch):
        if label == "default":
            return replace(ins, default_body=new_block)
        if label.startswith("case"):
            value = int(label[4:])
            cases = tuple(
                (v, new_block if v == value else b) for v, b in ins.cases
            )
            return replace(ins, cases=cases)
    raise KeyError(f"no block {label!r} on {type(ins).__name__}")


def block_at(program: Program, block: tuple[Step, ...]) -> tuple[Instruction, ...]:
    """Resolve a block path to the instruction sequence it names."""
    cur = program.body
    for idx, label in block:
        ins = cur[idx]
        for lab, blk in child_blocks(ins):
            if lab == label:
                cur = blk
                break
        else:
            raise KeyError(f"no block {label!r} at index {idx}")
    return cur


def walk(
    body: tuple[Instruction, ...], block: tuple[Step, ...] = ()
) -> Iterator[tuple[tuple[Step, ...], int, Instruction]]:
    """Yield (block, index, instruction) over the whole tree, pre-order."""
    for i, ins in enumerate(body):
        yield block, i, ins
        for label, blk in child_blocks(ins):
            yield from walk(blk, block + ((i, label),))


def span_instruction_paths(program: Program, span: Span) -> list[tuple]:
    """All instruction paths inside a span, including nested bodies.

    These are the coverage-map keys that must stay at zero for a dead span.
    """
    out: list[tuple] = []

    def collect(body: tuple[Instruction, ...], steps: tuple) -> None:
        for i, ins in enumerate(body):
            out.append(steps + (i,))
            for label, blk in child_blocks(ins):
                collect(blk, steps + ((i, label),))

    blk = block_at(program, span.block)
    for i in range(span.start, span.stop):
        out.append(span.block + (i,))
        for label, sub in child_blocks(blk[i]):
            collect(sub, span.block + ((i, label),))
    return out


def format_path(path: tuple) -> str:  # type: ignore[type-arg]
    parts = []
    for step in path:
        if isinstance(step, tuple):
            parts.append(f"{step[0]}.{step[1]}")
        else:
            parts.append(str(step))
    return "[" + " / ".join(parts) + "]"


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def _check_qref(p: Program, q: QubitRef, path: tuple) -> None:  # type: ignore[type-arg]
    if not 0 <= q.reg < len(p.qregs):
        raise ValidationError(f"qubit register {q.reg} not declared", path)
    if not 0 <= q.offset < p.qregs[q.reg].width:
        raise ValidationError(
            f"qubit offset {q.offset} outside register {p.qregs[q.reg].name!r}", path
        )


def _check_cref(p: Program, c: ClbitRef, path: tuple) -> None:  # type: ignore[type-arg]
    if not 0 <= c.reg < len(p.cregs):
        raise ValidationError(f"classical register {c.reg} not declared", path)
    if not 0 <= c.offset < p.cregs[c.reg].width:
        raise ValidationError(
            f"clbit offset {c.offset} outside register {p.cregs[c.reg].name!r}", path
        )


def _check_cond(p: Program, creg: int, bit: int | None, value: int, path) -> None:
    if not 0 <= creg < len(p.cregs):
        raise ValidationError(f"classical register {creg} not declared", path)
    width = p.cregs[creg].width
    if bit is not None:
        if not 0 <= bit < width:
            raise ValidationError(f"condition bit {bit} outside register", path)
        width = 1
    if not 0 <= value < (1 << width):
        raise ValidationError(f"condition value {value} needs more than {width} bits", path)


def _check_gate(p: Program, g: Gate, path) -> None:
    if len(g.targets) != g.kind.arity:
        raise ValidationError(
            f"{g.kind.value} expects {g.kind.arity} targets, got {len(g.targets)}", path
        )
    if len(g.params) != g.kind.n_params:
        raise ValidationError(
            f"{g.kind.value} expects {g.kind.n_params} params, got {len(g.params)}", path
        )
    for a in g.params:
        if not isinstance(a, (int, float)) or isinstance(a, bool) or a != a:
            raise ValidationError(f"{g.kind.value} angle {a!r} is not a finite number", path)
    if len(set(g.targets)) != len(g.targets):
        raise ValidationError(f"{g.kind.value} targets must be distinct", path)
    for q in g.targets:
        _check_qref(p, q, path)


def _validate_block(p: Program, body: tuple[Instruction, ...], block, loop_depth: int) -> None:
    for i, ins in enumerate(body):
        path = block + (i,)
        if isinstance(ins, Gate):
            _check_gate(p, ins, path)
        elif isinstance(ins, Measure):
            _check_qref(p, ins.qubit, path)
            _check_cref(p, ins.clbit, path)
        elif isinstance(ins, Reset):
            _check_qref(p, ins.qubit, path)
        elif isinstance(ins, IfTest):
            _check_cond(p, ins.cond.creg, ins.cond.bit, ins.cond.value, path)
            _validate_block(p, ins.then_body, block + ((i, "then"),), loop_depth)
            _validate_block(p, ins.else_body, block + ((i, "else"),), loop_depth)
        elif isinstance(ins, WhileLoop):
            _check_cond(p, ins.cond.creg, ins.cond.bit, ins.cond.value, path)
            _validate_block(p, ins.body, block + ((i, "body"),), loop_depth + 1)
        elif isinstance(ins, ForRange):
            if ins.count < 0:
                raise ValidationError("for-range count must be non-negative", path)
            _validate_block(p, ins.body, block + ((i, "body"),), loop_depth + 1)
        elif isinstance(ins, Switch):
            values = [v for v, _ in ins.cases]
            if len(set(values)) != len(values):
                raise ValidationError("duplicate switch case values", path)
            for v in values:
                _check_cond(p, ins.creg, ins.bit, v, path)
            for v, b in ins.cases:
                _validate_block(p, b, block + ((i, f"case{v}"),), loop_depth)
            _validate_block(p, ins.default_body, block + ((i, "default"),), loop_depth)
        elif isinstance(ins, (BreakLoop, ContinueLoop)):
            if loop_depth == 0:
                kind = "break" if isinstance(ins, BreakLoop) else "continue"
                raise ValidationError(f"{kind} outside any loop", path)
        elif isinstance(ins, ControlledOnInt):
            if not ins.controls:
                raise ValidationError("controlled-on-int needs control qubits", path)
            if len(set(ins.controls)) != len(ins.controls):
                raise ValidationError("controlled-on-int controls must be distinct", path)
            for q in ins.controls:
                _check_qref(p, q, path)
            if not 0 <= ins.value < (1 << len(ins.controls)):
                raise ValidationError(
                    f"controlled-on-int value {ins.value} outside {len(ins.controls)}-bit range",
                    path,
                )
            for j, sub in enumerate(ins.body):
                if not isinstance(sub, Gate):
                    raise ValidationError(
                        "controlled-on-int body must contain only gates",
                        block + ((i, "body"), j),
                    )
                _check_gate(p, sub, block + ((i, "body"), j))
                if set(sub.targets) & set(ins.controls):
                    raise ValidationError(
                        "controlled-on-int body may not touch its controls",
                        block + ((i, "body"), j),
                    )
        else:
            raise ValidationError(f"unknown instruction {type(ins).__name__}", path)


def _span_key(s: Span) -> tuple:
    return (s.block, s.start, s.stop)


def _spans_nested(outer: Span, inner: Span) -> bool:
    """True iff ``inner`` lies strictly inside ``outer``'s subtree."""
    if len(inner.block) <= len(outer.block):
        return False
    if inner.block[: len(outer.block)] != outer.block:
        return False
    idx = inner.block[len(outer.block)][0]
    return outer.start <= idx < outer.stop


def _spans_disjoint(a: Span, b: Span) -> bool:
    if a.block == b.block:
        return a.stop <= b.start or b.stop <= a.start
    # Distinct blocks: disjoint unless one path runs through the other's range.
    return not (_spans_nested(a, b) or _spans_nested(b, a))


def _check_regions(p: Program) -> None:
    seen_ids = set()
    for r in p.dead_regions:
        if r.id in seen_ids:
            raise ValidationError(f"duplicate dead-region id {r.id}")
        seen_ids.add(r.id)
        try:
            blk = block_at(p, r.span.block)
        except (KeyError, IndexError):
            raise ValidationError(f"dead region {r.id} addresses a missing block")
        if not (0 <= r.span.start <= r.span.stop <= len(blk)):
            raise ValidationError(f"dead region {r.id} range outside its block")
        for q in r.ancilla_qubits:
            _check_qref(p, q, ())
        for c in r.ancilla_clbits:
            _check_cref(p, c, ())
    regions = list(p.dead_regions)
    for i in range(len(regions)):
        for j in range(i + 1, len(regions)):
            a, b = regions[i].span, regions[j].span
            if not (_spans_disjoint(a, b) or _spans_nested(a, b) or _spans_nested(b, a)):
                raise ValidationError(
                    f"dead regions {regions[i].id} and {regions[j].id} overlap"
                )


def validate(program: Program) -> None:
    """Check every structural invariant; raise :class:`ValidationError` otherwise.

    Total by contract: any defect in the value, including wrong field types
    smuggled past the dataclasses, surfaces as a ValidationError.
    """
    try:
        names = [r.name for r in program.qregs] + [r.name for r in program.cregs]
        if len(set(names)) != len(names):
            raise ValidationError("register names must be unique")
        for r in list(program.qregs) + list(program.cregs):
            if r.width < 1:
                raise ValidationError(f"register {r.name!r} must have positive width")
            if not r.name or not r.name.replace("_", "").isalnum() or r.name[0].isdigit():
                raise ValidationError(f"invalid register name {r.name!r}")
        _validate_block(program, program.body, (), 0)
        _check_regions(program)
    except ValidationError:
        raise
    except Exception as exc:  # malformed values, not a crash
        raise ValidationError(f"malformed program value: {exc}") from exc


# ---------------------------------------------------------------------------
# Text format (.qir-txt)
# ---------------------------------------------------------------------------

_FORMAT_HEADER = "qir-txt 1"


def _fmt_angle(x: float) -> str:
    return repr(float(x))


def _fmt_qubit(p: Program, q: QubitRef) -> str:
    return f"{p.qregs[q.reg].name}[{q.offset}]"


def _fmt_clbit(p: Program, c: ClbitRef) -> str:
    return f"{p.cregs[c.reg].name}[{c.offset}]"


def _fmt_cond(p: Program, creg: int, bit: int | None, value: int) -> str:
    subject = p.cregs[creg].name if bit is None else f"{p.cregs[creg].name}[{bit}]"
    return f"{subject} == {value}"


def _region_marker(p: Program, r: DeadRegion) -> str:
    parts = [
        f"#dead start {r.id}",
        f"kind={r.kind.value}",
        f"category={r.category.value}",
    ]
    if r.ancilla_qubits:
        parts.append("ancq=" + ",".join(_fmt_qubit(p, q) for q in r.ancilla_qubits))
    if r.ancilla_clbits:
        parts.append("ancc=" + ",".join(_fmt_clbit(p, c) for c in r.ancilla_clbits))
    return " ".join(parts)


def _emit_block(
    p: Program,
    body: tuple[Instruction, ...],
    block: tuple[Step, ...],
    indent: int,
    starts: dict,
    stops: dict,
    out: list[str],
) -> None:
    pad = "  " * indent
    for i in range(len(body) + 1):
        for r in starts.get((block, i), ()):
            out.append(pad + _region_marker(p, r))
        for r in stops.get((block, i), ()):
            out.append(pad + f"#dead end {r.id}")
        if i == len(body):
            break
        ins = body[i]
        if isinstance(ins, Gate):
            head = ins.kind.value
            if ins.params:
                head += "(" + ", ".join(_fmt_angle(a) for a in ins.params) + ")"
            out.append(pad + head + " " + " ".join(_fmt_qubit(p, q) for q in ins.targets))
        elif isinstance(ins, Measure):
            out.append(pad + f"measure {_fmt_qubit(p, ins.qubit)} -> {_fmt_clbit(p, ins.clbit)}")
        elif isinstance(ins, Reset):
            out.append(pad + f"reset {_fmt_qubit(p, ins.qubit)}")
        elif isinstance(ins, IfTest):
            out.append(pad + f"if {_fmt_cond(p, ins.cond.creg, ins.cond.bit, ins.cond.value)} {{")
            _emit_block(p, ins.then_body, block + ((i, "then"),), indent + 1, starts, stops, out)
            if ins.else_body or any(
                key[0][: len(block) + 1] == block + ((i, "else"),)
                for key in list(starts) + list(stops)
            ):
                out.append(pad + "} else {")
                _emit_block(p, ins.else_body, block + ((i, "else"),), indent + 1, starts, stops, out)
            out.append(pad + "}")
        elif isinstance(ins, WhileLoop):
            out.append(pad + f"while {_fmt_cond(p, ins.cond.creg, ins.cond.bit, ins.cond.value)} {{")
            _emit_block(p, ins.body, block + ((i, "body"),), indent + 1, starts, stops, out)
            out.append(pad + "}")
        elif isinstance(ins, ForRange):
            out.append(pad + f"for {ins.count} {{")
            _emit_block(p, ins.body, block + ((i, "body"),), indent + 1, starts, stops, out)
            out.append(pad + "}")
        elif isinstance(ins, Switch):
            subject = p.cregs[ins.creg].name if ins.bit is None else f"{p.cregs[ins.creg].name}[{ins.bit}]"
            out.append(pad + f"switch {subject} {{")
            for v, b in ins.cases:
                out.append(pad + f"  case {v} {{")
                _emit_block(p, b, block + ((i, f"case{v}"),), indent + 2, starts, stops, out)
                out.append(pad + "  }")
            if ins.default_body:
                out.append(pad + "  default {")
                _emit_block(p, ins.default_body, block + ((i, "default"),), indent + 2, starts, stops, out)
                out.append(pad + "  }")
            out.append(pad + "}")
        elif isinstance(ins, BreakLoop):
            out.append(pad + "break")
        elif isinstance(ins, ContinueLoop):
            out.append(pad + "continue")
        elif isinstance(ins, ControlledOnInt):
            ctrls = " ".join(_fmt_qubit(p, q) for q in ins.controls)
            out.append(pad + f"ctrl_on_int {ins.value} {ctrls} {{")
            _emit_block(p, ins.body, block + ((i, "body"),), indent + 1, starts, stops, out)
            out.append(pad + "}")
        else:
            raise ValidationError(f"cannot serialize {type(ins).__name__}")


def serialize(program: Program) -> str:
    """Render the canonical text form. Deterministic for equal programs."""
    p = program
    out = [_FORMAT_HEADER]
    for r in p.qregs:
        out.append(f"qreg {r.name} {r.width}")
    for r in p.cregs:
        out.append(f"creg {r.name} {r.width}")
    meta = p.meta
    assert meta is not None
    out.append(f"meta n_qubits {meta.n_qubits}")
    if meta.seed is not None:
        out.append(f"meta seed {meta.seed}")
    if meta.patterns:
        out.append("meta patterns " + ",".join(meta.patterns))
    if not meta.optimize:
        out.append("meta optimize 0")
    starts: dict = {}
    stops: dict = {}
    for r in p.dead_regions:
        starts.setdefault((r.span.block, r.span.start), []).append(r)
        stops.setdefault((r.span.block, r.span.stop), []).insert(0, r)
    _emit_block(p, p.body, (), 0, starts, stops, out)
    return "\n".join(out) + "\n"


class _Parser:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.pos = 0
        self.qregs: list[Register] = []
        self.cregs: list[Register] = []
        self.qnames: dict[str, int] = {}
        self.cnames: dict[str, int] = {}
        self.meta: dict[str, object] = {}
        self.regions: list[dict] = []
        self.open_regions: list[dict] = []

    def error(self, msg: str, col: int = 1) -> ParseError:
        return ParseError(msg, self.pos, col)

    def next_line(self) -> str | None:
        while self.pos < len(self.lines):
            raw = self.lines[self.pos]
            self.pos += 1
            line = raw.strip()
            if line:
                return line
        return None

    def parse_qubit(self, tok: str) -> QubitRef:
        name, off = self._split_ref(tok)
        if name not in self.qnames:
            raise self.error(f"undeclared quantum register {name!r}")
        return QubitRef(self.qnames[name], off)

    def parse_clbit(self, tok: str) -> ClbitRef:
        name, off = self._split_ref(tok)
        if name not in self.cnames:
            raise self.error(f"undeclared classical register {name!r}")
        return ClbitRef(self.cnames[name], off)

    def _split_ref(self, tok: str):
        if not tok.endswith("]") or "[" not in tok:
            raise self.error(f"expected reg[offset], got {tok!r}")
        name, rest = tok.split("[", 1)
        try:
            off = int(rest[:-1])
        except ValueError:
            raise self.error(f"bad offset in {tok!r}") from None
        return name, off

    def parse_subject(self, tok: str) -> tuple[int, int | None]:
        if "[" in tok:
            c = self.parse_clbit(tok)
            return c.reg, c.offset
        if tok not in self.cnames:
            raise self.error(f"undeclared classical register {tok!r}")
        return self.cnames[tok], None

    def parse_cond(self, text: str) -> ClassicalCond:
        parts = text.split("==")
        if len(parts) != 2:
            raise self.error(f"expected '<subject> == <value>', got {text!r}")
        creg, bit = self.parse_subject(parts[0].strip())
        try:
            value = int(parts[1].strip())
        except ValueError:
            raise self.error(f"bad condition value {parts[1].strip()!r}") from None
        return ClassicalCond(creg, bit, value)

    def parse_region_start(self, line: str) -> None:
        toks = line.split()
        try:
            rid = int(toks[2])
        except (IndexError, ValueError):
            raise self.error("bad dead-region start marker") from None
        attrs = {"id": rid, "ancq": (), "ancc": ()}
        for tok in toks[3:]:
            if "=" not in tok:
                raise self.error(f"bad region attribute {tok!r}")
            key, val = tok.split("=", 1)
            if key == "kind":
                try:
                    attrs["kind"] = PatternKind(val)
                except ValueError:
                    raise self.error(f"unknown pattern kind {val!r}") from None
            elif key == "category":
                try:
                    attrs["category"] = PatternCategory(val)
                except ValueError:
                    raise self.error(f"unknown category {val!r}") from None
            elif key == "ancq":
                attrs["ancq"] = tuple(self.parse_qubit(t) for t in val.split(",") if t)
            elif key == "ancc":
                attrs["ancc"] = tuple(self.parse_clbit(t) for t in val.split(",") if t)
            else:
                raise self.error(f"unknown region attribute {key!r}")
        if "kind" not in attrs or "category" not in attrs:
            raise self.error("dead-region marker needs kind= and category=")
        self.open_regions.append(attrs)

    def parse_block(self, block: tuple[Step, ...], terminators: tuple[str, ...]):
        """Parse instructions until one of ``terminators``; returns (body, term)."""
        body: list[Instruction] = []
        while True:
            line = self.next_line()
            if line is None:
                if terminators == ("<eof>",):
                    return tuple(body), "<eof>"
                raise self.error("unexpected end of input; unclosed block")
            if line.startswith("#dead start"):
                self.parse_region_start(line)
                attrs = self.open_regions[-1]
                attrs["block"] = block
                attrs["start"] = len(body)
                continue
            if line.startswith("#dead end"):
                toks = line.split()
                try:
                    rid = int(toks[2])
                except (IndexError, ValueError):
                    raise self.error("bad dead-region end marker") from None
                if not self.open_regions or self.open_regions[-1]["id"] != rid:
                    raise self.error(f"mismatched dead-region end {rid}")
                attrs = self.open_regions.pop()
                if attrs["block"] != block:
                    raise self.error(f"dead region {rid} crosses a block boundary")
                attrs["stop"] = len(body)
                self.regions.append(attrs)
                continue
            if line.startswith("#"):
                raise self.error(f"unknown directive {line!r}")
            if line in terminators:
                return tuple(body), line
            body.append(self.parse_instruction(line, block, len(body)))

    def parse_instruction(self, line: str, block, index: int) -> Instruction:
        toks = line.split()
        head = toks[0]
        if head == "measure":
            if len(toks) != 4 or toks[2] != "->":
                raise self.error("expected 'measure q[i] -> c[j]'")
            return Measure(self.parse_qubit(toks[1]), self.parse_clbit(toks[3]))
        if head == "reset":
            if len(toks) != 2:
                raise self.error("expected 'reset q[i]'")
            return Reset(self.parse_qubit(toks[1]))
        if head == "break":
            return BreakLoop()
        if head == "continue":
            return ContinueLoop()
        if head == "if":
            if not line.endswith("{"):
                raise self.error("expected '{' to open if body")
            cond = self.parse_cond(line[2:-1].strip())
            then_body, term = self.parse_block(block + ((index, "then"),), ("}", "} else {"))
            else_body: tuple[Instruction, ...] = ()
            if term == "} else {":
                else_body, _ = self.parse_block(block + ((index, "else"),), ("}",))
            return IfTest(cond, then_body, else_body)
        if head == "while":
            if not line.endswith("{"):
                raise self.error("expected '{' to open while body")
            cond = self.parse_cond(line[5:-1].strip())
            body, _ = self.parse_block(block + ((index, "body"),), ("}",))
            return WhileLoop(cond, body)
        if head == "for":
            if len(toks) != 3 or toks[2] != "{":
                raise self.error("expected 'for <count> {'")
            try:
                count = int(toks[1])
            except ValueError:
                raise self.error(f"bad loop count {toks[1]!r}") from None
            body, _ = self.parse_block(block + ((index, "body"),), ("}",))
            return ForRange(count, body)
        if head == "switch":
            if len(toks) != 3 or toks[2] != "{":
                raise self.error("expected 'switch <subject> {'")
            creg, bit = self.parse_subject(toks[1])
            cases: list[tuple[int, tuple[Instruction, ...]]] = []
            default: tuple[Instruction, ...] = ()
            while True:
                sub = self.next_line()
                if sub is None:
                    raise self.error("unclosed switch")
                if sub == "}":
                    break
                stoks = sub.split()
                if stoks[0] == "case" and len(stoks) == 3 and stoks[2] == "{":
                    try:
                        v = int(stoks[1])
                    except ValueError:
                        raise self.error(f"bad case value {stoks[1]!r}") from None
                    cbody, _ = self.parse_block(block + ((index, f"case{v}"),), ("}",))
                    cases.append((v, cbody))
                elif sub == "default {":
                    default, _ = self.parse_block(block + ((index, "default"),), ("}",))
                else:
                    raise self.error(f"expected case/default inside switch, got {sub!r}")
            return Switch(creg, bit, tuple(cases), default)
        if head == "ctrl_on_int":
            if len(toks) < 4 or toks[-1] != "{":
                raise self.error("expected 'ctrl_on_int <value> <controls...> {'")
            try:
                value = int(toks[1])
            except ValueError:
                raise self.error(f"bad control value {toks[1]!r}") from None
            controls = tuple(self.parse_qubit(t) for t in toks[2:-1])
            body, _ = self.parse_block(block + ((index, "body"),), ("}",))
            gates = []
            for sub in body:
                if not isinstance(sub, Gate):
                    raise self.error("ctrl_on_int body must contain only gates")
                gates.append(sub)
            return ControlledOnInt(value, controls, tuple(gates))
        # gate form: name[(params)] targets...
        name, params = head, ()
        if "(" in head:
            if not head.endswith(")"):
                raise self.error(f"bad gate parameter list in {head!r}")
            name, ptext = head.split("(", 1)
            try:
                params = tuple(float(x) for x in ptext[:-1].split(",") if x.strip())
            except ValueError:
                raise self.error(f"bad gate parameters in {head!r}") from None
        if name not in _GATE_BY_NAME:
            raise self.error(f"unknown instruction {name!r}")
        targets = tuple(self.parse_qubit(t) for t in toks[1:])
        return Gate(_GATE_BY_NAME[name], params, targets)


def deserialize(text: str) -> Program:
    """Parse the canonical text form back into a :class:`Program`."""
    parser = _Parser(text)
    header = parser.next_line()
    if header != _FORMAT_HEADER:
        raise parser.error(f"expected header {_FORMAT_HEADER!r}")
    # declarations and meta, then body
    body_lines_start = None
    while True:
        save = parser.pos
        line = parser.next_line()
        if line is None:
            break
        toks = line.split()
        if toks[0] == "qreg" and len(toks) == 3:
            name, width = toks[1], toks[2]
            if parser.cregs:
                raise parser.error("quantum registers must precede classical ones")
            try:
                w = int(width)
            except ValueError:
                raise parser.error(f"bad register width {width!r}") from None
            if name in parser.qnames or name in parser.cnames:
                raise parser.error(f"duplicate register {name!r}")
            parser.qnames[name] = len(parser.qregs)
            parser.qregs.append(Register(name, w))
        elif toks[0] == "creg" and len(toks) == 3:
            name, width = toks[1], toks[2]
            try:
                w = int(width)
            except ValueError:
                raise parser.error(f"bad register width {width!r}") from None
            if name in parser.qnames or name in parser.cnames:
                raise parser.error(f"duplicate register {name!r}")
            parser.cnames[name] = len(parser.cregs)
            parser.cregs.append(Register(name, w))
        elif toks[0] == "meta" and len(toks) >= 3:
            key = toks[1]
            val = line.split(None, 2)[2]
            if key in ("n_qubits", "seed"):
                try:
                    parser.meta[key] = int(val)
                except ValueError:
                    raise parser.error(f"bad meta value {val!r}") from None
            elif key == "patterns":
                parser.meta["patterns"] = tuple(v for v in val.split(",") if v)
            elif key == "optimize":
                parser.meta["optimize"] = val.strip() != "0"
            else:
                raise parser.error(f"unknown meta key {key!r}")
        else:
            body_lines_start = save
            break
    if body_lines_start is not None:
        parser.pos = body_lines_start
    body, _ = parser.parse_block((), ("<eof>",))
    if parser.open_regions:
        raise parser.error(f"unterminated dead region {parser.open_regions[-1]['id']}")
    meta = Meta(
        n_qubits=int(parser.meta.get("n_qubits", sum(r.width for r in parser.qregs))),
        seed=parser.meta.get("seed"),  # type: ignore[arg-type]
        patterns=parser.meta.get("patterns", ()),  # type: ignore[arg-type]
        optimize=bool(parser.meta.get("optimize", True)),
    )
    regions = []
    for attrs in sorted(parser.regions, key=lambda a: a["id"]):
        regions.append(
            DeadRegion(
                id=attrs["id"],
                kind=attrs["kind"],
                span=Span(attrs["block"], attrs["start"], attrs["stop"]),
                category=attrs["category"],
                ancilla_qubits=attrs["ancq"],
                ancilla_clbits=attrs["ancc"],
            )
        )
    program = Program(
        qregs=tuple(parser.qregs),
        cregs=tuple(parser.cregs),
        body=body,
        dead_regions=tuple(regions),
        meta=meta,
    )
    try:
        validate(program)
    except ValidationError as exc:
        raise ParseError(f"parsed program fails validation: {exc}", parser.pos) from exc
    return program
