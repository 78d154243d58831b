"""IR structure, validation, and text-format round-trips."""
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emifuzz.generator import GenConfig, generate
from emifuzz.ir import (
    BreakLoop,
    ClassicalCond,
    ClbitRef,
    ControlledOnInt,
    ForRange,
    Gate,
    GateKind,
    IfTest,
    Measure,
    ParseError,
    Program,
    QubitRef,
    Register,
    Span,
    ValidationError,
    deserialize,
    serialize,
    validate,
)


def q(i):
    return QubitRef(0, i)


def c(i):
    return ClbitRef(0, i)


def minimal_program():
    return Program(
        qregs=(Register("q", 1),),
        cregs=(Register("c", 1),),
        body=(Gate(GateKind.H, (), (q(0),)), Measure(q(0), c(0))),
    )


class TestValidate:
    def test_minimal_program_ok(self):
        validate(minimal_program())

    def test_break_at_top_level_rejected(self):
        p = Program(qregs=(Register("q", 1),), body=(BreakLoop(),))
        with pytest.raises(ValidationError) as exc:
            validate(p)
        assert exc.value.path == (0,)

    def test_break_inside_loop_ok(self):
        p = Program(
            qregs=(Register("q", 1),),
            body=(ForRange(3, (BreakLoop(),)),),
        )
        validate(p)

    def test_break_transitively_inside_loop_ok(self):
        p = Program(
            qregs=(Register("q", 1),),
            cregs=(Register("c", 1),),
            body=(
                ForRange(
                    3,
                    (IfTest(ClassicalCond(0, None, 1), (BreakLoop(),), ()),),
                ),
            ),
        )
        validate(p)

    def test_controlled_on_int_value_boundary(self):
        ctrl = tuple(QubitRef(1, i) for i in range(3))
        base = dict(
            qregs=(Register("q", 1), Register("ctrl", 3)),
            cregs=(),
        )
        ok = Program(
            body=(ControlledOnInt(7, ctrl, (Gate(GateKind.X, (), (q(0),)),)),), **base
        )
        validate(ok)
        bad = Program(
            body=(ControlledOnInt(8, ctrl, (Gate(GateKind.X, (), (q(0),)),)),), **base
        )
        with pytest.raises(ValidationError):
            validate(bad)

    def test_controlled_on_int_body_gates_only(self):
        ctrl = (QubitRef(1, 0),)
        p = Program(
            qregs=(Register("q", 1), Register("ctrl", 1)),
            cregs=(Register("c", 1),),
            body=(ControlledOnInt(1, ctrl, (Measure(q(0), c(0)),)),),
        )
        with pytest.raises(ValidationError):
            validate(p)

    def test_gate_arity_mismatch(self):
        p = Program(
            qregs=(Register("q", 2),),
            body=(Gate(GateKind.CX, (), (q(0),)),),
        )
        with pytest.raises(ValidationError):
            validate(p)

    def test_rotation_needs_exactly_one_angle(self):
        p = Program(qregs=(Register("q", 1),), body=(Gate(GateKind.RZ, (), (q(0),)),))
        with pytest.raises(ValidationError):
            validate(p)

    def test_duplicate_targets_rejected(self):
        p = Program(
            qregs=(Register("q", 2),),
            body=(Gate(GateKind.CX, (), (q(0), q(0))),),
        )
        with pytest.raises(ValidationError):
            validate(p)

    def test_undeclared_register_rejected(self):
        p = Program(qregs=(Register("q", 1),), body=(Gate(GateKind.X, (), (QubitRef(3, 0),)),))
        with pytest.raises(ValidationError):
            validate(p)

    def test_cond_value_outside_width(self):
        p = Program(
            qregs=(Register("q", 1),),
            cregs=(Register("c", 2),),
            body=(IfTest(ClassicalCond(0, None, 4), (), ()),),
        )
        with pytest.raises(ValidationError):
            validate(p)

    def test_overlapping_regions_rejected(self):
        from emifuzz.ir import DeadRegion, PatternCategory, PatternKind

        body = (ForRange(0, (Gate(GateKind.X, (), (q(0),)),)),)
        mk = lambda rid, start, stop: DeadRegion(
            rid,
            PatternKind.FOR_ZERO,
            Span(((0, "body"),), start, stop),
            PatternCategory.INPUT_INDEPENDENT,
        )
        p = Program(
            qregs=(Register("q", 1),),
            body=body,
            dead_regions=(mk(0, 0, 1), mk(1, 0, 1)),
        )
        with pytest.raises(ValidationError):
            validate(p)

    def test_validate_is_total_on_junk(self):
        # wrong payload types must surface as ValidationError, not random crashes
        p = Program(
            qregs=(Register("q", 1),),
            body=(Gate(GateKind.RZ, ("spin",), (q(0),)),),  # type: ignore[arg-type]
        )
        with pytest.raises(ValidationError):
            validate(p)


class TestTextFormat:
    def test_empty_program_is_three_lines(self):
        p = Program(qregs=(Register("q", 1),))
        text = serialize(p)
        assert text == "qir-txt 1\nqreg q 1\nmeta n_qubits 1\n"
        assert serialize(p) == text  # stable across calls

    def test_round_trip_minimal(self):
        p = minimal_program()
        assert deserialize(serialize(p)) == p

    def test_round_trip_if_test_dead_shape(self):
        # ancilla prepared to one, measured, dead then-branch marked
        from emifuzz.deadcode import AllocContext, instantiate
        from emifuzz.ir import PatternKind
        import numpy as np

        qregs = [Register("q", 1)]
        cregs = [Register("result", 1)]
        ctx = AllocContext(qregs, cregs, (q(0),))
        frag, region = instantiate(
            PatternKind.IF_TEST_DEAD,
            [Gate(GateKind.X, (), (q(0),))],
            ctx,
            np.random.default_rng(0),
        )
        p = Program(
            qregs=tuple(qregs),
            cregs=tuple(cregs),
            body=tuple(frag) + (Measure(q(0), ClbitRef(0, 0)),),
            dead_regions=(region,),
        )
        validate(p)
        text = serialize(p)
        assert "#dead start 0" in text and "#dead end 0" in text
        assert deserialize(text) == p

    def test_undeclared_register_parse_error(self):
        text = "qir-txt 1\nqreg q 1\nmeta n_qubits 1\nx bogus[0]\n"
        with pytest.raises(ParseError) as exc:
            deserialize(text)
        assert exc.value.line == 4

    def test_bad_header_rejected(self):
        with pytest.raises(ParseError):
            deserialize("qasm 2\n")

    def test_unbalanced_block_rejected(self):
        text = "qir-txt 1\nqreg q 1\ncreg c 1\nif c == 0 {\nx q[0]\n"
        with pytest.raises(ParseError):
            deserialize(text)

    def test_angles_round_trip_exactly(self):
        p = Program(
            qregs=(Register("q", 2),),
            body=(
                Gate(GateKind.RZZ, (5.86706,), (q(0), q(1))),
                Gate(GateKind.RX, (0.1 + 0.2,), (q(0),)),
            ),
        )
        assert "rzz(5.86706)" in serialize(p)
        assert deserialize(serialize(p)) == p

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 5), depth=st.integers(1, 14))
    def test_round_trip_generated(self, seed, n, depth):
        p = generate(GenConfig(n_qubits=n, depth=depth, seed=seed))
        text = serialize(p)
        assert deserialize(text) == p
        assert serialize(deserialize(text)) == text


class TestSpans:
    def test_shifted_reroots_block_paths(self):
        s = Span(((2, "then"),), 0, 3)
        out = s.shifted((), 5)
        assert out == Span(((7, "then"),), 0, 3)

    def test_shifted_offsets_root_ranges(self):
        s = Span((), 1, 3)
        out = s.shifted(((4, "body"),), 2)
        assert out == Span(((4, "body"),), 3, 5)

    def test_dead_region_spans_form_forest(self):
        # generated programs keep regions disjoint-or-nested by construction
        for seed in range(10):
            p = generate(GenConfig(n_qubits=4, depth=8, seed=seed, max_regions=3))
            validate(p)  # includes the pairwise forest check
