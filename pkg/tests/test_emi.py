"""Variant derivation and exact semantic preservation."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emifuzz.deadcode import AllocContext, instantiate
from emifuzz.emi import check_equivalence_exact, derive_variant
from emifuzz.generator import GenConfig, generate
from emifuzz.ir import (
    ClbitRef,
    ControlledOnInt,
    Gate,
    GateKind,
    IfTest,
    Measure,
    PatternKind,
    Program,
    QubitRef,
    Register,
    validate,
    walk,
)


def q(i):
    return QubitRef(0, i)


class TestDeriveVariant:
    def test_no_regions_identity(self):
        p = Program(
            qregs=(Register("q", 1),),
            cregs=(Register("c", 1),),
            body=(Gate(GateKind.H, (), (q(0),)), Measure(q(0), ClbitRef(0, 0))),
        )
        assert derive_variant(p) == p

    def test_controlled_on_int_whole_node_removed(self):
        # the control register allocation survives, the call disappears
        qregs = [Register("q", 2)]
        cregs = [Register("result", 2)]
        ctx = AllocContext(qregs, cregs, (q(0), q(1)))
        frag, region = instantiate(
            PatternKind.CONTROLLED_ON_INT_DEAD,
            [Gate(GateKind.RZZ, (5.86706,), (q(0), q(1)))],
            ctx,
            np.random.default_rng(4),
        )
        p = Program(
            qregs=tuple(qregs),
            cregs=tuple(cregs),
            body=tuple(frag)
            + (Measure(q(0), ClbitRef(0, 0)), Measure(q(1), ClbitRef(0, 1))),
            dead_regions=(region,),
        )
        v = derive_variant(p)
        assert v.qregs == p.qregs  # ctrl register kept
        assert not any(isinstance(ins, ControlledOnInt) for _, _, ins in walk(v.body))
        assert not v.dead_regions

    def test_emptied_if_node_retained(self):
        qregs = [Register("q", 2)]
        cregs = [Register("result", 2)]
        ctx = AllocContext(qregs, cregs, (q(0), q(1)))
        frag, region = instantiate(
            PatternKind.IF_TEST_DEAD,
            [Gate(GateKind.X, (), (q(0),))],
            ctx,
            np.random.default_rng(2),
        )
        p = Program(
            qregs=tuple(qregs),
            cregs=tuple(cregs),
            body=tuple(frag),
            dead_regions=(region,),
        )
        v = derive_variant(p)
        nodes = [ins for ins in v.body if isinstance(ins, IfTest)]
        assert len(nodes) == 1
        assert nodes[0].then_body == ()  # dead branch emptied
        assert nodes[0].else_body != ()  # live branch kept

    def test_nested_regions_all_removed_scaffolding_kept(self):
        for seed in range(30):
            p = generate(
                GenConfig(n_qubits=4, depth=8, seed=seed, max_nesting=3, max_regions=2)
            )
            v = derive_variant(p)
            validate(v)
            assert not v.dead_regions
            assert v.qregs == p.qregs and v.cregs == p.cregs

    def test_monotone_shrinkage(self):
        def count(p):
            return sum(1 for _ in walk(p.body))

        for seed in range(15):
            p = generate(GenConfig(n_qubits=4, depth=8, seed=seed))
            v = derive_variant(p)
            assert count(v) < count(p)  # every program carries >= 1 region

    def test_idempotent(self):
        for seed in range(10):
            p = generate(GenConfig(n_qubits=4, depth=8, seed=seed))
            v = derive_variant(p)
            assert derive_variant(v) == v

    def test_live_dead_separation_structural(self):
        # exactly the marked instructions disappear: nothing live is lost
        from emifuzz.ir import span_instruction_paths

        for seed in range(25):
            p = generate(
                GenConfig(n_qubits=4, depth=8, seed=seed, max_nesting=3, max_regions=2)
            )
            v = derive_variant(p)
            removed = set()
            for region in p.dead_regions:
                removed.update(span_instruction_paths(p, region.span))
            # whole-call removal of emptied controlled blocks adds the node
            # itself when no enclosing region already covers it
            for region in p.dead_regions:
                if region.kind is PatternKind.CONTROLLED_ON_INT_DEAD:
                    block = region.span.block
                    node_path = block[:-1] + (block[-1][0],)
                    if node_path not in removed:
                        removed.add(node_path)
            n_before = sum(1 for _ in walk(p.body))
            n_after = sum(1 for _ in walk(v.body))
            assert n_before - n_after == len(removed), p.meta.seed


class TestExactEquivalence:
    def test_reflexive_zero(self):
        p = generate(GenConfig(n_qubits=3, depth=6, seed=0))
        assert check_equivalence_exact(p, p, limit=12) == 0.0

    def test_removing_live_gate_detected(self):
        p = Program(
            qregs=(Register("q", 1),),
            cregs=(Register("c", 1),),
            body=(Gate(GateKind.X, (), (q(0),)), Measure(q(0), ClbitRef(0, 0))),
        )
        broken = p.with_body((Measure(q(0), ClbitRef(0, 0)),))
        assert check_equivalence_exact(p, broken, limit=4) == pytest.approx(1.0)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_variant_preserves_distribution(self, seed):
        p = generate(GenConfig(n_qubits=4, depth=8, seed=seed))
        v = derive_variant(p)
        assert check_equivalence_exact(p, v, limit=12) <= 1e-9
