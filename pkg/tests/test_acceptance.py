"""Acceptance criteria, one test per criterion with stated tolerances.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS/FAIL
line per criterion. The statistical experiments use fixed seeds so the
whole module is deterministic.
"""
import time

import pytest

from emifuzz.checker import budget, early_stop_compare, hellinger, speedup_ratio
from emifuzz.emi import derive_variant
from emifuzz.generator import GenConfig, generate
from emifuzz.harness import CampaignConfig, run_campaign
from emifuzz.ir import PatternCategory, PatternKind, span_instruction_paths
from emifuzz.passes import CORRECT_PASSES, Pipeline
from emifuzz.rng import derive_seed
from emifuzz.simulator import EnumCaps, enumerate_distribution, run


def criterion(name: str, ok: bool, detail: str = "") -> None:
    print(f"\n[ACCEPTANCE] {'PASS' if ok else 'FAIL'} {name}" + (f" ({detail})" if detail else ""))
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------
# Shared corpora (module-scoped so several criteria reuse one computation)
# ---------------------------------------------------------------------------

CORPUS_SIZE = 200


@pytest.fixture(scope="module")
def corpus():
    """200 programs, 3..5 data qubits, nesting up to 3, every pattern kind."""
    programs = []
    for i in range(CORPUS_SIZE):
        cfg = GenConfig(
            n_qubits=3 + i % 3,
            depth=8,
            seed=derive_seed(1234, "corpus", i),
            max_nesting=3,
            max_regions=2,
            max_total_qubits=9,
        )
        programs.append(generate(cfg))
    kinds = {r.kind for p in programs for r in p.dead_regions}
    assert kinds == set(PatternKind), f"corpus misses kinds: {set(PatternKind) - kinds}"
    assert any(
        len(p.dead_regions) >= 3 for p in programs
    ), "corpus never reached nesting depth 3"
    return programs


@pytest.fixture(scope="module")
def early_stop_experiment():
    """500 equivalent pairs at n=6, early-stopped with the Table-4 budget."""
    b = budget(0.1, 6)
    shots_used = []
    failures = 0
    for i in range(500):
        cfg = GenConfig(n_qubits=6, depth=12, seed=derive_seed(99, "pair", i))
        p = generate(cfg)
        v = derive_variant(p)

        def sampler(prog, side):
            state = {"round": 0}

            def draw(n):
                seed = derive_seed(99, "exec", i, side, state["round"])
                state["round"] += 1
                out, _ = run(prog, n, seed)
                assert out.ok, out.error
                return out.counts

            return draw

        r = early_stop_compare(sampler(p, 0), sampler(v, 1), b)
        if not r.equivalent:
            failures += 1
        shots_used.append(r.total_shots)
    return b, shots_used, failures


# ---------------------------------------------------------------------------
# Criteria
# ---------------------------------------------------------------------------

def test_budget_reproduces_reference_tables():
    b6 = budget(0.1, 6)
    ok6 = (b6.s_round, b6.s_std, b6.s_max) == (476, 2263, 4526)
    multiples6 = [k * b6.s_round for k in range(2, 10)]
    ok6m = multiples6 == [952, 1428, 1904, 2380, 2856, 3332, 3808, 4284]
    ok6cap = 10 * b6.s_round > b6.s_max  # no tenth round fits under the cap
    b8 = budget(0.1, 8)
    ok8 = (b8.s_round, b8.s_std, b8.s_max) == (800, 6400, 12800)
    multiples8 = [k * b8.s_round for k in range(2, 17)]
    ok8m = multiples8 == list(range(1600, 12801, 800))
    criterion(
        "budget tables",
        ok6 and ok6m and ok6cap and ok8 and ok8m,
        f"n=6 {b6.s_round}/{b6.s_std}/{b6.s_max}, n=8 {b8.s_round}/{b8.s_std}/{b8.s_max}",
    )


def test_emi_semantic_preservation(corpus):
    t0 = time.time()
    caps = EnumCaps(max_qubits=10)
    worst = 0.0
    for p in corpus:
        v = derive_variant(p)
        da, cov_p = enumerate_distribution(p, caps)
        db, _ = enumerate_distribution(v, caps)
        keys = set(da) | set(db)
        worst = max(worst, max(abs(da.get(k, 0.0) - db.get(k, 0.0)) for k in keys))
        assert worst <= 1e-9, serialize_failure(p)
        # dead spans silent under enumeration...
        for region in p.dead_regions:
            for path in span_instruction_paths(p, region.span):
                assert cov_p.get(path, 0) == 0, (p.meta.seed, region.id, path)
        # ...and under a 10^4-shot sampled run
        out, cov_s = run(p, 10_000, seed=p.meta.seed)
        assert out.ok, out.error
        for region in p.dead_regions:
            for path in span_instruction_paths(p, region.span):
                assert cov_s.get(path, 0) == 0, (p.meta.seed, region.id, path)
    criterion(
        "emi semantic preservation",
        worst <= 1e-9,
        f"{len(corpus)} programs, worst Linf {worst:.2e}, {time.time() - t0:.0f}s",
    )


def serialize_failure(p):
    from emifuzz.ir import serialize

    return f"failing program (seed {p.meta.seed}):\n{serialize(p)}"


def test_dead_guard_determinism(corpus):
    checked = 0
    for p in corpus:
        for region in p.dead_regions:
            if region.category is not PatternCategory.INPUT_DEPENDENT:
                continue
            if not region.ancilla_clbits:
                continue  # controlled-on-int guards are unmeasured registers
            reg_name = p.cregs[region.ancilla_clbits[0].reg].name
            dist, _ = enumerate_distribution(
                p, EnumCaps(max_qubits=10), output_reg=reg_name
            )
            assert len(dist) == 1, (p.meta.seed, reg_name, dist)
            assert abs(max(dist.values()) - 1.0) <= 1e-12
            checked += 1
    criterion("dead-guard determinism", checked > 50, f"{checked} guarded instances")


class TestSeededBugDetection:
    GEN = GenConfig(n_qubits=5, depth=10)
    SEED = 7
    ITERS = 500

    def campaign(self, passes, stop_label=None):
        cfg = CampaignConfig(
            gen=self.GEN,
            pipelines=(Pipeline(passes, include_seeded_bugs=True),),
            max_iter=self.ITERS,
            delta=0.1,
            seed=self.SEED,
            stop_after_reports=1,
            stop_label=stop_label,
        )
        return run_campaign(cfg)

    def test_b1_commute_flagged_wrong(self):
        reports = [
            r
            for r in self.campaign(("commute-skip-classical",), stop_label="wrong")
            if r.label == "wrong"
        ]
        ok = bool(reports) and reports[0].final_h >= 0.1
        criterion(
            "seeded bug B1 (classical-blind commutation) flagged wrong",
            ok,
            f"iteration {reports[0].iteration}, H={reports[0].final_h:.3f}" if reports else "not flagged",
        )

    def test_b2_reversal_flagged(self):
        reports = self.campaign(("reverse-moments",))
        ok = bool(reports) and reports[0].label in ("wrong", "crash")
        criterion(
            "seeded bug B2 (moment-blind reversal) flagged",
            ok,
            f"iteration {reports[0].iteration} as {reports[0].label}" if reports else "not flagged",
        )

    def test_b3_loop_inversion_flagged_crash(self):
        reports = [
            r
            for r in self.campaign(
                ("elide-empty-blocks", "invert-forloop"), stop_label="crash"
            )
            if r.label == "crash"
        ]
        ok = bool(reports)
        asym = False
        if reports:
            r = reports[0]
            # the variant walked into the unsupported loop; the original
            # silently skipped the optimization
            asym = (
                r.error_original is None
                and r.error_variant is not None
                and "for-loop" in r.error_variant["message"]
            )
        criterion(
            "seeded bug B3 (loop inversion) flagged crash",
            ok and asym,
            f"iteration {reports[0].iteration}" if reports else "not flagged",
        )

    def test_b4_measure_removal_flagged_infinite_loop(self):
        reports = [
            r
            for r in self.campaign(("remove-final-measures",), stop_label="crash")
            if r.label == "crash"
        ]
        ok = bool(reports)
        one_sided = False
        if reports:
            r = reports[0]
            errs = [r.error_original, r.error_variant]
            present = [e for e in errs if e is not None]
            one_sided = len(present) == 1 and present[0]["kind"] == "infinite_loop"
        criterion(
            "seeded bug B4 (final-measure removal) flagged one-sided infinite loop",
            ok and one_sided,
            f"iteration {reports[0].iteration}" if reports else "not flagged",
        )


def test_false_positive_control():
    t0 = time.time()
    cfg = CampaignConfig(
        gen=GenConfig(n_qubits=5, depth=10),
        pipelines=(Pipeline(tuple(CORRECT_PASSES)),),
        max_iter=500,
        delta=0.1,
        seed=21,
    )
    reports = run_campaign(cfg)
    criterion(
        "false-positive control",
        len(reports) == 0,
        f"500 iterations, {len(reports)} reports, {time.time() - t0:.0f}s",
    )


def test_early_stop_speedup(early_stop_experiment):
    b, shots_used, failures = early_stop_experiment
    ratio = speedup_ratio(shots_used, 2263)
    criterion(
        "early-stop speedup",
        ratio >= 0.40,
        f"measured {ratio:.4f} over {len(shots_used)} pairs ({failures} budget exhaustions)",
    )


def test_early_stop_histogram_shape(early_stop_experiment):
    b, shots_used, failures = early_stop_experiment
    at_two = sum(1 for s in shots_used if s == 2 * b.s_round)
    frac = at_two / len(shots_used)
    criterion(
        "early-stop shot histogram",
        frac >= 0.80,
        f"{at_two}/{len(shots_used)} = {frac:.1%} at exactly 2 rounds",
    )


def test_checker_unit_values():
    h_disjoint = hellinger({"0": 1.0}, {"1": 1.0})
    h_same = hellinger({"00": 0.5, "11": 0.5}, {"00": 0.5, "11": 0.5})
    h_half = hellinger({"0": 0.5, "1": 0.5}, {"0": 1.0})
    ok = (
        h_disjoint == 1.0
        and h_same == 0.0
        and abs(h_half - 0.541196) <= 1e-6
    )
    criterion("checker unit values", ok, f"H={h_disjoint}/{h_same}/{h_half:.6f}")


def test_campaign_determinism(tmp_path):
    outs = []
    for name in ("first", "second"):
        out = tmp_path / name
        cfg = CampaignConfig(
            gen=GenConfig(n_qubits=5, depth=10),
            pipelines=(Pipeline(("remove-final-measures",), include_seeded_bugs=True),),
            max_iter=40,
            delta=0.1,
            seed=7,
            output_dir=str(out),
            parallelism=1,
        )
        run_campaign(cfg)
        outs.append(out)
    files = sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(outs[1]) for p in outs[1].rglob("*") if p.is_file())
    identical = files == files_b and all(
        (outs[0] / rel).read_bytes() == (outs[1] / rel).read_bytes() for rel in files
    )
    criterion(
        "campaign determinism",
        bool(files) and identical,
        f"{len(files)} files byte-identical across two runs",
    )
