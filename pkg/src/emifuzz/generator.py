"""Seeded random program generator.

Programs are assembled in four parts: register prologue, random live
operations (basic gates, composite subcircuits, dynamic control-flow sites),
dead-code fragments built from the pattern catalog, and a terminal
measurement of every data qubit into the ``result`` register. All
randomness flows through per-component streams derived from the config
seed, so equal configs yield byte-identical programs and adding a pattern
draw never perturbs the live-operation stream.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import rng as rngmod
from .deadcode import (
    AllocContext,
    ancilla_qubits_needed,
    filler_site,
    instantiate,
)
from .ir import (
    ClassicalCond,
    ClbitRef,
    DeadRegion,
    ForRange,
    Gate,
    GateKind,
    IfTest,
    Instruction,
    Measure,
    Meta,
    PatternKind,
    Program,
    QubitRef,
    Register,
    Switch,
    WhileLoop,
    validate,
)

__all__ = ["GenConfig", "GenError", "choose_patterns", "generate", "parse_config"]


class GenError(ValueError):
    """Configuration cannot produce a valid program."""


_DEFAULT_GATE_WEIGHTS: dict[str, float] = {
    "x": 1.0,
    "y": 0.4,
    "z": 0.6,
    "s": 0.5,
    "sdg": 0.3,
    "t": 0.5,
    "tdg": 0.3,
    "h": 0.35,
    "rx": 0.2,
    "ry": 0.2,
    "rz": 0.8,
    "rzz": 0.5,
    "cx": 1.0,
    "cz": 0.6,
    "swap": 0.4,
    "ccx": 0.3,
}


def _uniform_pattern_weights() -> dict[PatternKind, float]:
    return {k: 1.0 for k in PatternKind}


@dataclass(frozen=True)
class GenConfig:
    """Knobs for one generation run. ``seed`` fully determines the output."""

    n_qubits: int = 4
    depth: int = 12
    seed: int = 0
    pattern_weights: dict[PatternKind, float] = field(
        default_factory=_uniform_pattern_weights
    )
    max_nesting: int = 3
    max_regions: int = 2
    subcircuit_prob: float = 0.15
    pass_pipeline_prob: float = 1.0
    live_cond_prob: float = 0.25
    for_trip_max: int = 5
    ctrl_width: int = 3
    max_total_qubits: int = 10
    gate_weights: dict[str, float] = field(
        default_factory=lambda: dict(_DEFAULT_GATE_WEIGHTS)
    )

    def check(self) -> None:
        if self.n_qubits < 1:
            raise GenError("n_qubits must be >= 1")
        if self.depth < 1:
            raise GenError("depth must be >= 1")
        if self.max_nesting < 1 or self.max_regions < 1:
            raise GenError("max_nesting and max_regions must be >= 1")
        if not self.pattern_weights or all(w <= 0 for w in self.pattern_weights.values()):
            raise GenError("pattern_weights must contain a positive weight")
        if any(w < 0 for w in self.pattern_weights.values()):
            raise GenError("pattern_weights must be non-negative")
        if self.ctrl_width < 1:
            raise GenError("ctrl_width must be >= 1")
        for p in (self.subcircuit_prob, self.pass_pipeline_prob, self.live_cond_prob):
            if not 0.0 <= p <= 1.0:
                raise GenError("probabilities must lie in [0, 1]")


def parse_config(text: str) -> GenConfig:
    """Parse the flat ``key = value`` config format (see README)."""
    kwargs: dict = {}
    pattern_weights: dict[PatternKind, float] = {}
    gate_weights: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise GenError(f"config line {lineno}: expected key = value")
        key, val = (part.strip() for part in line.split("=", 1))
        try:
            if key.startswith("pattern_weights."):
                pattern_weights[PatternKind(key.split(".", 1)[1])] = float(val)
            elif key.startswith("gate_weights."):
                gate_weights[key.split(".", 1)[1]] = float(val)
            elif key in ("subcircuit_prob", "pass_pipeline_prob", "live_cond_prob"):
                kwargs[key] = float(val)
            elif key in (
                "n_qubits",
                "depth",
                "seed",
                "max_nesting",
                "max_regions",
                "for_trip_max",
                "ctrl_width",
                "max_total_qubits",
            ):
                kwargs[key] = int(val)
            else:
                raise GenError(f"config line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            raise GenError(f"config line {lineno}: {exc}") from None
    if pattern_weights:
        kwargs["pattern_weights"] = pattern_weights
    if gate_weights:
        kwargs["gate_weights"] = gate_weights
    cfg = GenConfig(**kwargs)
    cfg.check()
    return cfg


# ---------------------------------------------------------------------------
# Pattern plans
# ---------------------------------------------------------------------------

def _weighted_choice(rng: np.random.Generator, weights: dict) -> object:
    keys = list(weights.keys())
    w = np.array([max(0.0, float(weights[k])) for k in keys])
    total = w.sum()
    if total <= 0:
        raise GenError("no positive weights to draw from")
    return keys[int(rng.choice(len(keys), p=w / total))]


def choose_patterns(config: GenConfig, rng: np.random.Generator) -> tuple[PatternKind, ...]:
    """Draw one nested pattern plan, outermost kind first.

    Plan depth is uniform on [1, max_nesting]; each element is drawn by
    ``pattern_weights``. A controlled-on-int kind ends the chain early since
    its body admits no nested regions.
    """
    depth = int(rng.integers(1, config.max_nesting + 1))
    plan: list[PatternKind] = []
    for _ in range(depth):
        kind = _weighted_choice(rng, config.pattern_weights)
        plan.append(kind)
        if kind is PatternKind.CONTROLLED_ON_INT_DEAD:
            break
    return tuple(plan)


# ---------------------------------------------------------------------------
# Live operations
# ---------------------------------------------------------------------------

def _round_angle(rng: np.random.Generator) -> float:
    return round(float(rng.uniform(0.0, 2.0 * math.pi)), 5)


def _random_gate(
    rng: np.random.Generator, qubits: tuple[QubitRef, ...], weights: dict[str, float]
) -> Gate:
    usable = {k: w for k, w in weights.items() if GateKind(k).arity <= len(qubits)}
    kind = GateKind(_weighted_choice(rng, usable))
    idx = rng.choice(len(qubits), size=kind.arity, replace=False)
    targets = tuple(qubits[int(i)] for i in idx)
    params = tuple(_round_angle(rng) for _ in range(kind.n_params))
    return Gate(kind, params, targets)


def _ghz_block(rng: np.random.Generator, qubits) -> list[Gate]:
    k = int(rng.integers(2, min(4, len(qubits)) + 1))
    idx = rng.choice(len(qubits), size=k, replace=False)
    qs = [qubits[int(i)] for i in idx]
    out = [Gate(GateKind.H, (), (qs[0],))]
    out.extend(Gate(GateKind.CX, (), (qs[0], q)) for q in qs[1:])
    return out


def _qft_ladder(rng: np.random.Generator, qubits) -> list[Gate]:
    k = 2 if len(qubits) < 3 else int(rng.integers(2, min(3, len(qubits)) + 1))
    idx = rng.choice(len(qubits), size=k, replace=False)
    qs = [qubits[int(i)] for i in idx]
    out: list[Gate] = []
    for j, q in enumerate(qs):
        out.append(Gate(GateKind.H, (), (q,)))
        for step, ctl in enumerate(qs[j + 1:], start=1):
            theta = round(math.pi / (2**step), 5)
            # controlled-RZ lowered onto the fixed gate set
            out.append(Gate(GateKind.RZ, (theta / 2,), (q,)))
            out.append(Gate(GateKind.CX, (), (ctl, q)))
            out.append(Gate(GateKind.RZ, (round(-theta / 2, 5),), (q,)))
            out.append(Gate(GateKind.CX, (), (ctl, q)))
    return out


_CLIFFORD_MIX = {"x": 1.0, "z": 1.0, "s": 1.0, "cx": 1.0, "cz": 0.7, "swap": 0.5, "h": 0.25}


def _clifford_block(rng: np.random.Generator, qubits) -> list[Gate]:
    count = int(rng.integers(2, 6))
    return [_random_gate(rng, qubits, _CLIFFORD_MIX) for _ in range(count)]


_SUBCIRCUITS = {"ghz": _ghz_block, "qft": _qft_ladder, "clifford": _clifford_block}
_SUBCIRCUIT_WEIGHTS = {"ghz": 0.4, "qft": 0.2, "clifford": 0.4}


def _live_site(
    rng: np.random.Generator,
    data: tuple[QubitRef, ...],
    ctx: AllocContext,
    site_index: int,
    weights: dict[str, float],
    for_trip_max: int,
) -> list[Instruction]:
    """One dynamic control-flow site whose condition is a live measurement."""
    kind = _weighted_choice(rng, {"if": 1.0, "for": 0.8, "while": 0.5, "switch": 0.5})
    if kind == "for":
        trips = int(rng.integers(1, for_trip_max + 1))
        body = tuple(
            _random_gate(rng, data, weights) for _ in range(int(rng.integers(1, 3)))
        )
        return [ForRange(trips, body)]
    ci = ctx.alloc_creg("fb", site_index, 1)
    flag = ClbitRef(ci, 0)
    d = data[int(rng.integers(0, len(data)))]
    if kind == "if":
        then_body = (_random_gate(rng, data, weights),)
        else_body = (
            (_random_gate(rng, data, weights),) if rng.random() < 0.5 else ()
        )
        return [
            Measure(d, flag),
            IfTest(ClassicalCond(ci, None, 1), then_body, else_body),
        ]
    if kind == "while":
        # geometric loop: re-measures its own condition bit each turn
        body = (Gate(GateKind.H, (), (d,)), Measure(d, flag))
        return [
            Gate(GateKind.H, (), (d,)),
            Measure(d, flag),
            WhileLoop(ClassicalCond(ci, None, 0), body),
        ]
    cases = (
        (0, (_random_gate(rng, data, weights),)),
        (1, (_random_gate(rng, data, weights),)),
    )
    return [Measure(d, flag), Switch(ci, None, cases, ())]


# ---------------------------------------------------------------------------
# Dead fragments
# ---------------------------------------------------------------------------

def _make_filler(
    rng: np.random.Generator,
    data: tuple[QubitRef, ...],
    weights: dict[str, float],
    result_reg: int,
    gates_only: bool,
) -> list[Instruction]:
    out: list[Instruction] = [
        _random_gate(rng, data, weights) for _ in range(int(rng.integers(1, 4)))
    ]
    if not gates_only and rng.random() < 0.3:
        q = data[int(rng.integers(0, len(data)))]
        out.append(Measure(q, ClbitRef(result_reg, int(rng.integers(0, len(data))))))
    return out


def _fits(kind: PatternKind, ctx: AllocContext, total_qubits: int, cap: int) -> bool:
    return total_qubits + ancilla_qubits_needed(kind, ctx) <= cap


def _build_fragment(
    plan: tuple[PatternKind, ...],
    config: GenConfig,
    ctx: AllocContext,
    rng_pat: np.random.Generator,
    rng_fill: np.random.Generator,
    data: tuple[QubitRef, ...],
    result_reg: int,
) -> tuple[list[Instruction], list[DeadRegion]]:
    """Instantiate a nested plan innermost-first, re-rooting inner regions."""
    innermost = plan[-1]
    filler = _make_filler(
        rng_fill,
        data,
        config.gate_weights,
        result_reg,
        gates_only=innermost is PatternKind.CONTROLLED_ON_INT_DEAD,
    )
    fragment, region = instantiate(innermost, filler, ctx, rng_pat)
    regions = [region]
    for kind in reversed(plan[:-1]):
        pad = _make_filler(rng_fill, data, config.gate_weights, result_reg, True)
        offset = len(pad) if rng_fill.random() < 0.5 else 0
        new_filler = (
            pad + fragment if offset else fragment + pad
        )
        fragment, outer = instantiate(kind, new_filler, ctx, rng_pat)
        steps, site_off = filler_site(kind)
        regions = [
            replace(r, span=r.span.shifted(steps, site_off + offset)) for r in regions
        ]
        regions.insert(0, outer)
    return fragment, regions


def _resolve_plan(
    plan: tuple[PatternKind, ...],
    config: GenConfig,
    ctx: AllocContext,
    rng_pat: np.random.Generator,
    total_qubits: int,
    first_region: bool,
) -> tuple[PatternKind, ...]:
    """Swap plan entries that exceed the qubit budget for kinds that fit."""
    resolved: list[PatternKind] = []
    budget = total_qubits
    for kind in plan:
        if not _fits(kind, ctx, budget, config.max_total_qubits):
            fitting = {
                k: w
                for k, w in config.pattern_weights.items()
                if w > 0 and _fits(k, ctx, budget, config.max_total_qubits)
            }
            if not fitting:
                if first_region and not resolved:
                    raise GenError(
                        "qubit budget cannot host any weighted pattern kind"
                    )
                break
            kind = _weighted_choice(rng_pat, fitting)
        resolved.append(kind)
        budget += ancilla_qubits_needed(kind, ctx)
        if kind is PatternKind.CONTROLLED_ON_INT_DEAD:
            break
    return tuple(resolved)


# ---------------------------------------------------------------------------
# Generate
# ---------------------------------------------------------------------------

def generate(config: GenConfig) -> Program:
    """Produce a validated program containing at least one dead region."""
    config.check()
    seed = config.seed
    r_struct = rngmod.stream(seed, "structure")
    r_pat = rngmod.stream(seed, "patterns")
    r_fill = rngmod.stream(seed, "filler")
    r_place = rngmod.stream(seed, "placement")

    n = config.n_qubits
    qregs = [Register("q", n)]
    cregs = [Register("result", n)]
    data = tuple(QubitRef(0, i) for i in range(n))
    ctx = AllocContext(
        qregs=qregs,
        cregs=cregs,
        data_qubits=data,
        ctrl_width=config.ctrl_width,
    )

    # live operations
    live: list[Instruction] = []
    gate_count = 0
    site_index = 0
    while gate_count < config.depth:
        u = r_struct.random()
        if u < config.subcircuit_prob and n >= 2:
            builder = _SUBCIRCUITS[_weighted_choice(r_struct, _SUBCIRCUIT_WEIGHTS)]
            block = builder(r_struct, data)
            live.extend(block)
            gate_count += len(block)
        elif u < config.subcircuit_prob + config.live_cond_prob:
            site = _live_site(
                r_struct, data, ctx, site_index, config.gate_weights, config.for_trip_max
            )
            site_index += 1
            live.extend(site)
            gate_count += 2
        else:
            live.append(_random_gate(r_struct, data, config.gate_weights))
            gate_count += 1

    # ensure every data qubit sees at least one gate
    touched: set[QubitRef] = set()
    for ins in live:
        if isinstance(ins, Gate):
            touched.update(ins.targets)
    for q in data:
        if q not in touched:
            live.append(
                _random_gate(r_struct, (q,), {"x": 1.0, "z": 1.0, "s": 1.0, "h": 0.2})
            )

    # dead fragments
    n_regions = int(r_pat.integers(1, config.max_regions + 1))
    fragments: list[tuple[int, list[Instruction], list[DeadRegion]]] = []
    total_qubits = n
    for k in range(n_regions):
        plan = choose_patterns(config, r_pat)
        plan = _resolve_plan(plan, config, ctx, r_pat, total_qubits, first_region=k == 0)
        if not plan:
            continue
        fragment, regions = _build_fragment(
            plan, config, ctx, r_pat, r_fill, data, result_reg=0
        )
        total_qubits += sum(len(r.ancilla_qubits) for r in regions)
        pos = int(r_place.integers(0, len(live) + 1))
        fragments.append((pos, fragment, regions))

    # splice fragments into the live body at their drawn positions
    order = sorted(range(len(fragments)), key=lambda i: (fragments[i][0], i))
    body: list[Instruction] = []
    regions_out: list[DeadRegion] = []
    cursor = 0
    for i in order:
        pos, fragment, regions = fragments[i]
        body.extend(live[cursor:pos])
        base = len(body)
        body.extend(fragment)
        regions_out.extend(replace(r, span=r.span.shifted((), base)) for r in regions)
        cursor = pos
    body.extend(live[cursor:])

    # terminal measurement of all data qubits
    body.extend(Measure(QubitRef(0, i), ClbitRef(0, i)) for i in range(n))

    meta = Meta(
        n_qubits=n,
        seed=seed,
        patterns=tuple(r.kind.value for r in sorted(regions_out, key=lambda r: r.id)),
        optimize=bool(r_struct.random() < config.pass_pipeline_prob),
    )
    program = Program(
        qregs=tuple(qregs),
        cregs=tuple(cregs),
        body=tuple(body),
        dead_regions=tuple(sorted(regions_out, key=lambda r: r.id)),
        meta=meta,
    )
    validate(program)
    if not program.dead_regions:
        raise GenError("generation produced no dead region")
    return program
