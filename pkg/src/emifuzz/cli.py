"""Command line interface.

Subcommands: ``campaign`` (fuzzing loop), ``reproduce`` (replay a stored
report), ``budget`` (print shot budgets), ``generate`` and ``derive``
(single-program utilities). Exit codes: 0 no bugs found, 2 bugs found,
1 tool error.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .checker import budget
from .emi import derive_variant
from .generator import GenConfig, generate, parse_config
from .harness import CampaignConfig, reproduce, run_campaign
from .ir import deserialize, serialize
from .passes import CORRECT_PASSES, Pipeline


def _gen_config_from_args(args) -> GenConfig:
    if getattr(args, "gen_config", None):
        cfg = parse_config(Path(args.gen_config).read_text())
    else:
        cfg = GenConfig()
    overrides = {}
    for key in ("n_qubits", "depth", "seed", "max_nesting"):
        val = getattr(args, key, None)
        if val is not None:
            overrides[key] = val
    return replace(cfg, **overrides) if overrides else cfg


def _add_gen_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--qubits", dest="n_qubits", type=int, default=None)
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--max-nesting", dest="max_nesting", type=int, default=None)
    p.add_argument(
        "--gen-config",
        default=None,
        help="key = value generator config file (see README)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emifuzz",
        description="Differential testing of quantum pass pipelines via dead-code variants",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("campaign", help="run a fuzzing campaign")
    c.add_argument("--backend", choices=("builtin", "bridge"), default="builtin")
    c.add_argument("--iters", type=int, default=100)
    c.add_argument("--delta", type=float, default=0.1)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument(
        "--pipeline",
        action="append",
        default=None,
        help="comma-separated pass ids; repeat for multiple pipelines",
    )
    c.add_argument(
        "--seed-bugs",
        action="store_true",
        help="allow quarantined seeded-bug passes in pipelines",
    )
    c.add_argument("--out", default=None, help="report output directory")
    c.add_argument("--parallelism", type=int, default=1)
    c.add_argument("--fuel", type=int, default=None)
    c.add_argument(
        "--bridge-command",
        default=None,
        help="adapter command line for --backend bridge",
    )
    _add_gen_args(c)

    r = sub.add_parser("reproduce", help="replay a stored bug report")
    r.add_argument("report_dir")

    b = sub.add_parser("budget", help="print shot budgets for delta and qubit count")
    b.add_argument("--delta", type=float, default=0.1)
    b.add_argument("--qubits", type=int, required=True)

    g = sub.add_parser("generate", help="generate one program")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default=None)
    _add_gen_args(g)

    d = sub.add_parser("derive", help="derive the dead-code-free variant")
    d.add_argument("--input", "-i", required=True)
    d.add_argument("--out", default=None)
    return parser


def _cmd_campaign(args) -> int:
    gen_cfg = _gen_config_from_args(args)
    specs = args.pipeline or [",".join(CORRECT_PASSES)]
    pipelines = tuple(
        Pipeline(
            tuple(x.strip() for x in spec.split(",") if x.strip()),
            include_seeded_bugs=args.seed_bugs,
        )
        for spec in specs
    )
    master_seed = args.seed
    kwargs = dict(
        gen=replace(gen_cfg, seed=master_seed),
        pipelines=pipelines,
        backend=args.backend,
        max_iter=args.iters,
        delta=args.delta,
        seed=master_seed,
        output_dir=args.out,
        parallelism=args.parallelism,
    )
    if args.fuel is not None:
        kwargs["fuel"] = args.fuel
    if args.bridge_command:
        kwargs["bridge_command"] = tuple(args.bridge_command.split())
    cfg = CampaignConfig(**kwargs)
    reports = run_campaign(cfg)
    crash = sum(1 for r in reports if r.label == "crash")
    wrong = sum(1 for r in reports if r.label == "wrong")
    print(
        f"campaign finished: {args.iters} iterations, "
        f"{len(reports)} reports ({crash} crash, {wrong} wrong)"
    )
    if args.out:
        print(f"reports written under {args.out}")
    return 2 if reports else 0


def _cmd_reproduce(args) -> int:
    verdict = reproduce(args.report_dir)
    line = f"verdict: {verdict.label} (stored: {verdict.stored_label})"
    if verdict.final_h is not None:
        line += f" final_h={verdict.final_h:.4f}"
    print(line)
    if not verdict.matches_stored:
        print("warning: reproduction does not match the stored label")
    return 0 if verdict.matches_stored else 2


def _cmd_budget(args) -> int:
    b = budget(args.delta, args.qubits)
    print(f"delta={b.delta} n={b.n_qubits} N={b.n_outcomes}")
    print(f"s_round={b.s_round} s_std={b.s_std} s_max={b.s_max}")
    multiples = []
    k = 2
    while k * b.s_round <= b.s_max:
        multiples.append(k * b.s_round)
        k += 1
    print("round multiples: " + " ".join(str(m) for m in multiples))
    return 0


def _cmd_generate(args) -> int:
    cfg = _gen_config_from_args(args)
    program = generate(replace(cfg, seed=args.seed))
    text = serialize(program)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_derive(args) -> int:
    program = deserialize(Path(args.input).read_text())
    text = serialize(derive_variant(program))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


_COMMANDS = {
    "campaign": _cmd_campaign,
    "reproduce": _cmd_reproduce,
    "budget": _cmd_budget,
    "generate": _cmd_generate,
    "derive": _cmd_derive,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
