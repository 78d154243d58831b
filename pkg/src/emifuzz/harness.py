"""Campaign loop: generate, derive, transform, execute, classify, persist.

Each iteration generates a program and its dead-code-free variant, pushes
both through every configured pipeline, and compares the two executions.
Divergent failures become ``crash`` reports; surviving pairs go through the
early-stopping distribution comparison and become ``wrong`` reports when it
rejects equivalence. Identical failures on both sides are treated as
consistent behaviour and recorded as nothing.

Every random decision derives from the master seed plus structural indices
(iteration, pipeline position, side, round), so any stored report replays
exactly on the builtin backend.
"""
from __future__ import annotations

import json
import logging
import os
import subprocess
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .checker import (
    Budget,
    ConsistencyResult,
    ErrorComparison,
    budget,
    compare_errors,
    early_stop_compare,
)
from .emi import derive_variant
from .generator import GenConfig, generate
from .ir import Program, deserialize, serialize
from .passes import Pipeline, apply
from .rng import derive_seed
from .simulator import (
    Counts,
    DEFAULT_FUEL,
    ErrKind,
    ErrorRecord,
    ExecOutcome,
    normalize_signature,
    run,
)

__all__ = [
    "BridgeExecutor",
    "BugReport",
    "BuiltinExecutor",
    "CampaignConfig",
    "ReproError",
    "Verdict",
    "load_report",
    "reproduce",
    "run_campaign",
]

logger = logging.getLogger(__name__)


class ReproError(ValueError):
    """Stored report directory is missing pieces or malformed."""


# ---------------------------------------------------------------------------
# Executors
# ---------------------------------------------------------------------------

class BuiltinExecutor:
    """Runs programs on the in-process shot simulator."""

    def __init__(self, fuel: int = DEFAULT_FUEL):
        self.fuel = fuel

    def execute(
        self, program: Program, shots: int, seed: int, pipeline_hint: int = 0
    ) -> ExecOutcome:
        outcome, _ = run(program, shots, seed, fuel=self.fuel)
        return outcome

    def close(self) -> None:  # symmetry with the bridge executor
        pass


class BridgeExecutor:
    """Client for an external-stack adapter speaking line-delimited JSON.

    The adapter is launched as a child process (crash isolation: the system
    under test is expected to fail) and receives the program as canonical
    text. Request timeouts map to the infinite-loop error kind; adapter
    errors are normalized before signature comparison.
    """

    def __init__(
        self,
        command: tuple[str, ...],
        dialect: str = "tsq",
        timeout: float = 60.0,
    ):
        self.command = command
        self.dialect = dialect
        self.timeout = timeout
        self._proc: subprocess.Popen | None = None
        self._next_id = 0
        self.capabilities: list[str] | None = None

    def _ensure(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                list(self.command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
            hello = self._proc.stdout.readline()
            try:
                msg = json.loads(hello)
                self.capabilities = list(msg.get("capabilities", []))
            except (json.JSONDecodeError, AttributeError):
                self.capabilities = None
        return self._proc

    def execute(
        self, program: Program, shots: int, seed: int, pipeline_hint: int = 0
    ) -> ExecOutcome:
        self._next_id += 1
        request = {
            "v": 1,
            "id": self._next_id,
            "dialect": self.dialect,
            "program": serialize(program),
            "shots": shots,
            "seed": seed,
            "pipeline_hint": pipeline_hint,
        }
        try:
            proc = self._ensure()
            proc.stdin.write(json.dumps(request) + "\n")
            proc.stdin.flush()
            line = _readline_timeout(proc, self.timeout)
        except Exception as exc:
            self.close()
            return ExecOutcome.err(ErrKind.INTERNAL, f"bridge transport: {exc}")
        if line is None:
            self.close()
            return ExecOutcome.err(
                ErrKind.INFINITE_LOOP, "bridge request timed out"
            )
        try:
            resp = json.loads(line)
        except json.JSONDecodeError as exc:
            return ExecOutcome.err(ErrKind.INTERNAL, f"bridge protocol: {exc}")
        if resp.get("id") != request["id"]:
            return ExecOutcome.err(
                ErrKind.INTERNAL, "bridge protocol: response id mismatch"
            )
        if resp.get("status") == "ok":
            counts = {str(k): int(v) for k, v in resp.get("counts", {}).items()}
            return ExecOutcome.of(Counts(dict(sorted(counts.items())), sum(counts.values())))
        err = resp.get("error", {})
        etype = str(err.get("type", "unknown"))
        kind = {
            "infinite_loop": ErrKind.INFINITE_LOOP,
            "validation": ErrKind.VALIDATION,
            "parse": ErrKind.VALIDATION,
        }.get(etype, ErrKind.PASS)
        message = f"{etype}: {err.get('message', '')}"
        return ExecOutcome(error=ErrorRecord(kind, message,
                                             normalize_signature(kind, message)))

    def close(self) -> None:
        if self._proc is not None:
            try:
                self._proc.stdin.close()
                self._proc.terminate()
                self._proc.wait(timeout=5)
            except Exception:
                self._proc.kill()
            self._proc = None


def _readline_timeout(proc: subprocess.Popen, timeout: float) -> str | None:
    import selectors

    sel = selectors.DefaultSelector()
    sel.register(proc.stdout, selectors.EVENT_READ)
    ready = sel.select(timeout)
    sel.close()
    if not ready:
        return None
    return proc.stdout.readline()


# ---------------------------------------------------------------------------
# Campaign configuration and reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CampaignConfig:
    gen: GenConfig
    pipelines: tuple[Pipeline, ...]
    backend: str = "builtin"  # builtin | bridge
    max_iter: int = 100
    delta: float = 0.1
    seed: int = 0
    output_dir: str | None = None
    parallelism: int = 1
    fuel: int = DEFAULT_FUEL
    bridge_command: tuple[str, ...] = ()
    # stop once this many reports exist (sequential runs only); None = never.
    # stop_label narrows the counted reports to one label ("crash"/"wrong").
    stop_after_reports: int | None = None
    stop_label: str | None = None

    @property
    def n_qubits(self) -> int:
        return self.gen.n_qubits

    def check(self) -> None:
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.pipelines:
            raise ValueError("at least one pipeline required")
        if self.backend not in ("builtin", "bridge"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.backend == "bridge" and not self.bridge_command:
            raise ValueError("bridge backend needs bridge_command")


@dataclass(frozen=True)
class BugReport:
    label: str  # "crash" | "wrong"
    iteration: int
    sigma_index: int
    pipeline: tuple[str, ...]
    master_seed: int
    gen_seed: int
    delta: float
    n_qubits: int
    original_text: str
    variant_text: str
    error_original: dict | None = None
    error_variant: dict | None = None
    final_h: float | None = None
    total_shots: int | None = None
    h_trace: tuple[float, ...] | None = None
    counts_original: dict | None = None
    counts_variant: dict | None = None

    def meta_dict(self) -> dict:
        d = {
            "label": self.label,
            "iteration": self.iteration,
            "sigma_index": self.sigma_index,
            "pipeline": list(self.pipeline),
            "master_seed": self.master_seed,
            "gen_seed": self.gen_seed,
            "delta": self.delta,
            "n_qubits": self.n_qubits,
            "error_original": self.error_original,
            "error_variant": self.error_variant,
            "final_h": self.final_h,
            "total_shots": self.total_shots,
            "h_trace": list(self.h_trace) if self.h_trace is not None else None,
            "counts_original": self.counts_original,
            "counts_variant": self.counts_variant,
        }
        return d


def _record_dict(rec: ErrorRecord | None) -> dict | None:
    if rec is None:
        return None
    return {"kind": rec.kind.value, "message": rec.message, "signature": rec.signature}


# ---------------------------------------------------------------------------
# One (iteration, pipeline) comparison
# ---------------------------------------------------------------------------

class _SamplerError(Exception):
    def __init__(self, record: ErrorRecord, side: int, round_index: int):
        super().__init__(record.message)
        self.record = record
        self.side = side
        self.round_index = round_index


class _RoundSampler:
    """Draws one budgeted round per call with a (side, round)-derived seed."""

    def __init__(self, executor, program, master, iteration, sigma_index, side, hint):
        self.executor = executor
        self.program = program
        self.master = master
        self.iteration = iteration
        self.sigma_index = sigma_index
        self.side = side
        self.hint = hint
        self.round = 0
        self.merged = Counts({}, 0)

    def seed_for(self, round_index: int) -> int:
        return derive_seed(
            self.master, "exec", self.iteration, self.sigma_index, self.side, round_index
        )

    def __call__(self, shots: int) -> Counts:
        outcome = self.executor.execute(
            self.program, shots, self.seed_for(self.round), self.hint
        )
        if not outcome.ok:
            raise _SamplerError(outcome.error, self.side, self.round)
        self.round += 1
        self.merged = self.merged.merged(outcome.counts)
        return outcome.counts


def _compare_pair(
    cfg: CampaignConfig,
    executor,
    iteration: int,
    sigma_index: int,
    pipeline: Pipeline,
    original: Program,
    variant: Program,
    b: Budget,
) -> BugReport | None:
    """Classify one transformed pair; None means no bug signal."""
    gen_seed = original.meta.seed

    def report(**kw) -> BugReport:
        return BugReport(
            iteration=iteration,
            sigma_index=sigma_index,
            pipeline=pipeline.passes,
            master_seed=cfg.seed,
            gen_seed=gen_seed,
            delta=cfg.delta,
            n_qubits=cfg.gen.n_qubits,
            original_text=serialize(original),
            variant_text=serialize(variant),
            **kw,
        )

    if cfg.backend == "builtin":
        ta = apply(pipeline, original)
        tb = apply(pipeline, variant)
        hint = 0
    else:
        # external stacks run their own optimizations, keyed by the hint
        ta, tb = replace(original, dead_regions=()), variant
        hint = sigma_index
    err_a = ta if isinstance(ta, ErrorRecord) else None
    err_b = tb if isinstance(tb, ErrorRecord) else None
    if err_a or err_b:
        oa = ExecOutcome(error=err_a) if err_a else ExecOutcome.of(Counts({}, 0))
        ob = ExecOutcome(error=err_b) if err_b else ExecOutcome.of(Counts({}, 0))
        cmp = compare_errors(oa, ob)
        if cmp is ErrorComparison.SAME_ERROR:
            return None
        return report(
            label="crash",
            error_original=_record_dict(err_a),
            error_variant=_record_dict(err_b),
        )

    sample_a = _RoundSampler(executor, ta, cfg.seed, iteration, sigma_index, 0, hint)
    sample_b = _RoundSampler(executor, tb, cfg.seed, iteration, sigma_index, 1, hint)
    try:
        result: ConsistencyResult = early_stop_compare(sample_a, sample_b, b)
    except _SamplerError as exc:
        other = sample_b if exc.side == 0 else sample_a
        other_outcome = executor.execute(
            other.program, b.s_round, other.seed_for(exc.round_index), hint
        )
        rec_failed = _record_dict(exc.record)
        rec_other = _record_dict(other_outcome.error) if not other_outcome.ok else None
        if rec_other is not None and rec_other["signature"] == rec_failed["signature"]:
            return None  # both sides fail identically: consistent behaviour
        pair = (rec_failed, rec_other) if exc.side == 0 else (rec_other, rec_failed)
        return report(label="crash", error_original=pair[0], error_variant=pair[1])

    if result.equivalent:
        return None
    if result.final_h < cfg.delta:
        # budget exhausted while the merged distance was already below delta;
        # not a wrong-classification by contract
        logger.debug(
            "iteration %d sigma %d: budget exhausted with H=%.4f < delta",
            iteration,
            sigma_index,
            result.final_h,
        )
        return None
    return report(
        label="wrong",
        final_h=result.final_h,
        total_shots=result.total_shots,
        h_trace=result.h_trace,
        counts_original=dict(sorted(sample_a.merged.counts.items())),
        counts_variant=dict(sorted(sample_b.merged.counts.items())),
    )


def _make_executor(cfg: CampaignConfig):
    if cfg.backend == "bridge":
        return BridgeExecutor(cfg.bridge_command)
    return BuiltinExecutor(cfg.fuel)


def _run_iteration(cfg: CampaignConfig, executor, iteration: int) -> list[BugReport]:
    gen_seed = derive_seed(cfg.seed, "gen", iteration)
    gen_cfg = replace(cfg.gen, seed=gen_seed)
    program = generate(gen_cfg)
    variant = derive_variant(program)
    b = budget(cfg.delta, cfg.gen.n_qubits)
    pipelines = (
        cfg.pipelines if program.meta.optimize else (Pipeline(()),)
    )
    reports = []
    for sigma_index, pipeline in enumerate(pipelines):
        rep = _compare_pair(
            cfg, executor, iteration, sigma_index, pipeline, program, variant, b
        )
        if rep is not None:
            reports.append(rep)
    return reports


def _iteration_worker(args: tuple) -> tuple[int, list[BugReport], str | None]:
    cfg, iteration = args
    executor = _make_executor(cfg)
    try:
        return iteration, _run_iteration(cfg, executor, iteration), None
    except Exception as exc:
        return iteration, [], f"{type(exc).__name__}: {exc}"
    finally:
        executor.close()


# ---------------------------------------------------------------------------
# Campaign driver and persistence
# ---------------------------------------------------------------------------

def _write_report(out_dir: Path, rep: BugReport) -> None:
    name = f"report-{rep.iteration:06d}-{rep.sigma_index:02d}"
    final = out_dir / name
    tmp = Path(tempfile.mkdtemp(prefix=name + ".", dir=out_dir))
    try:
        (tmp / "original.qir-txt").write_text(rep.original_text)
        (tmp / "variant.qir-txt").write_text(rep.variant_text)
        (tmp / "meta.json").write_text(
            json.dumps(rep.meta_dict(), indent=2, sort_keys=True) + "\n"
        )
        os.replace(tmp, final)
    except OSError:
        for f in tmp.iterdir():
            f.unlink()
        tmp.rmdir()
        raise


def run_campaign(cfg: CampaignConfig) -> list[BugReport]:
    """Execute the full campaign; returns every bug report, persisted when
    an output directory is configured. Iteration failures are logged and
    skipped, never fatal."""
    cfg.check()
    out_dir: Path | None = None
    if cfg.output_dir:
        out_dir = Path(cfg.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
    all_reports: list[BugReport] = []
    failures: list[tuple[int, str]] = []
    if cfg.parallelism > 1:
        with ProcessPoolExecutor(max_workers=cfg.parallelism) as pool:
            results = pool.map(
                _iteration_worker, ((cfg, i) for i in range(cfg.max_iter))
            )
            gathered = sorted(results, key=lambda t: t[0])
        for iteration, reports, error in gathered:
            if error is not None:
                failures.append((iteration, error))
                logger.warning("iteration %d failed: %s", iteration, error)
            all_reports.extend(reports)
    else:
        executor = _make_executor(cfg)
        try:
            for iteration in range(cfg.max_iter):
                try:
                    all_reports.extend(_run_iteration(cfg, executor, iteration))
                except Exception as exc:
                    failures.append((iteration, f"{type(exc).__name__}: {exc}"))
                    logger.warning("iteration %d failed: %s", iteration, exc)
                if cfg.stop_after_reports is not None:
                    counted = [
                        r
                        for r in all_reports
                        if cfg.stop_label is None or r.label == cfg.stop_label
                    ]
                    if len(counted) >= cfg.stop_after_reports:
                        break
        finally:
            executor.close()
    if out_dir is not None:
        for rep in all_reports:
            _write_report(out_dir, rep)
        summary = {
            "iterations": cfg.max_iter,
            "reports": len(all_reports),
            "crash_reports": sum(1 for r in all_reports if r.label == "crash"),
            "wrong_reports": sum(1 for r in all_reports if r.label == "wrong"),
            "failures": [{"iteration": i, "error": e} for i, e in failures],
            "master_seed": cfg.seed,
            "delta": cfg.delta,
            "n_qubits": cfg.gen.n_qubits,
            "backend": cfg.backend,
            "pipelines": [list(p.passes) for p in cfg.pipelines],
        }
        (out_dir / "campaign.json").write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n"
        )
    return all_reports


# ---------------------------------------------------------------------------
# Reproduction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    label: str  # "crash" | "wrong" | "pass"
    matches_stored: bool
    stored_label: str
    final_h: float | None = None
    details: str = ""


def load_report(report_dir: str | Path) -> tuple[dict, Program, Program]:
    d = Path(report_dir)
    try:
        meta = json.loads((d / "meta.json").read_text())
        original = deserialize((d / "original.qir-txt").read_text())
        variant = deserialize((d / "variant.qir-txt").read_text())
    except FileNotFoundError as exc:
        raise ReproError(f"report directory incomplete: {exc}") from exc
    except (json.JSONDecodeError, ValueError) as exc:
        raise ReproError(f"report directory malformed: {exc}") from exc
    return meta, original, variant


def reproduce(report_dir: str | Path, fuel: int = DEFAULT_FUEL) -> Verdict:
    """Re-run a stored report pair under its stored pipeline and seeds."""
    meta, original, variant = load_report(report_dir)
    try:
        pipeline = Pipeline(tuple(meta["pipeline"]), include_seeded_bugs=True)
        cfg = CampaignConfig(
            gen=replace(GenConfig(), n_qubits=int(meta["n_qubits"])),
            pipelines=(pipeline,),
            delta=float(meta["delta"]),
            seed=int(meta["master_seed"]),
            fuel=fuel,
        )
        b = budget(cfg.delta, cfg.gen.n_qubits)
    except (KeyError, ValueError) as exc:
        raise ReproError(f"meta.json missing field: {exc}") from exc
    executor = BuiltinExecutor(fuel)
    rep = _compare_pair(
        cfg,
        executor,
        int(meta["iteration"]),
        int(meta["sigma_index"]),
        pipeline,
        original,
        variant,
        b,
    )
    stored = str(meta["label"])
    if rep is None:
        verdict = Verdict("pass", stored == "pass", stored, details="no divergence")
    else:
        verdict = Verdict(
            rep.label,
            rep.label == stored,
            stored,
            final_h=rep.final_h,
            details="reproduced" if rep.label == stored else "label mismatch",
        )
    if not verdict.matches_stored:
        logger.warning(
            "reproduction mismatch in %s: stored %r, got %r",
            report_dir,
            stored,
            verdict.label,
        )
    return verdict
