"""Benchmark harness: suites, metrics, and the statistical report.

The default suite is 3 scenarios x 5 base instances x 3 expertise
levels = 45 transfer runs.  Each run is judged against the ground-truth
oracle: it *executed* when its final attempt solved, and it *solved*
when the objective also matches the oracle within tolerance (CER and
SSR).  Reports are deterministic for a fixed config, seed, and scripted
backend, except wall-clock fields.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable

from .env import (EXPERTISE_LEVELS, SCENARIO_KINDS, ScenarioSpec,
                  TerminalEnv)
from .errors import ConfigError, VdsAgentError
from .injection import resolve_run_script
from .instances import generate_instances, with_level
from .knowledge import KnowledgeBase, accumulate
from .llm import Backend, MockBackend
from .solver import oracle_solve
from .stats import DegenerateInput, DegenerateTable, anova_test, chi_squared_test
from .workflow import (TransferOutcome, WorkflowConfig, is_executed,
                       run_transfer)

SIGNIFICANCE_LEVEL = 0.05

ABLATIONS = ("none", "no-rag", "no-self-correction")

_ABLATION_LABELS = {"none": "full", "no-rag": "w/o RAG",
                    "no-self-correction": "w/o self-correction"}

SYNTAX_STAGES = ("extract", "parse", "static")
RUNTIME_STAGES = ("bind", "solve")


class EmptyInputError(VdsAgentError):
    """Metrics were requested over an empty result list."""


@dataclass
class SuiteConfig:
    seed: int = 42
    scenarios: tuple[str, ...] = SCENARIO_KINDS
    levels: tuple[str, ...] = EXPERTISE_LEVELS
    instances_per_scenario: int = 5
    k_shot: int = 1
    max_iterations: int = 3
    tolerance: float = 1e-4
    solve_time_limit: float = 300.0
    ablation: str = "none"
    learn_during_run: bool = False
    accumulate_policy: str = "agent"  # agent | oracle | none

    def validate(self) -> None:
        if self.ablation not in ABLATIONS:
            raise ConfigError(f"unknown ablation '{self.ablation}'")
        if self.accumulate_policy not in ("agent", "oracle", "none"):
            raise ConfigError(
                f"unknown accumulate policy '{self.accumulate_policy}'")
        for name in ("seed", "instances_per_scenario", "k_shot",
                     "max_iterations"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigError(f"{name} must be an integer")
        for name in ("tolerance", "solve_time_limit"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError(f"{name} must be a number")
        if self.instances_per_scenario < 1:
            raise ConfigError("instances_per_scenario must be >= 1")
        if self.k_shot < 0:
            raise ConfigError("k_shot must be >= 0")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        if self.tolerance < 0:
            raise ConfigError("tolerance must be >= 0")
        if self.solve_time_limit <= 0:
            raise ConfigError("solve_time_limit must be positive")
        for kind in self.scenarios:
            if kind not in SCENARIO_KINDS:
                raise ConfigError(f"unknown scenario kind '{kind}'")
        for level in self.levels:
            if level not in EXPERTISE_LEVELS:
                raise ConfigError(f"unknown expertise level '{level}'")

    def label(self) -> str:
        return _ABLATION_LABELS[self.ablation]

    def workflow_config(self) -> WorkflowConfig:
        return WorkflowConfig(
            max_iterations=self.max_iterations,
            k_shot=self.k_shot,
            use_rag=self.ablation != "no-rag",
            use_self_correction=self.ablation != "no-self-correction",
            solve_time_limit=self.solve_time_limit,
            accumulate_on_success=False,  # the harness owns accumulation
        )


@dataclass(frozen=True)
class InstanceResult:
    instance_id: str
    scenario: str
    level: str
    executed: bool
    solved: bool
    objective: float | None
    oracle_objective: float
    iterations: int
    wall_time: float
    failure_category: str | None


@dataclass(frozen=True)
class MetricsAggregate:
    n_total: int
    n_executed: int
    n_solved: int
    cer: float
    ssr: float
    mean_iterations: float
    mean_wall_time: float


def failure_category(outcome: TransferOutcome, executed: bool, solved: bool,
                     max_iterations: int) -> str | None:
    """Classify a finished run.

    misinterpretation: executed but the objective missed the oracle.
    exhausted: used every iteration failing at more than one stage.
    syntax / runtime: classified by the final attempt's stage otherwise.
    """
    if solved:
        return None
    if executed:
        return "misinterpretation"
    stages = {a.stage_reached for a in outcome.attempts}
    if len(outcome.attempts) >= max_iterations and len(stages) > 1:
        return "exhausted"
    final = outcome.attempts[-1].stage_reached
    return "syntax" if final in SYNTAX_STAGES else "runtime"


def evaluate_instance(instance_id: str, scenario: str, level: str,
                      outcome: TransferOutcome, oracle_objective: float,
                      tolerance: float, max_iterations: int) -> InstanceResult:
    """Judge one transfer outcome against the oracle objective."""
    executed = is_executed(outcome)
    objective = outcome.solution.objective if executed else None
    solved = executed and abs(objective - oracle_objective) <= tolerance
    return InstanceResult(
        instance_id=instance_id, scenario=scenario, level=level,
        executed=executed, solved=solved, objective=objective,
        oracle_objective=oracle_objective,
        iterations=outcome.iterations,
        wall_time=outcome.total_wall_time,
        failure_category=failure_category(outcome, executed, solved,
                                          max_iterations),
    )


def compute_metrics(results: list[InstanceResult]) -> MetricsAggregate:
    if not results:
        raise EmptyInputError("no results to aggregate")
    n = len(results)
    executed = sum(1 for r in results if r.executed)
    solved = sum(1 for r in results if r.solved)
    return MetricsAggregate(
        n_total=n, n_executed=executed, n_solved=solved,
        cer=executed / n, ssr=solved / n,
        mean_iterations=sum(r.iterations for r in results) / n,
        mean_wall_time=sum(r.wall_time for r in results) / n,
    )


def _grouped(results: list[InstanceResult],
             key: Callable[[InstanceResult], str],
             order: tuple[str, ...]) -> dict[str, list[InstanceResult]]:
    groups: dict[str, list[InstanceResult]] = {name: [] for name in order}
    for r in results:
        groups[key(r)].append(r)
    return {name: rs for name, rs in groups.items() if rs}


def _stats_block(results: list[InstanceResult],
                 levels: tuple[str, ...]) -> dict[str, Any]:
    by_level = _grouped(results, lambda r: r.level, levels)
    present = [level for level in levels if level in by_level]
    stats: dict[str, Any] = {}
    if len(present) >= 2:
        cer_table = [[sum(1 for r in by_level[lv] if r.executed),
                      sum(1 for r in by_level[lv] if not r.executed)]
                     for lv in present]
        ssr_table = [[sum(1 for r in by_level[lv] if r.solved),
                      sum(1 for r in by_level[lv] if not r.solved)]
                     for lv in present]
        for name, table in (("cer_chi2", cer_table), ("ssr_chi2", ssr_table)):
            try:
                result = chi_squared_test(table)
            except DegenerateTable:
                continue  # too little data for this test; omit the entry
            stats[name] = {
                "statistic": result.statistic, "df": result.df,
                "p_value": result.p_value,
                "significant": result.p_value < SIGNIFICANCE_LEVEL,
            }
        for name, values in (
                ("iterations_anova",
                 [[float(r.iterations) for r in by_level[lv]] for lv in present]),
                ("time_anova",
                 [[r.wall_time for r in by_level[lv]] for lv in present])):
            try:
                result = anova_test(values)
            except DegenerateInput:
                continue
            stats[name] = {
                "f_stat": result.f_stat,
                "df_between": result.df_between,
                "df_within": result.df_within,
                "p_value": result.p_value,
                "significant": result.p_value < SIGNIFICANCE_LEVEL,
            }
    return stats


BackendProvider = Callable[[str, TerminalEnv, ScenarioSpec], Backend]


def scripted_provider(suite_script: dict[str, Any]) -> BackendProvider:
    """Fresh single-run mock per instance, resolved from a suite script."""
    def make(instance_id: str, env: TerminalEnv,
             spec: ScenarioSpec) -> Backend:
        return MockBackend(resolve_run_script(suite_script, instance_id,
                                              spec.kind))
    return make


def shared_provider(backend: Backend) -> BackendProvider:
    def make(instance_id: str, env: TerminalEnv,
             spec: ScenarioSpec) -> Backend:
        return backend
    return make


def run_benchmark(suite: SuiteConfig, kb: KnowledgeBase,
                  provider: BackendProvider,
                  trace_dir: str | Path | None = None) -> dict[str, Any]:
    """Run the suite and build the report document.

    The knowledge base is snapshotted at suite start, so accumulation
    from one instance cannot leak into another's retrieval unless
    learn_during_run is set.  Accumulation goes to the caller's base
    per accumulate_policy.  When trace_dir is given, every transfer
    outcome is written there and the report rows carry the paths.
    """
    suite.validate()
    wf_config = suite.workflow_config()
    retrieval_kb = kb if suite.learn_during_run else kb.snapshot()
    if trace_dir is not None:
        trace_dir = Path(trace_dir)
        trace_dir.mkdir(parents=True, exist_ok=True)
    results: list[InstanceResult] = []
    traces: dict[str, str] = {}
    categories: dict[str, int] = {}
    for kind in suite.scenarios:
        bases = generate_instances(suite.seed, kind,
                                   suite.instances_per_scenario)
        for index, (base_env, spec) in enumerate(bases):
            oracle = oracle_solve(base_env, spec, suite.solve_time_limit)
            for level in suite.levels:
                env = with_level(base_env, spec, level)
                iid = f"{kind}-{index:02d}-{level}"
                backend = provider(iid, env, spec)
                outcome = run_transfer(env, retrieval_kb, wf_config, backend)
                result = evaluate_instance(
                    iid, kind, level, outcome, oracle.objective,
                    suite.tolerance, wf_config.effective_max_iterations())
                results.append(result)
                if trace_dir is not None:
                    trace_path = trace_dir / f"{iid}.trace.json"
                    outcome.write_trace(trace_path)
                    traces[iid] = str(trace_path)
                if result.failure_category:
                    categories[result.failure_category] = \
                        categories.get(result.failure_category, 0) + 1
                solved_by_agent = outcome.status == "solved"
                should_store = (
                    (suite.accumulate_policy == "agent" and solved_by_agent)
                    or (suite.accumulate_policy == "oracle" and result.solved))
                if should_store and outcome.final_program is not None:
                    accumulate(kb, env, outcome.final_program,
                               description=" ".join(env.requirements.texts))
    by_scenario = _grouped(results, lambda r: r.scenario, suite.scenarios)
    by_level = _grouped(results, lambda r: r.level, suite.levels)
    report = {
        "config": {
            "label": suite.label(),
            "seed": suite.seed,
            "scenarios": list(suite.scenarios),
            "levels": list(suite.levels),
            "instances_per_scenario": suite.instances_per_scenario,
            "k_shot": suite.k_shot,
            "max_iterations": suite.max_iterations,
            "tolerance": suite.tolerance,
            "solve_time_limit": suite.solve_time_limit,
            "ablation": suite.ablation,
            "accumulate_policy": suite.accumulate_policy,
            "learn_during_run": suite.learn_during_run,
        },
        "instances": [dict(asdict(r), trace=traces.get(r.instance_id))
                      for r in results],
        "aggregates": {
            "overall": asdict(compute_metrics(results)),
            "by_scenario": {k: asdict(compute_metrics(v))
                            for k, v in by_scenario.items()},
            "by_level": {k: asdict(compute_metrics(v))
                         for k, v in by_level.items()},
        },
        "failure_categories": dict(sorted(categories.items())),
        "stats": _stats_block(results, suite.levels),
        "generated_at": datetime.now(timezone.utc).isoformat(),
    }
    return report


CSV_COLUMNS = ("instance_id", "scenario", "level", "executed", "solved",
               "objective", "oracle_objective", "iterations", "wall_time",
               "failure_category")


def report_to_csv(report: dict[str, Any]) -> str:
    """Flatten the per-instance rows of a report into CSV text."""
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_COLUMNS,
                            lineterminator="\n")
    writer.writeheader()
    for row in report["instances"]:
        writer.writerow({col: row[col] for col in CSV_COLUMNS})
    return buffer.getvalue()
