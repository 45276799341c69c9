"""The expert-team transfer loop.

One run turns an environment plus natural-language requirements into a
solved dispatch model: retrieve knowledge once, then iterate
modeler -> coder -> (extract, parse, static, bind, solve), reflecting on
failures through the debugger until solved or out of iterations.  Stage
failures never raise; they are recorded in the outcome.  The loop never
consults the ground-truth oracle.
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import dsl, llm, solver
from .env import TerminalEnv, env_digest
from .errors import ConfigError
from .knowledge import KnowledgeBase, RetrievedContext, accumulate, retrieve

STAGES = ("extract", "parse", "static", "bind", "solve", "solved")


@dataclass
class WorkflowConfig:
    max_iterations: int = 3
    k_shot: int = 1
    use_rag: bool = True
    use_self_correction: bool = True
    solve_time_limit: float = solver.DEFAULT_TIME_LIMIT
    accumulate_on_success: bool = True
    rerun_modeler: bool = True
    token_budget: int = llm.DEFAULT_TOKEN_BUDGET

    def validate(self) -> None:
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        if self.k_shot < 0:
            raise ConfigError("k_shot must be >= 0")
        if self.solve_time_limit <= 0:
            raise ConfigError("solve_time_limit must be positive")
        if self.token_budget <= 0:
            raise ConfigError("token_budget must be positive")

    def effective_max_iterations(self) -> int:
        return self.max_iterations if self.use_self_correction else 1


@dataclass
class AttemptRecord:
    index: int
    stage_reached: str
    modeler_prompt: llm.PromptBundle | None = None
    modeler_scheme: str | None = None
    coder_prompt: llm.PromptBundle | None = None
    coder_output: str | None = None
    extracted_program: str | None = None
    error: str | None = None
    debugger_prompt: llm.PromptBundle | None = None
    debugger_output: str | None = None
    reflection: llm.Reflection | None = None
    wall_time: float = 0.0


@dataclass
class TransferOutcome:
    status: str  # "solved" | "exhausted"
    attempts: list[AttemptRecord] = field(default_factory=list)
    final_program: str | None = None
    solution: solver.Solution | None = None
    retrieved: RetrievedContext | None = None
    accumulated: bool = False
    total_wall_time: float = 0.0

    @property
    def iterations(self) -> int:
        return len(self.attempts)

    def to_dict(self) -> dict[str, Any]:
        def bundle(b: llm.PromptBundle | None) -> dict[str, str] | None:
            if b is None:
                return None
            return {"role": b.role, "system": b.system, "user": b.user}

        attempts = []
        for a in self.attempts:
            attempts.append({
                "index": a.index,
                "stage_reached": a.stage_reached,
                "modeler_prompt": bundle(a.modeler_prompt),
                "modeler_scheme": a.modeler_scheme,
                "coder_prompt": bundle(a.coder_prompt),
                "coder_output": a.coder_output,
                "extracted_program": a.extracted_program,
                "error": a.error,
                "debugger_prompt": bundle(a.debugger_prompt),
                "debugger_output": a.debugger_output,
                "reflection": None if a.reflection is None else {
                    "diagnosis": a.reflection.diagnosis,
                    "correction": a.reflection.correction,
                },
                "wall_time": a.wall_time,
            })
        solution = None
        if self.solution is not None:
            solution = {
                "objective": self.solution.objective,
                "paths": {v: list(p) for v, p in self.solution.paths.items()},
                "costs": dict(self.solution.costs),
            }
        retrieved = None
        if self.retrieved is not None:
            retrieved = {
                "primitives": [p.id for p in self.retrieved.primitives],
                "exemplars": [e.id for e in self.retrieved.exemplars],
                "scores": list(self.retrieved.scores),
            }
        return {
            "status": self.status,
            "iterations": self.iterations,
            "final_program": self.final_program,
            "solution": solution,
            "retrieved": retrieved,
            "accumulated": self.accumulated,
            "total_wall_time": self.total_wall_time,
            "attempts": attempts,
        }

    def write_trace(self, path: str | Path) -> None:
        target = Path(path)
        tmp = target.with_name(target.name + ".tmp")
        tmp.write_text(json.dumps(self.to_dict(), indent=2) + "\n",
                       encoding="utf-8")
        tmp.replace(target)


def classify_stage_error(stage_reached: str) -> bool:
    """True when a final attempt at this stage counts as executed."""
    if stage_reached not in STAGES:
        raise ValueError(f"unknown stage '{stage_reached}'")
    return stage_reached == "solved"


def is_executed(outcome: TransferOutcome) -> bool:
    return bool(outcome.attempts) and \
        classify_stage_error(outcome.attempts[-1].stage_reached)


def _attempt_pipeline(coder_output: str, env: TerminalEnv,
                      config: WorkflowConfig,
                      record: AttemptRecord) -> solver.Solution | None:
    """Run extract -> parse -> static -> bind -> solve, recording progress.

    Returns the solution on success; on failure sets the record's stage
    and error and returns None.
    """
    record.stage_reached = "extract"
    try:
        program = dsl.extract_dsl_block(coder_output)
    except dsl.ExtractionError as exc:
        record.error = str(exc)
        return None
    record.extracted_program = program
    record.stage_reached = "parse"
    try:
        ast = dsl.parse(program)
    except dsl.DslError as exc:
        record.error = str(exc)
        return None
    record.stage_reached = "static"
    problems = dsl.static_check(ast)
    if problems:
        record.error = "; ".join(str(p) for p in problems)
        return None
    record.stage_reached = "bind"
    try:
        instance = solver.bind(ast, env)
    except solver.SolveError as exc:
        record.error = str(exc)
        return None
    record.stage_reached = "solve"
    try:
        solution = solver.solve(instance, config.solve_time_limit)
    except solver.SolveError as exc:
        record.error = str(exc)
        return None
    record.stage_reached = "solved"
    return solution


def run_transfer(env: TerminalEnv, kb: KnowledgeBase,
                 config: WorkflowConfig,
                 backend: llm.Backend) -> TransferOutcome:
    """Run one transfer; all agent failures are encoded in the outcome."""
    config.validate()
    run_start = time.monotonic()
    digest = env_digest(env)
    requirements = env.requirements.texts
    retrieved = None
    if config.use_rag:
        query = "\n".join(requirements) + "\n" + digest
        retrieved = retrieve(kb, query, config.k_shot)
    outcome = TransferOutcome(status="exhausted", retrieved=retrieved)
    corrections: list[str] = []
    scheme: str | None = None
    modeler_prompt: llm.PromptBundle | None = None
    for index in range(1, config.effective_max_iterations() + 1):
        attempt_start = time.monotonic()
        record = AttemptRecord(index=index, stage_reached="extract")
        base_ctx = llm.PromptContext(
            env_digest=digest, requirements=requirements,
            retrieved=retrieved, corrections=tuple(corrections))
        if config.rerun_modeler or scheme is None:
            modeler_prompt = llm.render_prompt("modeler", base_ctx,
                                               config.token_budget)
            scheme = llm.complete(backend, modeler_prompt)
        record.modeler_prompt = modeler_prompt
        record.modeler_scheme = scheme
        coder_ctx = dataclasses.replace(base_ctx, scheme=scheme)
        record.coder_prompt = llm.render_prompt("coder", coder_ctx,
                                                config.token_budget)
        record.coder_output = llm.complete(backend, record.coder_prompt)
        solution = _attempt_pipeline(record.coder_output, env, config, record)
        if solution is not None:
            record.wall_time = time.monotonic() - attempt_start
            outcome.attempts.append(record)
            outcome.status = "solved"
            outcome.final_program = record.extracted_program
            outcome.solution = solution
            if config.accumulate_on_success:
                accumulate(kb, env, record.extracted_program,
                           description=" ".join(requirements))
                outcome.accumulated = True
            break
        if config.use_self_correction and index < config.effective_max_iterations():
            debug_ctx = llm.PromptContext(
                env_digest=digest, requirements=requirements,
                corrections=tuple(corrections),
                failed_program=record.extracted_program or record.coder_output,
                error_message=record.error)
            record.debugger_prompt = llm.render_prompt("debugger", debug_ctx,
                                                       config.token_budget)
            record.debugger_output = llm.complete(backend,
                                                  record.debugger_prompt)
            record.reflection = llm.parse_reflection(record.debugger_output)
            corrections.append(record.reflection.correction)
        record.wall_time = time.monotonic() - attempt_start
        outcome.attempts.append(record)
    outcome.total_wall_time = time.monotonic() - run_start
    return outcome
