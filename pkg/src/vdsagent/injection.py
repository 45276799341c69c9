"""Builders for scripted mock-backend suites.

A suite script drives the whole benchmark from one JSON document:

    {"scenarios": {<kind>: {"modeler": [...], "coder": [...], ...}},
     "instances": {<instance id>: {...}},
     "default":   {...}}

Instance entries win over scenario entries, which win over the default;
a document that is itself a flat {"modeler": ..., "coder": ...} object
acts as the default for every instance.  Entries may be conditional
({"if_contains", "then", "else"}), which is how RAG-dependent behavior
is expressed without a live model.

Besides the all-correct golden suite, `fault_injection_script` builds
the documented misinterpretation fixture: two road-closure instances
whose program removes only one direction of the closed edge, and one
designated-route instance whose program pins the vehicle's entire path
instead of requiring the subpath.
"""

from __future__ import annotations

from typing import Any

from .env import ScenarioSpec, TerminalEnv
from .errors import ConfigError
from .instances import generate_instances
from .solver import oracle_solve, solve, bind
from . import dsl

_FENCE = "```" + dsl.FENCE_TAG + "\n{}\n```"

CORRECT_PROGRAMS = {
    "road_closure": """\
model closure_transfer
objective minimize total_travel_time
constraints {
  flow_balance all
  remove_edge (6, 7)
  remove_edge (7, 6)
}""",
    "forbidden_edge_vehicle": """\
model forbidden_transfer
objective minimize total_travel_time
constraints {
  flow_balance all
  forbid_edge vehicle "AGV-4" (5, 6)
  forbid_edge vehicle "AGV-4" (6, 5)
}""",
    "designated_route": """\
model designated_transfer
objective minimize total_travel_time
constraints {
  flow_balance all
  require_subpath task "T3" [6, 10, 11]
}""",
}

ONE_WAY_CLOSURE_PROGRAM = """\
model closure_transfer
objective minimize total_travel_time
constraints {
  flow_balance all
  remove_edge (6, 7)
}"""

MODELER_SCHEMES = {
    "road_closure": (
        "1. Objective: minimize total travel time over all vehicles.\n"
        "2. Keep flow balance for every vehicle.\n"
        "3. The segment between nodes 6 and 7 is closed in both "
        "directions: remove edges (6,7) and (7,6) for all vehicles."
    ),
    "forbidden_edge_vehicle": (
        "1. Objective: minimize total travel time over all vehicles.\n"
        "2. Keep flow balance for every vehicle.\n"
        "3. AGV-4 is over-height: forbid edges (5,6) and (6,5) for "
        "AGV-4 only; all other vehicles are unaffected."
    ),
    "designated_route": (
        "1. Objective: minimize total travel time over all vehicles.\n"
        "2. Keep flow balance for every vehicle.\n"
        "3. The vehicle serving task T3 must traverse 6 -> 10 -> 11 as a "
        "contiguous subpath of its route; the rest of the route stays "
        "free."
    ),
}


def fenced(program: str) -> str:
    return _FENCE.format(program)


def instance_id(kind: str, index: int, level: str) -> str:
    return f"{kind}-{index:02d}-{level}"


def golden_script() -> dict[str, Any]:
    """Every instance answered correctly on the first attempt."""
    scenarios = {}
    for kind, program in CORRECT_PROGRAMS.items():
        scenarios[kind] = {
            "modeler": [MODELER_SCHEMES[kind]],
            "coder": [fenced(program)],
            "debugger": [],
        }
    return {"scenarios": scenarios}


def _one_way_objective_differs(env: TerminalEnv, spec: ScenarioSpec) -> bool:
    """Does removing only (6,7) change Z versus the full closure?"""
    full = oracle_solve(env, spec).objective
    ast = dsl.parse(ONE_WAY_CLOSURE_PROGRAM)
    one_way = solve(bind(ast, env)).objective
    return abs(full - one_way) > 1e-9


def _pinned_exact_path(env: TerminalEnv, spec: ScenarioSpec) -> str:
    """A valid but suboptimal whole-path program for the route task.

    Takes the oracle-optimal path and inserts an out-and-back bounce
    right after the forced segment, so the program binds (endpoints
    still match the OD), executes, and lands strictly above the optimum.
    """
    task = env.fleet.task_by_id(spec.task)
    optimal = oracle_solve(env, spec).paths[task.agv]
    nodes = spec.nodes
    # locate the forced segment inside the optimal path
    k = len(nodes)
    at = next(i for i in range(len(optimal) - k + 1)
              if optimal[i:i + k] == nodes)
    hinge = nodes[-1]
    used = set(zip(optimal, optimal[1:]))
    lengths = env.network.lengths()
    bounce = None
    for (u, v) in sorted(lengths):
        if u != hinge:
            continue
        if (hinge, v) in used or (v, hinge) in used:
            continue
        if (v, hinge) not in lengths:
            continue
        bounce = v
        break
    if bounce is None:
        raise ConfigError("no bounce neighbor free at the forced segment")
    cut = at + k
    pinned = optimal[:cut] + (bounce, hinge) + optimal[cut:]
    seq = ", ".join(str(n) for n in pinned)
    return (f"model designated_transfer\n"
            f"objective minimize total_travel_time\n"
            f"constraints {{\n"
            f"  flow_balance all\n"
            f"  require_exact_path task \"{spec.task}\" [{seq}]\n"
            f"}}")


def fault_injection_script(seed: int = 42,
                           instances_per_scenario: int = 5) -> dict[str, Any]:
    """The three-misinterpretation suite over the default benchmark.

    Two road-closure instances (technician level) get the one-way
    closure program; one designated-route instance (engineer level) gets
    the pinned whole-path program.  All three execute but miss the
    optimum, so they score as misinterpretations; everything else is
    golden.  By level that is 2 + 1 + 0 failures across the 45 runs.
    """
    script = golden_script()
    overrides: dict[str, Any] = {}
    closures = generate_instances(seed, "road_closure", instances_per_scenario)
    wrong = [i for i, (env, spec) in enumerate(closures)
             if _one_way_objective_differs(env, spec)]
    if len(wrong) < 2:
        raise ConfigError("need two closure instances where one direction "
                          "matters; got fewer, pick another seed")
    for i in wrong[:2]:
        overrides[instance_id("road_closure", i, "technician")] = {
            "modeler": [MODELER_SCHEMES["road_closure"]],
            "coder": [fenced(ONE_WAY_CLOSURE_PROGRAM)],
            "debugger": [],
        }
    routes = generate_instances(seed, "designated_route",
                                instances_per_scenario)
    env0, spec0 = routes[0]
    overrides[instance_id("designated_route", 0, "engineer")] = {
        "modeler": [MODELER_SCHEMES["designated_route"]],
        "coder": [fenced(_pinned_exact_path(env0, spec0))],
        "debugger": [],
    }
    script["instances"] = overrides
    return script


BROKEN_PROGRAM = CORRECT_PROGRAMS["road_closure"].rsplit("\n", 1)[0]

RECOVERY_REFLECTION = (
    "DIAGNOSIS: The emitted program ends inside the constraints block; the "
    "closing brace is missing, so parsing fails at end of input.\n"
    "CORRECTION: Re-emit the complete program and close the constraints "
    "block with '}' after the last statement."
)


def recovery_script(kind: str = "road_closure") -> dict[str, Any]:
    """Attempt 1 fails to parse (missing brace); attempt 2 is correct."""
    return {
        "modeler": [MODELER_SCHEMES[kind]] * 2,
        "coder": [fenced(BROKEN_PROGRAM), fenced(CORRECT_PROGRAMS[kind])],
        "debugger": [RECOVERY_REFLECTION],
    }


def stubborn_script(kind: str = "road_closure",
                    attempts: int = 3) -> dict[str, Any]:
    """Every attempt fails the same way (no fenced block at all)."""
    return {
        "modeler": [MODELER_SCHEMES[kind]] * attempts,
        "coder": ["I cannot produce a program for this request."] * attempts,
        "debugger": [RECOVERY_REFLECTION] * max(0, attempts - 1),
    }


RAG_MARKER = "## Modeling primitives"

UNGROUNDED_PROGRAM = """\
model ungrounded_attempt
objective minimize total_travel_time
constraints {
  remove_edge (6, 7)
}"""


def ablation_script(seed: int = 42,
                    instances_per_scenario: int = 5,
                    levels: tuple[str, ...] = ("technician", "engineer",
                                               "scientist")) -> dict[str, Any]:
    """Suite designed so both ablations strictly lose.

    Default entries answer correctly only when the prompt carries
    retrieved knowledge (otherwise they emit a program with no flow
    balance, which fails static checks on every attempt).  One scientist
    instance per scenario instead needs the reflection loop: attempt 1
    drops the closing brace, attempt 2 is correct.
    """
    scenarios = {}
    for kind, program in CORRECT_PROGRAMS.items():
        conditional = {"if_contains": RAG_MARKER,
                       "then": fenced(program),
                       "else": fenced(UNGROUNDED_PROGRAM)}
        scenarios[kind] = {
            "modeler": [MODELER_SCHEMES[kind]] * 3,
            "coder": [conditional] * 3,
            "debugger": [RECOVERY_REFLECTION] * 2,
        }
    overrides = {}
    for kind in CORRECT_PROGRAMS:
        overrides[instance_id(kind, 0, "scientist")] = recovery_script(kind)
    return {"scenarios": scenarios, "instances": overrides}


def resolve_run_script(suite_script: dict[str, Any], instance: str,
                       kind: str) -> dict[str, Any]:
    """The single-run script for one benchmark instance."""
    if not isinstance(suite_script, dict):
        raise ConfigError("suite script must be a JSON object")
    if {"modeler", "coder", "debugger"} & set(suite_script):
        return suite_script
    by_instance = suite_script.get("instances", {})
    if instance in by_instance:
        return by_instance[instance]
    by_scenario = suite_script.get("scenarios", {})
    if kind in by_scenario:
        return by_scenario[kind]
    if "default" in suite_script:
        return suite_script["default"]
    raise ConfigError(f"suite script has no entry for instance {instance}")
