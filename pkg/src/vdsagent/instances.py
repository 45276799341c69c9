"""Deterministic benchmark instance generation.

Each instance is the standard 20-node grid with 30 AGVs, one task per
AGV, and uniformly sampled OD pairs (origin != destination), under one
of the three fixed scenarios:

    road_closure          edge (6, 7) closed in both directions
    forbidden_edge_vehicle AGV-4 barred from (5, 6) in both directions
    designated_route      task T3 must traverse the subpath 6 -> 10 -> 11

ODs that would make a vehicle's constrained problem infeasible (or
degenerate) are resampled, at most 100 draws per vehicle.
"""

from __future__ import annotations

import dataclasses
import random

from .env import (Agv, FleetConfig, Requirements, ScenarioSpec, Task,
                  TerminalEnv, default_network, scenario_prompt)
from .errors import InfeasibleGeneration, SchemaError
from .solver import (PathRequirement, SolveError, SolverInstance,
                     VehicleProblem, solve)

FLEET_SIZE = 30

_MAX_DRAWS = 100

_FIXED_SPECS = {
    "road_closure": ScenarioSpec("road_closure", edge=(6, 7)),
    "forbidden_edge_vehicle": ScenarioSpec("forbidden_edge_vehicle",
                                           vehicle="AGV-4", edge=(5, 6)),
    "designated_route": ScenarioSpec("designated_route", task="T3",
                                     nodes=(6, 10, 11)),
}


def fixed_scenario(kind: str) -> ScenarioSpec:
    if kind not in _FIXED_SPECS:
        raise SchemaError(f"unknown scenario kind '{kind}'")
    return _FIXED_SPECS[kind]


def _vehicle_feasible(edges: dict, spec: ScenarioSpec, agv_id: str,
                      task_id: str, od: tuple[int, int]) -> bool:
    gone: set[tuple[int, int]] = set()
    requirement = None
    if spec.kind == "road_closure":
        u, v = spec.edge
        gone = {(u, v), (v, u)}
    elif spec.kind == "forbidden_edge_vehicle" and agv_id == spec.vehicle:
        u, v = spec.edge
        gone = {(u, v), (v, u)}
    elif spec.kind == "designated_route" and task_id == spec.task:
        requirement = PathRequirement("subpath", spec.nodes)
    effective = {e: w for e, w in edges.items() if e not in gone}
    problem = VehicleProblem(vehicle=agv_id, od=od, edges=effective,
                             requirement=requirement)
    try:
        solve(SolverInstance(vehicles=(problem,)))
    except SolveError:
        return False
    return True


def generate_instances(seed: int, kind: str, count: int,
                       level: str = "engineer") -> list[tuple[TerminalEnv, ScenarioSpec]]:
    """Generate `count` instances; pure function of its arguments."""
    if count < 1:
        raise ValueError("count must be >= 1")
    spec = fixed_scenario(kind)
    network = default_network()
    node_ids = sorted(network.node_ids())
    edges = network.lengths()
    instances = []
    for i in range(count):
        rng = random.Random(f"{seed}:{kind}:{i}")
        agvs = []
        tasks = []
        for k in range(1, FLEET_SIZE + 1):
            agv_id = f"AGV-{k}"
            task_id = f"T{k}"
            agv_attrs = {}
            task_attrs = {}
            if kind == "forbidden_edge_vehicle" and agv_id == spec.vehicle:
                agv_attrs["over_height"] = True
            if kind == "designated_route" and task_id == spec.task:
                task_attrs["dangerous_goods"] = True
            od = None
            for _ in range(_MAX_DRAWS):
                origin = rng.choice(node_ids)
                destination = rng.choice(node_ids)
                if origin == destination:
                    continue
                if _vehicle_feasible(edges, spec, agv_id, task_id,
                                     (origin, destination)):
                    od = (origin, destination)
                    break
            if od is None:
                raise InfeasibleGeneration(
                    f"no feasible OD for {agv_id} in {kind} instance {i}")
            agvs.append(Agv(id=agv_id, attributes=agv_attrs))
            tasks.append(Task(id=task_id, agv=agv_id, origin=od[0],
                              destination=od[1], attributes=task_attrs))
        env = TerminalEnv(
            network=network,
            fleet=FleetConfig(agvs=tuple(agvs), tasks=tuple(tasks)),
            requirements=Requirements(level=level,
                                      texts=(scenario_prompt(spec, level),)),
        )
        instances.append((env, spec))
    return instances


def with_level(env: TerminalEnv, spec: ScenarioSpec, level: str) -> TerminalEnv:
    """The same base instance with requirements phrased at another level."""
    reqs = Requirements(level=level, texts=(scenario_prompt(spec, level),))
    return dataclasses.replace(env, requirements=reqs)
