"""Exact solver for per-vehicle constrained shortest paths.

The dispatch objective decomposes per vehicle (no inter-vehicle
coupling), so the global optimum is the sum of independent constrained
shortest-path solves.  Paths may revisit nodes but never reuse a
directed edge; among equal-cost paths the lexicographically smallest
node sequence wins, which makes every result deterministic.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from typing import Iterable

from . import dsl
from .env import ScenarioSpec, TerminalEnv
from .errors import VdsAgentError

DEFAULT_TIME_LIMIT = 300.0

_now = time.monotonic  # patched in tests to exercise the timeout path

EdgeMap = dict[tuple[int, int], float]


class SolveError(VdsAgentError):
    """A bind or solve failure, classified by `kind`.

    Kinds: bind_unknown_node, bind_unknown_vehicle, bind_conflict,
    infeasible, timeout, degenerate_edge_reuse.
    """

    def __init__(self, kind: str, detail: str):
        self.kind = kind
        self.detail = detail
        super().__init__(f"{kind}: {detail}")


@dataclass(frozen=True)
class PathRequirement:
    kind: str  # "subpath" | "exact"
    nodes: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))


@dataclass(frozen=True)
class VehicleProblem:
    vehicle: str
    od: tuple[int, int] | None
    edges: EdgeMap
    requirement: PathRequirement | None = None


@dataclass(frozen=True)
class SolverInstance:
    vehicles: tuple[VehicleProblem, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "vehicles", tuple(self.vehicles))
        seen = set()
        for vp in self.vehicles:
            if vp.vehicle in seen:
                raise SolveError("bind_conflict",
                                 f"vehicle {vp.vehicle} appears twice")
            seen.add(vp.vehicle)


@dataclass(frozen=True)
class Solution:
    paths: dict[str, tuple[int, ...]]
    costs: dict[str, float]
    objective: float


def shortest_path(edges: EdgeMap, source: int,
                  target: int) -> tuple[float, tuple[int, ...]]:
    """Dijkstra over positive edge lengths.

    Ties break toward the lexicographically smallest node sequence: the
    heap is keyed by (cost, path), and with strictly positive lengths the
    first settled entry per node is the lexicographically smallest
    optimal simple path to it.
    """
    if source == target:
        return 0.0, (source,)
    adjacency: dict[int, list[tuple[int, float]]] = {}
    for (u, v), w in edges.items():
        adjacency.setdefault(u, []).append((v, w))
    heap: list[tuple[float, tuple[int, ...]]] = [(0.0, (source,))]
    settled: set[int] = set()
    while heap:
        cost, path = heapq.heappop(heap)
        node = path[-1]
        if node in settled:
            continue
        settled.add(node)
        if node == target:
            return cost, path
        for nxt, w in adjacency.get(node, ()):
            if nxt not in settled:
                heapq.heappush(heap, (cost + w, path + (nxt,)))
    raise SolveError("infeasible", f"no path from {source} to {target}")


def _duplicate_edge(path: Iterable[int]) -> tuple[int, int] | None:
    seen: set[tuple[int, int]] = set()
    prev = None
    for node in path:
        if prev is not None:
            edge = (prev, node)
            if edge in seen:
                return edge
            seen.add(edge)
        prev = node
    return None


def _edge_cost(edges: EdgeMap, path: tuple[int, ...], vehicle: str) -> float:
    total = 0.0
    for u, v in zip(path, path[1:]):
        if (u, v) not in edges:
            raise SolveError(
                "infeasible",
                f"edge ({u}, {v}) not available to vehicle {vehicle}")
        total += edges[(u, v)]
    return total


def _solve_vehicle(vp: VehicleProblem) -> tuple[float, tuple[int, ...]]:
    if vp.od is None:
        return 0.0, ()
    source, target = vp.od
    req = vp.requirement
    if req is None:
        return shortest_path(vp.edges, source, target)
    if req.kind == "exact":
        path = req.nodes
        if path[0] != source or path[-1] != target:
            raise SolveError(
                "bind_conflict",
                f"exact path endpoints ({path[0]}, {path[-1]}) do not match "
                f"OD pair ({source}, {target}) of vehicle {vp.vehicle}")
        dup = _duplicate_edge(path)
        if dup is not None:
            raise SolveError(
                "degenerate_edge_reuse",
                f"exact path for vehicle {vp.vehicle} reuses edge {dup}")
        return _edge_cost(vp.edges, path, vp.vehicle), path
    # subpath: shortest head and tail around the forced segment
    forced_cost = _edge_cost(vp.edges, req.nodes, vp.vehicle)
    head_cost, head = shortest_path(vp.edges, source, req.nodes[0])
    tail_cost, tail = shortest_path(vp.edges, req.nodes[-1], target)
    full = head + req.nodes[1:] + tail[1:]
    dup = _duplicate_edge(full)
    if dup is not None:
        raise SolveError(
            "degenerate_edge_reuse",
            f"subpath solution for vehicle {vp.vehicle} reuses edge {dup}")
    return head_cost + forced_cost + tail_cost, full


def solve(instance: SolverInstance,
          time_limit: float = DEFAULT_TIME_LIMIT) -> Solution:
    """Solve every vehicle problem; Z is the sum of per-vehicle costs."""
    start = _now()
    paths: dict[str, tuple[int, ...]] = {}
    costs: dict[str, float] = {}
    total = 0.0
    for vp in instance.vehicles:
        if _now() - start > time_limit:
            raise SolveError("timeout",
                             f"time limit of {time_limit}s exceeded")
        try:
            cost, path = _solve_vehicle(vp)
        except SolveError as exc:
            if f"vehicle {vp.vehicle}" in exc.detail:
                raise
            raise SolveError(exc.kind,
                             f"vehicle {vp.vehicle}: {exc.detail}") from exc
        paths[vp.vehicle] = path
        costs[vp.vehicle] = cost
        total += cost
    return Solution(paths=paths, costs=costs, objective=total)


def _resolve_subject(subject: dsl.SubjectRef, env: TerminalEnv) -> str:
    if subject.kind == "vehicle":
        if subject.ident not in {a.id for a in env.fleet.agvs}:
            raise SolveError("bind_unknown_vehicle",
                             f"unknown vehicle {subject.ident}")
        return subject.ident
    task = env.fleet.task_by_id(subject.ident)
    if task is None:
        raise SolveError("bind_unknown_vehicle",
                         f"unknown task {subject.ident}")
    return task.agv


def _check_nodes(nodes: Iterable[int], known: frozenset[int]) -> None:
    for node in nodes:
        if node not in known:
            raise SolveError("bind_unknown_node",
                             f"statement references unknown node {node}")


def bind(ast: dsl.ModelAst, env: TerminalEnv) -> SolverInstance:
    """Ground a checked program against an environment.

    Assumes static_check(ast) passed.  Statements apply in program order;
    every vehicle in the environment appears in the result exactly once.
    """
    known = env.network.node_ids()
    base = env.network.lengths()
    edges: dict[str, EdgeMap] = {a.id: dict(base) for a in env.fleet.agvs}
    requirements: dict[str, PathRequirement] = {}
    ods: dict[str, tuple[int, int] | None] = {a.id: None for a in env.fleet.agvs}
    for task in env.fleet.tasks:
        ods[task.agv] = (task.origin, task.destination)
    for stmt in ast.statements:
        if isinstance(stmt, dsl.FlowBalanceAll):
            continue
        if isinstance(stmt, dsl.RemoveEdge):
            _check_nodes((stmt.source, stmt.target), known)
            for vehicle_edges in edges.values():
                vehicle_edges.pop((stmt.source, stmt.target), None)
        elif isinstance(stmt, dsl.ForbidEdge):
            _check_nodes((stmt.source, stmt.target), known)
            vehicle = _resolve_subject(stmt.subject, env)
            edges[vehicle].pop((stmt.source, stmt.target), None)
        else:
            _check_nodes(stmt.nodes, known)
            vehicle = _resolve_subject(stmt.subject, env)
            if vehicle in requirements:
                raise SolveError(
                    "bind_conflict",
                    f"multiple path requirements bound to vehicle {vehicle}")
            kind = "exact" if isinstance(stmt, dsl.RequireExactPath) else "subpath"
            if kind == "exact":
                od = ods[vehicle]
                if od is None:
                    raise SolveError(
                        "bind_conflict",
                        f"exact path bound to vehicle {vehicle} which has no task")
                if stmt.nodes[0] != od[0] or stmt.nodes[-1] != od[1]:
                    raise SolveError(
                        "bind_conflict",
                        f"exact path endpoints ({stmt.nodes[0]}, {stmt.nodes[-1]}) "
                        f"do not match OD pair {od} of vehicle {vehicle}")
            requirements[vehicle] = PathRequirement(kind, stmt.nodes)
    problems = tuple(
        VehicleProblem(vehicle=a.id, od=ods[a.id], edges=edges[a.id],
                       requirement=requirements.get(a.id))
        for a in env.fleet.agvs
    )
    return SolverInstance(vehicles=problems)


def oracle_solve(env: TerminalEnv, spec: ScenarioSpec | None,
                 time_limit: float = DEFAULT_TIME_LIMIT) -> Solution:
    """Ground-truth solve built directly from a structured scenario.

    Bypasses the language and bind entirely: the constraint set comes
    from the ScenarioSpec fields, then the same exact path algebra runs.
    """
    if spec is not None:
        spec.validate_against(env)
    base = env.network.lengths()
    removed_all: set[tuple[int, int]] = set()
    removed_for: dict[str, set[tuple[int, int]]] = {}
    subpath_for: dict[str, tuple[int, ...]] = {}
    if spec is not None:
        if spec.kind == "road_closure":
            u, v = spec.edge
            removed_all = {(u, v), (v, u)}
        elif spec.kind == "forbidden_edge_vehicle":
            u, v = spec.edge
            removed_for[spec.vehicle] = {(u, v), (v, u)}
        else:
            task = env.fleet.task_by_id(spec.task)
            subpath_for[task.agv] = tuple(spec.nodes)
    problems = []
    for agv in env.fleet.agvs:
        gone = removed_all | removed_for.get(agv.id, set())
        eff = {e: w for e, w in base.items() if e not in gone}
        task = env.fleet.task_for(agv.id)
        od = (task.origin, task.destination) if task else None
        req = None
        if agv.id in subpath_for:
            req = PathRequirement("subpath", subpath_for[agv.id])
        problems.append(VehicleProblem(vehicle=agv.id, od=od, edges=eff,
                                       requirement=req))
    return solve(SolverInstance(vehicles=tuple(problems)), time_limit)
