"""Terminal environment model: road network, fleet, and requirements.

A dispatching environment arrives as three JSON documents (road network,
fleet configuration, natural-language requirements).  Parsing validates
the shape first, then cross-references, and produces immutable values.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, IO

from .errors import CrossReferenceError, SchemaError, UnknownCombination

EXPERTISE_LEVELS = ("technician", "engineer", "scientist")

SCENARIO_KINDS = ("road_closure", "forbidden_edge_vehicle", "designated_route")


def _read(source: str | IO[str]) -> str:
    if hasattr(source, "read"):
        return source.read()
    return source


def _require(obj: dict, key: str, kinds: type | tuple, where: str) -> Any:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected an object, got {type(obj).__name__}")
    if key not in obj:
        raise SchemaError(f"{where}: missing field '{key}'")
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, kinds):
        raise SchemaError(f"{where}.{key}: wrong type {type(value).__name__}")
    return value


@dataclass(frozen=True)
class Node:
    id: int
    type: str | None = None


@dataclass(frozen=True)
class Edge:
    source: int
    target: int
    length: float


@dataclass(frozen=True)
class Network:
    """Directed road graph.  Validated on construction."""

    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise SchemaError("duplicate node ids in network")
        known = set(ids)
        seen: set[tuple[int, int]] = set()
        for e in self.edges:
            if e.source not in known:
                raise CrossReferenceError(f"edge references unknown node {e.source}")
            if e.target not in known:
                raise CrossReferenceError(f"edge references unknown node {e.target}")
            if e.length <= 0:
                raise ValueError(
                    f"edge ({e.source}, {e.target}) has non-positive length {e.length}"
                )
            key = (e.source, e.target)
            if key in seen:
                raise SchemaError(f"duplicate directed edge ({e.source}, {e.target})")
            seen.add(key)

    def node_ids(self) -> frozenset[int]:
        return frozenset(n.id for n in self.nodes)

    def lengths(self) -> dict[tuple[int, int], float]:
        """Directed edge -> length mapping."""
        return {(e.source, e.target): e.length for e in self.edges}


@dataclass(frozen=True)
class Agv:
    id: str
    attributes: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Task:
    id: str
    agv: str
    origin: int
    destination: int
    attributes: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class FleetConfig:
    agvs: tuple[Agv, ...]
    tasks: tuple[Task, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "agvs", tuple(self.agvs))
        object.__setattr__(self, "tasks", tuple(self.tasks))
        agv_ids = [a.id for a in self.agvs]
        if len(set(agv_ids)) != len(agv_ids):
            raise SchemaError("duplicate agv ids")
        task_ids = [t.id for t in self.tasks]
        if len(set(task_ids)) != len(task_ids):
            raise SchemaError("duplicate task ids")
        known = set(agv_ids)
        assigned: set[str] = set()
        for t in self.tasks:
            if t.agv not in known:
                raise CrossReferenceError(f"task {t.id} references unknown agv {t.agv}")
            if t.agv in assigned:
                raise SchemaError(f"agv {t.agv} carries more than one task")
            assigned.add(t.agv)

    def task_for(self, agv_id: str) -> Task | None:
        for t in self.tasks:
            if t.agv == agv_id:
                return t
        return None

    def task_by_id(self, task_id: str) -> Task | None:
        for t in self.tasks:
            if t.id == task_id:
                return t
        return None


@dataclass(frozen=True)
class Requirements:
    level: str
    texts: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "texts", tuple(self.texts))
        if self.level not in EXPERTISE_LEVELS:
            raise SchemaError(f"unknown expertise level '{self.level}'")


@dataclass(frozen=True)
class TerminalEnv:
    network: Network
    fleet: FleetConfig
    requirements: Requirements

    def __post_init__(self) -> None:
        known = self.network.node_ids()
        for t in self.fleet.tasks:
            for node in (t.origin, t.destination):
                if node not in known:
                    raise CrossReferenceError(
                        f"task {t.id} references unknown node {node}"
                    )


@dataclass(frozen=True)
class ScenarioSpec:
    """Structured ground-truth description of one dispatching scenario."""

    kind: str
    edge: tuple[int, int] | None = None
    vehicle: str | None = None
    task: str | None = None
    nodes: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.nodes is not None:
            object.__setattr__(self, "nodes", tuple(self.nodes))
        if self.edge is not None:
            object.__setattr__(self, "edge", tuple(self.edge))
        if self.kind not in SCENARIO_KINDS:
            raise SchemaError(f"unknown scenario kind '{self.kind}'")
        if self.kind == "road_closure":
            if self.edge is None or len(self.edge) != 2:
                raise SchemaError("road_closure requires an edge pair")
        elif self.kind == "forbidden_edge_vehicle":
            if self.vehicle is None or self.edge is None or len(self.edge) != 2:
                raise SchemaError(
                    "forbidden_edge_vehicle requires a vehicle and an edge pair"
                )
        else:
            if self.task is None or self.nodes is None or len(self.nodes) < 2:
                raise SchemaError(
                    "designated_route requires a task and at least two nodes"
                )

    def validate_against(self, env: TerminalEnv) -> None:
        known = env.network.node_ids()
        for node in (self.edge or ()) + (self.nodes or ()):
            if node not in known:
                raise CrossReferenceError(f"scenario references unknown node {node}")
        if self.vehicle is not None:
            if self.vehicle not in {a.id for a in env.fleet.agvs}:
                raise CrossReferenceError(
                    f"scenario references unknown vehicle {self.vehicle}"
                )
        if self.task is not None and env.fleet.task_by_id(self.task) is None:
            raise CrossReferenceError(f"scenario references unknown task {self.task}")

    def to_dict(self) -> dict[str, Any]:
        params: dict[str, Any] = {}
        if self.edge is not None:
            params["edge"] = list(self.edge)
        if self.vehicle is not None:
            params["vehicle"] = self.vehicle
        if self.task is not None:
            params["task"] = self.task
        if self.nodes is not None:
            params["nodes"] = list(self.nodes)
        return {"kind": self.kind, "params": params}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ScenarioSpec":
        kind = _require(data, "kind", str, "scenario")
        params = data.get("params", {})
        if not isinstance(params, dict):
            raise SchemaError("scenario.params: expected an object")
        edge = params.get("edge")
        if edge is not None:
            if (not isinstance(edge, (list, tuple)) or len(edge) != 2
                    or not all(isinstance(n, int) and not isinstance(n, bool)
                               for n in edge)):
                raise SchemaError("scenario.params.edge: expected [int, int]")
            edge = tuple(edge)
        nodes = params.get("nodes")
        if nodes is not None:
            if (not isinstance(nodes, (list, tuple))
                    or not all(isinstance(n, int) and not isinstance(n, bool)
                               for n in nodes)):
                raise SchemaError("scenario.params.nodes: expected a list of ints")
            nodes = tuple(nodes)
        return cls(kind=kind, edge=edge, vehicle=params.get("vehicle"),
                   task=params.get("task"), nodes=nodes)


def parse_network(text: str | IO[str]) -> Network:
    try:
        data = json.loads(_read(text))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"network: invalid JSON ({exc})") from exc
    raw_nodes = _require(data, "nodes", list, "network")
    raw_edges = _require(data, "edges", list, "network")
    nodes = []
    for i, item in enumerate(raw_nodes):
        node_id = _require(item, "id", int, f"network.nodes[{i}]")
        node_type = item.get("type")
        if node_type is not None and not isinstance(node_type, str):
            raise SchemaError(f"network.nodes[{i}].type: wrong type")
        nodes.append(Node(id=node_id, type=node_type))
    edges = []
    for i, item in enumerate(raw_edges):
        where = f"network.edges[{i}]"
        edges.append(Edge(
            source=_require(item, "source", int, where),
            target=_require(item, "target", int, where),
            length=_require(item, "length", (int, float), where),
        ))
    return Network(nodes=tuple(nodes), edges=tuple(edges))


def parse_fleet_config(text: str | IO[str]) -> FleetConfig:
    try:
        data = json.loads(_read(text))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"config: invalid JSON ({exc})") from exc
    raw_agvs = _require(data, "agvs", list, "config")
    raw_tasks = _require(data, "tasks", list, "config")
    agvs = []
    for i, item in enumerate(raw_agvs):
        where = f"config.agvs[{i}]"
        attrs = item.get("attributes", {}) if isinstance(item, dict) else {}
        if not isinstance(attrs, dict):
            raise SchemaError(f"{where}.attributes: expected an object")
        agvs.append(Agv(id=_require(item, "id", str, where), attributes=attrs))
    tasks = []
    for i, item in enumerate(raw_tasks):
        where = f"config.tasks[{i}]"
        attrs = item.get("attributes", {}) if isinstance(item, dict) else {}
        if not isinstance(attrs, dict):
            raise SchemaError(f"{where}.attributes: expected an object")
        tasks.append(Task(
            id=_require(item, "id", str, where),
            agv=_require(item, "agv", str, where),
            origin=_require(item, "origin", int, where),
            destination=_require(item, "destination", int, where),
            attributes=attrs,
        ))
    return FleetConfig(agvs=tuple(agvs), tasks=tuple(tasks))


def parse_requirements(text: str | IO[str]) -> Requirements:
    try:
        data = json.loads(_read(text))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"requirements: invalid JSON ({exc})") from exc
    level = _require(data, "expertise_level", str, "requirements")
    raw = _require(data, "requirements", list, "requirements")
    texts = []
    for i, item in enumerate(raw):
        if not isinstance(item, str):
            raise SchemaError(f"requirements.requirements[{i}]: wrong type")
        texts.append(item)
    return Requirements(level=level, texts=tuple(texts))


def parse_environment(network_text: str | IO[str], config_text: str | IO[str],
                      requirements_text: str | IO[str]) -> TerminalEnv:
    """Parse and cross-validate the three environment documents."""
    return TerminalEnv(
        network=parse_network(network_text),
        fleet=parse_fleet_config(config_text),
        requirements=parse_requirements(requirements_text),
    )


def default_network() -> Network:
    """The standard benchmark road grid.

    4 rows x 5 columns, nodes 0..19 row-major, every grid adjacency is
    bidirectional with length 10, plus the diagonal pair (6,10)/(10,6)
    with length 14 (20 nodes, 64 directed edges).
    """
    nodes = tuple(Node(id=i) for i in range(20))
    pairs: list[tuple[int, int, float]] = []
    for row in range(4):
        for col in range(5):
            u = row * 5 + col
            if col + 1 < 5:
                pairs.append((u, u + 1, 10))
            if row + 1 < 4:
                pairs.append((u, u + 5, 10))
    pairs.append((6, 10, 14))
    edges = []
    for u, v, length in pairs:
        edges.append(Edge(u, v, length))
        edges.append(Edge(v, u, length))
    edges.sort(key=lambda e: (e.source, e.target))
    return Network(nodes=nodes, edges=tuple(edges))


def env_digest(env: TerminalEnv) -> str:
    """Compact deterministic text rendering of an environment.

    Used both inside prompts and as the `env_digest` field of stored
    exemplars, so it must stay stable across runs.
    """
    lines = []
    node_bits = []
    for n in sorted(env.network.nodes, key=lambda n: n.id):
        node_bits.append(f"{n.id}:{n.type}" if n.type else str(n.id))
    lines.append(f"nodes ({len(node_bits)}): " + " ".join(node_bits))
    edge_bits = []
    for e in sorted(env.network.edges, key=lambda e: (e.source, e.target)):
        edge_bits.append(f"{e.source}->{e.target}:{e.length:g}")
    lines.append(f"edges ({len(edge_bits)}): " + " ".join(edge_bits))
    agv_bits = []
    for a in env.fleet.agvs:
        attrs = ",".join(f"{k}={a.attributes[k]}" for k in sorted(a.attributes))
        agv_bits.append(f"{a.id}[{attrs}]" if attrs else a.id)
    lines.append(f"agvs ({len(agv_bits)}): " + " ".join(agv_bits))
    task_bits = []
    for t in env.fleet.tasks:
        attrs = ",".join(f"{k}={t.attributes[k]}" for k in sorted(t.attributes))
        bit = f"{t.id}:{t.agv}:{t.origin}->{t.destination}"
        task_bits.append(f"{bit}[{attrs}]" if attrs else bit)
    lines.append(f"tasks ({len(task_bits)}): " + " ".join(task_bits))
    return "\n".join(lines)


def _vehicle_number(vehicle_id: str) -> str:
    match = re.search(r"(\d+)$", vehicle_id)
    return match.group(1) if match else vehicle_id


def scenario_prompt(spec: ScenarioSpec, level: str) -> str:
    """The natural-language requirement for (scenario, expertise level)."""
    if level not in EXPERTISE_LEVELS:
        raise UnknownCombination(f"unknown expertise level '{level}'")
    if spec.kind == "road_closure":
        u, v = spec.edge
        if level == "technician":
            return f"That road between node {u} and node {v} can't be used today."
        if level == "engineer":
            return (f"Attention: The bidirectional road segment connecting nodes "
                    f"({u}, {v}) is completely closed.")
        return (f"The model must satisfy a topology constraint: remove the edge "
                f"subset E' = {{({u},{v}), ({v},{u})}} from the network graph.")
    if spec.kind == "forbidden_edge_vehicle":
        u, v = spec.edge
        vid = spec.vehicle
        if level == "technician":
            return (f"{vid} in the fleet is one of those extra-tall ones; it can't "
                    f"get under the low bridge between node {u} and node {v}.")
        if level == "engineer":
            return (f"Attention: {vid} in the fleet is an over-height vehicle and "
                    f"cannot pass through the bidirectional height-restricted "
                    f"gantry connecting ({u}, {v}).")
        num = _vehicle_number(vid)
        return (f"A vehicle-path compatibility constraint must be enforced: for "
                f"v={num}, the decision variable x_ve must be 0 for all e in "
                f"{{({u},{v}), ({v},{u})}}.")
    if spec.kind == "designated_route":
        tid = spec.task
        nodes = spec.nodes
        if level == "technician":
            hops = ", then ".join(
                f"go from {a} to {b}" if i == 0 else f"from {a} to {b}"
                for i, (a, b) in enumerate(zip(nodes, nodes[1:]))
            )
            return (f"The container for {tid} has dangerous goods, so it has to "
                    f"stick to the safe route: {hops}. No exceptions.")
        if level == "engineer":
            corridor = "->".join(str(n) for n in nodes)
            return (f"Task {tid} involves dangerous goods and must follow the "
                    f"designated one-way safety corridor ({corridor}).")
        seq = ", ".join(str(n) for n in nodes)
        return (f"A mandatory subpath constraint must be applied to the AGV "
                f"assigned to task {tid}, ensuring its solution path contains "
                f"the subsequence ({seq}).")
    raise UnknownCombination(f"unknown scenario kind '{spec.kind}'")
