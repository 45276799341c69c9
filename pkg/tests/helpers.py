"""Independent brute-force reference implementations.

Everything here avoids the library's own algorithms: shortest paths are
found by exhaustive enumeration and costs are summed with Fractions, so
these functions can serve as ground truth for exactness tests.
"""

from __future__ import annotations

import random
import string
from fractions import Fraction

from vdsagent import dsl

EdgeMap = dict[tuple[int, int], float]


def random_ast(rng: random.Random) -> dsl.ModelAst:
    """A random syntactically valid program AST (may fail static checks)."""
    def ident() -> str:
        first = rng.choice(string.ascii_letters + "_")
        rest = "".join(rng.choices(string.ascii_letters + string.digits + "_",
                                   k=rng.randrange(0, 12)))
        return first + rest

    def subject() -> dsl.SubjectRef:
        chars = "".join(c for c in string.printable if c not in '"\n\r\x0b\x0c')
        name = "".join(rng.choices(chars, k=rng.randrange(1, 10)))
        return dsl.SubjectRef(kind=rng.choice(("vehicle", "task")), ident=name)

    def node() -> int:
        return rng.randrange(0, 1000)

    def statement() -> dsl.Statement:
        pick = rng.randrange(5)
        if pick == 0:
            return dsl.FlowBalanceAll()
        if pick == 1:
            return dsl.RemoveEdge(node(), node())
        if pick == 2:
            return dsl.ForbidEdge(subject(), node(), node())
        nodes = tuple(node() for _ in range(rng.randrange(2, 6)))
        if pick == 3:
            return dsl.RequireSubpath(subject(), nodes)
        return dsl.RequireExactPath(subject(), nodes)

    return dsl.ModelAst(
        name=ident(),
        statements=tuple(statement() for _ in range(rng.randrange(0, 8))),
    )


def path_cost(edges: EdgeMap, path: tuple[int, ...]) -> Fraction | None:
    """Exact cost of a walk, or None when an edge is missing."""
    total = Fraction(0)
    for u, v in zip(path, path[1:]):
        if (u, v) not in edges:
            return None
        total += Fraction(edges[(u, v)])
    return total


def simple_paths(edges: EdgeMap, source: int, target: int):
    """All node-simple paths source -> target (DFS enumeration)."""
    adjacency: dict[int, list[int]] = {}
    for (u, v) in edges:
        adjacency.setdefault(u, []).append(v)
    out: list[tuple[int, ...]] = []

    def dfs(node: int, path: list[int], seen: set[int]) -> None:
        if node == target:
            out.append(tuple(path))
            return
        for nxt in adjacency.get(node, ()):
            if nxt not in seen:
                seen.add(nxt)
                path.append(nxt)
                dfs(nxt, path, seen)
                path.pop()
                seen.discard(nxt)

    dfs(source, [source], {source})
    return out


def min_simple_path(edges: EdgeMap, source: int,
                    target: int) -> tuple[Fraction, tuple[int, ...]] | None:
    """Cheapest node-simple path, ties by lexicographic node sequence.

    With strictly positive lengths this also minimizes over all
    edge-simple walks, because dropping any cycle strictly lowers cost.
    """
    if source == target:
        return Fraction(0), (source,)
    best = None
    for path in simple_paths(edges, source, target):
        cand = (path_cost(edges, path), path)
        if best is None or cand < best:
            best = cand
    return best


def edge_simple_walks(edges: EdgeMap, source: int, target: int):
    """All walks source -> target that never repeat a directed edge."""
    adjacency: dict[int, list[int]] = {}
    for (u, v) in edges:
        adjacency.setdefault(u, []).append(v)
    out: list[tuple[int, ...]] = []

    def dfs(node: int, path: list[int], used: set[tuple[int, int]]) -> None:
        if node == target:
            out.append(tuple(path))
        for nxt in adjacency.get(node, ()):
            if (node, nxt) not in used:
                used.add((node, nxt))
                path.append(nxt)
                dfs(nxt, path, used)
                path.pop()
                used.discard((node, nxt))

    dfs(source, [source], set())
    return out


def contains_contiguous(path: tuple[int, ...], forced: tuple[int, ...]) -> bool:
    k = len(forced)
    return any(path[i:i + k] == forced for i in range(len(path) - k + 1))


def min_walk(edges: EdgeMap, source: int, target: int,
             forced: tuple[int, ...] | None = None
             ) -> tuple[Fraction, tuple[int, ...]] | None:
    """Cheapest edge-simple walk, optionally containing a forced segment."""
    if source == target and forced is None:
        return Fraction(0), (source,)
    best = None
    for path in edge_simple_walks(edges, source, target):
        if forced is not None and not contains_contiguous(path, forced):
            continue
        cand = (path_cost(edges, path), path)
        if best is None or cand < best:
            best = cand
    return best
