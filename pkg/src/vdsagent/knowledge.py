"""Knowledge base of modeling primitives and worked exemplars.

Primitives are markdown files with YAML front-matter (id, category,
title); exemplars are one-JSON-file-per-entry so accumulated knowledge
stays reviewable.  Retrieval is lexical BM25 (k1=1.2, b=0.75) over the
lowercased, punctuation-split text of description + program.

BM25 statistics (N, document frequency, average length) are computed
over the matching subset only (documents sharing at least one query
term): corpus-global statistics let a zero-overlap document reorder
existing results, which retrieval here must never do.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import yaml

from . import dsl
from .env import TerminalEnv, env_digest
from .errors import ValidationError

PRIMITIVE_CATEGORIES = ("variable_definition", "constraint_formulation",
                        "objective_function")

BM25_K1 = 1.2
BM25_B = 0.75

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Primitive:
    id: str
    category: str
    title: str
    body: str

    def __post_init__(self) -> None:
        if self.category not in PRIMITIVE_CATEGORIES:
            raise ValidationError(
                f"primitive {self.id}: unknown category '{self.category}'")


@dataclass(frozen=True)
class Exemplar:
    id: str
    description: str
    env_digest: str
    program: str

    def document(self) -> str:
        return self.description + "\n" + self.program


@dataclass(frozen=True)
class RetrievedContext:
    primitives: tuple[Primitive, ...]
    exemplars: tuple[Exemplar, ...]
    scores: tuple[float, ...]


def validate_exemplar(ex: Exemplar) -> None:
    """Raise ValidationError unless the exemplar is usable as a shot."""
    if not ex.id:
        raise ValidationError("exemplar has an empty id")
    if not ex.description.strip():
        raise ValidationError(f"exemplar {ex.id}: empty description")
    try:
        ast = dsl.parse(ex.program)
    except dsl.DslError as exc:
        raise ValidationError(f"exemplar {ex.id}: program does not parse "
                              f"({exc})") from exc
    problems = dsl.static_check(ast)
    if problems:
        raise ValidationError(
            f"exemplar {ex.id}: program fails static checks ({problems[0]})")


class KnowledgeBase:
    """Append-only store.  Single writer; reads are safe to share."""

    def __init__(self, primitives: Sequence[Primitive] = (),
                 exemplars: Sequence[Exemplar] = (),
                 root: Path | None = None):
        self._primitives: list[Primitive] = list(primitives)
        self._exemplars: list[Exemplar] = list(exemplars)
        self.root = root
        ids = [p.id for p in self._primitives]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate primitive ids")
        ids = [e.id for e in self._exemplars]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate exemplar ids")

    @property
    def primitives(self) -> tuple[Primitive, ...]:
        return tuple(self._primitives)

    @property
    def exemplars(self) -> tuple[Exemplar, ...]:
        return tuple(self._exemplars)

    def snapshot(self) -> "KnowledgeBase":
        """Detached copy; later accumulation does not touch it."""
        return KnowledgeBase(self._primitives, self._exemplars, root=None)

    def append_exemplar(self, ex: Exemplar) -> None:
        validate_exemplar(ex)
        if any(e.id == ex.id for e in self._exemplars):
            raise ValidationError(f"exemplar id {ex.id} already present")
        self._exemplars.append(ex)
        if self.root is not None:
            path = self.root / "exemplars" / f"{ex.id}.json"
            path.parent.mkdir(parents=True, exist_ok=True)
            payload = {"id": ex.id, "description": ex.description,
                       "env_digest": ex.env_digest, "program": ex.program}
            tmp = path.with_suffix(".json.tmp")
            tmp.write_text(json.dumps(payload, indent=2) + "\n",
                           encoding="utf-8")
            tmp.replace(path)

    def next_exemplar_id(self, prefix: str = "acc") -> str:
        existing = {e.id for e in self._exemplars}
        n = len(self._exemplars) + 1
        while f"{prefix}-{n:04d}" in existing:
            n += 1
        return f"{prefix}-{n:04d}"


def _parse_front_matter(text: str, where: str) -> tuple[dict[str, Any], str]:
    lines = text.split("\n")
    if not lines or lines[0].strip() != "---":
        raise ValidationError(f"{where}: missing front-matter")
    try:
        end = next(i for i in range(1, len(lines)) if lines[i].strip() == "---")
    except StopIteration:
        raise ValidationError(f"{where}: unterminated front-matter") from None
    try:
        meta = yaml.safe_load("\n".join(lines[1:end]))
    except yaml.YAMLError as exc:
        raise ValidationError(f"{where}: bad front-matter ({exc})") from exc
    if not isinstance(meta, dict):
        raise ValidationError(f"{where}: front-matter must be a mapping")
    return meta, "\n".join(lines[end + 1:]).strip()


def load(path: str | Path) -> KnowledgeBase:
    """Load a knowledge base directory (primitives/*.md, exemplars/*.json)."""
    root = Path(path)
    if not root.is_dir():
        raise FileNotFoundError(f"knowledge base directory {root} not found")
    primitives = []
    for md in sorted((root / "primitives").glob("*.md")):
        meta, body = _parse_front_matter(md.read_text(encoding="utf-8"), md.name)
        for key in ("id", "category", "title"):
            if not isinstance(meta.get(key), str):
                raise ValidationError(f"{md.name}: front-matter needs '{key}'")
        primitives.append(Primitive(id=meta["id"], category=meta["category"],
                                    title=meta["title"], body=body))
    exemplars = []
    exdir = root / "exemplars"
    if exdir.is_dir():
        for jf in sorted(exdir.glob("*.json")):
            try:
                data = json.loads(jf.read_text(encoding="utf-8"))
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{jf.name}: invalid JSON ({exc})") from exc
            for key in ("id", "description", "env_digest", "program"):
                if not isinstance(data.get(key), str):
                    raise ValidationError(f"{jf.name}: needs string field '{key}'")
            ex = Exemplar(id=data["id"], description=data["description"],
                          env_digest=data["env_digest"], program=data["program"])
            validate_exemplar(ex)
            exemplars.append(ex)
    return KnowledgeBase(primitives, exemplars, root=root)


def seed_kb_path() -> Path:
    """Directory of the knowledge base shipped with the package."""
    return Path(__file__).parent / "data" / "seed_kb"


def load_seed_kb() -> KnowledgeBase:
    kb = load(seed_kb_path())
    kb.root = None  # keep the packaged seed read-only
    return kb


Scorer = Callable[[list[str], list[list[str]]], list[float]]


def bm25_scores(query_terms: list[str], documents: list[list[str]]) -> list[float]:
    """Okapi BM25 with idf = ln(1 + (N - n + 0.5)/(n + 0.5)).

    Duplicate query terms count once.  All statistics are taken over the
    documents that share at least one query term; zero-overlap documents
    score 0 and cannot influence the others.
    """
    terms = sorted(set(query_terms))
    matching = [doc for doc in documents if set(doc) & set(terms)]
    if not matching:
        return [0.0] * len(documents)
    n_docs = len(matching)
    avgdl = sum(len(d) for d in matching) / n_docs
    df = {t: sum(1 for d in matching if t in d) for t in terms}
    scores = []
    for doc in documents:
        score = 0.0
        length = len(doc)
        for term in terms:
            freq = doc.count(term)
            if freq == 0:
                continue
            idf = math.log(1.0 + (n_docs - df[term] + 0.5) / (df[term] + 0.5))
            norm = freq + BM25_K1 * (1.0 - BM25_B + BM25_B * length / avgdl)
            score += idf * freq * (BM25_K1 + 1.0) / norm
        scores.append(score)
    return scores


def retrieve(kb: KnowledgeBase, query: str, k: int,
             scorer: Scorer = bm25_scores) -> RetrievedContext:
    """Rank exemplars for a query; primitives are always all included.

    Returns min(k, |exemplars|) exemplars ordered by score descending,
    ties broken by exemplar id.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    primitives = tuple(sorted(
        kb.primitives,
        key=lambda p: (PRIMITIVE_CATEGORIES.index(p.category), p.id)))
    exemplars = kb.exemplars
    if k == 0 or not exemplars:
        return RetrievedContext(primitives=primitives, exemplars=(), scores=())
    docs = [tokenize(e.document()) for e in exemplars]
    scores = scorer(tokenize(query), docs)
    order = sorted(range(len(exemplars)),
                   key=lambda i: (-scores[i], exemplars[i].id))
    top = order[:k]
    return RetrievedContext(
        primitives=primitives,
        exemplars=tuple(exemplars[i] for i in top),
        scores=tuple(scores[i] for i in top),
    )


def accumulate(kb: KnowledgeBase, env: TerminalEnv, program: str,
               description: str) -> KnowledgeBase:
    """Append a solved transfer as a new exemplar (validated, append-only).

    Persists to kb.root/exemplars/ when the base was loaded from disk.
    Returns the same (mutated) knowledge base for chaining.
    """
    ex = Exemplar(id=kb.next_exemplar_id(), description=description,
                  env_digest=env_digest(env), program=program)
    kb.append_exemplar(ex)
    return kb
