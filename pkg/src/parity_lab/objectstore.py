"""Content-addressed store for blobs, trees, and repository records.

Objects are addressed by the SHA-256 of their content (blobs) or of a
canonical entry serialization (trees), so identical fixtures always produce
identical ids. Repository records live in a separate table keyed by
(owner, name) and are not content-addressed.
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Union

OID_HEX_LENGTH = 64

# A blob counts as binary iff a zero byte occurs this early in its content.
BINARY_SNIFF_LIMIT = 8000


class StoreError(Exception):
    """Base class for object store failures."""


class UnknownOidError(StoreError):
    def __init__(self, oid: str):
        super().__init__(f"no object stored under oid {oid}")
        self.oid = oid


class ObjectKindCollisionError(StoreError):
    """Same oid already holds an object of a different kind.

    Only reachable when a blob's raw bytes equal a canonical tree
    serialization (the empty input is the everyday case); the single
    content-addressed namespace refuses rather than silently aliasing.
    """


class DanglingEntryError(StoreError):
    def __init__(self, entry: "TreeEntry"):
        super().__init__(
            f"tree entry {entry.name!r} references {entry.kind.value} {entry.oid} "
            "which is not stored"
        )
        self.entry = entry


class DuplicateEntryNameError(StoreError):
    def __init__(self, name: str):
        super().__init__(f"duplicate tree entry name {name!r}")
        self.name = name


class DuplicateRepositoryError(StoreError):
    pass


class UnknownRepositoryError(StoreError):
    def __init__(self, owner: str, name: str):
        super().__init__(f"unknown repository {owner}/{name}")
        self.owner = owner
        self.name = name


class PathNotFoundError(StoreError):
    def __init__(self, path: str, segment: str):
        super().__init__(f"path {path!r} not found (missing segment {segment!r})")
        self.path = path
        self.segment = segment


class NotATreeError(StoreError):
    def __init__(self, path: str, segment: str):
        super().__init__(f"path {path!r} descends through blob {segment!r}")
        self.path = path
        self.segment = segment


def compute_oid(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def looks_binary(content: bytes) -> bool:
    """Zero-byte-in-prefix heuristic shared by the store and its tests."""
    return b"\x00" in content[:BINARY_SNIFF_LIMIT]


class ObjectKind(str, Enum):
    BLOB = "blob"
    TREE = "tree"


@dataclass(frozen=True)
class Blob:
    content: bytes
    is_binary: bool = field(init=False)
    byte_size: int = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "is_binary", looks_binary(self.content))
        object.__setattr__(self, "byte_size", len(self.content))


@dataclass(frozen=True)
class TreeEntry:
    name: str
    kind: ObjectKind
    oid: str

    def __post_init__(self) -> None:
        if not self.name or "/" in self.name or "\x00" in self.name:
            raise ValueError(f"invalid tree entry name {self.name!r}")
        if len(self.oid) != OID_HEX_LENGTH or any(
            c not in "0123456789abcdef" for c in self.oid
        ):
            raise ValueError(f"invalid oid {self.oid!r}")


@dataclass(frozen=True)
class Tree:
    entries: tuple[TreeEntry, ...]


class RepoState(str, Enum):
    ACTIVE = "active"
    DISABLED = "disabled"


class DisabledReason(str, Enum):
    TRADE_RESTRICTION = "trade_restriction"
    PAYMENT_FAILURE = "payment_failure"
    ABUSE_POLICY = "abuse_policy"


@dataclass(frozen=True)
class RepositoryStatus:
    state: RepoState
    reason: DisabledReason | None = None

    def __post_init__(self) -> None:
        if (self.state is RepoState.DISABLED) != (self.reason is not None):
            raise ValueError("reason must be present iff state is disabled")


class Visibility(str, Enum):
    PUBLIC = "public"
    PRIVATE = "private"


@dataclass(frozen=True)
class Repository:
    owner: str
    name: str
    visibility: Visibility
    status: RepositoryStatus
    root: str  # oid of a Tree


GitObject = Union[Blob, Tree]


def canonical_tree_serialization(entries: Iterable[TreeEntry]) -> bytes:
    """One "kind name oid" line per entry, newline-joined, no trailing newline."""
    return "\n".join(f"{e.kind.value} {e.name} {e.oid}" for e in entries).encode("utf-8")


class ObjectStore:
    """In-memory object graph with an instrumented object-read counter.

    Reads may run concurrently; writes take the store lock. Handed-out
    objects are immutable, so sharing them across threads is safe.
    Repository-table lookups are intentionally not counted as object
    reads: the policy layer may consult repository status without the
    store being considered "touched".
    """

    def __init__(self) -> None:
        self._objects: dict[str, GitObject] = {}
        self._repos: dict[tuple[str, str], Repository] = {}
        self._lock = threading.Lock()
        self._object_reads = 0

    @property
    def object_reads(self) -> int:
        return self._object_reads

    def put_blob(self, content: bytes) -> str:
        blob = Blob(content)
        oid = compute_oid(content)
        with self._lock:
            existing = self._objects.get(oid)
            if existing is not None and not isinstance(existing, Blob):
                raise ObjectKindCollisionError(
                    f"oid {oid} already holds a tree; refusing to store blob"
                )
            self._objects[oid] = blob
        return oid

    def put_tree(self, entries: Iterable[TreeEntry]) -> str:
        ordered = tuple(sorted(entries, key=lambda e: e.name))
        seen: set[str] = set()
        for entry in ordered:
            if entry.name in seen:
                raise DuplicateEntryNameError(entry.name)
            seen.add(entry.name)
        with self._lock:
            for entry in ordered:
                obj = self._objects.get(entry.oid)
                expected = Blob if entry.kind is ObjectKind.BLOB else Tree
                if not isinstance(obj, expected):
                    raise DanglingEntryError(entry)
            oid = compute_oid(canonical_tree_serialization(ordered))
            existing = self._objects.get(oid)
            if existing is not None and not isinstance(existing, Tree):
                raise ObjectKindCollisionError(
                    f"oid {oid} already holds a blob; refusing to store tree"
                )
            self._objects[oid] = Tree(ordered)
        return oid

    def get_object(self, oid: str) -> GitObject:
        with self._lock:
            self._object_reads += 1
            obj = self._objects.get(oid)
        if obj is None:
            raise UnknownOidError(oid)
        return obj

    def add_repository(self, repo: Repository) -> None:
        with self._lock:
            key = (repo.owner, repo.name)
            if key in self._repos:
                raise DuplicateRepositoryError(f"repository {repo.owner}/{repo.name} already registered")
            root = self._objects.get(repo.root)
            if not isinstance(root, Tree):
                raise StoreError(
                    f"repository {repo.owner}/{repo.name} root {repo.root} "
                    "does not resolve to a stored tree"
                )
            self._repos[key] = repo

    def get_repository(self, owner: str, name: str) -> Repository:
        repo = self._repos.get((owner, name))
        if repo is None:
            raise UnknownRepositoryError(owner, name)
        return repo

    def repositories(self) -> list[Repository]:
        return list(self._repos.values())

    def resolve_path(self, repo: Repository, path: str) -> GitObject:
        """Walk the repository root tree; empty path denotes the root itself."""
        current: GitObject = self.get_object(repo.root)
        if path == "":
            return current
        segments = path.split("/")
        for i, segment in enumerate(segments):
            if not isinstance(current, Tree):
                raise NotATreeError(path, segments[i - 1])
            match = next((e for e in current.entries if e.name == segment), None)
            if match is None:
                raise PathNotFoundError(path, segment)
            current = self.get_object(match.oid)
        return current
