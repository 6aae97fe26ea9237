"""Recovery client: restore a repository's files over the query surface.

Walks the directory tree breadth-first, pulls text blobs through the
public ``text`` field, and pulls binary blobs through the private
``file``/``contentHTML`` field by splicing that selection as raw text
into a builder-printed query (the private field cannot be expressed
through the typed builder, exactly because it is unpublished). Restored
bytes are written atomically and verified against server-reported sizes.
"""

from __future__ import annotations

import base64
import json
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .graphql import Document, Field, OperationDefinition, StringValue, parse, print_document

BLOCKED_MESSAGE = "Repository access blocked"
_ENVELOPE_RE = re.compile(
    r'<div class="blob-file" data-encoding="base64">([A-Za-z0-9+/=]*)</div>\Z'
)

WALK_QUERY = (
    "query RepoFiles($owner: String!, $name: String!, $expr: String!) "
    "{ repository(owner: $owner, name: $name) { object(expression: $expr) "
    "{ ... on Tree { entries { name type oid } } } } }"
)
TEXT_QUERY = (
    "query RepoBlobText($owner: String!, $name: String!, $expr: String!) "
    "{ repository(owner: $owner, name: $name) { object(expression: $expr) "
    "{ ... on Blob { text isBinary byteSize } } } }"
)


class RecoveryError(Exception):
    pass


class RecoveryAuthError(RecoveryError):
    pass


class RepositoryBlockedError(RecoveryError):
    """The server enforced the block; carries the server's message."""


class BlobIsBinaryError(RecoveryError):
    def __init__(self, path: str):
        super().__init__(f"{path!r} is a binary blob; text fetch is not applicable")
        self.path = path


class SizeMismatchError(RecoveryError):
    def __init__(self, path: str, expected: int, actual: int):
        super().__init__(f"{path!r}: server reports {expected} bytes, got {actual}")
        self.path = path


class FieldUnavailableError(RecoveryError):
    """The private file field was refused (public token or missing feature header)."""


class EnvelopeParseError(RecoveryError):
    pass


@dataclass(frozen=True)
class WalkEntry:
    path: str
    kind: str  # "blob" | "tree"
    oid: str


@dataclass(frozen=True)
class SkippedFile:
    path: str
    reason: str


@dataclass(frozen=True)
class RecoveryPlan:
    target: str
    owner: str
    name: str
    public_token: str
    output_dir: str | Path
    private_token: str | None = None
    max_in_flight: int = 4

    def __post_init__(self) -> None:
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")


@dataclass
class RecoveryReport:
    files_restored: int = 0
    bytes_restored: int = 0
    binary_files: int = 0
    skipped: list[SkippedFile] = field(default_factory=list)
    bfs_order: list[str] = field(default_factory=list)

    def to_payload(self) -> dict:
        return {
            "files_restored": self.files_restored,
            "bytes_restored": self.bytes_restored,
            "binary_files": self.binary_files,
            "skipped": [{"path": s.path, "reason": s.reason} for s in self.skipped],
            "bfs_order": self.bfs_order,
        }


def _post_graphql(
    target: str,
    query: str,
    operation_name: str,
    token: str,
    variables: dict | None = None,
    features: str | None = None,
) -> dict:
    headers = {
        "Authorization": f"Bearer {token}",
        "X-APOLLO-OPERATION-NAME": operation_name,
    }
    if features:
        headers["GraphQL-Features"] = features
    response = requests.post(
        f"{target.rstrip('/')}/graphql",
        json={"operationName": operation_name, "query": query, "variables": variables},
        headers=headers,
        timeout=30,
    )
    if response.status_code == 401:
        raise RecoveryAuthError("server rejected the token (401)")
    payload = response.json()
    for error in payload.get("errors") or []:
        if error.get("message") == BLOCKED_MESSAGE:
            raise RepositoryBlockedError(error["message"])
    return payload


def bfs_walk(target: str, owner: str, name: str, token: str) -> list[WalkEntry]:
    """List every tree and blob under the repository root, breadth-first.

    Trees are expanded level by level; within a level, siblings keep the
    server's (sorted) order. Raises RepositoryBlockedError when the
    server enforces the block, which callers report rather than retry.
    """
    order: list[WalkEntry] = []
    queue: list[str] = [""]
    while queue:
        tree_path = queue.pop(0)
        entries = _list_tree(target, owner, name, tree_path, token)
        for entry in entries:
            child_path = f"{tree_path}/{entry['name']}" if tree_path else entry["name"]
            order.append(WalkEntry(child_path, entry["type"], entry["oid"]))
            if entry["type"] == "tree":
                queue.append(child_path)
    return order


def _list_tree(target: str, owner: str, name: str, tree_path: str, token: str) -> list[dict]:
    payload = _post_graphql(
        target,
        WALK_QUERY,
        "RepoFiles",
        token,
        variables={"owner": owner, "name": name, "expr": f"HEAD:{tree_path}"},
    )
    repository = (payload.get("data") or {}).get("repository")
    if repository is None:
        messages = "; ".join(e.get("message", "") for e in payload.get("errors") or [])
        raise RecoveryError(f"could not read repository {owner}/{name}: {messages or 'no data'}")
    obj = repository.get("object")
    if obj is None or "entries" not in obj:
        raise RecoveryError(f"{'HEAD:' + tree_path!r} did not resolve to a tree")
    return obj["entries"]


def fetch_text_blob(target: str, owner: str, name: str, path: str, token: str) -> bytes:
    """Fetch a non-binary blob through the public text field."""
    payload = _post_graphql(
        target,
        TEXT_QUERY,
        "RepoBlobText",
        token,
        variables={"owner": owner, "name": name, "expr": f"HEAD:{path}"},
    )
    repository = (payload.get("data") or {}).get("repository")
    obj = (repository or {}).get("object")
    if obj is None:
        raise RecoveryError(f"blob {path!r} did not resolve")
    if obj.get("isBinary") or obj.get("text") is None:
        raise BlobIsBinaryError(path)
    content = obj["text"].encode("utf-8")
    if len(content) != obj.get("byteSize"):
        raise SizeMismatchError(path, obj.get("byteSize", -1), len(content))
    return content


def build_binary_query(owner: str, name: str, path: str) -> str:
    """Print the builder's repository query, then splice in the private field.

    The raw selection is inserted immediately before the closing brace of
    the repository selection, and the result must parse under the same
    grammar the server uses; an injection that breaks the document is a
    bug here, not a server-side surprise.
    """
    base = Document(
        OperationDefinition(
            name="RepoBinary",
            variable_definitions=(),
            selection_set=(
                Field(
                    name="repository",
                    arguments=(("owner", StringValue(owner)), ("name", StringValue(name))),
                    selection_set=(Field(name="name"),),
                ),
            ),
        )
    )
    printed = print_document(base).rstrip()
    selection = f"file(path: {json.dumps(path)}) {{ contentHTML }}"
    document_close = printed.rfind("}")
    repository_close = printed.rfind("}", 0, document_close)
    injected = printed[:repository_close] + selection + " " + printed[repository_close:]
    parse(injected)
    return injected


def fetch_binary_blob(target: str, owner: str, name: str, path: str, private_token: str) -> bytes:
    """Fetch any blob through the private file field, decoding its envelope."""
    query = build_binary_query(owner, name, path)
    payload = _post_graphql(
        target, query, "RepoBinary", private_token, features="pe_mobile"
    )
    for error in payload.get("errors") or []:
        if "Field 'file'" in error.get("message", ""):
            raise FieldUnavailableError(error["message"])
    repository = (payload.get("data") or {}).get("repository")
    file_node = (repository or {}).get("file")
    if file_node is None:
        raise RecoveryError(f"file {path!r} did not resolve")
    return decode_content_html(file_node.get("contentHTML") or "")


def decode_content_html(envelope: str) -> bytes:
    match = _ENVELOPE_RE.match(envelope)
    if match is None:
        raise EnvelopeParseError(f"unrecognized contentHTML envelope: {envelope[:80]!r}")
    return base64.b64decode(match.group(1))


def recover(plan: RecoveryPlan) -> RecoveryReport:
    """Walk, fetch, and write every reachable file; report what happened.

    Aborts only when the token is rejected or the repository is blocked
    at the root; per-file failures land in ``skipped``. Blob downloads
    run up to ``max_in_flight`` at a time, but writes and the report
    follow the walk order, so output is deterministic.
    """
    out_dir = Path(plan.output_dir)
    if out_dir.exists() and any(out_dir.iterdir()):
        raise RecoveryError(f"output directory {out_dir} is not empty")
    out_dir.mkdir(parents=True, exist_ok=True)

    walk = bfs_walk(plan.target, plan.owner, plan.name, plan.public_token)
    report = RecoveryReport(bfs_order=[entry.path for entry in walk])
    blobs = [entry for entry in walk if entry.kind == "blob"]

    def fetch(entry: WalkEntry) -> tuple[str, bytes | str, bool]:
        try:
            return "ok", fetch_text_blob(
                plan.target, plan.owner, plan.name, entry.path, plan.public_token
            ), False
        except BlobIsBinaryError:
            pass
        except RecoveryAuthError:
            raise
        except RecoveryError as err:
            return "skipped", str(err), False
        if plan.private_token is None:
            return "skipped", "binary requires private token", False
        try:
            return "ok", fetch_binary_blob(
                plan.target, plan.owner, plan.name, entry.path, plan.private_token
            ), True
        except RecoveryAuthError:
            raise
        except RecoveryError as err:
            return "skipped", str(err), False

    with ThreadPoolExecutor(max_workers=plan.max_in_flight) as pool:
        results = list(pool.map(fetch, blobs))

    for entry, (status, value, used_private_field) in zip(blobs, results):
        if status == "skipped":
            report.skipped.append(SkippedFile(entry.path, str(value)))
            continue
        assert isinstance(value, bytes)
        _write_atomic(out_dir, entry.path, value)
        report.files_restored += 1
        report.bytes_restored += len(value)
        if used_private_field:
            report.binary_files += 1
    return report


def _write_atomic(out_dir: Path, rel_path: str, content: bytes) -> None:
    destination = out_dir / rel_path
    destination.parent.mkdir(parents=True, exist_ok=True)
    temp = destination.parent / f".{destination.name}.part"
    temp.write_bytes(content)
    os.replace(temp, destination)
