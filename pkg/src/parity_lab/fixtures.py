"""Fixture manifest: the JSON document that seeds a testbed instance.

Shape:

    {
      "accounts":     [{"name": "alice"}, ...],
      "clients":      [{"client_id": ..., "token_kind_issued": ..., "redirect_uri": ...}, ...],
      "repositories": [{"owner": ..., "name": ..., "visibility": ...,
                        "status": "active" | "disabled", "reason": ...?,
                        "files": [{"path": ..., "content_text": ...} |
                                  {"path": ..., "content_base64": ...}, ...]}, ...]
    }

Validation collects every violation before failing so a bad manifest is
fixable in one pass. Loading builds blobs and trees bottom-up, which
makes object ids a pure function of the manifest.
"""

from __future__ import annotations

import base64
import binascii
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .auth import AuthService, OAuthClient, TokenKind
from .objectstore import (
    DisabledReason,
    ObjectKind,
    ObjectStore,
    RepoState,
    Repository,
    RepositoryStatus,
    Tree,
    TreeEntry,
    Visibility,
    looks_binary,
)


class FixtureValidationError(Exception):
    def __init__(self, violations: list[str]):
        super().__init__(
            "invalid fixture manifest:\n" + "\n".join(f"  - {v}" for v in violations)
        )
        self.violations = violations


@dataclass(frozen=True)
class FileFixture:
    path: str
    content: bytes

    @property
    def is_binary(self) -> bool:
        return looks_binary(self.content)


@dataclass(frozen=True)
class RepositoryFixture:
    owner: str
    name: str
    visibility: Visibility
    state: RepoState
    reason: DisabledReason | None
    files: tuple[FileFixture, ...]


@dataclass(frozen=True)
class Manifest:
    accounts: tuple[str, ...]
    clients: tuple[OAuthClient, ...]
    repositories: tuple[RepositoryFixture, ...]


def standard_manifest_path() -> Path:
    """Filesystem path of the bundled two-repository fixture."""
    return Path(str(resources.files("parity_lab").joinpath("data/standard_fixture.json")))


def load_manifest(path: str | Path) -> Manifest:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return parse_manifest(doc)


def parse_manifest(doc: dict) -> Manifest:
    violations: list[str] = []
    accounts: list[str] = []
    clients: list[OAuthClient] = []
    repositories: list[RepositoryFixture] = []

    if not isinstance(doc, dict):
        raise FixtureValidationError(["manifest must be a JSON object"])

    for i, entry in enumerate(doc.get("accounts", [])):
        name = entry.get("name") if isinstance(entry, dict) else None
        if not name or not isinstance(name, str):
            violations.append(f"accounts[{i}]: missing or non-string name")
            continue
        if name in accounts:
            violations.append(f"accounts[{i}]: duplicate account {name!r}")
            continue
        accounts.append(name)

    client_ids: set[str] = set()
    for i, entry in enumerate(doc.get("clients", [])):
        if not isinstance(entry, dict):
            violations.append(f"clients[{i}]: must be an object")
            continue
        client_id = entry.get("client_id")
        kind_text = entry.get("token_kind_issued")
        redirect = entry.get("redirect_uri")
        if not client_id or not isinstance(client_id, str):
            violations.append(f"clients[{i}]: missing or non-string client_id")
            continue
        if client_id in client_ids:
            violations.append(f"clients[{i}]: duplicate client_id {client_id!r}")
            continue
        try:
            kind = TokenKind(kind_text)
        except ValueError:
            violations.append(
                f"clients[{i}]: token_kind_issued must be one of "
                f"{[k.value for k in TokenKind]}, got {kind_text!r}"
            )
            continue
        if not redirect or not isinstance(redirect, str):
            violations.append(f"clients[{i}]: missing or non-string redirect_uri")
            continue
        client_ids.add(client_id)
        clients.append(OAuthClient(client_id, kind, redirect))

    repo_keys: set[tuple[str, str]] = set()
    for i, entry in enumerate(doc.get("repositories", [])):
        where = f"repositories[{i}]"
        if not isinstance(entry, dict):
            violations.append(f"{where}: must be an object")
            continue
        repo = _parse_repository(entry, where, accounts, violations)
        if repo is None:
            continue
        key = (repo.owner, repo.name)
        if key in repo_keys:
            violations.append(f"{where}: duplicate repository {repo.owner}/{repo.name}")
            continue
        repo_keys.add(key)
        repositories.append(repo)

    if violations:
        raise FixtureValidationError(violations)
    return Manifest(tuple(accounts), tuple(clients), tuple(repositories))


def _parse_repository(
    entry: dict, where: str, accounts: list[str], violations: list[str]
) -> RepositoryFixture | None:
    ok = True
    owner = entry.get("owner")
    name = entry.get("name")
    if not owner or not isinstance(owner, str):
        violations.append(f"{where}: missing or non-string owner")
        ok = False
    elif owner not in accounts:
        violations.append(f"{where}: owner {owner!r} is not a declared account")
        ok = False
    if not name or not isinstance(name, str) or "/" in name:
        violations.append(f"{where}: missing or invalid repository name")
        ok = False

    try:
        visibility = Visibility(entry.get("visibility"))
    except ValueError:
        violations.append(f"{where}: visibility must be 'public' or 'private'")
        ok = False
    try:
        state = RepoState(entry.get("status"))
    except ValueError:
        violations.append(f"{where}: status must be 'active' or 'disabled'")
        ok = False
        state = None  # type: ignore[assignment]

    reason: DisabledReason | None = None
    reason_text = entry.get("reason")
    if reason_text is not None:
        try:
            reason = DisabledReason(reason_text)
        except ValueError:
            violations.append(
                f"{where}: reason must be one of {[r.value for r in DisabledReason]}"
            )
            ok = False
    if state is RepoState.DISABLED and reason is None:
        violations.append(f"{where}: disabled repositories need a reason")
        ok = False
    if state is RepoState.ACTIVE and reason is not None:
        violations.append(f"{where}: active repositories must not carry a reason")
        ok = False

    files: list[FileFixture] = []
    seen_paths: set[str] = set()
    for j, file_entry in enumerate(entry.get("files", [])):
        fwhere = f"{where}.files[{j}]"
        if not isinstance(file_entry, dict):
            violations.append(f"{fwhere}: must be an object")
            ok = False
            continue
        path = file_entry.get("path")
        if not path or not isinstance(path, str) or not _valid_path(path):
            violations.append(f"{fwhere}: missing or invalid path {path!r}")
            ok = False
            continue
        if path in seen_paths:
            violations.append(f"{fwhere}: duplicate path {path!r}")
            ok = False
            continue
        content = _parse_content(file_entry, fwhere, violations)
        if content is None:
            ok = False
            continue
        seen_paths.add(path)
        files.append(FileFixture(path, content))

    # Files may not shadow each other's directories (a.txt vs a.txt/b).
    for file in files:
        prefixes = file.path.split("/")[:-1]
        for depth in range(1, len(prefixes) + 1):
            if "/".join(prefixes[:depth]) in seen_paths:
                violations.append(
                    f"{where}: path {file.path!r} descends through file "
                    f"{'/'.join(prefixes[:depth])!r}"
                )
                ok = False

    if not ok:
        return None
    return RepositoryFixture(owner, name, visibility, state, reason, tuple(files))


def _valid_path(path: str) -> bool:
    segments = path.split("/")
    return all(seg and seg not in (".", "..") and "\x00" not in seg for seg in segments)


def _parse_content(file_entry: dict, where: str, violations: list[str]) -> bytes | None:
    text = file_entry.get("content_text")
    b64 = file_entry.get("content_base64")
    if (text is None) == (b64 is None):
        violations.append(f"{where}: exactly one of content_text/content_base64 required")
        return None
    if text is not None:
        if not isinstance(text, str):
            violations.append(f"{where}: content_text must be a string")
            return None
        return text.encode("utf-8")
    if not isinstance(b64, str):
        violations.append(f"{where}: content_base64 must be a string")
        return None
    try:
        return base64.b64decode(b64, validate=True)
    except (binascii.Error, ValueError):
        violations.append(f"{where}: content_base64 is not valid base64")
        return None


def load_fixtures(manifest: Manifest) -> tuple[ObjectStore, AuthService]:
    """Populate a fresh store and auth table from a parsed manifest."""
    store = ObjectStore()
    auth = AuthService()
    for account in manifest.accounts:
        auth.add_account(account)
    for client in manifest.clients:
        auth.register_client(client)
    for repo in manifest.repositories:
        root = _build_tree(store, {f.path: f.content for f in repo.files})
        store.add_repository(
            Repository(
                owner=repo.owner,
                name=repo.name,
                visibility=repo.visibility,
                status=RepositoryStatus(repo.state, repo.reason),
                root=root,
            )
        )
    return store, auth


def _build_tree(store: ObjectStore, files: dict[str, bytes]) -> str:
    """Store one directory level, recursing into subdirectories first."""
    direct: dict[str, bytes] = {}
    subdirs: dict[str, dict[str, bytes]] = {}
    for path, content in files.items():
        head, _, rest = path.partition("/")
        if rest:
            subdirs.setdefault(head, {})[rest] = content
        else:
            direct[head] = content
    entries = []
    for name, content in direct.items():
        entries.append(TreeEntry(name, ObjectKind.BLOB, store.put_blob(content)))
    for name, children in subdirs.items():
        entries.append(TreeEntry(name, ObjectKind.TREE, _build_tree(store, children)))
    return store.put_tree(entries)


def object_counts(manifest: Manifest) -> dict[str, int]:
    """Counts reported by fixture validation (loads into a throwaway store)."""
    store, _ = load_fixtures(manifest)
    blobs = trees = 0
    seen: set[str] = set()
    for repo in store.repositories():
        stack = [repo.root]
        while stack:
            oid = stack.pop()
            if oid in seen:
                continue
            seen.add(oid)
            obj = store.get_object(oid)
            if isinstance(obj, Tree):
                trees += 1
                stack.extend(e.oid for e in obj.entries)
            else:
                blobs += 1
    return {
        "accounts": len(manifest.accounts),
        "clients": len(manifest.clients),
        "repositories": len(manifest.repositories),
        "blobs": blobs,
        "trees": trees,
    }
