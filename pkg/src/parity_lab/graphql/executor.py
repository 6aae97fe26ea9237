"""Query execution against the object store, gated by the enforcement mode.

Every repository-rooted action consults the enforcement-mode decision
before the store is touched, so in the patched topologies a denied
request performs zero object reads. The vulnerable topology gets an
unconditional allow for GraphQL and resolves straight against the store.

Independently of the mode, ``Repository.file`` is a private field: it
resolves only for an app-private principal sending the "pe_mobile"
feature header, and is otherwise reported exactly like a field that does
not exist in the schema.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass, field

from ..auth import Principal, PrincipalKind
from ..objectstore import (
    Blob,
    ObjectKind,
    ObjectStore,
    Repository,
    Tree,
    TreeEntry,
    UnknownRepositoryError,
)
from ..policy import AccessAction, AccessRequest, EnforcementMode, Surface, enforced_decision
from .ast import (
    BooleanValue,
    Document,
    EnumValue,
    Field,
    InlineFragment,
    IntValue,
    NullValue,
    Selection,
    StringValue,
    Value,
    VariableRef,
)

BLOCKED_MESSAGE = "Repository access blocked"
FEATURES_HEADER = "GraphQL-Features"
PRIVATE_FILE_FEATURE = "pe_mobile"
CONTENT_HTML_PREFIX = '<div class="blob-file" data-encoding="base64">'
CONTENT_HTML_SUFFIX = "</div>"


def encode_content_html(content: bytes) -> str:
    return CONTENT_HTML_PREFIX + base64.b64encode(content).decode("ascii") + CONTENT_HTML_SUFFIX


@dataclass(frozen=True)
class GqlError:
    message: str
    path: tuple[str, ...] = ()

    def to_payload(self) -> dict:
        return {"message": self.message, "path": list(self.path)}


@dataclass
class GqlResponse:
    data: dict | None
    errors: list[GqlError] = field(default_factory=list)

    def to_payload(self) -> dict:
        payload: dict = {"data": self.data}
        if self.errors:
            payload["errors"] = [e.to_payload() for e in self.errors]
        return payload


class _RequestAbort(Exception):
    """Request-level failure: no field resolution happens, data is null."""

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class Executor:
    """Resolves the repository schema subset for one configured mode."""

    def __init__(self, store: ObjectStore, mode: EnforcementMode):
        self._store = store
        self._mode = mode

    def execute(
        self,
        doc: Document,
        variables: dict | None,
        principal: Principal,
        headers: dict[str, str] | None = None,
    ) -> GqlResponse:
        self._errors: list[GqlError] = []
        self._principal = principal
        self._features = _feature_set(headers or {})
        try:
            self._variables = _bind_variables(doc, variables or {})
        except _RequestAbort as abort:
            return GqlResponse(data=None, errors=[GqlError(abort.message)])
        data: dict = {}
        for selection in doc.operation.selection_set:
            self._resolve_query_selection(selection, data)
        return GqlResponse(data=data, errors=self._errors)

    # -- top level -----------------------------------------------------------

    def _resolve_query_selection(self, selection: Selection, out: dict) -> None:
        if isinstance(selection, InlineFragment):
            if selection.type_condition == "Query":
                for inner in selection.selection_set:
                    self._resolve_query_selection(inner, out)
            return
        key = selection.response_key
        if selection.name == "repository":
            out[key] = self._resolve_repository(selection, (key,))
        else:
            self._field_error(selection.name, "Query", (key,))
            out[key] = None

    def _resolve_repository(self, node: Field, path: tuple[str, ...]) -> dict | None:
        args = self._coerce_arguments(node)
        owner = _require_str_arg(args, "owner")
        name = _require_str_arg(args, "name")
        if owner is None or name is None:
            self._error(
                "Field 'repository' requires string arguments 'owner' and 'name'", path
            )
            return None
        try:
            repo = self._store.get_repository(owner, name)
        except UnknownRepositoryError:
            self._error(
                f"Could not resolve to a Repository with the name '{owner}/{name}'.", path
            )
            return None
        if not self._allowed(repo, AccessAction.READ_METADATA):
            self._error(BLOCKED_MESSAGE, path)
            return None
        if node.selection_set is None:
            self._error("Field 'repository' must have a selection of subfields", path)
            return None
        out: dict = {}
        self._resolve_repository_selections(repo, node.selection_set, path, out)
        return out

    def _resolve_repository_selections(
        self, repo: Repository, selections: tuple[Selection, ...], path: tuple[str, ...], out: dict
    ) -> None:
        for selection in selections:
            if isinstance(selection, InlineFragment):
                if selection.type_condition == "Repository":
                    self._resolve_repository_selections(repo, selection.selection_set, path, out)
                continue
            key = selection.response_key
            field_path = path + (key,)
            if selection.name == "name":
                out[key] = repo.name
            elif selection.name == "isDisabled":
                out[key] = repo.status.state.value == "disabled"
            elif selection.name == "disabledReason":
                out[key] = repo.status.reason.value if repo.status.reason else None
            elif selection.name == "object":
                out[key] = self._resolve_object(repo, selection, field_path)
            elif selection.name == "file":
                out[key] = self._resolve_file(repo, selection, field_path)
            else:
                self._field_error(selection.name, "Repository", field_path)
                out[key] = None

    # -- repository.object ----------------------------------------------------

    def _resolve_object(self, repo: Repository, node: Field, path: tuple[str, ...]) -> dict | None:
        args = self._coerce_arguments(node)
        expression = _require_str_arg(args, "expression")
        if expression is None:
            self._error("Field 'object' requires a string argument 'expression'", path)
            return None
        if not expression.startswith("HEAD:"):
            self._error(
                f"Unsupported expression {expression!r}; expected \"HEAD:<path>\"", path
            )
            return None
        if node.selection_set is None:
            self._error("Field 'object' must have a selection of subfields", path)
            return None
        if not self._allowed(repo, AccessAction.READ_TREE):
            self._error(BLOCKED_MESSAGE, path)
            return None
        located = self._locate(repo, expression[len("HEAD:") :])
        if located is None:
            return None
        oid, kind = located
        if kind is ObjectKind.BLOB and not self._allowed(repo, AccessAction.READ_TEXT_BLOB):
            self._error(BLOCKED_MESSAGE, path)
            return None
        obj = self._store.get_object(oid)
        out: dict = {}
        self._resolve_git_object_selections(obj, oid, node.selection_set, path, out)
        return out

    def _locate(self, repo: Repository, path_text: str) -> tuple[str, ObjectKind] | None:
        """Find (oid, declared kind) at a path, or None when it does not exist.

        Only the trees along the way are read; the final object itself is
        not, so callers can run a kind-specific policy consult before
        fetching it.
        """
        if path_text == "":
            return repo.root, ObjectKind.TREE
        current = self._store.get_object(repo.root)
        segments = path_text.split("/")
        for i, segment in enumerate(segments):
            if not isinstance(current, Tree):
                return None
            entry = next((e for e in current.entries if e.name == segment), None)
            if entry is None:
                return None
            if i == len(segments) - 1:
                return entry.oid, entry.kind
            current = self._store.get_object(entry.oid)
        return None

    def _resolve_git_object_selections(
        self,
        obj: Blob | Tree,
        oid: str,
        selections: tuple[Selection, ...],
        path: tuple[str, ...],
        out: dict,
    ) -> None:
        type_name = "Blob" if isinstance(obj, Blob) else "Tree"
        for selection in selections:
            if isinstance(selection, InlineFragment):
                if selection.type_condition == type_name:
                    self._resolve_git_object_selections(
                        obj, oid, selection.selection_set, path, out
                    )
                continue
            key = selection.response_key
            field_path = path + (key,)
            if isinstance(obj, Tree):
                if selection.name == "entries":
                    out[key] = self._resolve_entries(obj, selection, field_path)
                else:
                    self._field_error(selection.name, "Tree", field_path)
                    out[key] = None
                continue
            if selection.name == "text":
                out[key] = _blob_text(obj)
            elif selection.name == "isBinary":
                out[key] = obj.is_binary
            elif selection.name == "byteSize":
                out[key] = obj.byte_size
            elif selection.name == "oid":
                out[key] = oid
            else:
                self._field_error(selection.name, "Blob", field_path)
                out[key] = None

    def _resolve_entries(
        self, tree: Tree, node: Field, path: tuple[str, ...]
    ) -> list[dict] | None:
        if node.selection_set is None:
            self._error("Field 'entries' must have a selection of subfields", path)
            return None
        items = []
        reported: set[tuple[str, tuple[str, ...]]] = set()
        for entry in tree.entries:
            items.append(self._resolve_entry(entry, node.selection_set, path, reported))
        return items

    def _resolve_entry(
        self,
        entry: TreeEntry,
        selections: tuple[Selection, ...],
        path: tuple[str, ...],
        reported: set[tuple[str, tuple[str, ...]]],
    ) -> dict:
        out: dict = {}
        for selection in selections:
            if isinstance(selection, InlineFragment):
                if selection.type_condition == "TreeEntry":
                    out.update(self._resolve_entry(entry, selection.selection_set, path, reported))
                continue
            key = selection.response_key
            if selection.name == "name":
                out[key] = entry.name
            elif selection.name == "type":
                out[key] = entry.kind.value
            elif selection.name == "oid":
                out[key] = entry.oid
            else:
                # Error once per errored selection, not once per list item.
                marker = (selection.name, path + (key,))
                if marker not in reported:
                    reported.add(marker)
                    self._field_error(selection.name, "TreeEntry", path + (key,))
                out[key] = None
        return out

    # -- repository.file (private) --------------------------------------------

    def _resolve_file(self, repo: Repository, node: Field, path: tuple[str, ...]) -> dict | None:
        unlocked = (
            self._principal.token_kind is PrincipalKind.APP_PRIVATE
            and PRIVATE_FILE_FEATURE in self._features
        )
        if not unlocked:
            self._field_error("file", "Repository", path)
            return None
        args = self._coerce_arguments(node)
        file_path = _require_str_arg(args, "path")
        if file_path is None:
            self._error("Field 'file' requires a string argument 'path'", path)
            return None
        if node.selection_set is None:
            self._error("Field 'file' must have a selection of subfields", path)
            return None
        if not self._allowed(repo, AccessAction.READ_BINARY_BLOB):
            self._error(BLOCKED_MESSAGE, path)
            return None
        located = self._locate(repo, file_path)
        if located is None or located[1] is not ObjectKind.BLOB:
            return None
        blob = self._store.get_object(located[0])
        assert isinstance(blob, Blob)
        out: dict = {}
        for selection in node.selection_set:
            if isinstance(selection, InlineFragment):
                continue
            key = selection.response_key
            if selection.name == "contentHTML":
                out[key] = encode_content_html(blob.content)
            else:
                self._field_error(selection.name, "RepositoryFile", path + (key,))
                out[key] = None
        return out

    # -- helpers ---------------------------------------------------------------

    def _allowed(self, repo: Repository, action: AccessAction) -> bool:
        request = AccessRequest(
            account=self._principal.account,
            owner=repo.owner,
            name=repo.name,
            action=action,
            surface=Surface.GRAPHQL,
        )
        return enforced_decision(self._store, request, self._mode).allowed

    def _coerce_arguments(self, node: Field) -> dict:
        return {name: self._coerce_value(value) for name, value in node.arguments}

    def _coerce_value(self, value: Value):
        if isinstance(value, StringValue):
            return value.value
        if isinstance(value, IntValue):
            return value.value
        if isinstance(value, BooleanValue):
            return value.value
        if isinstance(value, NullValue):
            return None
        if isinstance(value, EnumValue):
            return value.name
        if isinstance(value, VariableRef):
            return self._variables.get(value.name)
        raise TypeError(f"not a value node: {value!r}")

    def _field_error(self, name: str, type_name: str, path: tuple[str, ...]) -> None:
        self._error(f"Field '{name}' doesn't exist on type '{type_name}'", path)

    def _error(self, message: str, path: tuple[str, ...]) -> None:
        self._errors.append(GqlError(message, path))


def _require_str_arg(args: dict, name: str) -> str | None:
    value = args.get(name)
    return value if isinstance(value, str) else None


def _blob_text(blob: Blob) -> str | None:
    if blob.is_binary:
        return None
    try:
        return blob.content.decode("utf-8")
    except UnicodeDecodeError:
        return None


def _feature_set(headers: dict[str, str]) -> set[str]:
    for header, value in headers.items():
        if header.lower() == FEATURES_HEADER.lower():
            return {part.strip() for part in value.split(",") if part.strip()}
    return set()


def _bind_variables(doc: Document, provided: dict) -> dict:
    declared = {d.name: d for d in doc.operation.variable_definitions}
    bound: dict = {}
    for name, definition in declared.items():
        if name in provided:
            bound[name] = provided[name]
        elif definition.required:
            raise _RequestAbort(
                f"Variable '${name}' of required type '{definition.type_name}!' was not provided"
            )
        else:
            bound[name] = None
    for ref in _collect_variable_refs(doc.operation.selection_set):
        if ref not in declared:
            raise _RequestAbort(f"Variable '${ref}' is not defined by the operation")
    return bound


def _collect_variable_refs(selections: tuple[Selection, ...]) -> set[str]:
    refs: set[str] = set()
    for selection in selections:
        if isinstance(selection, InlineFragment):
            refs |= _collect_variable_refs(selection.selection_set)
            continue
        for _, value in selection.arguments:
            if isinstance(value, VariableRef):
                refs.add(value.name)
        if selection.selection_set is not None:
            refs |= _collect_variable_refs(selection.selection_set)
    return refs
