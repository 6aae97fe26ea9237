"""The correctly-enforced API surface.

Every handler consults the policy at the surface before reading the
store, in every enforcement mode. Blocked repositories answer 403 with a
block body naming the reason; repositories the caller may not see at all
answer 404, so their existence is not leaked. A 403 body never carries
tree entries or blob bytes.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass

from .auth import Principal
from .objectstore import (
    Blob,
    NotATreeError,
    ObjectStore,
    PathNotFoundError,
    Tree,
    UnknownRepositoryError,
)
from .policy import (
    AccessAction,
    AccessRequest,
    DenyReason,
    EnforcementMode,
    PolicyDecision,
    Surface,
    enforced_decision,
)

BLOCKED_MESSAGE = "Repository access blocked"
NOT_FOUND_BODY = {"message": "Not Found"}


@dataclass(frozen=True)
class RestResult:
    status: int
    body: dict | list


class RestSurface:
    def __init__(self, store: ObjectStore, mode: EnforcementMode):
        self._store = store
        self._mode = mode

    def get_repo(self, owner: str, name: str, principal: Principal) -> RestResult:
        decision = self._decide(owner, name, principal, AccessAction.READ_METADATA)
        if decision is None:
            return RestResult(404, NOT_FOUND_BODY)
        if not decision.allowed:
            return _deny_result(decision)
        repo = self._store.get_repository(owner, name)
        return RestResult(
            200,
            {
                "owner": repo.owner,
                "name": repo.name,
                "visibility": repo.visibility.value,
                "disabled": repo.status.state.value == "disabled",
            },
        )

    def get_contents(self, owner: str, name: str, path: str, principal: Principal) -> RestResult:
        repo_probe = self._decide(owner, name, principal, AccessAction.READ_TREE)
        if repo_probe is None:
            return RestResult(404, NOT_FOUND_BODY)
        if not repo_probe.allowed:
            return _deny_result(repo_probe)
        repo = self._store.get_repository(owner, name)
        try:
            obj = self._store.resolve_path(repo, path)
        except (PathNotFoundError, NotATreeError):
            return RestResult(404, NOT_FOUND_BODY)
        if isinstance(obj, Tree):
            listing = []
            for entry in obj.entries:
                size = 0
                if entry.kind.value == "blob":
                    child = self._store.get_object(entry.oid)
                    assert isinstance(child, Blob)
                    size = child.byte_size
                listing.append(
                    {"name": entry.name, "type": entry.kind.value, "oid": entry.oid, "size": size}
                )
            return RestResult(200, listing)
        assert isinstance(obj, Blob)
        basename = path.rsplit("/", 1)[-1]
        return RestResult(
            200,
            {
                "name": basename,
                "encoding": "base64",
                "content": base64.b64encode(obj.content).decode("ascii"),
                "size": obj.byte_size,
            },
        )

    def _decide(
        self, owner: str, name: str, principal: Principal, action: AccessAction
    ) -> PolicyDecision | None:
        """None means the repository must look absent to this caller."""
        request = AccessRequest(
            account=principal.account,
            owner=owner,
            name=name,
            action=action,
            surface=Surface.REST,
        )
        try:
            return enforced_decision(self._store, request, self._mode)
        except UnknownRepositoryError:
            return None


def _deny_result(decision: PolicyDecision) -> RestResult:
    if decision.deny_reason is DenyReason.NOT_AUTHORIZED:
        # Hide the existence of repositories the caller may not read.
        return RestResult(404, NOT_FOUND_BODY)
    reason = decision.deny_reason.value if decision.deny_reason else "unknown"
    return RestResult(403, {"message": BLOCKED_MESSAGE, "block": {"reason": reason}})
