"""Reference access policy and its placement-dependent enforcement.

The reference policy is surface-blind: disabled repositories deny every
read (owners included), private repositories deny non-owner reads,
everything else is allowed. ``enforced_decision`` reproduces the three
wirings of that policy: the vulnerable topology checks it only on the
REST side, the two patched topologies re-check it for GraphQL at either
a central data-access layer or the store itself. The difference between
the patched modes is purely where the check runs, which the decision
records in ``enforced_at``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .objectstore import ObjectStore, RepoState, Repository, Visibility


class AccessAction(str, Enum):
    READ_METADATA = "read_metadata"
    READ_TREE = "read_tree"
    READ_TEXT_BLOB = "read_text_blob"
    READ_BINARY_BLOB = "read_binary_blob"


class Surface(str, Enum):
    REST = "rest"
    GRAPHQL = "graphql"


class EnforcementMode(str, Enum):
    VULNERABLE_REST_ONLY = "vulnerable_rest_only"
    CENTRAL_LAYER = "central_layer"
    STORE_LEVEL = "store_level"


class DenyReason(str, Enum):
    REPOSITORY_DISABLED = "repository_disabled"
    NOT_AUTHORIZED = "not_authorized"
    FEATURE_UNAVAILABLE = "feature_unavailable"


class EnforcedAt(str, Enum):
    REST_SURFACE = "rest_surface"
    CENTRAL_LAYER = "central_layer"
    STORE = "store"
    NONE = "none"


@dataclass(frozen=True)
class AccessRequest:
    """One read attempt: who, which repository, what, and over which surface."""

    account: str  # "" for anonymous principals
    owner: str
    name: str
    action: AccessAction
    surface: Surface


@dataclass(frozen=True)
class PolicyDecision:
    outcome: str  # "allow" | "deny"
    deny_reason: DenyReason | None
    enforced_at: EnforcedAt

    def __post_init__(self) -> None:
        if (self.outcome == "deny") != (self.deny_reason is not None):
            raise ValueError("deny_reason must be present iff outcome is deny")

    @property
    def allowed(self) -> bool:
        return self.outcome == "allow"


def _decide(repo: Repository, account: str) -> tuple[str, DenyReason | None]:
    if repo.status.state is RepoState.DISABLED:
        return "deny", DenyReason.REPOSITORY_DISABLED
    if repo.visibility is Visibility.PRIVATE and account != repo.owner:
        return "deny", DenyReason.NOT_AUTHORIZED
    return "allow", None


def reference_decision(store: ObjectStore, request: AccessRequest) -> PolicyDecision:
    """The intended policy, independent of where it is enforced.

    Pure in (repository status, visibility, principal); the request's
    surface and action never influence the outcome. Raises
    UnknownRepositoryError for repositories the store does not know.
    """
    repo = store.get_repository(request.owner, request.name)
    outcome, reason = _decide(repo, request.account)
    # Reference decisions exist outside any concrete enforcement point.
    return PolicyDecision(outcome, reason, EnforcedAt.NONE)


def enforced_decision(
    store: ObjectStore, request: AccessRequest, mode: EnforcementMode
) -> PolicyDecision:
    """Decide ``request`` as the running topology would.

    REST requests hit the policy check in every mode. GraphQL requests
    in the vulnerable topology skip it entirely (allow, enforced_at
    "none"); in the patched topologies they get the reference outcome,
    stamped with the layer that produced it.
    """
    repo = store.get_repository(request.owner, request.name)
    if request.surface is Surface.REST:
        outcome, reason = _decide(repo, request.account)
        return PolicyDecision(outcome, reason, EnforcedAt.REST_SURFACE)
    if mode is EnforcementMode.VULNERABLE_REST_ONLY:
        return PolicyDecision("allow", None, EnforcedAt.NONE)
    outcome, reason = _decide(repo, request.account)
    at = (
        EnforcedAt.CENTRAL_LAYER
        if mode is EnforcementMode.CENTRAL_LAYER
        else EnforcedAt.STORE
    )
    return PolicyDecision(outcome, reason, at)
