"""Differential audit: equivalent probes over both surfaces vs the reference policy.

The auditor derives the reference outcome from its own copy of the
fixture manifest, never from the server, so a lying server still gets
caught. A probe counts as "allow" only when the response body actually
carries the protected data (metadata fields, entries, text, or decodable
bytes); a 200 wrapping null data is a deny. Deviations where the surface
is stricter than the reference are availability findings and never make
the target vulnerable.
"""

from __future__ import annotations

import base64
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import requests

from .auth import TokenKind
from .fixtures import Manifest, RepositoryFixture, load_fixtures
from .objectstore import RepoState
from .policy import AccessAction, AccessRequest, Surface, reference_decision
from .recovery import EnvelopeParseError, decode_content_html

OWASP_BROKEN_ACCESS_CONTROL = "OWASP-A5 Broken Access Control"

_STATES = (RepoState.ACTIVE, RepoState.DISABLED)
_ACTIONS = (
    AccessAction.READ_METADATA,
    AccessAction.READ_TREE,
    AccessAction.READ_TEXT_BLOB,
    AccessAction.READ_BINARY_BLOB,
)
_TOKEN_KINDS = (TokenKind.DEVELOPER_PUBLIC, TokenKind.APP_PRIVATE)
_SURFACES = (Surface.REST, Surface.GRAPHQL)


class AuditError(Exception):
    pass


class MissingFixtureError(AuditError):
    def __init__(self, missing: list[str]):
        super().__init__("fixtures unsuitable for the default matrix: " + "; ".join(missing))
        self.missing = missing


@dataclass(frozen=True)
class ProbeCase:
    owner: str
    name: str
    repo_state: RepoState
    action: AccessAction
    token_kind: TokenKind
    surface: Surface

    def to_payload(self) -> dict:
        return {
            "owner": self.owner,
            "name": self.name,
            "repo_state": self.repo_state.value,
            "action": self.action.value,
            "token_kind": self.token_kind.value,
            "surface": self.surface.value,
        }


@dataclass(frozen=True)
class AuditFinding:
    case: ProbeCase
    observed: str
    expected: str
    direction: str  # "permissive" | "restrictive"
    classification: str | None

    def to_payload(self) -> dict:
        payload = {
            "case": self.case.to_payload(),
            "observed": self.observed,
            "expected": self.expected,
            "direction": self.direction,
        }
        if self.classification is not None:
            payload["classification"] = self.classification
        return payload


@dataclass
class AuditReport:
    target: str
    mode_claimed: str | None
    probes: int
    permissive_findings: list[AuditFinding]
    restrictive_findings: list[AuditFinding]
    errored: list[dict]
    verdict: str  # "vulnerable" | "consistent"

    def to_payload(self) -> dict:
        return {
            "target": self.target,
            "mode_claimed": self.mode_claimed,
            "probes": self.probes,
            "permissive_findings": [f.to_payload() for f in self.permissive_findings],
            "restrictive_findings": [f.to_payload() for f in self.restrictive_findings],
            "errored": self.errored,
            "verdict": self.verdict,
        }


@dataclass(frozen=True)
class _ProbeTarget:
    repo: RepositoryFixture
    text_path: str
    binary_path: str


class Auditor:
    """Probes one target server using tokens of both kinds.

    The supplied tokens are assumed to authenticate as the fixture
    repositories' owner (the standard fixture keeps the active repository
    public, so reference outcomes do not hinge on that assumption).
    """

    def __init__(
        self,
        target: str,
        manifest: Manifest,
        public_token: str,
        private_token: str,
        mode_claimed: str | None = None,
        max_in_flight: int = 8,
    ):
        self.target = target.rstrip("/")
        self.manifest = manifest
        self.mode_claimed = mode_claimed
        self.max_in_flight = max_in_flight
        self._tokens = {
            TokenKind.DEVELOPER_PUBLIC: public_token,
            TokenKind.APP_PRIVATE: private_token,
        }
        self._store, _ = load_fixtures(manifest)
        self._targets = _select_probe_targets(manifest)

    # -- matrix -----------------------------------------------------------------

    def build_matrix(self) -> list[ProbeCase]:
        """The default 2x4x2x2 cross product over the seeded repositories."""
        cases = []
        for state in _STATES:
            target = self._targets[state]
            for action in _ACTIONS:
                for kind in _TOKEN_KINDS:
                    for surface in _SURFACES:
                        cases.append(
                            ProbeCase(
                                owner=target.repo.owner,
                                name=target.repo.name,
                                repo_state=state,
                                action=action,
                                token_kind=kind,
                                surface=surface,
                            )
                        )
        return cases

    # -- probes -----------------------------------------------------------------

    def execute_probe(self, case: ProbeCase) -> tuple[str | None, str | None]:
        """Returns (observed outcome, error). Network failures yield an error."""
        try:
            if case.surface is Surface.REST:
                return self._probe_rest(case), None
            return self._probe_graphql(case), None
        except requests.RequestException as err:
            return None, f"{type(err).__name__}: {err}"

    def _probe_rest(self, case: ProbeCase) -> str:
        token = self._tokens[case.token_kind]
        headers = {"Authorization": f"Bearer {token}"}
        base = f"{self.target}/repos/{case.owner}/{case.name}"
        probe_target = self._targets[case.repo_state]
        if case.action is AccessAction.READ_METADATA:
            url = base
        elif case.action is AccessAction.READ_TREE:
            url = f"{base}/contents/"
        elif case.action is AccessAction.READ_TEXT_BLOB:
            url = f"{base}/contents/{probe_target.text_path}"
        else:
            url = f"{base}/contents/{probe_target.binary_path}"
        response = requests.get(url, headers=headers, timeout=30)
        if response.status_code != 200:
            return "deny"
        body = response.json()
        if case.action is AccessAction.READ_METADATA:
            return "allow" if isinstance(body, dict) and "owner" in body and "name" in body else "deny"
        if case.action is AccessAction.READ_TREE:
            return "allow" if isinstance(body, list) else "deny"
        if not isinstance(body, dict) or body.get("encoding") != "base64":
            return "deny"
        try:
            base64.b64decode(body.get("content", ""), validate=True)
        except Exception:
            return "deny"
        return "allow"

    def _probe_graphql(self, case: ProbeCase) -> str:
        token = self._tokens[case.token_kind]
        probe_target = self._targets[case.repo_state]
        owner_arg = json.dumps(case.owner)
        name_arg = json.dumps(case.name)
        features = None
        if case.action is AccessAction.READ_METADATA:
            operation = "ProbeRepoMeta"
            query = f"query {operation} {{ repository(owner: {owner_arg}, name: {name_arg}) {{ name isDisabled }} }}"
        elif case.action is AccessAction.READ_TREE:
            operation = "ProbeRepoTree"
            query = (
                f"query {operation} {{ repository(owner: {owner_arg}, name: {name_arg}) "
                f'{{ object(expression: "HEAD:") {{ ... on Tree {{ entries {{ name type oid }} }} }} }} }}'
            )
        elif case.action is AccessAction.READ_TEXT_BLOB:
            operation = "ProbeRepoText"
            expr = json.dumps(f"HEAD:{probe_target.text_path}")
            query = (
                f"query {operation} {{ repository(owner: {owner_arg}, name: {name_arg}) "
                f"{{ object(expression: {expr}) {{ ... on Blob {{ text isBinary }} }} }} }}"
            )
        else:
            operation = "ProbeRepoBinary"
            path_arg = json.dumps(probe_target.binary_path)
            query = (
                f"query {operation} {{ repository(owner: {owner_arg}, name: {name_arg}) "
                f"{{ file(path: {path_arg}) {{ contentHTML }} }} }}"
            )
            features = "pe_mobile"
        headers = {
            "Authorization": f"Bearer {token}",
            "X-APOLLO-OPERATION-NAME": operation,
        }
        if features:
            headers["GraphQL-Features"] = features
        response = requests.post(
            f"{self.target}/graphql",
            json={"operationName": operation, "query": query, "variables": None},
            headers=headers,
            timeout=30,
        )
        if response.status_code != 200:
            return "deny"
        payload = response.json()
        repository = (payload.get("data") or {}).get("repository")
        if not isinstance(repository, dict):
            return "deny"
        if case.action is AccessAction.READ_METADATA:
            return "allow" if "name" in repository else "deny"
        if case.action is AccessAction.READ_BINARY_BLOB:
            file_node = repository.get("file")
            if not isinstance(file_node, dict):
                return "deny"
            try:
                decode_content_html(file_node.get("contentHTML") or "")
            except EnvelopeParseError:
                return "deny"
            return "allow"
        obj = repository.get("object")
        if not isinstance(obj, dict):
            return "deny"
        if case.action is AccessAction.READ_TREE:
            return "allow" if isinstance(obj.get("entries"), list) else "deny"
        return "allow" if isinstance(obj.get("text"), str) else "deny"

    # -- reference + report -------------------------------------------------------

    def expected_outcome(self, case: ProbeCase) -> str:
        request = AccessRequest(
            account=case.owner,  # tokens are assumed to belong to the repo owner
            owner=case.owner,
            name=case.name,
            action=case.action,
            surface=case.surface,
        )
        return reference_decision(self._store, request).outcome

    def audit(self, matrix: list[ProbeCase] | None = None) -> AuditReport:
        if matrix is None:
            matrix = self.build_matrix()
        if not matrix:
            raise AuditError("probe matrix is empty")
        with ThreadPoolExecutor(max_workers=self.max_in_flight) as pool:
            outcomes = list(pool.map(self.execute_probe, matrix))
        permissive: list[AuditFinding] = []
        restrictive: list[AuditFinding] = []
        errored: list[dict] = []
        for case, (observed, error) in zip(matrix, outcomes):
            if observed is None:
                errored.append({"case": case.to_payload(), "error": error})
                continue
            expected = self.expected_outcome(case)
            if observed == expected:
                continue
            if observed == "allow":
                permissive.append(
                    AuditFinding(case, observed, expected, "permissive", OWASP_BROKEN_ACCESS_CONTROL)
                )
            else:
                restrictive.append(AuditFinding(case, observed, expected, "restrictive", None))
        verdict = "vulnerable" if permissive else "consistent"
        return AuditReport(
            target=self.target,
            mode_claimed=self.mode_claimed,
            probes=len(matrix),
            permissive_findings=permissive,
            restrictive_findings=restrictive,
            errored=errored,
            verdict=verdict,
        )


def _select_probe_targets(manifest: Manifest) -> dict[RepoState, _ProbeTarget]:
    """Pick one repository per state plus its first text and binary paths."""
    targets: dict[RepoState, _ProbeTarget] = {}
    missing: list[str] = []
    for state in _STATES:
        candidates = [r for r in manifest.repositories if r.state is state]
        chosen = None
        for repo in candidates:
            text = sorted(f.path for f in repo.files if not f.is_binary)
            binary = sorted(f.path for f in repo.files if f.is_binary)
            if text and binary:
                chosen = _ProbeTarget(repo, text[0], binary[0])
                break
        if chosen is None:
            missing.append(
                f"need one {state.value} repository with at least one text "
                "and one binary file"
            )
        else:
            targets[state] = chosen
    if missing:
        raise MissingFixtureError(missing)
    return targets


def filter_matrix(matrix: list[ProbeCase], criteria: dict) -> list[ProbeCase]:
    """Restrict the matrix by a criteria document of allowed values.

    Recognized keys: repo_states, actions, token_kinds, surfaces; each
    maps to a list of values. Missing keys keep all values.
    """
    allowed_states = {RepoState(v) for v in criteria.get("repo_states", [s.value for s in _STATES])}
    allowed_actions = {AccessAction(v) for v in criteria.get("actions", [a.value for a in _ACTIONS])}
    allowed_kinds = {TokenKind(v) for v in criteria.get("token_kinds", [k.value for k in _TOKEN_KINDS])}
    allowed_surfaces = {Surface(v) for v in criteria.get("surfaces", [s.value for s in _SURFACES])}
    return [
        case
        for case in matrix
        if case.repo_state in allowed_states
        and case.action in allowed_actions
        and case.token_kind in allowed_kinds
        and case.surface in allowed_surfaces
    ]
