"""Token issuance, the OAuth-style code exchange, and bearer authentication.

Two token populations exist: ``developer_public`` tokens anyone can mint
from their account settings, and ``app_private`` tokens issued only
through the code exchange to clients registered as private (the
first-party mobile app twin). Both are opaque 40-char lowercase hex
strings; nothing about the value itself reveals the kind.
"""

from __future__ import annotations

import secrets
import threading
from dataclasses import dataclass
from enum import Enum


class TokenKind(str, Enum):
    DEVELOPER_PUBLIC = "developer_public"
    APP_PRIVATE = "app_private"


class PrincipalKind(str, Enum):
    DEVELOPER_PUBLIC = "developer_public"
    APP_PRIVATE = "app_private"
    ANONYMOUS = "anonymous"


TOKEN_LENGTH = 40
LOGIN_CODE_LENGTH = 8


class AuthError(Exception):
    pass


class UnknownAccountError(AuthError):
    def __init__(self, account: str):
        super().__init__(f"unknown account {account!r}")
        self.account = account


class UnknownClientError(AuthError):
    def __init__(self, client_id: str):
        super().__init__(f"unknown client {client_id!r}")
        self.client_id = client_id


class InvalidCodeError(AuthError):
    def __init__(self) -> None:
        super().__init__("login code is invalid or was already used")


class AuthenticationError(AuthError):
    """Credential failure (401-class), distinct from a policy deny."""


class MalformedAuthorizationError(AuthenticationError):
    def __init__(self, header: str):
        super().__init__("authorization header is not of the form 'Bearer <token>'")
        self.header = header


class UnknownTokenError(AuthenticationError):
    def __init__(self) -> None:
        super().__init__("bearer token is not recognized")


@dataclass(frozen=True)
class AccessToken:
    token: str
    kind: TokenKind
    owner: str

    def as_header(self) -> str:
        return f"Bearer {self.token}"


@dataclass(frozen=True)
class Principal:
    account: str
    token_kind: PrincipalKind

    def __post_init__(self) -> None:
        if (self.account == "") != (self.token_kind is PrincipalKind.ANONYMOUS):
            raise ValueError("account must be empty iff principal is anonymous")


ANONYMOUS = Principal("", PrincipalKind.ANONYMOUS)


@dataclass(frozen=True)
class OAuthClient:
    client_id: str
    token_kind_issued: TokenKind
    redirect_uri: str


class AuthService:
    """Account, client, token, and login-code tables.

    Lookups may run concurrently; issuance and code minting serialize on
    an internal lock so token values stay unique.
    """

    def __init__(self) -> None:
        self._accounts: set[str] = set()
        self._clients: dict[str, OAuthClient] = {}
        self._tokens: dict[str, AccessToken] = {}
        self._codes: dict[str, str] = {}  # code -> account
        self._lock = threading.Lock()

    def add_account(self, name: str) -> None:
        self._accounts.add(name)

    def accounts(self) -> list[str]:
        return sorted(self._accounts)

    def register_client(self, client: OAuthClient) -> None:
        if client.client_id in self._clients:
            raise AuthError(f"client {client.client_id!r} already registered")
        self._clients[client.client_id] = client

    def clients(self) -> list[OAuthClient]:
        return list(self._clients.values())

    def issue_token(self, account: str, kind: TokenKind) -> AccessToken:
        if account not in self._accounts:
            raise UnknownAccountError(account)
        with self._lock:
            while True:
                value = secrets.token_hex(TOKEN_LENGTH // 2)
                if value not in self._tokens:
                    break
            token = AccessToken(value, kind, account)
            self._tokens[value] = token
        return token

    def mint_login_code(self, account: str) -> str:
        """Fixture login helper: mints a single-use code for an account.

        Stands in for the interactive login page; the exchange route is
        the only part of the flow exposed over HTTP.
        """
        if account not in self._accounts:
            raise UnknownAccountError(account)
        with self._lock:
            while True:
                code = secrets.token_hex(LOGIN_CODE_LENGTH // 2)
                if code not in self._codes:
                    break
            self._codes[code] = account
        return code

    def exchange_code(self, client_id: str, code: str) -> tuple[AccessToken, str]:
        """Trade a login code for a token of the client's registered kind.

        Returns the token together with the client's redirect URI so a
        twin client can observe where the real flow would hand off.
        Codes are single-use.
        """
        client = self._clients.get(client_id)
        if client is None:
            raise UnknownClientError(client_id)
        with self._lock:
            account = self._codes.pop(code, None)
        if account is None:
            raise InvalidCodeError()
        return self.issue_token(account, client.token_kind_issued), client.redirect_uri

    def authenticate(self, authorization_header: str | None) -> Principal:
        """Map an Authorization header to a principal.

        Absent header means anonymous. A malformed header or unknown
        token is an authentication failure, never a policy deny.
        """
        if authorization_header is None:
            return ANONYMOUS
        parts = authorization_header.split()
        if len(parts) != 2 or parts[0].lower() != "bearer":
            raise MalformedAuthorizationError(authorization_header)
        token = self._tokens.get(parts[1])
        if token is None:
            raise UnknownTokenError()
        return Principal(token.owner, PrincipalKind(token.kind.value))
