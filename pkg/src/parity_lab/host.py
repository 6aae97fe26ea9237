"""HTTP host wiring both surfaces, the token exchange, and the capture log.

The enforcement mode is fixed at startup and recorded as the first
capture event. Request handling itself is socket-free (``handle``),
which keeps route behavior unit-testable; ``TestbedServer`` puts it
behind a threading HTTP server.
"""

from __future__ import annotations

import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import unquote, urlsplit

from .auth import AuthService, AuthenticationError, UnknownClientError, InvalidCodeError
from .capture import CaptureLog, new_correlation_id
from .fixtures import Manifest, load_fixtures, load_manifest
from .graphql import Executor, GraphQLSyntaxError, parse
from .objectstore import ObjectStore
from .policy import EnforcementMode
from .rest import RestSurface

logger = logging.getLogger(__name__)

APOLLO_OPERATION_HEADER = "X-APOLLO-OPERATION-NAME"

JSON_CONTENT_TYPE = "application/json"


def _header(headers: dict[str, str], name: str) -> str | None:
    for key, value in headers.items():
        if key.lower() == name.lower():
            return value
    return None


class ServiceHost:
    """Dispatches one request to the owning surface and captures the pair."""

    def __init__(
        self,
        store: ObjectStore,
        auth: AuthService,
        mode: EnforcementMode,
        capture: CaptureLog | None = None,
    ):
        self.store = store
        self.auth = auth
        self.mode = mode
        self.capture = capture
        self._rest = RestSurface(store, mode)
        self._executor = Executor(store, mode)

    def handle(
        self, method: str, path: str, headers: dict[str, str], body: bytes
    ) -> tuple[int, bytes]:
        body_text = body.decode("utf-8", errors="replace")
        correlation_id = new_correlation_id()
        if self.capture is not None:
            self.capture.record("request", correlation_id, method, path, headers, body_text)
        status, payload = self._route(method, path, headers, body_text)
        response_body = json.dumps(payload).encode("utf-8")
        if self.capture is not None:
            self.capture.record(
                "response",
                correlation_id,
                method,
                path,
                {"Content-Type": JSON_CONTENT_TYPE, "Content-Length": str(len(response_body))},
                response_body.decode("utf-8"),
            )
        return status, response_body

    # -- routing ---------------------------------------------------------------

    def _route(
        self, method: str, path: str, headers: dict[str, str], body_text: str
    ) -> tuple[int, dict | list]:
        path = urlsplit(path).path
        if path == "/graphql":
            if method != "POST":
                return 405, {"message": "Method Not Allowed"}
            return self._handle_graphql(headers, body_text)
        if path == "/login/oauth/access_token":
            if method != "POST":
                return 405, {"message": "Method Not Allowed"}
            return self._handle_token_exchange(body_text)
        if path.startswith("/repos/"):
            if method != "GET":
                return 405, {"message": "Method Not Allowed"}
            return self._handle_rest(path, headers)
        return 404, {"message": "Not Found"}

    def _handle_rest(self, path: str, headers: dict[str, str]) -> tuple[int, dict | list]:
        try:
            principal = self.auth.authenticate(_header(headers, "Authorization"))
        except AuthenticationError:
            return 401, {"message": "Bad credentials"}
        segments = [unquote(s) for s in path.split("/")[2:]]
        if len(segments) >= 2 and segments[-1] == "":
            segments = segments[:-1]  # tolerate a trailing slash
        if len(segments) == 2:
            result = self._rest.get_repo(segments[0], segments[1], principal)
        elif len(segments) >= 3 and segments[2] == "contents":
            contents_path = "/".join(segments[3:])
            result = self._rest.get_contents(segments[0], segments[1], contents_path, principal)
        else:
            return 404, {"message": "Not Found"}
        return result.status, result.body

    def _handle_graphql(self, headers: dict[str, str], body_text: str) -> tuple[int, dict]:
        try:
            principal = self.auth.authenticate(_header(headers, "Authorization"))
        except AuthenticationError:
            return 401, {"message": "Bad credentials"}
        try:
            payload = json.loads(body_text)
        except json.JSONDecodeError:
            return 400, {"errors": [{"message": "Request body is not valid JSON"}]}
        if not isinstance(payload, dict) or not isinstance(payload.get("query"), str):
            return 400, {"errors": [{"message": "Request body must carry a 'query' string"}]}
        variables = payload.get("variables")
        if variables is not None and not isinstance(variables, dict):
            return 400, {"errors": [{"message": "'variables' must be an object or null"}]}
        operation_name = payload.get("operationName")
        header_operation = _header(headers, APOLLO_OPERATION_HEADER)
        if (
            operation_name is not None
            and header_operation is not None
            and operation_name != header_operation
        ):
            return 400, {
                "errors": [
                    {
                        "message": (
                            f"Operation name mismatch: header says {header_operation!r}, "
                            f"body says {operation_name!r}"
                        )
                    }
                ]
            }
        try:
            document = parse(payload["query"])
        except GraphQLSyntaxError as err:
            return 400, {
                "errors": [
                    {
                        "message": str(err),
                        "locations": [{"line": err.line, "column": err.column}],
                    }
                ]
            }
        response = self._executor.execute(document, variables, principal, headers)
        return 200, response.to_payload()

    def _handle_token_exchange(self, body_text: str) -> tuple[int, dict]:
        try:
            payload = json.loads(body_text)
        except json.JSONDecodeError:
            return 400, {"error": "request body is not valid JSON"}
        if not isinstance(payload, dict):
            return 400, {"error": "request body must be a JSON object"}
        client_id = payload.get("client_id")
        code = payload.get("code")
        if not isinstance(client_id, str) or not isinstance(code, str):
            return 400, {"error": "client_id and code are required"}
        try:
            token, redirect_uri = self.auth.exchange_code(client_id, code)
        except UnknownClientError:
            return 400, {"error": "unknown client"}
        except InvalidCodeError:
            return 400, {"error": "invalid code"}
        return 200, {
            "access_token": token.token,
            "token_type": "bearer",
            "redirect_uri": redirect_uri,
        }


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    host: ServiceHost  # set on the subclass built per server

    def _dispatch(self) -> None:
        length = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(length) if length else b""
        headers = dict(self.headers.items())
        status, response = self.host.handle(self.command, self.path, headers, body)
        self.send_response(status)
        self.send_header("Content-Type", JSON_CONTENT_TYPE)
        self.send_header("Content-Length", str(len(response)))
        self.end_headers()
        self.wfile.write(response)

    do_GET = _dispatch
    do_POST = _dispatch

    def log_message(self, format: str, *args) -> None:  # noqa: A002 - stdlib signature
        logger.debug("%s - %s", self.address_string(), format % args)


class TestbedServer:
    """One running testbed: store + auth + both surfaces on a local port."""

    def __init__(
        self,
        manifest: Manifest | str | Path,
        mode: EnforcementMode,
        port: int = 0,
        capture_path: str | Path | None = None,
        capture_raw: bool = False,
        bind: str = "127.0.0.1",
    ):
        if not isinstance(manifest, Manifest):
            manifest = load_manifest(manifest)
        self.manifest = manifest
        self.mode = mode
        self.store, self.auth = load_fixtures(manifest)
        self.capture = (
            CaptureLog(capture_path, redact_authorization=not capture_raw)
            if capture_path is not None
            else None
        )
        self.host = ServiceHost(self.store, self.auth, mode, self.capture)
        handler = type("BoundHandler", (_Handler,), {"host": self.host})
        self._server = ThreadingHTTPServer((bind, port), handler)
        self._server.daemon_threads = True
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    @property
    def base_url(self) -> str:
        return f"http://{self._server.server_address[0]}:{self.port}"

    def start(self) -> "TestbedServer":
        if self.capture is not None:
            self.capture.event(
                "startup",
                mode=self.mode.value,
                repositories=len(self.manifest.repositories),
            )
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        logger.info("testbed serving on %s (mode %s)", self.base_url, self.mode.value)
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
        if self.capture is not None:
            self.capture.event("shutdown")
            self.capture.close()

    def __enter__(self) -> "TestbedServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
