"""Single command-line entry point for the testbed and its clients.

Subcommands: serve, fixtures-validate, recover, audit, capture-show.
Machine-readable output (reports, counts, capture records) goes to
standard output or to --report files; diagnostics go to standard error.
Exit codes: 0 success/consistent, 1 general failure or vulnerable
verdict, 2 partial restore, 3 blocked repository, 4 audit probe errors,
64 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import signal
import sys
import threading
from pathlib import Path

from .audit import AuditError, Auditor, MissingFixtureError, filter_matrix
from .auth import TokenKind
from .capture import read_capture
from .fixtures import FixtureValidationError, load_manifest, object_counts
from .host import TestbedServer
from .policy import EnforcementMode
from .recovery import (
    RecoveryAuthError,
    RecoveryError,
    RecoveryPlan,
    RepositoryBlockedError,
    recover,
)

EX_OK = 0
EX_FAILURE = 1
EX_PARTIAL_RESTORE = 2
EX_BLOCKED = 3
EX_PROBE_ERRORS = 4
EX_USAGE = 64

TOKEN_ENV_VAR = "PARITY_LAB_TOKEN"

MODE_NAMES = {
    "vulnerable": EnforcementMode.VULNERABLE_REST_ONLY,
    "central": EnforcementMode.CENTRAL_LAYER,
    "store": EnforcementMode.STORE_LEVEL,
}

logger = logging.getLogger("parity_lab")


class _ArgumentParser(argparse.ArgumentParser):
    """argparse with the conventional 64 exit for usage errors."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="parity-lab", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_ArgumentParser)

    serve = sub.add_parser("serve", help="run the testbed server")
    serve.add_argument("--port", type=int, default=8080)
    serve.add_argument("--mode", choices=sorted(MODE_NAMES), required=True)
    serve.add_argument("--fixtures", required=True, metavar="PATH")
    serve.add_argument("--capture", metavar="PATH")
    serve.add_argument(
        "--capture-raw",
        action="store_true",
        help="keep Authorization header values in the capture log",
    )
    serve.set_defaults(func=_cmd_serve)

    validate = sub.add_parser("fixtures-validate", help="validate a fixture manifest")
    validate.add_argument("manifest", metavar="PATH")
    validate.set_defaults(func=_cmd_fixtures_validate)

    rec = sub.add_parser("recover", help="restore a repository's files over GraphQL")
    rec.add_argument("--target", required=True, metavar="URL")
    rec.add_argument("--owner", required=True)
    rec.add_argument("--repo", required=True)
    rec.add_argument("--token", default=None, help=f"falls back to ${TOKEN_ENV_VAR}")
    rec.add_argument("--private-token", default=None)
    rec.add_argument("--out", required=True, metavar="DIR")
    rec.add_argument("--max-in-flight", type=int, default=4)
    rec.set_defaults(func=_cmd_recover)

    audit = sub.add_parser("audit", help="differential REST/GraphQL parity audit")
    audit.add_argument("--target", required=True, metavar="URL")
    audit.add_argument("--fixtures", required=True, metavar="PATH")
    audit.add_argument("--matrix", metavar="PATH", help="JSON filter over the default matrix")
    audit.add_argument("--report", metavar="PATH", help="write the report here instead of stdout")
    audit.add_argument("--token", default=None, help=f"falls back to ${TOKEN_ENV_VAR}")
    audit.add_argument("--private-token", required=True)
    audit.add_argument("--mode-claimed", default=None)
    audit.add_argument("--max-in-flight", type=int, default=8)
    audit.set_defaults(func=_cmd_audit)

    show = sub.add_parser("capture-show", help="pretty-print a JSONL capture log")
    show.add_argument("capture", metavar="PATH")
    show.add_argument("--grep", default=None, help="only records whose headers or body match")
    show.set_defaults(func=_cmd_capture_show)

    return parser


def dispatch(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


def main() -> None:
    sys.exit(dispatch())


def _resolve_token(value: str | None) -> str | None:
    return value if value is not None else os.environ.get(TOKEN_ENV_VAR)


# -- subcommands -----------------------------------------------------------------


def _cmd_serve(args: argparse.Namespace) -> int:
    try:
        manifest = load_manifest(args.fixtures)
    except (OSError, json.JSONDecodeError, FixtureValidationError) as err:
        logger.error("cannot load fixtures: %s", err)
        return EX_FAILURE
    try:
        server = TestbedServer(
            manifest,
            MODE_NAMES[args.mode],
            port=args.port,
            capture_path=args.capture,
            capture_raw=args.capture_raw,
        )
    except OSError as err:
        logger.error("cannot bind port %d: %s", args.port, err)
        return EX_FAILURE
    server.start()
    logger.info("serving on %s (mode %s)", server.base_url, server.mode.value)
    # Demo credentials so the recover/audit flows can run against this
    # process without in-process access: one developer token per account
    # plus a single-use login code for the token exchange route.
    for account in server.auth.accounts():
        token = server.auth.issue_token(account, TokenKind.DEVELOPER_PUBLIC)
        code = server.auth.mint_login_code(account)
        logger.info("account %s: developer token %s, login code %s", account, token.token, code)

    stop = threading.Event()

    def _on_signal(signum, frame):
        logger.info("received signal %d, shutting down", signum)
        stop.set()

    signal.signal(signal.SIGINT, _on_signal)
    signal.signal(signal.SIGTERM, _on_signal)
    stop.wait()
    server.stop()
    return EX_OK


def _cmd_fixtures_validate(args: argparse.Namespace) -> int:
    try:
        manifest = load_manifest(args.manifest)
    except (OSError, json.JSONDecodeError) as err:
        logger.error("cannot read manifest: %s", err)
        return EX_FAILURE
    except FixtureValidationError as err:
        logger.error("%s", err)
        return EX_FAILURE
    for key, count in object_counts(manifest).items():
        print(f"{key}: {count}")
    return EX_OK


def _cmd_recover(args: argparse.Namespace) -> int:
    token = _resolve_token(args.token)
    if token is None:
        logger.error("no token: pass --token or set %s", TOKEN_ENV_VAR)
        return EX_USAGE
    plan = RecoveryPlan(
        target=args.target,
        owner=args.owner,
        name=args.repo,
        public_token=token,
        private_token=args.private_token,
        output_dir=args.out,
        max_in_flight=args.max_in_flight,
    )
    try:
        report = recover(plan)
    except RepositoryBlockedError as err:
        print(json.dumps({"aborted": str(err), "files_restored": 0}))
        return EX_BLOCKED
    except RecoveryAuthError as err:
        logger.error("authentication failed: %s", err)
        return EX_FAILURE
    except RecoveryError as err:
        logger.error("recovery failed: %s", err)
        return EX_FAILURE
    print(json.dumps(report.to_payload()))
    return EX_PARTIAL_RESTORE if report.skipped else EX_OK


def _cmd_audit(args: argparse.Namespace) -> int:
    token = _resolve_token(args.token)
    if token is None:
        logger.error("no token: pass --token or set %s", TOKEN_ENV_VAR)
        return EX_USAGE
    try:
        manifest = load_manifest(args.fixtures)
    except (OSError, json.JSONDecodeError, FixtureValidationError) as err:
        logger.error("cannot load fixtures: %s", err)
        return EX_FAILURE
    try:
        auditor = Auditor(
            target=args.target,
            manifest=manifest,
            public_token=token,
            private_token=args.private_token,
            mode_claimed=args.mode_claimed,
            max_in_flight=args.max_in_flight,
        )
        matrix = auditor.build_matrix()
        if args.matrix:
            with open(args.matrix, encoding="utf-8") as fh:
                matrix = filter_matrix(matrix, json.load(fh))
        report = auditor.audit(matrix)
    except (MissingFixtureError, AuditError, OSError, json.JSONDecodeError, ValueError) as err:
        logger.error("audit failed: %s", err)
        return EX_FAILURE
    payload = json.dumps(report.to_payload(), indent=2)
    if args.report:
        Path(args.report).write_text(payload + "\n", encoding="utf-8")
        logger.info(
            "verdict %s: %d permissive, %d restrictive, %d errored (report: %s)",
            report.verdict,
            len(report.permissive_findings),
            len(report.restrictive_findings),
            len(report.errored),
            args.report,
        )
    else:
        print(payload)
    if report.errored:
        return EX_PROBE_ERRORS
    return EX_FAILURE if report.verdict == "vulnerable" else EX_OK


def _cmd_capture_show(args: argparse.Namespace) -> int:
    try:
        records, events = read_capture(args.capture)
    except (OSError, json.JSONDecodeError) as err:
        logger.error("cannot read capture: %s", err)
        return EX_FAILURE
    entries = events + records if args.grep is None else records
    if args.grep is not None:
        needle = args.grep
        entries = [r for r in records if _capture_mentions(r, needle)]
    for entry in entries:
        print(json.dumps(entry, indent=2))
    return EX_OK


def _capture_mentions(record: dict, needle: str) -> bool:
    headers = record.get("headers", {})
    if any(needle in key or needle in value for key, value in headers.items()):
        return True
    return needle in record.get("body", "")
