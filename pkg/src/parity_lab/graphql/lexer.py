"""Tokenizer for the query-language subset.

Whitespace and commas separate tokens and are otherwise ignored; ``#``
starts a comment running to end of line. Positions are 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class GraphQLSyntaxError(Exception):
    """Lex/parse failure with 1-based position and the offending token text."""

    def __init__(self, message: str, line: int, column: int, token: str):
        super().__init__(f"Syntax error at line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column
        self.token = token


class TokenKind(Enum):
    NAME = "name"
    INT = "int"
    STRING = "string"
    PUNCT = "punct"
    EOF = "eof"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    value: str
    line: int
    column: int


_PUNCTUATION = set("{}():!$")
_NAME_START = set("_abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ")
_NAME_CONT = _NAME_START | set("0123456789")
_ESCAPES = {'"': '"', "\\": "\\", "/": "/", "b": "\b", "f": "\f", "n": "\n", "r": "\r", "t": "\t"}


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line = 1
    col = 1
    n = len(text)

    def err(message: str, token: str, at_line: int | None = None, at_col: int | None = None):
        return GraphQLSyntaxError(message, at_line or line, at_col or col, token)

    while pos < n:
        ch = text[pos]
        if ch == "\n":
            pos += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r,":
            pos += 1
            col += 1
            continue
        if ch == "#":
            while pos < n and text[pos] != "\n":
                pos += 1
                col += 1
            continue
        start_line, start_col = line, col
        if ch == "." :
            if text[pos : pos + 3] == "...":
                tokens.append(Token(TokenKind.PUNCT, "...", start_line, start_col))
                pos += 3
                col += 3
                continue
            raise err(f"unexpected character {ch!r}", ch)
        if ch in _PUNCTUATION:
            tokens.append(Token(TokenKind.PUNCT, ch, start_line, start_col))
            pos += 1
            col += 1
            continue
        if ch in _NAME_START:
            end = pos + 1
            while end < n and text[end] in _NAME_CONT:
                end += 1
            tokens.append(Token(TokenKind.NAME, text[pos:end], start_line, start_col))
            col += end - pos
            pos = end
            continue
        if ch == "-" or ch.isdigit():
            end = pos + 1
            while end < n and text[end].isdigit():
                end += 1
            lexeme = text[pos:end]
            if lexeme == "-" or (len(lexeme.lstrip("-")) > 1 and lexeme.lstrip("-")[0] == "0"):
                raise err(f"malformed integer {lexeme!r}", lexeme)
            tokens.append(Token(TokenKind.INT, lexeme, start_line, start_col))
            col += end - pos
            pos = end
            continue
        if ch == '"':
            value, pos, line, col = _lex_string(text, pos, line, col)
            tokens.append(Token(TokenKind.STRING, value, start_line, start_col))
            continue
        raise err(f"unexpected character {ch!r}", ch)

    tokens.append(Token(TokenKind.EOF, "", line, col))
    return tokens


def _lex_string(text: str, pos: int, line: int, col: int) -> tuple[str, int, int, int]:
    start_line, start_col = line, col
    pos += 1
    col += 1
    out: list[str] = []
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch == '"':
            return "".join(out), pos + 1, line, col + 1
        if ch == "\n":
            break
        if ch == "\\":
            if pos + 1 >= n:
                break
            esc = text[pos + 1]
            if esc in _ESCAPES:
                out.append(_ESCAPES[esc])
                pos += 2
                col += 2
                continue
            if esc == "u":
                code, pos, col = _lex_unicode_escape(text, pos, line, col)
                out.append(code)
                continue
            raise GraphQLSyntaxError(f"invalid escape \\{esc}", line, col, f"\\{esc}")
        out.append(ch)
        pos += 1
        col += 1
    raise GraphQLSyntaxError("unterminated string", start_line, start_col, '"')


def _lex_unicode_escape(text: str, pos: int, line: int, col: int) -> tuple[str, int, int]:
    """Decode \\uXXXX, combining surrogate pairs into one code point."""

    def read_hex4(at: int) -> int:
        digits = text[at : at + 4]
        if len(digits) != 4 or any(d not in "0123456789abcdefABCDEF" for d in digits):
            raise GraphQLSyntaxError(f"invalid unicode escape \\u{digits}", line, col, f"\\u{digits}")
        return int(digits, 16)

    code = read_hex4(pos + 2)
    pos += 6
    col += 6
    if 0xD800 <= code <= 0xDBFF and text[pos : pos + 2] == "\\u":
        low = read_hex4(pos + 2)
        if 0xDC00 <= low <= 0xDFFF:
            combined = 0x10000 + ((code - 0xD800) << 10) + (low - 0xDC00)
            return chr(combined), pos + 6, col + 6
    return chr(code), pos, col
