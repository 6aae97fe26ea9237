"""Recursive-descent parser for the query-language subset.

Grammar (whitespace/commas are separators, ``#`` comments):

    document        := operation
    operation       := "query" [name] [variableDefs] selectionSet
                     | selectionSet            (anonymous shorthand)
    variableDefs    := "(" ("$" name ":" typeName ["!"])+ ")"
    selectionSet    := "{" selection+ "}"
    selection       := field | inlineFragment
    field           := [alias ":"] name ["(" argument+ ")"] [selectionSet]
    argument        := name ":" value
    inlineFragment  := "..." "on" typeName selectionSet
    value           := string | int | "true" | "false" | "null"
                     | enumName | "$" name
"""

from __future__ import annotations

from .ast import (
    BooleanValue,
    Document,
    EnumValue,
    Field,
    InlineFragment,
    IntValue,
    NullValue,
    OperationDefinition,
    Selection,
    StringValue,
    Value,
    VariableDefinition,
    VariableRef,
)
from .lexer import GraphQLSyntaxError, Token, TokenKind, tokenize

__all__ = ["parse", "GraphQLSyntaxError"]


def parse(query_text: str) -> Document:
    return _Parser(tokenize(query_text)).parse_document()


class _Parser:
    def __init__(self, tokens: list[Token]):
        self._tokens = tokens
        self._pos = 0

    # -- token plumbing ----------------------------------------------------

    @property
    def _current(self) -> Token:
        return self._tokens[self._pos]

    def _advance(self) -> Token:
        token = self._current
        if token.kind is not TokenKind.EOF:
            self._pos += 1
        return token

    def _error(self, expected: str) -> GraphQLSyntaxError:
        token = self._current
        if token.kind is TokenKind.EOF:
            found = "unexpected end of input"
        else:
            found = f"unexpected token {token.value!r}"
        return GraphQLSyntaxError(
            f"expected {expected}, {found}", token.line, token.column, token.value
        )

    def _expect_punct(self, value: str) -> Token:
        token = self._current
        if token.kind is TokenKind.PUNCT and token.value == value:
            return self._advance()
        raise self._error(f"{value!r}")

    def _at_punct(self, value: str) -> bool:
        return self._current.kind is TokenKind.PUNCT and self._current.value == value

    def _expect_name(self, what: str = "a name") -> Token:
        token = self._current
        if token.kind is TokenKind.NAME:
            return self._advance()
        raise self._error(what)

    # -- productions --------------------------------------------------------

    def parse_document(self) -> Document:
        operation = self._parse_operation()
        if self._current.kind is not TokenKind.EOF:
            raise self._error("end of document")
        return Document(operation)

    def _parse_operation(self) -> OperationDefinition:
        name: str | None = None
        variable_definitions: tuple[VariableDefinition, ...] = ()
        if self._current.kind is TokenKind.NAME:
            keyword = self._advance()
            if keyword.value != "query":
                raise GraphQLSyntaxError(
                    f"expected 'query' or '{{', unexpected token {keyword.value!r}",
                    keyword.line,
                    keyword.column,
                    keyword.value,
                )
            if self._current.kind is TokenKind.NAME:
                name = self._advance().value
            if self._at_punct("("):
                variable_definitions = self._parse_variable_definitions()
        elif not self._at_punct("{"):
            raise self._error("'query' or '{'")
        selection_set = self._parse_selection_set()
        return OperationDefinition(name, variable_definitions, selection_set)

    def _parse_variable_definitions(self) -> tuple[VariableDefinition, ...]:
        self._expect_punct("(")
        defs: list[VariableDefinition] = []
        seen: set[str] = set()
        while not self._at_punct(")"):
            self._expect_punct("$")
            name_token = self._expect_name("a variable name")
            if name_token.value in seen:
                raise GraphQLSyntaxError(
                    f"duplicate variable ${name_token.value}",
                    name_token.line,
                    name_token.column,
                    name_token.value,
                )
            seen.add(name_token.value)
            self._expect_punct(":")
            type_token = self._expect_name("a type name")
            required = False
            if self._at_punct("!"):
                self._advance()
                required = True
            defs.append(VariableDefinition(name_token.value, type_token.value, required))
        if not defs:
            raise self._error("a variable definition")
        self._advance()  # ")"
        return tuple(defs)

    def _parse_selection_set(self) -> tuple[Selection, ...]:
        self._expect_punct("{")
        selections: list[Selection] = []
        while not self._at_punct("}"):
            if self._at_punct("..."):
                selections.append(self._parse_inline_fragment())
            elif self._current.kind is TokenKind.NAME:
                selections.append(self._parse_field())
            else:
                raise self._error("a field or inline fragment")
        if not selections:
            raise self._error("at least one selection")
        self._advance()  # "}"
        return tuple(selections)

    def _parse_inline_fragment(self) -> InlineFragment:
        self._expect_punct("...")
        on = self._expect_name("'on'")
        if on.value != "on":
            raise GraphQLSyntaxError(
                f"expected 'on', unexpected token {on.value!r}", on.line, on.column, on.value
            )
        type_token = self._expect_name("a type name")
        return InlineFragment(type_token.value, self._parse_selection_set())

    def _parse_field(self) -> Field:
        first = self._expect_name("a field name")
        alias: str | None = None
        name = first.value
        if self._at_punct(":"):
            self._advance()
            alias = first.value
            name = self._expect_name("a field name").value
        arguments: tuple[tuple[str, Value], ...] = ()
        if self._at_punct("("):
            arguments = self._parse_arguments()
        selection_set: tuple[Selection, ...] | None = None
        if self._at_punct("{"):
            selection_set = self._parse_selection_set()
        return Field(name=name, alias=alias, arguments=arguments, selection_set=selection_set)

    def _parse_arguments(self) -> tuple[tuple[str, Value], ...]:
        self._expect_punct("(")
        args: list[tuple[str, Value]] = []
        seen: set[str] = set()
        while not self._at_punct(")"):
            name_token = self._expect_name("an argument name")
            if name_token.value in seen:
                raise GraphQLSyntaxError(
                    f"duplicate argument {name_token.value!r}",
                    name_token.line,
                    name_token.column,
                    name_token.value,
                )
            seen.add(name_token.value)
            self._expect_punct(":")
            args.append((name_token.value, self._parse_value()))
        if not args:
            raise self._error("an argument")
        self._advance()  # ")"
        return tuple(args)

    def _parse_value(self) -> Value:
        token = self._current
        if token.kind is TokenKind.STRING:
            self._advance()
            return StringValue(token.value)
        if token.kind is TokenKind.INT:
            self._advance()
            return IntValue(int(token.value))
        if token.kind is TokenKind.PUNCT and token.value == "$":
            self._advance()
            return VariableRef(self._expect_name("a variable name").value)
        if token.kind is TokenKind.NAME:
            self._advance()
            if token.value == "true":
                return BooleanValue(True)
            if token.value == "false":
                return BooleanValue(False)
            if token.value == "null":
                return NullValue()
            return EnumValue(token.value)
        raise self._error("a value")
