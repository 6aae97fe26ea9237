"""Lexer, parser, printer, and executor for the query-language subset."""

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
from .executor import (
    BLOCKED_MESSAGE,
    CONTENT_HTML_PREFIX,
    CONTENT_HTML_SUFFIX,
    FEATURES_HEADER,
    PRIVATE_FILE_FEATURE,
    Executor,
    GqlError,
    GqlResponse,
    encode_content_html,
)
from .lexer import GraphQLSyntaxError
from .parser import parse
from .printer import print_document, print_value

__all__ = [
    "BLOCKED_MESSAGE",
    "BooleanValue",
    "CONTENT_HTML_PREFIX",
    "CONTENT_HTML_SUFFIX",
    "Document",
    "EnumValue",
    "Executor",
    "FEATURES_HEADER",
    "Field",
    "GqlError",
    "GqlResponse",
    "GraphQLSyntaxError",
    "InlineFragment",
    "IntValue",
    "NullValue",
    "OperationDefinition",
    "PRIVATE_FILE_FEATURE",
    "Selection",
    "StringValue",
    "Value",
    "VariableDefinition",
    "VariableRef",
    "encode_content_html",
    "parse",
    "print_document",
    "print_value",
]
