"""Canonical single-line printer; parse(print_document(d)) == d.

String values are emitted with JSON escaping, which is a strict subset
of the string grammar the lexer accepts.
"""

from __future__ import annotations

import json

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
    VariableRef,
)

__all__ = ["print_document", "print_value"]


def print_document(doc: Document) -> str:
    return _print_operation(doc.operation)


def _print_operation(op: OperationDefinition) -> str:
    head = "query"
    if op.name:
        head += f" {op.name}"
    if op.variable_definitions:
        defs = ", ".join(
            f"${d.name}: {d.type_name}{'!' if d.required else ''}"
            for d in op.variable_definitions
        )
        head += f"({defs})"
    return f"{head} {_print_selection_set(op.selection_set)}"


def _print_selection_set(selections: tuple[Selection, ...]) -> str:
    return "{ " + " ".join(_print_selection(s) for s in selections) + " }"


def _print_selection(selection: Selection) -> str:
    if isinstance(selection, InlineFragment):
        return f"... on {selection.type_condition} {_print_selection_set(selection.selection_set)}"
    out = ""
    if selection.alias is not None:
        out += f"{selection.alias}: "
    out += selection.name
    if selection.arguments:
        args = ", ".join(f"{name}: {print_value(value)}" for name, value in selection.arguments)
        out += f"({args})"
    if selection.selection_set is not None:
        out += f" {_print_selection_set(selection.selection_set)}"
    return out


def print_value(value: Value) -> str:
    if isinstance(value, StringValue):
        return json.dumps(value.value)
    if isinstance(value, IntValue):
        return str(value.value)
    if isinstance(value, BooleanValue):
        return "true" if value.value else "false"
    if isinstance(value, NullValue):
        return "null"
    if isinstance(value, EnumValue):
        return value.name
    if isinstance(value, VariableRef):
        return f"${value.name}"
    raise TypeError(f"not a value node: {value!r}")
