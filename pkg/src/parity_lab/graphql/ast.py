"""AST node types for the query-language subset.

One query operation per document; selections are plain fields or inline
fragments; values cover strings, integers, booleans, null, enum names,
and variable references. All nodes are frozen dataclasses so structural
equality doubles as the round-trip check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union


@dataclass(frozen=True)
class StringValue:
    value: str


@dataclass(frozen=True)
class IntValue:
    value: int


@dataclass(frozen=True)
class BooleanValue:
    value: bool


@dataclass(frozen=True)
class NullValue:
    pass


@dataclass(frozen=True)
class EnumValue:
    name: str


@dataclass(frozen=True)
class VariableRef:
    name: str


Value = Union[StringValue, IntValue, BooleanValue, NullValue, EnumValue, VariableRef]


@dataclass(frozen=True)
class Field:
    name: str
    alias: str | None = None
    arguments: tuple[tuple[str, Value], ...] = ()
    selection_set: tuple["Selection", ...] | None = None

    @property
    def response_key(self) -> str:
        return self.alias if self.alias is not None else self.name


@dataclass(frozen=True)
class InlineFragment:
    type_condition: str
    selection_set: tuple["Selection", ...]


Selection = Union[Field, InlineFragment]


@dataclass(frozen=True)
class VariableDefinition:
    name: str
    type_name: str
    required: bool


@dataclass(frozen=True)
class OperationDefinition:
    name: str | None
    variable_definitions: tuple[VariableDefinition, ...]
    selection_set: tuple[Selection, ...]
    # Only queries exist in this subset.
    kind: str = field(default="query")


@dataclass(frozen=True)
class Document:
    operation: OperationDefinition
