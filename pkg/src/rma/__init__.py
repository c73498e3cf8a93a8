"""Columnar relational engine with relational matrix operations."""

from .bridge import OpCode, RmaArg, RmaCall, apply_rma, reduce, rma
from .catalog import Catalog
from .columnar import Column, Kind, Relation, Schema
from .engine import Engine

__all__ = [
    "Catalog",
    "Column",
    "Engine",
    "Kind",
    "OpCode",
    "Relation",
    "RmaArg",
    "RmaCall",
    "Schema",
    "apply_rma",
    "reduce",
    "rma",
]
