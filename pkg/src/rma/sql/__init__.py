"""SQL subset with relational matrix operations in the FROM clause."""

from .ast import render
from .parser import parse
from .planner import Plan, Planner, plan

__all__ = ["Plan", "Planner", "parse", "plan", "render"]
