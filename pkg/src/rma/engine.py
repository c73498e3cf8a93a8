"""Query engine: parse, plan and execute SQL text against a catalog."""

from __future__ import annotations

import time
from dataclasses import dataclass

from .catalog import Catalog
from .columnar import Relation
from .sql.parser import parse
from .sql.planner import Plan, Planner


@dataclass(frozen=True)
class Timings:
    parse_ms: float
    plan_ms: float
    execute_ms: float

    @property
    def total_ms(self) -> float:
        return self.parse_ms + self.plan_ms + self.execute_ms


@dataclass(frozen=True)
class QueryResult:
    relation: Relation
    plan: Plan
    timings: Timings


class Engine:
    def __init__(self, catalog: Catalog | None = None):
        self.catalog = catalog if catalog is not None else Catalog()

    def register(self, name: str, r: Relation) -> Relation:
        return self.catalog.register(name, r)

    def plan(self, text: str) -> Plan:
        return Planner(self.catalog).plan(parse(text))

    def run(self, text: str) -> QueryResult:
        t0 = time.perf_counter()
        tree = parse(text)
        t1 = time.perf_counter()
        plan = Planner(self.catalog).plan(tree)
        t2 = time.perf_counter()
        rel = plan.execute()
        t3 = time.perf_counter()
        ms = 1000.0
        return QueryResult(rel, plan, Timings((t1 - t0) * ms, (t2 - t1) * ms, (t3 - t2) * ms))

    def query(self, text: str) -> Relation:
        return self.run(text).relation
