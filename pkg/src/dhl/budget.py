"""Explicit resource budgets for exponential enumerations and searches.

Every potentially exponential operation in this package accepts an optional
Budget.  Exceeding a budget raises BudgetExceeded; search drivers convert the
exception into a "resource-bounded-unknown" outcome instead of silently
returning a wrong or partial answer.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field


class BudgetExceeded(Exception):
    """An enumeration or search exhausted its node or time budget."""

    def __init__(self, kind: str, limit) -> None:
        super().__init__(f"{kind} budget exceeded (limit {limit})")
        self.kind = kind
        self.limit = limit


@dataclass
class Budget:
    """Mutable expansion counter with optional node and wall-clock caps."""

    max_nodes: int | None = None
    max_seconds: float | None = None
    nodes: int = 0
    _start: float = field(default_factory=time.monotonic, repr=False)

    def tick(self, count: int = 1) -> None:
        self.nodes += count
        if self.max_nodes is not None and self.nodes > self.max_nodes:
            raise BudgetExceeded("node", self.max_nodes)
        # Clock checks are sampled; the counter is the primary limit.
        if self.max_seconds is not None and self.nodes % 1024 == 0:
            if time.monotonic() - self._start > self.max_seconds:
                raise BudgetExceeded("time", self.max_seconds)

    def elapsed(self) -> float:
        return time.monotonic() - self._start
