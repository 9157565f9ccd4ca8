"""Semirings over which the sparse products are computed.

Three semirings ship with the package: ordinary integers ``(+, *)``,
booleans ``(or, and)`` and the tropical min-plus semiring whose zero is
``+inf``.  Elements are plain Python scalars so that one element fits in a
single simulated message.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass
from typing import Any, Callable, Optional

import numpy as np

INF = math.inf


@dataclass(frozen=True)
class Semiring:
    name: str
    add: Callable[[Any, Any], Any]
    mul: Callable[[Any, Any], Any]
    zero: Any
    one: Any = None
    neg: Optional[Callable[[Any], Any]] = None
    sampler: Optional[Callable[[np.random.Generator], Any]] = None

    @property
    def is_ring(self) -> bool:
        return self.neg is not None

    def sum(self, values) -> Any:
        acc = self.zero
        for v in values:
            acc = self.add(acc, v)
        return acc

    def sample(self, rng: np.random.Generator) -> Any:
        """Draw one random element (used by generators and law checks)."""
        if self.sampler is None:
            raise ValueError(f"semiring {self.name!r} has no sampler")
        return self.sampler(rng)

    def parse(self, token: str) -> Any:
        return _PARSERS[self.name](token)

    def format(self, value: Any) -> str:
        if self.name == "boolean":
            return "1" if value else "0"
        if self.name == "tropical" and value == INF:
            return "inf"
        return str(value)

    def __repr__(self) -> str:
        return f"Semiring({self.name!r})"


def _sample_int(rng):
    # zero shows up often enough to exercise pattern-but-zero entries
    return int(rng.integers(-3, 10))


def _sample_bool(rng):
    return bool(rng.integers(0, 2))


def _sample_tropical(rng):
    if rng.random() < 0.1:
        return INF
    return int(rng.integers(0, 20))


def _parse_bool(tok: str) -> bool:
    t = tok.strip().lower()
    if t in ("1", "true", "t"):
        return True
    if t in ("0", "false", "f"):
        return False
    raise ValueError(f"not a boolean: {tok!r}")


def _parse_tropical(tok: str):
    t = tok.strip().lower()
    if t in ("inf", "+inf", "infinity"):
        return INF
    return int(t)


_PARSERS = {
    "integer": int,
    "boolean": _parse_bool,
    "tropical": _parse_tropical,
}

INTEGER = Semiring(
    "integer", operator.add, operator.mul, 0, 1, operator.neg, _sample_int
)
BOOLEAN = Semiring("boolean", operator.or_, operator.and_, False, True, None, _sample_bool)
TROPICAL = Semiring("tropical", min, operator.add, INF, 0, None, _sample_tropical)

SEMIRINGS = {s.name: s for s in (INTEGER, BOOLEAN, TROPICAL)}


def get_semiring(name: str | Semiring) -> Semiring:
    if isinstance(name, Semiring):
        return name
    try:
        return SEMIRINGS[name]
    except KeyError:
        raise ValueError(f"unknown semiring {name!r}; expected one of {sorted(SEMIRINGS)}") from None


def check_laws(sr: Semiring, samples: int = 1000, seed: int = 0) -> list[str]:
    """Check the semiring axioms on random triples; returns the failed law names."""
    rng = np.random.default_rng(seed)
    failed = set()
    for _ in range(samples):
        a, b, c = sr.sample(rng), sr.sample(rng), sr.sample(rng)
        if sr.add(sr.add(a, b), c) != sr.add(a, sr.add(b, c)):
            failed.add("add-associative")
        if sr.add(a, b) != sr.add(b, a):
            failed.add("add-commutative")
        if sr.add(a, sr.zero) != a:
            failed.add("add-identity")
        if sr.mul(sr.mul(a, b), c) != sr.mul(a, sr.mul(b, c)):
            failed.add("mul-associative")
        if sr.mul(a, sr.add(b, c)) != sr.add(sr.mul(a, b), sr.mul(a, c)):
            failed.add("left-distributive")
        if sr.mul(sr.add(a, b), c) != sr.add(sr.mul(a, c), sr.mul(b, c)):
            failed.add("right-distributive")
        if sr.mul(a, sr.zero) != sr.zero or sr.mul(sr.zero, a) != sr.zero:
            failed.add("zero-annihilates")
    return sorted(failed)
