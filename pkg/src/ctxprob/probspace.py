"""Finite classical probability spaces with exact rational weights.

The event algebra is always the full power set of the sample space, so an
event is just a ``frozenset`` of sample points.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Mapping

from .errors import InvalidSpace, MemberOutOfSpace, SpaceTooLarge, ZeroConditioningEvent

MAX_POINTS = 2**20

Event = frozenset


def as_fraction(value) -> Fraction:
    """Coerce ``value`` to a Fraction; strings are read as ``"p/q"``."""
    if isinstance(value, Fraction):
        return value
    # floats keep their exact binary value; use "p/q" strings for decimals
    return Fraction(value)


@dataclass(frozen=True)
class FiniteProbabilitySpace:
    """A finite sample space with a weight per point.

    >>> sp = FiniteProbabilitySpace.uniform("abcd")
    >>> measure(sp, {"a", "b"})
    Fraction(1, 2)
    """

    points: tuple
    weights: tuple
    _index: dict = field(init=False, repr=False, compare=False)

    def __init__(self, points: Iterable[Hashable], weights: Iterable, *, validate: bool = True):
        pts = tuple(points)
        ws = tuple(as_fraction(w) for w in weights)
        if len(pts) != len(ws):
            raise InvalidSpace(f"{len(pts)} points but {len(ws)} weights")
        if len(pts) > MAX_POINTS:
            raise SpaceTooLarge(f"{len(pts)} points exceeds cap of {MAX_POINTS}")
        index = {p: i for i, p in enumerate(pts)}
        if len(index) != len(pts):
            raise InvalidSpace("duplicate sample points")
        if validate:
            if any(w < 0 for w in ws):
                raise InvalidSpace("negative weight")
            total = sum(ws, Fraction(0))
            if total != 1:
                raise InvalidSpace(f"weights sum to {total}, not 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "_index", index)

    @classmethod
    def uniform(cls, points: Iterable[Hashable]) -> "FiniteProbabilitySpace":
        pts = tuple(points)
        if not pts:
            raise InvalidSpace("empty sample space")
        w = Fraction(1, len(pts))
        return cls(pts, [w] * len(pts))

    @classmethod
    def from_mapping(cls, mapping: Mapping, *, validate: bool = True) -> "FiniteProbabilitySpace":
        return cls(mapping.keys(), mapping.values(), validate=validate)

    @classmethod
    def unchecked(cls, points, weights) -> "FiniteProbabilitySpace":
        """Build without the normalization check (used for negative fixtures)."""
        return cls(points, weights, validate=False)

    def __len__(self):
        return len(self.points)

    def __contains__(self, point):
        return point in self._index

    def weight(self, point) -> Fraction:
        try:
            return self.weights[self._index[point]]
        except KeyError:
            raise MemberOutOfSpace(f"point {point!r} not in sample space") from None

    @property
    def full(self) -> Event:
        return frozenset(self.points)

    def as_dict(self) -> dict:
        return dict(zip(self.points, self.weights))


def _check_members(space: FiniteProbabilitySpace, e) -> None:
    for p in e:
        if p not in space:
            raise MemberOutOfSpace(f"point {p!r} not in sample space")


def measure(space: FiniteProbabilitySpace, e: Iterable) -> Fraction:
    e = frozenset(e)
    _check_members(space, e)
    # summation in the space's point order keeps the result order-independent
    return sum((w for p, w in zip(space.points, space.weights) if p in e), Fraction(0))


def conditional(space: FiniteProbabilitySpace, a: Iterable, b: Iterable) -> Fraction:
    """Return measure(a & b) / measure(b)."""
    a, b = frozenset(a), frozenset(b)
    _check_members(space, a)
    mb = measure(space, b)
    if mb == 0:
        raise ZeroConditioningEvent("conditioning event has probability 0")
    return measure(space, a & b) / mb


@dataclass
class KolmogorovReport:
    passed: bool
    total: Fraction
    deficit: Fraction
    negative_points: list = field(default_factory=list)
    additivity_failures: list = field(default_factory=list)
    families_checked: int = 0

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "total": str(self.total),
            "deficit": str(self.deficit),
            "negative_points": [repr(p) for p in self.negative_points],
            "additivity_failures": [
                {"blocks": [sorted(map(repr, b)) for b in fam], "union": str(u), "sum": str(s)}
                for fam, u, s in self.additivity_failures
            ],
            "families_checked": self.families_checked,
        }


def random_disjoint_family(space: FiniteProbabilitySpace, rng: random.Random, max_blocks: int = 5) -> list:
    """Partition a random subset of the points into up to ``max_blocks`` blocks."""
    k = rng.randint(1, max_blocks)
    blocks = [set() for _ in range(k)]
    for p in space.points:
        slot = rng.randint(-1, k - 1)
        if slot >= 0:
            blocks[slot].add(p)
    return [frozenset(b) for b in blocks]


def check_kolmogorov(space: FiniteProbabilitySpace, trials: int = 50, seed: int = 0) -> KolmogorovReport:
    """Check normalization, non-negativity and finite additivity exactly.

    Additivity is exercised on ``trials`` random disjoint families plus the
    partition of the space into singletons.
    """
    rng = random.Random(seed)
    total = sum(space.weights, Fraction(0))
    deficit = 1 - total
    negative = [p for p, w in zip(space.points, space.weights) if w < 0]
    failures = []
    families = [[frozenset([p]) for p in space.points]]
    families += [random_disjoint_family(space, rng) for _ in range(trials)]
    for fam in families:
        union = frozenset().union(*fam)
        lhs = measure(space, union)
        rhs = sum((measure(space, b) for b in fam), Fraction(0))
        if lhs != rhs:
            failures.append((fam, lhs, rhs))
    passed = deficit == 0 and not negative and not failures
    return KolmogorovReport(passed, total, deficit, negative, failures, len(families))
