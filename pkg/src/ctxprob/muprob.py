"""Classical contextual probability on formulas: p(a | b) = xi(ext a & ext b) / xi(ext b)."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ZeroConditioningEvent
from .lang import And, Formula, Model, Not, Or, extension, holds_at, random_formula, to_text
from .probspace import FiniteProbabilitySpace, measure


@dataclass(frozen=True)
class MuContextualStructure:
    model: Model
    xi: FiniteProbabilitySpace

    def __post_init__(self):
        if set(self.xi.points) != self.model.full:
            raise ValueError("xi must be defined on exactly the model's universe")

    def with_xi(self, xi: FiniteProbabilitySpace) -> "MuContextualStructure":
        return MuContextualStructure(self.model, xi)


def in_psi_plus(s: MuContextualStructure, b: Formula) -> bool:
    """True iff ``b`` has non-zero probability, i.e. may be conditioned on."""
    return measure(s.xi, extension(s.model, b)) != 0


def mu_conditional(s: MuContextualStructure, a: Formula, b: Formula) -> Fraction:
    eb = extension(s.model, b)
    denom = measure(s.xi, eb)
    if denom == 0:
        raise ZeroConditioningEvent(f"{to_text(b)} has probability 0")
    return measure(s.xi, extension(s.model, a) & eb) / denom


def mu_absolute(s: MuContextualStructure, a: Formula) -> Fraction:
    return measure(s.xi, extension(s.model, a))


def _pointwise_conditional(s: MuContextualStructure, a: Formula, b: Formula) -> Fraction:
    # brute-force oracle: enumerate points and evaluate truth directly
    num = den = Fraction(0)
    for point, w in zip(s.xi.points, s.xi.weights):
        if holds_at(s.model, point, b):
            den += w
            if holds_at(s.model, point, a):
                num += w
    return num / den


@dataclass
class ConditionalMeasureReport:
    passed: bool
    condition: str
    trials: int
    failures: list = field(default_factory=list)

    def as_dict(self):
        return {
            "passed": self.passed,
            "condition": self.condition,
            "trials": self.trials,
            "failures": self.failures,
        }


def check_conditional_measure(s: MuContextualStructure, b: Formula, trials: int = 50,
                   seed: int = 0, depth: int = 4) -> ConditionalMeasureReport:
    """Check that alpha -> p(alpha | b) is a probability measure, exactly.

    Over ``trials`` random formulas this checks normalization on
    tautologies ``g | !g``, additivity on disjoint pairs (the second formula
    is forced disjoint as ``a2 & !a1``), and inclusion-exclusion on
    overlapping pairs against a pointwise enumeration oracle.
    """
    if not in_psi_plus(s, b):
        raise ZeroConditioningEvent(f"{to_text(b)} has probability 0")
    rng = random.Random(seed)
    preds = s.model.predicates
    failures = []
    for t in range(trials):
        g = random_formula(rng, preds, depth)
        taut = Or(g, Not(g))
        if mu_conditional(s, taut, b) != 1:
            failures.append({"trial": t, "check": "normalization", "formula": to_text(taut)})

        a1 = random_formula(rng, preds, depth)
        a2 = And(random_formula(rng, preds, depth), Not(a1))
        lhs = mu_conditional(s, Or(a1, a2), b)
        rhs = mu_conditional(s, a1, b) + mu_conditional(s, a2, b)
        if lhs != rhs:
            failures.append({"trial": t, "check": "additivity", "a1": to_text(a1),
                             "a2": to_text(a2), "lhs": str(lhs), "rhs": str(rhs)})

        c1 = random_formula(rng, preds, depth)
        c2 = random_formula(rng, preds, depth)
        union = mu_conditional(s, Or(c1, c2), b)
        incl_excl = mu_conditional(s, c1, b) + mu_conditional(s, c2, b) - mu_conditional(s, And(c1, c2), b)
        oracle = _pointwise_conditional(s, Or(c1, c2), b)
        if not union == incl_excl == oracle:
            failures.append({"trial": t, "check": "inclusion-exclusion", "a1": to_text(c1),
                             "a2": to_text(c2), "union": str(union),
                             "inclusion_exclusion": str(incl_excl), "oracle": str(oracle)})
    return ConditionalMeasureReport(not failures, to_text(b), trials, failures)
