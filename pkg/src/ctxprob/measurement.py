"""Measurement procedures, compatibility, testability and context-averaged probability."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple, Optional

from .errors import (
    NotJointlyTestable,
    UnknownContext,
    UnknownProperty,
    ZeroConditioningEvent,
)
from .lang import (
    And,
    Atom,
    Formula,
    Not,
    PropertyInContext,
    contexts_of,
    properties_of,
    to_text,
)
from .muprob import MuContextualStructure, in_psi_plus, mu_conditional
from .probspace import FiniteProbabilitySpace


@dataclass(frozen=True)
class MeasurementProcedure:
    """A procedure M: the properties it measures and its space of micro-contexts."""

    id: str
    measures: frozenset
    contexts: FiniteProbabilitySpace

    def __init__(self, id: str, measures: Iterable[str], contexts: FiniteProbabilitySpace):
        measures = frozenset(measures)
        if not measures:
            raise ValueError(f"procedure {id} measures no property")
        if len(contexts) == 0:
            raise ValueError(f"procedure {id} has no contexts")
        object.__setattr__(self, "id", id)
        object.__setattr__(self, "measures", measures)
        object.__setattr__(self, "contexts", contexts)

    @property
    def context_ids(self) -> tuple:
        return self.contexts.points

    def nu(self, ctx) -> Fraction:
        return self.contexts.weight(ctx)


class MeasurementRegistry:
    """All procedures, indexed by the properties they measure.

    If ``properties`` is given, every listed property must be measured by
    at least one procedure.
    """

    def __init__(self, procedures: Iterable[MeasurementProcedure], properties: Optional[Iterable[str]] = None):
        self.procedures = tuple(sorted(procedures, key=lambda m: m.id))
        self._by_id = {m.id: m for m in self.procedures}
        if len(self._by_id) != len(self.procedures):
            raise ValueError("duplicate procedure ids")
        by_property: dict = {}
        for m in self.procedures:
            for e in m.measures:
                by_property.setdefault(e, set()).add(m.id)
        self.by_property = {e: frozenset(ms) for e, ms in by_property.items()}
        self.all_contexts = frozenset(c for m in self.procedures for c in m.context_ids)
        if properties is not None:
            missing = sorted(set(properties) - set(self.by_property))
            if missing:
                raise ValueError(f"properties without a measurement procedure: {missing}")

    def __getitem__(self, mid: str) -> MeasurementProcedure:
        return self._by_id[mid]

    def procedures_for(self, props: Iterable[str]) -> list:
        """Procedures measuring every property in ``props`` (all, if empty)."""
        props = list(props)
        for e in props:
            if e not in self.by_property:
                raise UnknownProperty(f"property {e!r} is not measured by any procedure")
        ids = set(self._by_id)
        for e in props:
            ids &= self.by_property[e]
        return [self._by_id[i] for i in sorted(ids)]


def _resolve(reg: MeasurementRegistry, m) -> MeasurementProcedure:
    return m if isinstance(m, MeasurementProcedure) else reg[m]


def compatible(reg: MeasurementRegistry, props: Iterable[str]) -> bool:
    props = list(props)
    if not props:
        raise ValueError("compatibility needs at least one property")
    return bool(reg.procedures_for(props))


class Witness(NamedTuple):
    procedure: str
    context: Optional[str]


def is_testable(reg: MeasurementRegistry, f: Formula) -> Optional[list]:
    """Return the (procedure, context) witnesses making ``f`` testable, or None.

    A formula without property atoms is testable under every procedure; its
    witnesses carry ``context=None``.
    """
    props = properties_of(f)
    ctxs = contexts_of(f)
    for c in ctxs:
        if c not in reg.all_contexts:
            raise UnknownContext(f"context {c!r} belongs to no procedure")
    if not props:
        return [Witness(m.id, None) for m in reg.procedures]
    common = reg.procedures_for(props)
    if not common or len(ctxs) != 1:
        return None
    (c,) = ctxs
    found = [Witness(m.id, c) for m in common if c in m.contexts]
    return found or None


def reindex(f: Formula, old: str, new: str) -> Formula:
    """Replace context ``old`` by ``new`` in every property atom of ``f``."""
    if isinstance(f, Atom):
        p = f.pred
        if isinstance(p, PropertyInContext) and p.ctx == old:
            return Atom(PropertyInContext(p.prop, new))
        return f
    if isinstance(f, Not):
        return Not(reindex(f.child, old, new))
    cls = type(f)
    return cls(reindex(f.left, old, new), reindex(f.right, old, new))


def _anchor(a: Formula, b: Formula) -> Optional[str]:
    ctxs = contexts_of(a) | contexts_of(b)
    return next(iter(ctxs)) if len(ctxs) == 1 else None


def context_conditionals(s: MuContextualStructure, reg: MeasurementRegistry, a: Formula,
                         b: Formula, m) -> list:
    """Per-context terms ``(C, nu_M(C), p(a^C | b^C))`` in the procedure's context order.

    Contexts of zero weight are listed with ``None`` as the conditional.
    """
    m = _resolve(reg, m)
    wits = is_testable(reg, And(a, b))
    if not wits or m.id not in {w.procedure for w in wits}:
        raise NotJointlyTestable(f"{to_text(a)} and {to_text(b)} are not jointly testable under {m.id}")
    anchor = _anchor(a, b)
    terms = []
    for c, nu in zip(m.contexts.points, m.contexts.weights):
        if nu == 0:
            terms.append((c, nu, None))
            continue
        ac = reindex(a, anchor, c) if anchor is not None else a
        bc = reindex(b, anchor, c) if anchor is not None else b
        if not in_psi_plus(s, bc):
            raise ZeroConditioningEvent(f"{to_text(bc)} has probability 0 in context {c!r}")
        terms.append((c, nu, mu_conditional(s, ac, bc)))
    return terms


def mean_conditional(s: MuContextualStructure, reg: MeasurementRegistry, a: Formula,
                     b: Formula, m) -> Fraction:
    """Average of p(a^C | b^C) over the contexts C of procedure ``m``, weighted by nu_M."""
    total = Fraction(0)
    for _, nu, p in context_conditionals(s, reg, a, b, m):
        if p is not None:
            total += nu * p
    return total


def anchored_to(a: Formula, b: Formula, m: MeasurementProcedure) -> tuple:
    """Move the shared context index of ``a`` and ``b`` onto the first context of ``m``."""
    anchor = _anchor(a, b)
    if anchor is None:
        return a, b
    c = m.context_ids[0]
    return reindex(a, anchor, c), reindex(b, anchor, c)


@dataclass
class IndependenceReport:
    passed: bool
    means: dict
    max_deviation: Fraction
    tolerance: object
    vacuous: bool = False
    notes: list = field(default_factory=list)

    def as_dict(self):
        return {
            "passed": self.passed,
            "means": {k: str(v) for k, v in self.means.items()},
            "max_deviation": str(self.max_deviation),
            "tolerance": str(self.tolerance),
            "vacuous": self.vacuous,
        }


def check_procedure_independence(s: MuContextualStructure, reg: MeasurementRegistry, a: Formula,
                                 b: Formula, tolerance=0) -> IndependenceReport:
    """Compare the mean conditional probability across every admissible procedure.

    Admissible procedures are those measuring every property occurring in
    ``a`` or ``b``; the formulas are re-anchored to each procedure's own
    contexts before averaging, so procedures need not share context labels.
    """
    props = properties_of(a) | properties_of(b)
    if len(contexts_of(a) | contexts_of(b)) > 1:
        raise NotJointlyTestable("formulas mix several context indices")
    procs = reg.procedures_for(props)
    if not procs:
        raise NotJointlyTestable(f"no procedure measures all of {sorted(props)}")
    means = {}
    for m in procs:
        am, bm = anchored_to(a, b, m)
        means[m.id] = mean_conditional(s, reg, am, bm, m)
    vals = list(means.values())
    dev = max(vals) - min(vals)
    return IndependenceReport(dev <= tolerance, means, dev, tolerance, vacuous=len(procs) < 2)
