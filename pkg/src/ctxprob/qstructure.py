"""Property-level probabilities P_S(E), the order they induce, and ortholattice checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional

from .errors import NoProcedure, NotInDomain, PostconditionViolated, UnknownProperty, ZeroConditioningEvent
from .lang import Atom, PropertyInContext, StateId
from .measurement import MeasurementRegistry, mean_conditional
from .muprob import MuContextualStructure


def _close(x, y, tol) -> bool:
    return x == y if not tol else abs(x - y) <= tol


@dataclass(frozen=True)
class PropertySpace:
    properties: frozenset
    states: frozenset

    def __init__(self, properties: Iterable[str], states: Iterable[str]):
        props, sts = frozenset(properties), frozenset(states)
        if props & sts:
            raise ValueError(f"names used both as property and state: {sorted(props & sts)}")
        object.__setattr__(self, "properties", props)
        object.__setattr__(self, "states", sts)


class StateProbabilityFamily:
    """Values P_S(E) indexed by (state, property)."""

    def __init__(self, values: Mapping[tuple, object]):
        self.values = dict(values)
        for key, v in self.values.items():
            if not 0 <= v <= 1:
                raise ValueError(f"P{key} = {v} outside [0, 1]")
        self.states = tuple(dict.fromkeys(s for s, _ in self.values))
        self.properties = tuple(dict.fromkeys(e for _, e in self.values))

    def __call__(self, state, prop):
        return self.values[(state, prop)]

    def with_value(self, state, prop, value) -> "StateProbabilityFamily":
        vals = dict(self.values)
        vals[(state, prop)] = value
        return StateProbabilityFamily(vals)

    def is_complete(self) -> bool:
        return all((s, e) in self.values for s in self.states for e in self.properties)


# -- P_S from a classical model ---------------------------------------------


def property_probability(s: MuContextualStructure, reg: MeasurementRegistry, state: str,
                         prop: str, procedure=None) -> Fraction:
    """P_S(E): mean of p(E_C | S) over the contexts of a procedure measuring E.

    Uses the lowest-id procedure unless ``procedure`` is given; whether the
    choice matters is what :func:`check_procedure_independence` tests.
    """
    try:
        procs = reg.procedures_for([prop])
    except UnknownProperty:
        raise NoProcedure(f"no procedure measures {prop!r}") from None
    m = reg[procedure] if isinstance(procedure, str) else (procedure or procs[0])
    a = Atom(PropertyInContext(prop, m.context_ids[0]))
    return mean_conditional(s, reg, a, Atom(StateId(state)), m)


def property_family(s: MuContextualStructure, reg: MeasurementRegistry, states: Iterable[str],
                    props: Iterable[str]) -> StateProbabilityFamily:
    props = list(props)
    return StateProbabilityFamily({(st, e): property_probability(s, reg, st, e)
                                   for st in states for e in props})


# -- induced preorder -------------------------------------------------------


@dataclass
class InducedPreorder:
    elements: tuple
    leq: frozenset
    classes: list

    def le(self, a, b) -> bool:
        return (a, b) in self.leq

    def equiv(self, a, b) -> bool:
        return (a, b) in self.leq and (b, a) in self.leq

    def is_reflexive(self) -> bool:
        return all((a, a) in self.leq for a in self.elements)

    def is_transitive(self) -> bool:
        return all((a, c) in self.leq for a, b in self.leq for b2, c in self.leq if b == b2)


def induced_preorder(family: StateProbabilityFamily) -> InducedPreorder:
    """E below F iff P_S(E) <= P_S(F) for every state S."""
    if not family.is_complete():
        raise ValueError("family must have a value for every (state, property) pair")
    props, states = family.properties, family.states
    leq = frozenset((e, f) for e in props for f in props
                    if all(family(s, e) <= family(s, f) for s in states))
    classes, seen = [], set()
    for e in props:
        if e in seen:
            continue
        cls = tuple(f for f in props if (e, f) in leq and (f, e) in leq)
        seen.update(cls)
        classes.append(cls)
    return InducedPreorder(tuple(props), leq, classes)


# -- ortholattices ----------------------------------------------------------


class OrthoLattice:
    """A finite, table-driven orthocomplemented lattice.

    ``leq`` is a set of ordered pairs.  Meet and join tables are derived from
    the order when not supplied.
    """

    def __init__(self, elements: Iterable, leq: Iterable[tuple], ortho: Mapping,
                 meet: Optional[Mapping] = None, join: Optional[Mapping] = None):
        self.elements = tuple(elements)
        self._leq = frozenset(leq)
        self._ortho = dict(ortho)
        self._meet = dict(meet) if meet is not None else self._bound(lower=True)
        self._join = dict(join) if join is not None else self._bound(lower=False)
        bottoms = [a for a in self.elements if all(self.le(a, b) for b in self.elements)]
        tops = [a for a in self.elements if all(self.le(b, a) for b in self.elements)]
        if len(bottoms) != 1 or len(tops) != 1:
            raise ValueError("lattice needs exactly one least and one greatest element")
        self.bottom, self.top = bottoms[0], tops[0]

    def _bound(self, lower: bool) -> dict:
        out = {}
        for a in self.elements:
            for b in self.elements:
                if lower:
                    cands = [c for c in self.elements if self.le(c, a) and self.le(c, b)]
                    best = [c for c in cands if all(self.le(d, c) for d in cands)]
                else:
                    cands = [c for c in self.elements if self.le(a, c) and self.le(b, c)]
                    best = [c for c in cands if all(self.le(c, d) for d in cands)]
                if len(best) != 1:
                    kind = "meet" if lower else "join"
                    raise ValueError(f"{kind} of {a!r} and {b!r} does not exist")
                out[(a, b)] = best[0]
        return out

    def le(self, a, b) -> bool:
        return (a, b) in self._leq

    def meet(self, a, b):
        return self._meet[(a, b)]

    def join(self, a, b):
        return self._join[(a, b)]

    def ortho(self, a):
        return self._ortho[a]

    def orthogonal(self, a, b) -> bool:
        return self.le(a, self.ortho(b))

    def join_all(self, items):
        items = list(items)
        out = self.bottom
        for x in items:
            out = self.join(out, x)
        return out

    def check_laws(self) -> list:
        """Partial-order, lattice and orthocomplementation laws; returns violations."""
        els, bad = self.elements, []
        for a in els:
            if not self.le(a, a):
                bad.append(f"not reflexive at {a}")
            for b in els:
                if a != b and self.le(a, b) and self.le(b, a):
                    bad.append(f"not antisymmetric at {a},{b}")
                for c in els:
                    if self.le(a, b) and self.le(b, c) and not self.le(a, c):
                        bad.append(f"not transitive at {a},{b},{c}")
                m, j = self.meet(a, b), self.join(a, b)
                if not (self.le(m, a) and self.le(m, b)) or any(
                        self.le(c, a) and self.le(c, b) and not self.le(c, m) for c in els):
                    bad.append(f"meet({a},{b}) is not a glb")
                if not (self.le(a, j) and self.le(b, j)) or any(
                        self.le(a, c) and self.le(b, c) and not self.le(j, c) for c in els):
                    bad.append(f"join({a},{b}) is not a lub")
                if self.le(a, b) and not self.le(self.ortho(b), self.ortho(a)):
                    bad.append(f"ortho not order-reversing at {a},{b}")
            if self.ortho(self.ortho(a)) != a:
                bad.append(f"ortho not involutive at {a}")
            if self.meet(a, self.ortho(a)) != self.bottom:
                bad.append(f"meet({a}, ortho) is not bottom")
            if self.join(a, self.ortho(a)) != self.top:
                bad.append(f"join({a}, ortho) is not top")
        return bad

    def orthomodular_violations(self) -> list:
        """Pairs a <= b where b != a v (b ^ a') (reported, never enforced)."""
        return [(a, b) for a in self.elements for b in self.elements
                if self.le(a, b) and self.join(a, self.meet(b, self.ortho(a))) != b]

    def is_distributive(self) -> bool:
        els = self.elements
        return all(self.meet(a, self.join(b, c)) == self.join(self.meet(a, b), self.meet(a, c))
                   for a in els for b in els for c in els)

    def orthogonal_families(self) -> list:
        """All sets of >= 2 distinct non-bottom, pairwise orthogonal elements."""
        els = [e for e in self.elements if e != self.bottom]
        out = []

        def grow(current, start):
            if len(current) >= 2:
                out.append(tuple(current))
            for k in range(start, len(els)):
                e = els[k]
                if all(self.orthogonal(e, c) for c in current):
                    grow(current + [e], k + 1)

        grow([], 0)
        return out


@dataclass
class MeasureReport:
    passed: bool
    state: str
    normalization: object
    families_checked: int
    violations: list = field(default_factory=list)

    def as_dict(self):
        return {"passed": self.passed, "state": self.state, "normalization": str(self.normalization),
                "families_checked": self.families_checked, "violations": self.violations}


def is_generalized_probability_measure(lattice: OrthoLattice, family: StateProbabilityFamily,
                                       state, tolerance=0) -> MeasureReport:
    """Normalization at the top and additivity over pairwise-orthogonal families.

    Every orthogonal family is checked, which includes every maximal one.
    """
    p = lambda e: family(state, e)  # noqa: E731
    violations = []
    norm = p(lattice.top)
    if not _close(norm, 1, tolerance):
        violations.append({"check": "normalization", "element": str(lattice.top), "value": str(norm)})
    fams = lattice.orthogonal_families()
    for fam in fams:
        joined = lattice.join_all(fam)
        lhs = p(joined)
        rhs = sum((p(e) for e in fam), Fraction(0) if isinstance(lhs, Fraction) else 0.0)
        if not _close(lhs, rhs, tolerance):
            violations.append({"check": "additivity", "family": [str(e) for e in fam],
                               "join": str(joined), "lhs": str(lhs), "rhs": str(rhs)})
    return MeasureReport(not violations, str(state), norm, len(fams), violations)


@dataclass
class ConditioningWitness:
    e1: object
    e2: object
    condition: object
    left: object
    right: object

    @property
    def deviation(self):
        return abs(self.left - self.right)

    def as_dict(self):
        return {"e1": str(self.e1), "e2": str(self.e2), "condition": str(self.condition),
                "left": float(self.left), "right": float(self.right), "deviation": float(self.deviation)}


def classical_conditioning_failure_witness(lattice: OrthoLattice, family: StateProbabilityFamily,
                                           state, cond, tolerance=1e-9) -> Optional[ConditioningWitness]:
    """Look for orthogonal E1, E2 where the ratio P_S(. ^ F)/P_S(F) is not additive.

    Returns the pair with the largest discrepancy (first in element order on
    ties), or None if ratio conditioning is additive on every orthogonal pair.
    """
    pf = family(state, cond)
    if pf == 0:
        raise ZeroConditioningEvent(f"P_{state}({cond}) = 0")
    best = None
    els = [e for e in lattice.elements if e != lattice.bottom]
    for i, e1 in enumerate(els):
        for e2 in els[i + 1:]:
            if not lattice.orthogonal(e1, e2):
                continue
            left = family(state, lattice.meet(lattice.join(e1, e2), cond)) / pf
            right = (family(state, lattice.meet(e1, cond)) / pf
                     + family(state, lattice.meet(e2, cond)) / pf)
            if _close(left, right, tolerance):
                continue
            w = ConditioningWitness(e1, e2, cond, left, right)
            if best is None or w.deviation > best.deviation:
                best = w
    return best


# -- first-kind conditioning ------------------------------------------------


def first_kind_transform(t_map: Mapping, family: StateProbabilityFamily, state, prop, tolerance=0):
    """Apply t_E to ``state`` and verify P_{t_E(S)}(E) = 1."""
    if _close(family(state, prop), 0, tolerance):
        raise NotInDomain(f"P_{state}({prop}) = 0")
    try:
        image = t_map[state]
    except KeyError:
        raise NotInDomain(f"transform for {prop!r} is undefined on {state!r}") from None
    got = family(image, prop)
    if not _close(got, 1, tolerance):
        raise PostconditionViolated(f"P_{image}({prop}) = {got}, expected 1")
    return image


def conditional_q_probability(family: StateProbabilityFamily, t_maps: Mapping, state, prop,
                              cond, tolerance=0):
    """P_S(E || F) = P_{t_F(S)}(E): probability of E after a first-kind test of F."""
    image = first_kind_transform(t_maps[cond], family, state, cond, tolerance)
    return family(image, prop)
