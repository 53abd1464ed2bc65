"""Finite classical models whose context averages reproduce Born probabilities.

Every construction uses the universe ``{(S, r) : S a state, 1 <= r <= R}``
with xi uniform in r and weighted by a prior over states.  For a property E
the schemes differ in how many r-values of the S-block fall in the
extension of E_C, context by context:

``ontic``
    the same ``round(R * born)`` r-values in every context, so all the
    randomness sits in the universe and per-context conditionals already
    equal the Born value;
``deterministic-context``
    the whole block or nothing, with the block included in context j iff
    ``born >= (j - 1/2) / N``; per-context conditionals are 0 or 1 and only
    the average over the N contexts approximates Born (within 1/(2N));
``hybrid``
    ``N * R * born`` r-values spread unevenly over the contexts, so both
    the universe and the context carry randomness.

Each predicate also owns one zero-weight marker point, which keeps the
extension map injective without changing any probability.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Mapping, Optional, Sequence, Union

from .errors import IncompatibleGroup, IrrationalBornValue
from .lang import Atom, Model, PropertyInContext, StateId
from .measurement import MeasurementProcedure, MeasurementRegistry, check_procedure_independence, context_conditionals
from .muprob import MuContextualStructure
from .probspace import FiniteProbabilitySpace
from .qstructure import property_probability
from .quantum import QuantumModel, kappa_compatible

KINDS = ("ontic", "deterministic-context", "hybrid")
SNAP_DENOMINATOR = 10**6
SNAP_TOL = 1e-12


@dataclass(frozen=True)
class EmbeddingScheme:
    kind: str = "ontic"
    contexts: int = 1
    resolution: int = 1
    exact: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scheme {self.kind!r}; expected one of {KINDS}")
        if self.contexts < 1 or self.resolution < 1:
            raise ValueError("context count and resolution must be >= 1")


def snap(value: float) -> Fraction:
    """Nearest small-denominator rational when ``value`` is within 1e-12 of it."""
    q = Fraction(value).limit_denominator(SNAP_DENOMINATOR)
    return q if abs(float(q) - value) <= SNAP_TOL else Fraction(value)


def _round_half_up(x: Fraction) -> int:
    return int((x + Fraction(1, 2)) // 1)


def context_counts(born: Fraction, scheme: EmbeddingScheme) -> list:
    """Number of r-values of an S-block inside ext(E_Cj), for j = 1..N."""
    n, r = scheme.contexts, scheme.resolution
    if scheme.kind == "ontic":
        target = r * born
        k = _round_half_up(target)
        if scheme.exact and k != target:
            raise IrrationalBornValue(f"born value {born} is not a multiple of 1/{r}")
        return [k] * n
    if scheme.kind == "deterministic-context":
        # ties resolve to inclusion
        return [r if born >= Fraction(2 * j - 1, 2 * n) else 0 for j in range(1, n + 1)]
    target = n * r * born
    total = _round_half_up(target)
    if scheme.exact and total != target:
        raise IrrationalBornValue(f"born value {born} is not a multiple of 1/{n * r}")
    ks = [(total + j) // n for j in range(n)]
    # widen the spread pairwise, keeping the sum, so contexts disagree
    for lo in range(n // 2):
        hi = n - 1 - lo
        if ks[lo] >= 1 and ks[hi] <= r - 1:
            ks[lo] -= 1
            ks[hi] += 1
    return ks


@dataclass
class Embedding:
    structure: MuContextualStructure
    registry: MeasurementRegistry
    target: QuantumModel
    scheme: EmbeddingScheme
    groups: dict
    expected: dict = field(default_factory=dict)

    def bias_bound(self) -> Fraction:
        """Largest |constructed mean - Born| over all (state, property) pairs."""
        return max((abs(v - snap(self.target.born(s, e))) for (s, e), v in self.expected.items()),
                   default=Fraction(0))


def _normalize_groups(groups) -> dict:
    if isinstance(groups, Mapping):
        return {str(k): tuple(v) for k, v in groups.items()}
    return {f"M{i + 1}": tuple(g) for i, g in enumerate(groups)}


def build_embedding(target: QuantumModel, groups: Union[Sequence, Mapping], scheme: EmbeddingScheme,
                    state_weights: Optional[Mapping] = None) -> Embedding:
    """Construct a classical model plus measurement registry for ``target``.

    ``groups`` lists the properties measured together by each procedure,
    either as a sequence (procedures are named M1, M2, ...) or as a mapping
    from procedure id to properties.  Every group must be pairwise
    commuting in the target.
    """
    groups = _normalize_groups(groups)
    covered = {e for g in groups.values() for e in g}
    missing = sorted(set(target.properties) - covered)
    if missing:
        raise ValueError(f"properties not assigned to any procedure: {missing}")
    unknown = sorted(covered - set(target.properties))
    if unknown:
        raise ValueError(f"groups mention unknown properties: {unknown}")
    for mid, g in groups.items():
        for e, f in combinations(g, 2):
            if not kappa_compatible(target.properties[e], target.properties[f]):
                raise IncompatibleGroup(f"{e} and {f} in {mid} do not commute")

    states = list(target.states)
    if state_weights is None:
        weights = {s: Fraction(1, len(states)) for s in states}
    else:
        weights = {s: Fraction(state_weights[s]) for s in states}
    if any(w <= 0 for w in weights.values()):
        raise ValueError("every state needs positive prior weight")

    n, r = scheme.contexts, scheme.resolution
    block = {s: [f"{s}#{i}" for i in range(1, r + 1)] for s in states}
    born = {(s, e): snap(target.born(s, e)) for s in states for e in target.properties}
    counts = {key: context_counts(b, scheme) for key, b in born.items()}

    ext = {StateId(s): set(block[s]) for s in states}
    procedures = []
    for mid, g in groups.items():
        ctxs = [f"{mid}.c{j}" for j in range(1, n + 1)]
        procedures.append(MeasurementProcedure(mid, g, FiniteProbabilitySpace.uniform(ctxs)))
        for e in g:
            for j, c in enumerate(ctxs):
                ext[PropertyInContext(e, c)] = {pt for s in states for pt in block[s][:counts[(s, e)][j]]}

    markers = {pred: f"null:{pred}" for pred in ext}
    for pred, mk in markers.items():
        ext[pred].add(mk)
    universe = [pt for s in states for pt in block[s]] + list(markers.values())
    xi_weights = [weights[s] / r for s in states for _ in range(r)] + [Fraction(0)] * len(markers)
    xi = FiniteProbabilitySpace(universe, xi_weights)
    structure = MuContextualStructure(Model(universe, ext), xi)
    registry = MeasurementRegistry(procedures, properties=target.properties)
    expected = {key: Fraction(sum(ks), n * r) for key, ks in counts.items()}
    return Embedding(structure, registry, target, scheme, groups, expected)


def per_context_table(e: Embedding) -> list:
    """Rows ``(state, property, procedure, context, conditional)`` for every combination."""
    rows = []
    for s in e.target.states:
        for prop in e.target.properties:
            for m in e.registry.procedures_for([prop]):
                a = Atom(PropertyInContext(prop, m.context_ids[0]))
                for c, _, p in context_conditionals(e.structure, e.registry, a, Atom(StateId(s)), m):
                    rows.append((s, prop, m.id, c, p))
    return rows


def randomness_sources(e: Embedding) -> dict:
    """Which sources of randomness the embedding actually uses.

    ``universe``: some per-context conditional lies strictly between 0 and 1.
    ``context``: some procedure gives different conditionals in two contexts.
    """
    rows = per_context_table(e)
    universe = any(p is not None and 0 < p < 1 for *_, p in rows)
    seen: dict = {}
    for s, prop, mid, _, p in rows:
        seen.setdefault((s, prop, mid), set()).add(p)
    context = any(len(v) > 1 for v in seen.values())
    return {"universe": universe, "context": context}


@dataclass
class EmbeddingReport:
    passed: bool
    tolerance: object
    max_deviation: Fraction
    rows: list
    violations: list
    compatibility_failures: list
    independence_failures: list

    def as_dict(self):
        return {
            "passed": self.passed,
            "tolerance": str(self.tolerance),
            "max_deviation": str(self.max_deviation),
            "max_deviation_float": float(self.max_deviation),
            "rows": [
                {"state": s, "property": p, "classical_mean": str(c), "born": b, "deviation": str(d)}
                for s, p, c, b, d in self.rows
            ],
            "violations": self.violations,
            "compatibility_failures": self.compatibility_failures,
            "independence_failures": self.independence_failures,
        }


def verify_embedding(e: Embedding, tolerance=0) -> EmbeddingReport:
    """Compare classical P_S(E) with Born values and audit compatibility.

    Born values are snapped to nearby small-denominator rationals so that an
    exact construction reports a deviation of exactly zero.  Also checks that
    properties sharing a procedure commute in the target and that
    properties measured by several procedures get the same mean under each.
    """
    rows, violations = [], []
    for s in e.target.states:
        for prop in e.target.properties:
            classical = property_probability(e.structure, e.registry, s, prop)
            b = e.target.born(s, prop)
            dev = abs(classical - snap(b))
            rows.append((s, prop, classical, b, dev))
            if dev > tolerance:
                violations.append({"state": s, "property": prop, "classical_mean": str(classical),
                                   "born": b, "deviation": float(dev)})
    compat = []
    for m in e.registry.procedures:
        for a, b in combinations(sorted(m.measures), 2):
            if not kappa_compatible(e.target.properties[a], e.target.properties[b]):
                compat.append({"procedure": m.id, "pair": [a, b]})
    indep = []
    for prop in sorted(e.target.properties):
        procs = e.registry.procedures_for([prop])
        if len(procs) < 2:
            continue
        atom = Atom(PropertyInContext(prop, procs[0].context_ids[0]))
        for s in e.target.states:
            rep = check_procedure_independence(e.structure, e.registry, atom, Atom(StateId(s)), 0)
            if not rep.passed:
                indep.append({"state": s, "property": prop, "max_deviation": str(rep.max_deviation)})
    max_dev = max((row[4] for row in rows), default=Fraction(0))
    passed = not violations and not compat and not indep
    return EmbeddingReport(passed, tolerance, max_dev, rows, violations, compat, indep)
