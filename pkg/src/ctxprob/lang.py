"""The monadic language L(x): predicates, formulas, parsing and model semantics.

Concrete grammar (EBNF)::

    formula  = disj ;
    disj     = conj , { "|" , conj } ;
    conj     = unary , { "&" , unary } ;
    unary    = "!" , unary | "(" , formula , ")" | atom ;
    atom     = "S:" , name , "(x)"
             | "P:" , name , "@" , name , "(x)" ;
    name     = namechar , { namechar } ;
    namechar = letter | digit | "_" | "+" | "-" | "." ;

``!`` binds tightest, then ``&``, then ``|``; binary operators associate to
the left.  Whitespace between tokens is ignored.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence, Union

import numpy as np

from .errors import FormulaSyntaxError, NonInjectiveExtension, UnknownPredicate


# -- predicates -------------------------------------------------------------


@dataclass(frozen=True, order=True)
class StateId:
    name: str

    def __str__(self):
        return f"S:{self.name}"


@dataclass(frozen=True, order=True)
class PropertyInContext:
    prop: str
    ctx: str

    def __str__(self):
        return f"P:{self.prop}@{self.ctx}"


Predicate = Union[StateId, PropertyInContext]


def parse_predicate(text: str) -> Predicate:
    """Parse a bare predicate such as ``S:s0`` or ``P:E@c1`` (no ``(x)``)."""
    f = parse(text.strip() + "(x)")
    if not isinstance(f, Atom):
        raise FormulaSyntaxError("expected a single predicate", 0, {"S:", "P:"})
    return f.pred


# -- formulas ---------------------------------------------------------------


@dataclass(frozen=True)
class Atom:
    pred: Predicate


@dataclass(frozen=True)
class Not:
    child: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


Formula = Union[Atom, Not, And, Or]


def atoms(f: Formula) -> Iterator[Predicate]:
    """Yield the predicates occurring in ``f``, left to right, with repeats."""
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Atom):
            yield g.pred
        elif isinstance(g, Not):
            stack.append(g.child)
        else:
            stack.append(g.right)
            stack.append(g.left)


def properties_of(f: Formula) -> frozenset:
    return frozenset(p.prop for p in atoms(f) if isinstance(p, PropertyInContext))


def contexts_of(f: Formula) -> frozenset:
    return frozenset(p.ctx for p in atoms(f) if isinstance(p, PropertyInContext))


def conjoin(fs: Sequence[Formula]) -> Formula:
    out = fs[0]
    for g in fs[1:]:
        out = And(out, g)
    return out


# -- printer ----------------------------------------------------------------

_PREC = {Or: 1, And: 2, Not: 3, Atom: 4}


def to_text(f: Formula) -> str:
    """Canonical textual form; ``parse(to_text(f)) == f`` for every AST."""
    if isinstance(f, Atom):
        return f"{f.pred}(x)"
    if isinstance(f, Not):
        inner = to_text(f.child)
        if _PREC[type(f.child)] < _PREC[Not]:
            inner = f"({inner})"
        return "!" + inner
    op = " & " if isinstance(f, And) else " | "
    prec = _PREC[type(f)]
    left, right = to_text(f.left), to_text(f.right)
    if _PREC[type(f.left)] < prec:
        left = f"({left})"
    if _PREC[type(f.right)] <= prec:
        right = f"({right})"
    return left + op + right


# -- parser -----------------------------------------------------------------

_NAME_EXTRA = set("_+-.")


def _is_name_char(c: str) -> bool:
    return c.isascii() and (c.isalnum() or c in _NAME_EXTRA)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def offset(self, pos=None) -> int:
        pos = self.pos if pos is None else pos
        return len(self.text[:pos].encode("utf-8"))

    def fail(self, msg, expected, pos=None):
        raise FormulaSyntaxError(msg, self.offset(pos), expected)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, literal: str):
        self.skip_ws()
        if not self.text.startswith(literal, self.pos):
            found = self.text[self.pos:self.pos + 1] or "end of input"
            self.fail(f"unexpected {found!r}", {literal})
        self.pos += len(literal)

    def name(self) -> str:
        start = self.pos
        while self.pos < len(self.text) and _is_name_char(self.text[self.pos]):
            self.pos += 1
        if self.pos == start:
            found = self.text[start:start + 1] or "end of input"
            self.fail(f"unexpected {found!r}", {"<name>"}, start)
        return self.text[start:self.pos]

    def parse(self) -> Formula:
        f = self.disj()
        if self.peek():
            self.fail(f"unexpected {self.peek()!r}", {"&", "|", "end of input"})
        return f

    def disj(self) -> Formula:
        f = self.conj()
        while self.peek() == "|":
            self.pos += 1
            f = Or(f, self.conj())
        return f

    def conj(self) -> Formula:
        f = self.unary()
        while self.peek() == "&":
            self.pos += 1
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        c = self.peek()
        if c == "!":
            self.pos += 1
            return Not(self.unary())
        if c == "(":
            self.pos += 1
            f = self.disj()
            self.expect(")")
            return f
        if self.text.startswith("S:", self.pos):
            self.pos += 2
            pred = StateId(self.name())
        elif self.text.startswith("P:", self.pos):
            self.pos += 2
            prop = self.name()
            if self.pos >= len(self.text) or self.text[self.pos] != "@":
                self.fail("missing context after property", {"@"})
            self.pos += 1
            pred = PropertyInContext(prop, self.name())
        else:
            found = c or "end of input"
            self.fail(f"unexpected {found!r}", {"!", "(", "S:", "P:"})
        for tok in ("(", "x", ")"):
            self.expect(tok)
        return Atom(pred)


def parse(text: str) -> Formula:
    """Parse a formula of L(x).

    >>> parse("S:s0(x) | S:s1(x) & S:s2(x)")  # doctest: +ELLIPSIS
    Or(left=Atom(pred=StateId(name='s0')), right=And(...))
    """
    return _Parser(text).parse()


# -- models -----------------------------------------------------------------


@dataclass(frozen=True)
class Interpretation:
    """An assignment of the single variable x to a point of the universe."""

    target: object


class Model:
    """A universe U together with an injective extension map on predicates."""

    def __init__(self, universe: Iterable, ext: Mapping[Predicate, Iterable], *, check_injective: bool = True):
        self.universe = tuple(universe)
        self.full = frozenset(self.universe)
        if len(self.full) != len(self.universe):
            raise ValueError("duplicate points in universe")
        self.ext = {pred: frozenset(e) for pred, e in ext.items()}
        for pred, e in self.ext.items():
            if not e <= self.full:
                raise ValueError(f"extension of {pred} is not a subset of U")
        if check_injective:
            seen = {}
            for pred, e in self.ext.items():
                if e in seen:
                    raise NonInjectiveExtension(f"{seen[e]} and {pred} share an extension")
                seen[e] = pred

    @property
    def predicates(self) -> tuple:
        return tuple(sorted(self.ext, key=lambda p: (type(p).__name__, p)))

    def __contains__(self, pred) -> bool:
        return pred in self.ext

    def __repr__(self):
        return f"Model(|U|={len(self.universe)}, predicates={len(self.ext)})"


def extension(model: Model, f: Formula) -> frozenset:
    if isinstance(f, Atom):
        try:
            return model.ext[f.pred]
        except KeyError:
            raise UnknownPredicate(f"predicate {f.pred} is not registered") from None
    if isinstance(f, Not):
        return model.full - extension(model, f.child)
    if isinstance(f, And):
        return extension(model, f.left) & extension(model, f.right)
    if isinstance(f, Or):
        return extension(model, f.left) | extension(model, f.right)
    raise TypeError(f"not a formula: {f!r}")


def truth(model: Model, sigma: Interpretation, f: Formula) -> bool:
    if sigma.target not in model.full:
        raise ValueError(f"interpretation target {sigma.target!r} not in U")
    return sigma.target in extension(model, f)


def holds_at(model: Model, point, f: Formula) -> bool:
    """Evaluate ``f`` at a single point by structural recursion on truth values.

    This never builds extensions, so it serves as an independent check on
    :func:`extension`.
    """
    if isinstance(f, Atom):
        if f.pred not in model.ext:
            raise UnknownPredicate(f"predicate {f.pred} is not registered")
        return point in model.ext[f.pred]
    if isinstance(f, Not):
        return not holds_at(model, point, f.child)
    if isinstance(f, And):
        return holds_at(model, point, f.left) and holds_at(model, point, f.right)
    return holds_at(model, point, f.left) or holds_at(model, point, f.right)


def logical_leq(model: Model, a: Formula, b: Formula) -> bool:
    return extension(model, a) <= extension(model, b)


def equivalent(model: Model, a: Formula, b: Formula) -> bool:
    return extension(model, a) == extension(model, b)


# -- Lindenbaum-Tarski quotient --------------------------------------------


@dataclass
class LindenbaumQuotient:
    """Equivalence classes of formulas with the induced partial order.

    ``classes[i]`` lists the formulas in class ``i`` and ``keys[i]`` is their
    common extension; ``leq`` holds index pairs ``(i, j)`` with class i below j.
    """

    model: Model
    classes: list
    keys: list
    leq: frozenset

    def index_of(self, f: Formula) -> int:
        return self.keys.index(extension(self.model, f))

    def __len__(self):
        return len(self.classes)


def lindenbaum_classes(model: Model, fs: Iterable[Formula]) -> LindenbaumQuotient:
    keys, classes = [], []
    slot = {}
    for f in fs:
        e = extension(model, f)
        if e not in slot:
            slot[e] = len(keys)
            keys.append(e)
            classes.append([])
        classes[slot[e]].append(f)
    leq = frozenset((i, j) for i, a in enumerate(keys) for j, b in enumerate(keys) if a <= b)
    return LindenbaumQuotient(model, classes, keys, leq)


def closure(model: Model, generators: Sequence[Formula]) -> list:
    """Representative formulas for every class generated by ``generators``.

    Closes under the three connectives until no new extension appears.
    """
    reps = {}
    for g in generators:
        reps.setdefault(extension(model, g), g)
    frontier = list(reps.items())
    while frontier:
        new = []
        current = list(reps.items())
        for e, f in frontier:
            cands = [(model.full - e, Not(f))]
            for e2, f2 in current:
                cands.append((e & e2, And(f, f2)))
                cands.append((e | e2, Or(f, f2)))
            for ce, cf in cands:
                if ce not in reps:
                    reps[ce] = cf
                    new.append((ce, cf))
                    current.append((ce, cf))
        frontier = new
    return list(reps.values())


@dataclass
class BooleanLatticeReport:
    passed: bool
    classes: int
    violations: list

    def as_dict(self):
        return {"passed": self.passed, "classes": self.classes, "violations": self.violations}


def check_boolean_lattice(q: LindenbaumQuotient) -> BooleanLatticeReport:
    """Exhaustively verify that a closed quotient is a Boolean lattice.

    Meets, joins and complements are taken from the connectives and then
    checked against the order alone: glb/lub, bounds, distributivity and the
    complement laws.  The quotient must be closed under the connectives
    (use :func:`closure`).
    """
    n = len(q)
    rep = [c[0] for c in q.classes]
    slot = {e: i for i, e in enumerate(q.keys)}
    bad = []

    def idx(f):
        e = extension(q.model, f)
        if e not in slot:
            bad.append(f"not closed: {to_text(f)}")
            return 0
        return slot[e]

    leq = np.zeros((n, n), dtype=bool)
    for i, j in q.leq:
        leq[i, j] = True
    meet = np.array([[idx(And(rep[i], rep[j])) for j in range(n)] for i in range(n)], dtype=int).reshape(n, n)
    join = np.array([[idx(Or(rep[i], rep[j])) for j in range(n)] for i in range(n)], dtype=int).reshape(n, n)
    comp = np.array([idx(Not(rep[i])) for i in range(n)], dtype=int)
    if bad:
        return BooleanLatticeReport(False, n, bad)

    if not leq.diagonal().all():
        bad.append("order is not reflexive")
    if (leq & leq.T & ~np.eye(n, dtype=bool)).any():
        bad.append("order is not antisymmetric")
    li = leq.astype(np.int64)
    if ((li @ li > 0) & ~leq).any():
        bad.append("order is not transitive")
    bottoms = np.flatnonzero(leq.all(axis=1))
    tops = np.flatnonzero(leq.all(axis=0))
    if len(bottoms) != 1 or len(tops) != 1:
        return BooleanLatticeReport(False, n, bad + ["missing bottom or top"])
    bot, top = bottoms[0], tops[0]

    cols = np.arange(n)
    for i in range(n):
        # lower[k, j]: k below both i and j; upper[k, j]: k above both
        lower = leq[:, i][:, None] & leq
        upper = leq[i, :][:, None] & leq.T
        m, s = meet[i], join[i]
        if not (lower[m, cols].all() and (~lower | leq[:, m]).all()):
            bad.append(f"meet is not a glb in row {i}")
        if not (upper[s, cols].all() and (~upper | leq[s, :].T).all()):
            bad.append(f"join is not a lub in row {i}")
        lhs = meet[i][join]
        rhs = join[meet[i][:, None], meet[i][None, :]]
        if (lhs != rhs).any():
            j, k = np.argwhere(lhs != rhs)[0]
            bad.append(f"distributivity fails at {i},{j},{k}")
        if meet[i, comp[i]] != bot or join[i, comp[i]] != top:
            bad.append(f"complement law fails at {i}")
        if comp[comp[i]] != i:
            bad.append(f"complement not involutive at {i}")
    return BooleanLatticeReport(not bad, n, bad)


# -- random formulas --------------------------------------------------------


def random_formula(rng: random.Random, preds: Sequence[Predicate], depth: int) -> Formula:
    """Random formula over ``preds`` of depth at most ``depth``."""
    if depth <= 0 or rng.random() < 0.25:
        return Atom(rng.choice(preds))
    kind = rng.randrange(3)
    if kind == 0:
        return Not(random_formula(rng, preds, depth - 1))
    cls = And if kind == 1 else Or
    return cls(random_formula(rng, preds, depth - 1), random_formula(rng, preds, depth - 1))
