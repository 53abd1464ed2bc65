from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctxprob.errors import NotJointlyTestable, UnknownContext, UnknownProperty, ZeroConditioningEvent
from ctxprob.lang import And, Atom, Model, Not, Or, PropertyInContext, StateId, parse
from ctxprob.measurement import (
    MeasurementProcedure, MeasurementRegistry, Witness, check_procedure_independence, compatible,
    context_conditionals, is_testable, mean_conditional, reindex,
)
from ctxprob.muprob import MuContextualStructure
from ctxprob.probspace import FiniteProbabilitySpace

s0, s1 = Atom(StateId("s0")), Atom(StateId("s1"))


def P(prop, ctx):
    return Atom(PropertyInContext(prop, ctx))


def test_compatibility_is_not_transitive(toy_registry_structure):
    _, reg = toy_registry_structure
    assert compatible(reg, {"E"})
    assert compatible(reg, ["E", "F"]) and compatible(reg, ["F", "E"])
    assert compatible(reg, ["F", "G"])
    assert not compatible(reg, ["E", "G"])


def test_unknown_property(toy_registry_structure):
    _, reg = toy_registry_structure
    with pytest.raises(UnknownProperty):
        compatible(reg, ["Z"])


def test_testability_witnesses(toy_registry_structure):
    _, reg = toy_registry_structure
    assert is_testable(reg, P("E", "c1")) == [Witness("M1", "c1")]
    assert is_testable(reg, And(P("E", "c1"), Not(P("F", "c1")))) == [Witness("M1", "c1")]
    assert is_testable(reg, P("F", "d2")) == [Witness("M2", "d2")]
    assert is_testable(reg, And(P("E", "c1"), P("F", "c2"))) is None
    assert is_testable(reg, And(P("E", "c1"), P("G", "c1"))) is None


def test_testability_survives_reindexing(toy_registry_structure):
    _, reg = toy_registry_structure
    f = Or(P("E", "c1"), P("F", "c1"))
    assert is_testable(reg, f)
    assert is_testable(reg, reindex(f, "c1", "c2")) == [Witness("M1", "c2")]


def test_state_only_formula_testable_everywhere(toy_registry_structure):
    _, reg = toy_registry_structure
    assert is_testable(reg, Or(s0, s1)) == [Witness("M1", None), Witness("M2", None)]


def test_unknown_context(toy_registry_structure):
    _, reg = toy_registry_structure
    with pytest.raises(UnknownContext):
        is_testable(reg, P("E", "nowhere"))


def test_reindex_examples():
    f = parse("P:E@c1(x) & !P:F@c1(x)")
    assert reindex(f, "c1", "c2") == parse("P:E@c2(x) & !P:F@c2(x)")
    assert reindex(f, "c9", "c2") == f
    assert reindex(reindex(f, "c1", "c2"), "c2", "c1") == f
    assert reindex(parse("P:E@c1(x) | S:s0(x)"), "c1", "c3") == parse("P:E@c3(x) | S:s0(x)")


def test_mean_examples(toy_registry_structure):
    s, reg = toy_registry_structure
    # per context 1/2 and 1, uniform nu
    assert mean_conditional(s, reg, P("F", "c1"), s0, "M1") == Fraction(3, 4)
    # per context 0 and 1 with weights 1/4, 3/4
    assert mean_conditional(s, reg, P("F", "d1"), s0, "M2") == Fraction(3, 4)
    # both contexts give 1/2
    assert mean_conditional(s, reg, P("E", "c1"), s0, "M1") == Fraction(1, 2)


def test_mean_uniform_nu_over_zero_and_one():
    # marker point m keeps ext(S) distinct from ext(E@c2) without carrying weight
    xi = FiniteProbabilitySpace(["a", "b", "m"], ["1/2", "1/2", 0])
    ext = {StateId("S"): {"a", "b", "m"}, PropertyInContext("E", "c1"): set(),
           PropertyInContext("E", "c2"): {"a", "b"}}
    s = MuContextualStructure(Model(xi.points, ext), xi)
    reg = MeasurementRegistry([MeasurementProcedure("M", ["E"], FiniteProbabilitySpace.uniform(["c1", "c2"]))])
    terms = context_conditionals(s, reg, P("E", "c1"), Atom(StateId("S")), "M")
    assert [p for *_, p in terms] == [0, 1]
    assert mean_conditional(s, reg, P("E", "c1"), Atom(StateId("S")), "M") == Fraction(1, 2)


def test_single_context_mean_is_plain_conditional(four_point):
    reg = MeasurementRegistry([MeasurementProcedure("M", ["E"], FiniteProbabilitySpace.uniform(["c"]))])
    a, b = P("E", "c"), Atom(StateId("S"))
    from ctxprob.muprob import mu_conditional
    assert mean_conditional(four_point, reg, a, b, "M") == mu_conditional(four_point, a, b)


def test_not_jointly_testable(toy_registry_structure):
    s, reg = toy_registry_structure
    with pytest.raises(NotJointlyTestable):
        mean_conditional(s, reg, P("E", "c1"), s0, "M2")
    with pytest.raises(NotJointlyTestable):
        mean_conditional(s, reg, P("E", "c1"), P("F", "c2"), "M1")


def test_zero_condition_names_the_context(toy_registry_structure):
    s, reg = toy_registry_structure
    with pytest.raises(ZeroConditioningEvent, match="c1"):
        mean_conditional(s, reg, P("F", "c1"), And(P("E", "c1"), s1), "M1")


def test_procedure_independence_holds(toy_registry_structure):
    s, reg = toy_registry_structure
    rep = check_procedure_independence(s, reg, P("F", "c1"), s0)
    assert rep.passed and not rep.vacuous
    assert rep.means == {"M1": Fraction(3, 4), "M2": Fraction(3, 4)}
    assert rep.max_deviation == 0


def test_mismatched_nu_is_detected(toy_registry_structure):
    s, reg = toy_registry_structure
    skewed = MeasurementRegistry([reg["M1"], MeasurementProcedure("M2", ["F", "G"],
                                                                  FiniteProbabilitySpace.uniform(["d1", "d2"]))])
    rep = check_procedure_independence(s, skewed, P("F", "c1"), s0)
    assert not rep.passed
    assert rep.max_deviation == Fraction(1, 4)
    assert check_procedure_independence(s, skewed, P("F", "c1"), s0, tolerance=Fraction(1, 4)).passed


def test_single_procedure_is_vacuous(toy_registry_structure):
    s, reg = toy_registry_structure
    rep = check_procedure_independence(s, reg, P("E", "c1"), s0)
    assert rep.passed and rep.vacuous and list(rep.means) == ["M1"]


ATOMS = [P("E", "c1"), P("F", "c1"), s0, s1]
fs = st.recursive(st.sampled_from(ATOMS),
                  lambda k: st.one_of(k.map(Not), st.builds(And, k, k), st.builds(Or, k, k)),
                  max_leaves=6)


@settings(max_examples=100, deadline=None)
@given(fs, st.sampled_from([s0, s1, Or(s0, s1)]))
def test_mean_is_a_convex_combination(toy_registry_structure, a, b):
    s, reg = toy_registry_structure
    terms = context_conditionals(s, reg, a, b, "M1")
    vals = [p for *_, p in terms]
    assert min(vals) <= mean_conditional(s, reg, a, b, "M1") <= max(vals)
