import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctxprob.errors import DimensionMismatch, InvalidOperator, ZeroProbabilityBranch
from ctxprob.qstructure import is_generalized_probability_measure
from ctxprob.quantum import (
    DensityOperator, Projector, QuantumModel, born, born_family, haar_pure_states, identity_projector,
    kappa_compatible, lueders, maximally_mixed, ordering_family_check, preset_projector, preset_state,
    proj_join, proj_meet, proj_ortho, projector_lattice, projector_leq, projector_onto, pure_state,
    quantum_conditional, quantum_conditional_paths, qubit_fixture, zero_projector,
)

KET0 = pure_state([1, 0])
P0 = preset_projector("z+")
P1 = preset_projector("z-")
PPLUS = preset_projector("x+")
I2 = identity_projector(2)
O2 = zero_projector(2)


def random_projector(rng, dim, rank):
    if rank == 0:
        return zero_projector(dim)
    a = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    return projector_onto(a)


def random_state(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = a @ a.conj().T
    return DensityOperator(m / np.trace(m).real)


def meet_by_alternation(p, q, steps=400):
    # von Neumann: (PQ)^n converges to the projector onto range P & range Q
    m = np.linalg.matrix_power(p.matrix @ q.matrix, steps)
    return (m + m.conj().T) / 2


seeds = st.integers(0, 2**32 - 1)


def test_born_examples():
    assert born(KET0, P0) == 1.0
    assert born(KET0, proj_ortho(P0)) == 0.0
    assert born(KET0, PPLUS) == pytest.approx(0.5, abs=1e-9)


def test_born_is_clamped():
    assert 0.0 <= born(preset_state("x-"), PPLUS) <= 1.0


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        born(KET0, identity_projector(3))
    with pytest.raises(DimensionMismatch):
        proj_meet(P0, identity_projector(3))
    with pytest.raises(DimensionMismatch):
        QuantumModel(2, {"a": maximally_mixed(3)}, {})


@pytest.mark.parametrize("matrix", [
    [[1, 1], [0, 0]],
    [[0.5, 0], [0, 0.6]],
    [[1.5, 0], [0, -0.5]],
    [[1, 0, 0]],
    np.eye(9) / 9,
])
def test_invalid_density_operators(matrix):
    with pytest.raises(InvalidOperator):
        DensityOperator(matrix)


def test_invalid_projector():
    with pytest.raises(InvalidOperator):
        Projector([[0.5, 0], [0, 0.5]])


def test_operators_are_immutable():
    with pytest.raises(ValueError):
        P0.matrix[0, 0] = 2


def test_lueders_examples():
    assert lueders(KET0, P0).close_to(KET0)
    assert lueders(maximally_mixed(2), P0).close_to(KET0)
    with pytest.raises(ZeroProbabilityBranch):
        lueders(KET0, P1)


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(2, 4))
def test_lueders_invariants(seed, dim):
    rng = np.random.default_rng(seed)
    rho = random_state(rng, dim)
    p = random_projector(rng, dim, int(rng.integers(1, dim + 1)))
    if born(rho, p) <= 1e-6:
        return
    out = lueders(rho, p)
    assert isinstance(out, DensityOperator)
    assert born(out, p) == pytest.approx(1.0, abs=1e-9)
    assert lueders(out, p).close_to(out, 1e-9)


def test_projector_order_examples():
    for p in (O2, P0, PPLUS, I2):
        assert projector_leq(p, I2) and projector_leq(O2, p)
    assert not projector_leq(P0, PPLUS) and not projector_leq(PPLUS, P0)


def test_lattice_operation_examples():
    assert proj_meet(P0, P0).close_to(P0) and proj_join(P0, P0).close_to(P0)
    assert proj_ortho(proj_ortho(PPLUS)).close_to(PPLUS, 1e-9)
    assert proj_meet(P0, PPLUS).close_to(O2)
    assert proj_join(P0, PPLUS).close_to(I2)


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(2, 4))
def test_meet_agrees_with_alternating_projections(seed, dim):
    rng = np.random.default_rng(seed)
    # share a random vector so the meet is often non-trivial
    shared = rng.normal(size=(dim, 1)) + 1j * rng.normal(size=(dim, 1))
    extra = [rng.normal(size=(dim, 1)) + 1j * rng.normal(size=(dim, 1)) for _ in range(2)]
    p = projector_onto(np.hstack([shared, extra[0]]))
    q = projector_onto(np.hstack([shared, extra[1]])) if dim > 2 else projector_onto(shared)
    m = proj_meet(p, q)
    assert np.max(np.abs(m.matrix - meet_by_alternation(p, q))) < 1e-6
    assert projector_leq(m, p) and projector_leq(m, q)
    j = proj_join(p, q)
    assert projector_leq(p, j) and projector_leq(q, j)


def test_kappa_examples():
    assert kappa_compatible(P0, P0) and kappa_compatible(P0, I2)
    assert not kappa_compatible(P0, PPLUS)
    assert kappa_compatible(I2, PPLUS)
    assert kappa_compatible(P0, P1)


def test_quantum_conditional_examples():
    assert quantum_conditional(KET0, PPLUS, PPLUS) == pytest.approx(1.0, abs=1e-9)
    assert quantum_conditional(KET0, P0, PPLUS) == pytest.approx(0.5, abs=1e-9)
    with pytest.raises(ZeroProbabilityBranch):
        quantum_conditional(KET0, PPLUS, P1)


def test_quantum_conditional_classical_ratio_on_diagonal():
    rho = DensityOperator(np.diag([0.5, 0.3, 0.2]))
    pe = Projector(np.diag([1, 1, 0]))
    pf = Projector(np.diag([0, 1, 1]))
    assert quantum_conditional(rho, pe, pf) == pytest.approx(0.3 / 0.5, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(2, 4))
def test_born_additive_over_orthogonal_projectors(seed, dim):
    rng = np.random.default_rng(seed)
    rho = random_state(rng, dim)
    basis, _ = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    k = int(rng.integers(1, dim))
    p, q = projector_onto(basis[:, :k]), projector_onto(basis[:, k:])
    total = born(rho, p) + born(rho, q)
    assert born(rho, Projector(p.matrix + q.matrix)) == pytest.approx(total, abs=1e-9)
    assert born(rho, identity_projector(dim)) == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_two_paths_agree(seed):
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(2, 5))
    rho = random_state(rng, dim)
    pe = random_projector(rng, dim, int(rng.integers(0, dim + 1)))
    pf = random_projector(rng, dim, int(rng.integers(1, dim + 1)))
    trace_path, lueders_path = quantum_conditional_paths(rho, pe, pf)
    assert abs(trace_path - lueders_path) <= 1e-9


def test_generated_lattice_laws():
    rng = np.random.default_rng(3)
    gens = {"a": random_projector(rng, 3, 1), "b": random_projector(rng, 3, 2)}
    lattice, table = projector_lattice(gens)
    assert lattice.check_laws() == []
    assert lattice.orthomodular_violations() == []


def test_qubit_lattice_shape():
    lattice, table = projector_lattice(qubit_fixture().properties)
    assert len(lattice.elements) == 6
    assert lattice.check_laws() == []
    assert not lattice.is_distributive()


def test_born_family_is_a_generalized_measure_on_random_lattice():
    rng = np.random.default_rng(9)
    gens = {"a": random_projector(rng, 3, 1), "b": random_projector(rng, 3, 1)}
    lattice, table = projector_lattice(gens)
    states = {f"r{i}": random_state(rng, 3) for i in range(5)}
    fam = born_family(states, table)
    for s in states:
        assert is_generalized_probability_measure(lattice, fam, s, tolerance=1e-9).passed


def test_ordering_check_chain():
    model = qubit_fixture(properties=("zero", "z+", "identity"))
    rep = ordering_family_check(model)
    assert rep.passed and not rep.low_confidence


def test_ordering_check_separates_incomparable_pair():
    model = qubit_fixture(properties=("z+", "x+"))
    rep = ordering_family_check(model)
    assert rep.passed
    assert ("z+", "x+") in rep.separations and ("x+", "z+") in rep.separations


def test_ordering_check_single_state_is_low_confidence():
    model = qubit_fixture(properties=("z+", "x+"))
    rep = ordering_family_check(model, [maximally_mixed(2)])
    assert rep.low_confidence
    # a single mixed state cannot separate the pair, so the orders disagree
    assert not rep.passed


def test_haar_states_reproducible():
    a = haar_pure_states(3, 4, seed=1)
    b = haar_pure_states(3, 4, seed=1)
    assert all(x.close_to(y, 0) for x, y in zip(a, b))
