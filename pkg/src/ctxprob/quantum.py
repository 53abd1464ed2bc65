"""Finite-dimensional quantum backend: density operators, projectors, Born and Lüders rules.

Matrices are dense complex numpy arrays of dimension at most 8.  Invariants
are checked with an absolute tolerance of 1e-9; rank decisions (meets of
projectors, range inclusion) use 1e-8.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

import numpy as np

from .errors import DimensionMismatch, InvalidOperator, PostconditionViolated, ZeroProbabilityBranch

TOL = 1e-9
RANK_TOL = 1e-8
MIN_BRANCH = 1e-12
MAX_DIM = 8

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _as_matrix(m) -> np.ndarray:
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidOperator(f"expected a square matrix, got shape {a.shape}")
    if not 1 <= a.shape[0] <= MAX_DIM:
        raise InvalidOperator(f"dimension {a.shape[0]} outside 1..{MAX_DIM}")
    if not np.isfinite(a).all():
        raise InvalidOperator("matrix has non-finite entries")
    a.setflags(write=False)
    return a


def _max_abs(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


class _Operator:
    __slots__ = ("matrix",)

    def __init__(self, matrix):
        self.matrix = _as_matrix(matrix)
        self._validate()

    def _validate(self):
        if _max_abs(self.matrix - self.matrix.conj().T) > TOL:
            raise InvalidOperator(f"{type(self).__name__} is not Hermitian")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def close_to(self, other: "_Operator", tol: float = RANK_TOL) -> bool:
        return self.dim == other.dim and _max_abs(self.matrix - other.matrix) <= tol

    def __repr__(self):
        return f"{type(self).__name__}({np.array2string(self.matrix, precision=3)})"


class DensityOperator(_Operator):
    """Hermitian, positive semidefinite, unit trace."""

    __slots__ = ()

    def _validate(self):
        super()._validate()
        if abs(np.trace(self.matrix) - 1) > TOL:
            raise InvalidOperator("density operator trace is not 1")
        herm = (self.matrix + self.matrix.conj().T) / 2
        if np.linalg.eigvalsh(herm).min() < -TOL:
            raise InvalidOperator("density operator is not positive semidefinite")


class Projector(_Operator):
    """Hermitian and idempotent."""

    __slots__ = ()

    def _validate(self):
        super()._validate()
        if _max_abs(self.matrix @ self.matrix - self.matrix) > TOL:
            raise InvalidOperator("projector is not idempotent")

    @property
    def rank(self) -> int:
        return int(round(np.trace(self.matrix).real))


# -- constructors -----------------------------------------------------------


def pure_state(vec) -> DensityOperator:
    v = np.asarray(vec, dtype=complex).ravel()
    v = v / np.linalg.norm(v)
    return DensityOperator(np.outer(v, v.conj()))


def maximally_mixed(dim: int) -> DensityOperator:
    return DensityOperator(np.eye(dim, dtype=complex) / dim)


def projector_onto(vectors) -> Projector:
    """Orthogonal projector onto the span of the given column vectors."""
    a = np.asarray(vectors, dtype=complex)
    if a.ndim == 1:
        a = a[:, None]
    u, sv, _ = np.linalg.svd(a, full_matrices=False)
    basis = u[:, sv > RANK_TOL]
    return Projector(basis @ basis.conj().T)


def zero_projector(dim: int) -> Projector:
    return Projector(np.zeros((dim, dim), dtype=complex))


def identity_projector(dim: int) -> Projector:
    return Projector(np.eye(dim, dtype=complex))


def bloch_projector(n) -> Projector:
    """Rank-1 qubit projector (I + n.sigma)/2 for a unit Bloch vector n."""
    x, y, z = (float(c) for c in n)
    norm = np.sqrt(x * x + y * y + z * z)
    if abs(norm - 1) > TOL:
        raise InvalidOperator(f"Bloch vector {n} is not a unit vector")
    return Projector((np.eye(2) + x * PAULI_X + y * PAULI_Y + z * PAULI_Z) / 2)


def bloch_state(n) -> DensityOperator:
    """Qubit density operator (I + r.sigma)/2 for |r| <= 1."""
    x, y, z = (float(c) for c in n)
    return DensityOperator((np.eye(2) + x * PAULI_X + y * PAULI_Y + z * PAULI_Z) / 2)


_BLOCH = {
    "z+": (0, 0, 1), "z-": (0, 0, -1),
    "x+": (1, 0, 0), "x-": (-1, 0, 0),
    "y+": (0, 1, 0), "y-": (0, -1, 0),
}


def preset_state(name: str) -> DensityOperator:
    if name == "maximally-mixed":
        return maximally_mixed(2)
    try:
        return bloch_state(_BLOCH[name])
    except KeyError:
        raise KeyError(f"unknown state preset {name!r}") from None


def preset_projector(name: str) -> Projector:
    if name == "zero":
        return zero_projector(2)
    if name == "identity":
        return identity_projector(2)
    try:
        return bloch_projector(_BLOCH[name])
    except KeyError:
        raise KeyError(f"unknown projector preset {name!r}") from None


def haar_pure_states(dim: int, count: int, seed: int) -> list:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        out.append(pure_state(v))
    return out


# -- model ------------------------------------------------------------------


@dataclass
class QuantumModel:
    dim: int
    states: dict = field(default_factory=dict)
    properties: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, op in list(self.states.items()) + list(self.properties.items()):
            if op.dim != self.dim:
                raise DimensionMismatch(f"{name} has dimension {op.dim}, model has {self.dim}")

    def born(self, state: str, prop: str) -> float:
        return born(self.states[state], self.properties[prop])


def qubit_fixture(states=("z+", "z-", "x+", "x-"),
                  properties=("zero", "z+", "z-", "x+", "x-", "identity")) -> QuantumModel:
    return QuantumModel(2, {s: preset_state(s) for s in states},
                        {p: preset_projector(p) for p in properties})


# -- Born, Lüders, lattice operations ---------------------------------------


def _same_dim(*ops):
    dims = {op.dim for op in ops}
    if len(dims) != 1:
        raise DimensionMismatch(f"operator dimensions differ: {sorted(dims)}")


def _clamp(v: float) -> float:
    if -TOL <= v < 0:
        return 0.0
    if 1 < v <= 1 + TOL:
        return 1.0
    return v


def born(rho: DensityOperator, p: Projector) -> float:
    """Tr[rho P]."""
    _same_dim(rho, p)
    return _clamp(float(np.trace(rho.matrix @ p.matrix).real))


def lueders(rho: DensityOperator, p: Projector) -> DensityOperator:
    """Post-measurement state P rho P / Tr[rho P] for the yes outcome."""
    prob = born(rho, p)
    if prob <= MIN_BRANCH:
        raise ZeroProbabilityBranch(f"outcome has probability {prob:.3g}")
    return DensityOperator(p.matrix @ rho.matrix @ p.matrix / prob)


def projector_leq(p: Projector, q: Projector) -> bool:
    """Range inclusion: QP = P."""
    _same_dim(p, q)
    return _max_abs(q.matrix @ p.matrix - p.matrix) <= RANK_TOL


def proj_ortho(p: Projector) -> Projector:
    return Projector(np.eye(p.dim) - p.matrix)


def proj_meet(p: Projector, q: Projector) -> Projector:
    """Projector onto range(P) & range(Q): the null space of (I-P)+(I-Q)."""
    _same_dim(p, q)
    eye = np.eye(p.dim)
    w, v = np.linalg.eigh((eye - p.matrix) + (eye - q.matrix))
    basis = v[:, w <= RANK_TOL]
    return Projector(basis @ basis.conj().T)


def proj_join(p: Projector, q: Projector) -> Projector:
    return proj_ortho(proj_meet(proj_ortho(p), proj_ortho(q)))


def kappa_compatible(p: Projector, q: Projector) -> bool:
    _same_dim(p, q)
    return _max_abs(p.matrix @ q.matrix - q.matrix @ p.matrix) <= TOL


def quantum_conditional_paths(rho: DensityOperator, pe: Projector, pf: Projector) -> tuple:
    """Both routes to the probability of E after a yes-measurement of F.

    Returns ``(trace_formula, lueders_then_born)``.
    """
    _same_dim(rho, pe, pf)
    denom = float(np.trace(pf.matrix @ rho.matrix @ pf.matrix).real)
    if denom <= MIN_BRANCH:
        raise ZeroProbabilityBranch(f"conditioning outcome has probability {denom:.3g}")
    num = float(np.trace(pe.matrix @ pf.matrix @ rho.matrix @ pf.matrix @ pe.matrix).real)
    return _clamp(num / denom), born(lueders(rho, pf), pe)


def quantum_conditional(rho: DensityOperator, pe: Projector, pf: Projector) -> float:
    """Tr[P_E P_F rho P_F P_E] / Tr[P_F rho P_F]."""
    via_trace, via_lueders = quantum_conditional_paths(rho, pe, pf)
    if abs(via_trace - via_lueders) > TOL:
        raise PostconditionViolated(
            f"trace formula {via_trace!r} and Lüders composition {via_lueders!r} disagree")
    return via_trace


# -- ordering family --------------------------------------------------------


@dataclass
class OrderingReport:
    passed: bool
    pairs_checked: int
    sample_size: int
    low_confidence: bool
    counterexamples: list
    separations: dict

    def as_dict(self):
        return {
            "passed": self.passed,
            "pairs_checked": self.pairs_checked,
            "sample_size": self.sample_size,
            "low_confidence": self.low_confidence,
            "counterexamples": self.counterexamples,
            "separations": {f"{a}|{b}": v for (a, b), v in sorted(self.separations.items())},
        }


def default_state_sample(model: QuantumModel, n_random: int = 32, seed: int = 0) -> list:
    """Eigenvector pure states of every property, the maximally mixed state, and Haar samples."""
    sample = []
    for name in sorted(model.properties):
        _, vecs = np.linalg.eigh(model.properties[name].matrix)
        sample.extend(pure_state(vecs[:, k]) for k in range(model.dim))
    sample.append(maximally_mixed(model.dim))
    sample.extend(haar_pure_states(model.dim, n_random, seed))
    return sample


def ordering_family_check(model: QuantumModel, state_sample: Optional[Iterable[DensityOperator]] = None,
                          *, n_random: int = 32, seed: int = 0, tolerance: float = TOL) -> OrderingReport:
    """Check that the Born-induced order on properties coincides with range inclusion.

    A sample smaller than dim**2 states cannot span the operator space, so
    agreement on it is flagged as low confidence.
    """
    sample = list(state_sample) if state_sample is not None else default_state_sample(model, n_random, seed)
    names = sorted(model.properties)
    table = {n: [born(rho, model.properties[n]) for rho in sample] for n in names}
    counter, seps, pairs = [], {}, 0
    for a in names:
        for b in names:
            if a == b:
                continue
            pairs += 1
            sep = [k for k, (x, y) in enumerate(zip(table[a], table[b])) if x > y + tolerance]
            born_le = not sep
            lat_le = projector_leq(model.properties[a], model.properties[b])
            if born_le != lat_le:
                counter.append({"p": a, "q": b, "born_order": born_le, "lattice_order": lat_le,
                                "separating_state": sep[0] if sep else None})
            if sep:
                seps[(a, b)] = sep[0]
    low = len(sample) < model.dim ** 2
    return OrderingReport(not counter, pairs, len(sample), low, counter, seps)


# -- projector lattice ------------------------------------------------------


def projector_closure(projectors: Mapping[str, Projector], max_size: int = 256) -> dict:
    """Close a named set of projectors under meet, join and orthocomplement.

    Existing names are kept; the zero and identity projectors are added as
    ``O`` and ``I`` unless already present.  New elements are named after
    the operation that produced them.
    """
    items = list(projectors.items())
    if not items:
        raise ValueError("empty projector set")
    dim = items[0][1].dim
    _same_dim(*(p for _, p in items))
    out: dict = {}

    def find(p):
        for n, q in out.items():
            if p.close_to(q):
                return n
        return None

    def add(name, p):
        hit = find(p)
        if hit is None:
            if len(out) >= max_size:
                raise ValueError(f"projector closure exceeds {max_size} elements")
            out[name] = p
            return name, True
        return hit, False

    for n, p in items:
        add(n, p)
    add("O", zero_projector(dim))
    add("I", identity_projector(dim))
    changed = True
    while changed:
        changed = False
        names = list(out)
        for a in names:
            changed |= add(f"~{a}", proj_ortho(out[a]))[1]
            for b in names:
                if a < b:
                    changed |= add(f"({a}^{b})", proj_meet(out[a], out[b]))[1]
                    changed |= add(f"({a}v{b})", proj_join(out[a], out[b]))[1]
    return out


def projector_lattice(projectors: Mapping[str, Projector]):
    """Build the ortholattice generated by ``projectors``.

    Returns ``(lattice, table)`` where ``table`` maps element names to
    projectors.
    """
    from .qstructure import OrthoLattice

    table = projector_closure(projectors)
    names = list(table)

    def name_of(p):
        for n in names:
            if p.close_to(table[n]):
                return n
        raise PostconditionViolated("projector closure is not closed")

    leq = {(a, b) for a in names for b in names if projector_leq(table[a], table[b])}
    meet = {(a, b): name_of(proj_meet(table[a], table[b])) for a in names for b in names}
    join = {(a, b): name_of(proj_join(table[a], table[b])) for a in names for b in names}
    ortho = {a: name_of(proj_ortho(table[a])) for a in names}
    return OrthoLattice(names, leq, ortho, meet=meet, join=join), table


def born_family(states: Mapping[str, DensityOperator], projectors: Mapping[str, Projector]):
    from .qstructure import StateProbabilityFamily

    return StateProbabilityFamily({(s, e): born(rho, p) for s, rho in states.items()
                                   for e, p in projectors.items()})


def lueders_state_map(model: QuantumModel, prop: str):
    """Realize the first-kind transform for ``prop`` on registered states.

    Each state S with non-zero Born probability is sent to the registered
    state matching its Lüders image; images not yet registered are added
    under the name ``lueders(E|S)``.  Returns ``(extended_model, mapping)``.
    """
    pe = model.properties[prop]
    states = dict(model.states)
    mapping = {}
    for s, rho in model.states.items():
        if born(rho, pe) <= MIN_BRANCH:
            continue
        image = lueders(rho, pe)
        hit = next((n for n, r in states.items() if image.close_to(r)), None)
        if hit is None:
            hit = f"lueders({prop}|{s})"
            states[hit] = image
        mapping[s] = hit
    for img in set(mapping.values()):
        mapping.setdefault(img, img)
    return QuantumModel(model.dim, states, dict(model.properties)), mapping
