"""Loading and validating scenario files.

A scenario is a JSON document (schema in ``schemas/scenario.schema.json``).
Rationals are written ``"p/q"`` and complex matrix entries ``"re,im"`` so
that exact values survive serialization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from .errors import FormulaSyntaxError, ScenarioError
from .lang import Formula, Model, parse, parse_predicate
from .measurement import MeasurementProcedure, MeasurementRegistry
from .muprob import MuContextualStructure
from .probspace import FiniteProbabilitySpace
from .qstructure import OrthoLattice
from .quantum import DensityOperator, Projector, QuantumModel, bloch_projector, bloch_state, preset_projector, preset_state

DEFAULT_FLOAT_TOL = 1e-9


def _schema(name: str) -> dict:
    return json.loads(resources.files("ctxprob").joinpath("schemas", name).read_text())


def scenario_schema() -> dict:
    return _schema("scenario.schema.json")


def report_schema() -> dict:
    return _schema("report.schema.json")


def bundled_scenarios() -> dict:
    """Map bundled scenario names to their paths."""
    root = resources.files("ctxprob").joinpath("scenarios")
    return {p.name[: -len(".scenario")]: Path(str(p)) for p in root.iterdir() if p.name.endswith(".scenario")}


@dataclass
class Scenario:
    name: str
    seed: int
    trials: int
    float_tol: float
    mean_tol: Fraction
    embedding_tol: Optional[Fraction]
    tasks: list
    structure: Optional[MuContextualStructure] = None
    registry: Optional[MeasurementRegistry] = None
    queries: list = field(default_factory=list)
    quantum: Optional[QuantumModel] = None
    embedding: Optional[dict] = None
    witness: Optional[dict] = None
    lattice: Optional[OrthoLattice] = None
    lattice_values: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)


def _complex(text: str) -> complex:
    re_, im = text.split(",")
    return complex(float(re_), float(im))


def _matrix(rows) -> np.ndarray:
    return np.array([[_complex(x) for x in row] for row in rows], dtype=complex)


def _state(spec) -> DensityOperator:
    if isinstance(spec, str):
        return preset_state(spec)
    if "bloch" in spec:
        return bloch_state(spec["bloch"])
    return DensityOperator(_matrix(spec["matrix"]))


def _projector(spec) -> Projector:
    if isinstance(spec, str):
        return preset_projector(spec)
    if "bloch" in spec:
        return bloch_projector(spec["bloch"])
    return Projector(_matrix(spec["matrix"]))


def _formula(text: str, where: str) -> Formula:
    try:
        return parse(text)
    except FormulaSyntaxError as exc:
        raise ScenarioError(f"{where}: {exc}", exc.offset) from None


def _transitive_closure(elements, pairs) -> set:
    leq = {(a, a) for a in elements} | set(pairs)
    changed = True
    while changed:
        new = {(a, d) for a, b in leq for c, d in leq if b == c} - leq
        changed = bool(new)
        leq |= new
    return leq


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


def loads(text: str) -> Scenario:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc.msg}", _byte_offset(text, exc.pos)) from None
    try:
        jsonschema.validate(raw, scenario_schema())
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioError(f"schema violation at {path}: {exc.message}") from None
    try:
        return _build(raw)
    except ScenarioError:
        raise
    except (ValueError, KeyError, ZeroDivisionError) as exc:
        raise ScenarioError(f"invalid scenario: {exc}") from None


def load(path) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc.strerror}") from None
    return loads(text)


def _build(raw: dict) -> Scenario:
    tol = raw.get("tolerances", {})
    emb_tol = tol.get("embedding")
    sc = Scenario(
        name=raw["name"],
        seed=raw.get("seed", 0),
        trials=raw.get("trials", 50),
        float_tol=float(tol.get("float", DEFAULT_FLOAT_TOL)),
        mean_tol=Fraction(str(tol.get("mean", "0"))),
        embedding_tol=None if emb_tol is None else Fraction(str(emb_tol)),
        tasks=list(raw["tasks"]),
        raw=raw,
    )
    if "classical" in raw:
        cl = raw["classical"]
        xi = FiniteProbabilitySpace(cl["universe"].keys(), [Fraction(str(w)) for w in cl["universe"].values()])
        ext = {}
        for key, members in cl["extensions"].items():
            try:
                ext[parse_predicate(key)] = members
            except FormulaSyntaxError as exc:
                raise ScenarioError(f"classical/extensions/{key}: {exc}", exc.offset) from None
        sc.structure = MuContextualStructure(Model(xi.points, ext), xi)
    if "registry" in raw:
        procs = [MeasurementProcedure(r["id"], r["measures"],
                                      FiniteProbabilitySpace(r["contexts"].keys(),
                                                             [Fraction(str(w)) for w in r["contexts"].values()]))
                 for r in raw["registry"]]
        sc.registry = MeasurementRegistry(procs)
    for i, q in enumerate(raw.get("queries", [])):
        sc.queries.append((_formula(q["a"], f"queries/{i}/a"), _formula(q["b"], f"queries/{i}/b")))
    if "quantum" in raw:
        qm = raw["quantum"]
        sc.quantum = QuantumModel(qm["dim"], {k: _state(v) for k, v in qm["states"].items()},
                                  {k: _projector(v) for k, v in qm["properties"].items()})
    sc.embedding = raw.get("embedding")
    sc.witness = raw.get("witness")
    if "lattice" in raw:
        lt = raw["lattice"]
        leq = _transitive_closure(lt["elements"], [tuple(p) for p in lt["order"]])
        sc.lattice = OrthoLattice(lt["elements"], leq, lt["ortho"])
        sc.lattice_values = {(s, e): Fraction(str(v)) for s, row in lt.get("values", {}).items()
                             for e, v in row.items()}
    _check_references(sc)
    return sc


_NEEDS = {
    "check-model": ("structure",),
    "mean-prob": ("structure", "registry"),
    "born": ("quantum",),
    "embed": ("quantum", "embedding"),
    "verify": ("quantum", "embedding"),
    "witness-nonclassicality": ("quantum", "witness"),
}


def _check_references(sc: Scenario) -> None:
    for task in sc.tasks:
        for attr in _NEEDS.get(task, ()):
            if getattr(sc, attr) is None:
                raise ScenarioError(f"task {task!r} needs a {attr!r} section")
        if task == "lattice-report" and sc.quantum is None and sc.lattice is None:
            raise ScenarioError("task 'lattice-report' needs a 'quantum' or 'lattice' section")
    if sc.witness is not None and sc.quantum is not None:
        for key in ("state", "condition"):
            pool = sc.quantum.states if key == "state" else sc.quantum.properties
            if sc.witness[key] not in pool:
                raise ScenarioError(f"witness {key} {sc.witness[key]!r} is not defined")
