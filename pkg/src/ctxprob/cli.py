"""Command-line batch runner for scenario files.

Usage::

    ctxprob run SCENARIO [-o DIR] [--task NAME ...] [--seed N] [--tolerance X]
                         [--format json|csv|both] [--quiet] [--parallel]
    ctxprob list

Exit status is 0 when every task passes, 1 when a task fails and 2 when the
scenario cannot be read or parsed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

from . import __version__
from .embed import EmbeddingScheme, build_embedding, randomness_sources, verify_embedding
from .errors import CtxProbError, ScenarioError
from .lang import And, Atom, Not, Or, StateId, to_text
from .measurement import anchored_to, check_procedure_independence, context_conditionals, is_testable
from .muprob import check_conditional_measure, in_psi_plus
from .probspace import check_kolmogorov
from .qstructure import StateProbabilityFamily, classical_conditioning_failure_witness, is_generalized_probability_measure
from .quantum import born, born_family, identity_projector, lueders, ordering_family_check, projector_lattice
from .scenario import Scenario, bundled_scenarios, load


TASKS = ("check-model", "mean-prob", "born", "embed", "verify", "witness-nonclassicality", "lattice-report")


def _q(x):
    return str(x) if isinstance(x, Fraction) else x


# -- tasks ------------------------------------------------------------------


def task_check_model(sc: Scenario) -> dict:
    s = sc.structure
    kol = check_kolmogorov(s.xi, trials=sc.trials, seed=sc.seed)
    conds = [Atom(p) for p in s.model.predicates if isinstance(p, StateId)]
    first = Atom(s.model.predicates[0])
    conds.append(Or(first, Not(first)))
    props = []
    for b in conds:
        if in_psi_plus(s, b):
            props.append(check_conditional_measure(s, b, trials=sc.trials, seed=sc.seed).as_dict())
    passed = kol.passed and all(r["passed"] for r in props)
    return {"passed": passed, "kolmogorov": kol.as_dict(), "probability_measure": props}


def task_mean_prob(sc: Scenario) -> dict:
    rows, passed = [], True
    for a, b in sc.queries:
        wits = is_testable(sc.registry, And(a, b))
        rep = check_procedure_independence(sc.structure, sc.registry, a, b, sc.mean_tol)
        per_context = {}
        for mid in rep.means:
            m = sc.registry[mid]
            am, bm = anchored_to(a, b, m)
            per_context[mid] = [{"context": c, "nu": str(nu), "conditional": _q(p)}
                                for c, nu, p in context_conditionals(sc.structure, sc.registry, am, bm, m)]
        passed &= rep.passed
        rows.append({"a": to_text(a), "b": to_text(b),
                     "witnesses": [list(w) for w in wits] if wits else [],
                     "independence": rep.as_dict(), "per_context": per_context})
    return {"passed": passed, "queries": rows}


def task_born(sc: Scenario) -> dict:
    q, tol = sc.quantum, sc.float_tol
    rows, failures = [], []
    for s, rho in q.states.items():
        for e, p in q.properties.items():
            v = born(rho, p)
            row = {"state": s, "property": e, "born": v}
            if v > 1e-12:
                post = lueders(rho, p)
                rep = born(post, p)
                row["lueders_repeat"] = rep
                if abs(rep - 1) > tol:
                    failures.append({"state": s, "property": e, "lueders_repeat": rep})
            rows.append(row)
        ident = born(rho, identity_projector(q.dim))
        if abs(ident - 1) > tol:
            failures.append({"state": s, "normalization": ident})
    return {"passed": not failures, "table": rows, "failures": failures}


def _scheme(sc: Scenario) -> EmbeddingScheme:
    spec = sc.embedding
    return EmbeddingScheme(spec["scheme"], spec.get("contexts", 1), spec.get("resolution", 1),
                           spec.get("exact", False))


def _build(sc: Scenario):
    spec = sc.embedding
    weights = spec.get("state_weights")
    if weights is not None:
        weights = {k: Fraction(str(v)) for k, v in weights.items()}
    return build_embedding(sc.quantum, spec["groups"], _scheme(sc), weights)


def default_embedding_tolerance(scheme: EmbeddingScheme) -> Fraction:
    """Worst-case rounding error of each construction."""
    if scheme.kind == "ontic":
        return Fraction(1, 2 * scheme.resolution)
    if scheme.kind == "deterministic-context":
        return Fraction(1, 2 * scheme.contexts)
    return Fraction(1, 2 * scheme.contexts * scheme.resolution)


def task_embed(sc: Scenario) -> dict:
    e = _build(sc)
    return {
        "passed": True,
        "scheme": {"kind": e.scheme.kind, "contexts": e.scheme.contexts, "resolution": e.scheme.resolution},
        "universe_size": len(e.structure.model.universe),
        "procedures": {m.id: sorted(m.measures) for m in e.registry.procedures},
        "bias_bound": str(e.bias_bound()),
        "randomness_sources": randomness_sources(e),
    }


def task_verify(sc: Scenario) -> dict:
    e = _build(sc)
    tol = sc.embedding_tol if sc.embedding_tol is not None else default_embedding_tolerance(e.scheme)
    rep = verify_embedding(e, tol)
    out = rep.as_dict()
    out["passed"] = rep.passed
    return out


def _quantum_lattice(sc: Scenario):
    lattice, table = projector_lattice(sc.quantum.properties)
    return lattice, born_family(sc.quantum.states, table)


def task_witness(sc: Scenario) -> dict:
    lattice, fam = _quantum_lattice(sc)
    w = classical_conditioning_failure_witness(lattice, fam, sc.witness["state"], sc.witness["condition"],
                                               sc.float_tol)
    expect = sc.witness.get("expect", True)
    return {
        "passed": (w is not None) == expect,
        "expect_witness": expect,
        "distributive": lattice.is_distributive(),
        "witness": None if w is None else w.as_dict(),
    }


def task_lattice_report(sc: Scenario) -> dict:
    out, passed = {}, True
    if sc.quantum is not None:
        lattice, fam = _quantum_lattice(sc)
        laws = lattice.check_laws()
        measures = [is_generalized_probability_measure(lattice, fam, s, sc.float_tol).as_dict()
                    for s in sc.quantum.states]
        order = ordering_family_check(sc.quantum, seed=sc.seed, tolerance=sc.float_tol)
        ok = not laws and all(m["passed"] for m in measures) and order.passed
        passed &= ok
        out["quantum"] = {
            "passed": ok,
            "elements": list(lattice.elements),
            "law_violations": laws,
            "distributive": lattice.is_distributive(),
            "orthomodular_violations": [list(p) for p in lattice.orthomodular_violations()],
            "generalized_measures": measures,
            "ordering_family": order.as_dict(),
        }
    if sc.lattice is not None:
        laws = sc.lattice.check_laws()
        measures = []
        if sc.lattice_values:
            fam = StateProbabilityFamily(sc.lattice_values)
            measures = [is_generalized_probability_measure(sc.lattice, fam, s, 0).as_dict()
                        for s in fam.states]
        ok = not laws and all(m["passed"] for m in measures)
        passed &= ok
        out["declared"] = {"passed": ok, "law_violations": laws,
                           "distributive": sc.lattice.is_distributive(),
                           "generalized_measures": measures}
    out["passed"] = passed
    return out


RUNNERS = {
    "check-model": task_check_model,
    "mean-prob": task_mean_prob,
    "born": task_born,
    "embed": task_embed,
    "verify": task_verify,
    "witness-nonclassicality": task_witness,
    "lattice-report": task_lattice_report,
}


def run_task(sc: Scenario, name: str) -> dict:
    try:
        result = RUNNERS[name](sc)
    except CtxProbError as exc:
        result = {"passed": False, "error": f"{type(exc).__name__}: {exc}"}
    return {"task": name, **result}


# -- reports ----------------------------------------------------------------


def build_report(sc: Scenario, tasks=None, parallel: bool = False) -> dict:
    names = [t for t in sc.tasks if not tasks or t in tasks]
    if parallel:
        with ThreadPoolExecutor() as pool:
            results = list(pool.map(lambda t: run_task(sc, t), names))
    else:
        results = [run_task(sc, t) for t in names]
    return {
        "schema_version": 1,
        "tool": "ctxprob",
        "version": __version__,
        "scenario": sc.name,
        "seed": sc.seed,
        "tolerances": {
            "float": sc.float_tol,
            "mean": str(sc.mean_tol),
            "embedding": None if sc.embedding_tol is None else str(sc.embedding_tol),
        },
        "tasks": results,
        "passed": all(r["passed"] for r in results),
    }


def dumps_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, default=_q) + "\n"


def write_csv(report: dict, path: Path) -> bool:
    rows = [r for t in report["tasks"] if t["task"] == "verify" for r in t.get("rows", [])]
    if not rows:
        return False
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["state", "property", "classical_mean", "born", "deviation"])
        for r in rows:
            w.writerow([r["state"], r["property"], r["classical_mean"], repr(r["born"]), r["deviation"]])
    return True


def _summary(report: dict) -> str:
    lines = [f"scenario {report['scenario']} (seed {report['seed']})"]
    for t in report["tasks"]:
        mark = "PASS" if t["passed"] else "FAIL"
        extra = ""
        if t["task"] == "verify" and "max_deviation" in t:
            extra = f"  max deviation {t['max_deviation']}"
        elif t["task"] == "witness-nonclassicality" and t.get("witness"):
            w = t["witness"]
            extra = f"  ({w['e1']}, {w['e2']} | {w['condition']}): {w['left']} vs {w['right']}"
        elif "error" in t:
            extra = f"  {t['error']}"
        lines.append(f"  {mark}  {t['task']}{extra}")
        if t["task"] == "verify":
            for r in t.get("rows", []):
                lines.append(f"        {r['state']:>8} {r['property']:>8}  classical={r['classical_mean']:<8}"
                             f" born={r['born']:.12g}  dev={r['deviation']}")
    lines.append("PASSED" if report["passed"] else "FAILED")
    return "\n".join(lines)


def cmd_run(args) -> int:
    path = Path(args.scenario)
    if not path.exists() and args.scenario in bundled_scenarios():
        path = bundled_scenarios()[args.scenario]
    try:
        sc = load(path)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        sc.seed = args.seed
    if args.tolerance is not None:
        sc.float_tol = args.tolerance
    unknown = [t for t in (args.task or []) if t not in TASKS]
    if unknown:
        print(f"error: unknown task(s) {unknown}", file=sys.stderr)
        return 2
    report = build_report(sc, args.task, args.parallel)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.format in ("json", "both"):
        (out / f"{sc.name}.report.json").write_text(dumps_report(report), encoding="utf-8")
    if args.format in ("csv", "both"):
        write_csv(report, out / f"{sc.name}.verify.csv")
    if not args.quiet:
        print(_summary(report))
    failing = [t["task"] for t in report["tasks"] if not t["passed"]]
    if failing:
        print(f"failing task(s): {', '.join(failing)}", file=sys.stderr)
        return 1
    return 0


def cmd_list(args) -> int:
    for name, path in sorted(bundled_scenarios().items()):
        print(f"{name}\t{path}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ctxprob", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"ctxprob {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario file (or a bundled scenario by name)")
    run.add_argument("scenario")
    run.add_argument("-o", "--output-dir", default="reports")
    run.add_argument("--task", action="append", choices=TASKS, help="run only this task (repeatable)")
    run.add_argument("--seed", type=int)
    run.add_argument("--tolerance", type=float, help="absolute tolerance for floating-point checks")
    run.add_argument("--format", choices=("json", "csv", "both"), default="json")
    run.add_argument("-q", "--quiet", action="store_true")
    run.add_argument("--parallel", action="store_true", help="run tasks concurrently")
    run.set_defaults(func=cmd_run)
    ls = sub.add_parser("list", help="list bundled scenarios")
    ls.set_defaults(func=cmd_list)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
