"""Command-line front end: analyze, bracket, evolve, canon, brst.

Exit codes: 0 success, 1 input error, 2 analysis or precondition error.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from artifact import __version__
from artifact.brackets import DegenerateOmega, build_second_class, dirac, poisson
from artifact.brst import (
    LieAlgebraSpec,
    brst_apply,
    decompose_closed,
    homotopy_check,
    nilpotency_check,
    random_element,
)
from artifact.constraints import (
    ConstraintError,
    HamiltonianModel,
    LagrangianModel,
    NonAffineResidual,
    NotPreserved,
    extended_hamiltonian,
    momenta,
    primary_constraints,
    run_dirac_bergmann,
    total_hamiltonian,
    verification_report,
)
from artifact.dynamics import (
    MultiplierSchedule,
    NonFiniteState,
    SchemeMismatch,
    conservation_report,
    constraint_drift,
    evolve,
    gauge_difference,
    symplectic_check,
)
from artifact.superalgebra import (
    GrassmannNumber,
    SuperAlgebraError,
    SuperMatrix,
    canonical_form_antihermitian,
    canonical_form_antisym,
    canonical_form_generic,
    desoul,
)
from artifact.symalg.parser import ParseError
from artifact.symalg.table import VariableTable
from artifact.symmetry import (
    SymmetryCandidate,
    UnverifiedSymmetry,
    conservation_defect,
    noether_charge,
    total_noether_charge,
    verify_offshell_invariance,
)

SCHEMA_VERSION = 1


class InputError(ValueError):
    """Malformed model file or command arguments (exit 1)."""


class AnalysisError(RuntimeError):
    """Analysis or precondition failure (exit 2)."""


# model loading ----------------------------------------------------------------------

@dataclass
class Model:
    name: str
    table: VariableTable
    raw: dict
    lagrangian: LagrangianModel | None = None
    hamiltonian: HamiltonianModel | None = None
    split: dict | None = None
    symmetries: list = field(default_factory=list)
    manual: list = field(default_factory=list)


def _parse(table, text, what):
    if not isinstance(text, str):
        raise InputError(f"{what}: expected an expression string, got {text!r}")
    try:
        return table.parse(text)
    except ParseError as exc:
        raise InputError(f"{what}: {exc}") from None


def read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    if not isinstance(data, dict):
        raise InputError(f"{path}: top level must be an object")
    return data


def build_model(data: dict) -> Model:
    for key in ("name", "variables"):
        if key not in data:
            raise InputError(f"model is missing {key!r}")
    has_l, has_h = "lagrangian" in data, "hamiltonian" in data
    if has_l == has_h:
        raise InputError("model needs exactly one of 'lagrangian' and 'hamiltonian'")
    sv = data.get("schema_version", SCHEMA_VERSION)
    if sv != SCHEMA_VERSION:
        raise InputError(f"unsupported schema_version {sv}")
    n = data.get("grassmann_generators", 0)
    if not isinstance(n, int) or n < 0:
        raise InputError("grassmann_generators must be a nonnegative integer")
    try:
        tb = VariableTable(n)
        for v in data["variables"]:
            name, parity = v["name"], int(v.get("parity", 0))
            if v.get("kind", "position") == "parameter":
                tb.add(name, parity, "auxiliary")
            else:
                tb.add_position(name, parity, momentum=v.get("momentum"))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad variable declaration: {exc}") from None
    m = Model(data["name"], tb, data)
    try:
        if has_l:
            L = _parse(tb, data["lagrangian"].get("expr"), "lagrangian")
            m.lagrangian = LagrangianModel(tb, L, m.name)
        else:
            h = data["hamiltonian"]
            H = _parse(tb, h.get("expr"), "hamiltonian")
            prim = [_parse(tb, e, "primary constraint") for e in h.get("primary_constraints", [])]
            m.hamiltonian = HamiltonianModel(tb, H, prim, name=m.name)
    except ConstraintError as exc:
        raise InputError(str(exc)) from None
    for s in data.get("symmetries", []):
        try:
            dq = {k: _parse(tb, e, f"symmetry {s.get('name')}") for k, e in s["delta_q"].items()}
            dK = _parse(tb, s.get("delta_K", "0"), f"symmetry {s.get('name')}")
        except (KeyError, AttributeError) as exc:
            raise InputError(f"bad symmetry entry: {exc}") from None
        for k in dq:
            if k not in tb:
                raise InputError(f"symmetry {s.get('name')}: unknown variable {k}")
        m.symmetries.append(SymmetryCandidate(dq, dK, s.get("name", "symmetry")))
    m.manual = [_parse(tb, e, "manual constraint") for e in data.get("manual_constraints", [])]
    return m


def ensure_hamiltonian(m: Model) -> HamiltonianModel:
    if m.hamiltonian is None:
        m.hamiltonian, m.split = primary_constraints(m.lagrangian)
    return m.hamiltonian


def constraint_report(m: Model):
    hm = ensure_hamiltonian(m)
    if m.manual:
        return verification_report(hm, m.manual)
    return run_dirac_bergmann(hm)


# serialization ----------------------------------------------------------------------

def frac(x) -> str:
    return str(Fraction(x))


def grassmann(x: GrassmannNumber) -> dict:
    return dict(sorted(x.to_json().items(), key=lambda kv: (len(kv[0]), kv[0])))


def smatrix(m: SuperMatrix) -> dict:
    return {"grassmann_generators": m.n, "row_parities": list(m.row_parities),
            "col_parities": list(m.col_parities),
            "entries": [[grassmann(x) for x in r] for r in m.entries]}


def _entry(n, x):
    if isinstance(x, dict):
        return GrassmannNumber.from_json(n, {k: str(v) for k, v in x.items()})
    return GrassmannNumber.scalar(n, Fraction(str(x)))


def read_matrix(data: dict) -> SuperMatrix:
    try:
        n = int(data.get("grassmann_generators", 0))
        rows = data["entries"]
        rp = data.get("row_parities", [0] * len(rows))
        cp = data.get("col_parities", [0] * (len(rows[0]) if rows else 0))
        return SuperMatrix(n, rp, cp, [[_entry(n, x) for x in r] for r in rows])
    except (KeyError, TypeError, ValueError, ZeroDivisionError, SuperAlgebraError) as exc:
        raise InputError(f"bad matrix: {exc}") from None


def report_dict(m: Model) -> dict:
    hm = ensure_hamiltonian(m)
    r = constraint_report(m)
    tb = m.table
    first = set(r.first_class)
    prim = {str(p) for p in hm.primary}
    out = {"schema_version": SCHEMA_VERSION, "model": m.name,
           "source": "lagrangian" if m.lagrangian else "hamiltonian",
           "mode": "verified" if m.manual else "dirac-bergmann"}
    if m.lagrangian is not None:
        out["momenta"] = {q.name: str(p) for q, p in zip(m.lagrangian.positions, momenta(m.lagrangian))}
    out["hamiltonian"] = str(hm.H)
    out["constraints"] = [{"expr": str(phi), "tier": tier, "parity": phi.parity or 0,
                           "primary": str(phi) in prim and tier == 1,
                           "class": "first" if i in first else "second"}
                          for i, (phi, tier) in enumerate(r.chain)]
    out["primary_constraints"] = [str(p) for p in hm.primary]
    out["secondary_constraints"] = [str(phi) for phi, t in r.chain if t > 1]
    out["first_class"] = [str(r.chain[i][0]) for i in r.first_class]
    out["second_class"] = [str(r.chain[i][0]) for i in r.second_class]
    out["multipliers"] = {u.name: str(U) for u, U in zip(r.multiplier_symbols, r.multipliers)}
    out["determined_multipliers"] = {k: str(v) for k, v in r.determined().items()}
    out["free_multipliers"] = r.free()
    out["free_symbols"] = [v.name for v in r.free_symbols]
    out["primary_first_class"] = [str(x) for x in r.primary_first_class]
    out["first_class_combinations"] = [str(x) for x in r.first_class_combinations]
    out["omega"] = smatrix(r.omega_full)
    if r.T is not None:
        out["preservation_matrix"] = [[str(x) if x is not None else "0" for x in row] for row in r.T]
    out["dof"] = frac(r.dof)
    H_T = total_hamiltonian(hm, r)
    H_E = extended_hamiltonian(r, hm)
    out["total_hamiltonian"] = str(H_T)
    out["extended_hamiltonian"] = str(H_E)
    out["extended_equals_total"] = H_E == H_T
    out["caveats"] = list(r.caveats)
    out["symmetries"] = [_symmetry_entry(m, s, hm, r) for s in m.symmetries]
    del tb
    return out


def _symmetry_entry(m: Model, s: SymmetryCandidate, hm, r) -> dict:
    entry = {"name": s.name}
    if m.lagrangian is None:
        entry["verdict"] = "skipped"
        entry["reason"] = "symmetries need a Lagrangian model"
        return entry
    res = verify_offshell_invariance(m.lagrangian, s)
    entry["verdict"] = "verified" if res.verified else "not-a-symmetry"
    entry["residual"] = str(res.residual)
    if not res.verified:
        return entry
    Q = noether_charge(m.lagrangian, s)
    entry["charge"] = str(Q)
    entry["conservation_identity"] = conservation_defect(m.lagrangian, s, Q).is_zero()
    try:
        QT = total_noether_charge(m.lagrangian, s, hm, r)
        entry["total_charge"] = str(QT)
    except (UnverifiedSymmetry, ConstraintError, ValueError) as exc:
        entry["total_charge"] = None
        entry["total_charge_error"] = str(exc)
    return entry


def _text(obj, indent=0) -> str:
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            if isinstance(v, (dict, list)) and v and not _is_grassmann(v):
                lines.append(f"{pad}{k}:")
                lines.append(_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {_scalar(v)}")
    elif isinstance(obj, list):
        for v in obj:
            if isinstance(v, (dict, list)) and v and not _is_grassmann(v):
                lines.append(f"{pad}-")
                lines.append(_text(v, indent + 1))
            else:
                lines.append(f"{pad}- {_scalar(v)}")
    else:
        lines.append(pad + _scalar(obj))
    return "\n".join(lines)


def _is_grassmann(v) -> bool:
    return isinstance(v, dict) and all(isinstance(k, str) and k.replace(",", "").isdigit() or k == ""
                                       for k in v) and all(isinstance(x, str) for x in v.values())


def _scalar(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, dict):
        return json.dumps(v)
    if v is None:
        return "null"
    if v == [] or v == {}:
        return json.dumps(v)
    return str(v)


def render(obj, fmt: str) -> str:
    if fmt == "text":
        return _text(obj) + "\n"
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


# commands -------------------------------------------------------------------------

def _analyze_one(path: str) -> dict:
    return report_dict(build_model(read_json(path)))


def cmd_analyze(args) -> tuple[object, int]:
    paths = args.paths
    if args.jobs > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            reports = list(ex.map(_analyze_one, paths))
    else:
        reports = [_analyze_one(p) for p in paths]
    if len(reports) == 1:
        return reports[0], 0
    return {"schema_version": SCHEMA_VERSION, "reports": reports}, 0


def cmd_bracket(args) -> tuple[object, int]:
    m = build_model(read_json(args.path))
    hm = ensure_hamiltonian(m)
    ps = hm.phase_space
    F = _parse(m.table, args.lhs, "--lhs")
    G = _parse(m.table, args.rhs, "--rhs")
    for e, flag in ((F, "--lhs"), (G, "--rhs")):
        if not e.is_zero() and e.parity is None:
            raise InputError(f"{flag} has mixed parity")
    out = {"schema_version": SCHEMA_VERSION, "lhs": str(F), "rhs": str(G)}
    if args.dirac is None:
        out["bracket"] = "poisson"
        out["result"] = str(poisson(F, G, ps))
        return out, 0
    if args.dirac == "auto":
        r = constraint_report(m)
        rho = [r.chain[i][0] for i in r.second_class]
    else:
        rho = [_parse(m.table, e, "--dirac") for e in args.dirac.split(",") if e.strip()]
    try:
        scs = build_second_class(rho, ps)
    except DegenerateOmega as exc:
        raise AnalysisError(str(exc)) from None
    out["bracket"] = "dirac"
    out["second_class"] = [str(x) for x in rho]
    out["result"] = str(dirac(F, G, scs, ps))
    return out, 0


def _schedule_arg(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise InputError(f"--schedule expects name=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = json.loads(v)
        except json.JSONDecodeError:
            out[k.strip()] = v
    return out


def _stream(records, args):
    text = "".join(render_record(r, args.format) for r in records)
    return text


def render_record(r, fmt) -> str:
    if fmt == "text":
        return " ".join(f"{k}={_scalar(v)}" for k, v in r.items()) + "\n"
    return json.dumps(r, ensure_ascii=False) + "\n"


def cmd_evolve(args) -> tuple[object, int]:
    m = build_model(read_json(args.path))
    dyn = dict(m.raw.get("dynamics") or {})
    for key in ("dt", "steps", "scheme"):
        if getattr(args, key) is not None:
            dyn[key] = getattr(args, key)
    if args.schedule:
        dyn["schedules"] = _schedule_arg(args.schedule)
    if "dt" not in dyn or "steps" not in dyn:
        raise InputError("dynamics needs dt and steps (model section or flags)")
    hm = ensure_hamiltonian(m)
    r = constraint_report(m)
    try:
        sched = MultiplierSchedule.from_spec(dyn.get("schedules"))
    except (ValueError, TypeError) as exc:
        raise InputError(f"bad schedule: {exc}") from None
    x0 = dyn.get("x0", {})
    for k in x0:
        if k not in m.table:
            raise InputError(f"x0: unknown variable {k}")
    steps = int(dyn["steps"])
    dt = float(dyn["dt"])
    tol = args.tolerance
    header = {"type": "header", "schema_version": SCHEMA_VERSION, "model": m.name, "dt": dt,
              "steps": steps, "scheme": dyn.get("scheme", "rk4")}
    records = [header]
    if steps == 0:
        return records, 0
    every = args.every or max(1, steps // 100)
    try:
        tr = evolve(hm, r, x0, sched, dt=dt, steps=steps, scheme=dyn.get("scheme", "rk4"),
                    record_every=every)
    except (SchemeMismatch, NonFiniteState) as exc:
        raise AnalysisError(f"integrator failure: {exc}") from None
    names = [v.name for v in tr.system.coords]
    header["coordinates"] = names
    for s in tr.states:
        records.append({"type": "state", "t": s.t, "x": dict(zip(names, map(float, s.x)))})
    charges = [total_hamiltonian(hm, r)] + [_parse(m.table, e, "charge") for e in dyn.get("charges", [])]
    sd = symplectic_check(tr)
    drift = constraint_drift(tr, r)
    cons = conservation_report(tr, charges)
    summary = {"type": "summary", "symplectic_defect": sd, "symplectic_ok": sd <= tol,
               "constraint_drift": drift, "conservation_drift": cons}
    cmp = dyn.get("compare")
    if args.compare or cmp:
        cmp = cmp or {}
        obs = _parse(m.table, args.observable or cmp.get("observable", ""), "observable")
        s1 = MultiplierSchedule.from_spec(cmp.get("schedule1", {}))
        s2 = MultiplierSchedule.from_spec(cmp.get("schedule2", {}))
        rows = []
        for k in range(3):
            h = dt / 2 ** k
            meas, pred = gauge_difference(hm, r, x0, s1, s2, obs, h)
            rows.append({"dt": h, "measured": meas, "predicted": pred, "discrepancy": abs(meas - pred)})
        summary["gauge_difference"] = {"observable": str(obs), "rows": rows}
    records.append(summary)
    return records, 0


def _lie_spec(data: dict) -> LieAlgebraSpec:
    b = data.get("brst")
    if not b:
        raise InputError("model has no 'brst' section")
    try:
        n = int(b["dimension"])
        C = b.get("structure_constants", [])
        if C == "su2":
            return LieAlgebraSpec.su2()
        if C and all(isinstance(r, list) and len(r) == 4 and not isinstance(r[0], list) for r in C):
            return LieAlgebraSpec.from_sparse(n, [(a, bb, c, Fraction(str(v))) for a, bb, c, v in C],
                                              check=False)
        return LieAlgebraSpec(n, [[[Fraction(str(x)) for x in r] for r in mm] for mm in C] if C else [],
                              check=False)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad brst section: {exc}") from None


def cmd_brst(args) -> tuple[object, int]:
    spec = _lie_spec(read_json(args.path))
    out = {"schema_version": SCHEMA_VERSION, "dimension": spec.dimension, "check": args.check,
           "samples": args.samples}
    bad = spec.jacobi_defect()
    out["jacobi_ok"] = bad is None
    if bad:
        out["jacobi_witness"] = list(bad)
    if args.check == "nilpotency":
        rep = nilpotency_check(spec, args.samples)
    else:
        rep = homotopy_check(spec, args.samples)
        if rep.passed:
            rng = random.Random(1)
            for i in range(min(args.samples, 25)):
                Y = brst_apply(random_element(spec, rng), spec)
                try:
                    decompose_closed(Y, spec)
                except (ArithmeticError, ValueError) as exc:
                    rep.passed, rep.witness, rep.defect = False, str(Y), str(exc)
                    break
    out["passed"] = rep.passed
    out["checked"] = rep.checked
    if not rep.passed:
        out["witness"] = rep.witness
        out["defect"] = rep.defect
    return out, 0 if rep.passed else 2


CANON = {"generic": canonical_form_generic, "antisym": canonical_form_antisym,
         "antihermitian": canonical_form_antihermitian, "desoul": desoul}


def cmd_canon(args) -> tuple[object, int]:
    src = args.matrix
    if Path(src).exists():
        data = read_json(src)
    else:
        try:
            data = json.loads(src)
        except json.JSONDecodeError as exc:
            raise InputError(f"matrix is neither a file nor inline JSON: {exc}") from None
    if isinstance(data, list):
        data = {"entries": data}
    if "variables" in data:
        m = build_model(data)
        mat = constraint_report(m).omega_full
    else:
        mat = read_matrix(data)
    try:
        res = CANON[args.kind](mat)
    except SuperAlgebraError as exc:
        raise AnalysisError(f"{type(exc).__name__}: {exc}") from None
    if not res.reconstructs(mat):
        raise AnalysisError("reconstruction self-check failed")
    out = {"schema_version": SCHEMA_VERSION, "kind": args.kind, "input": smatrix(mat),
           "canonical": smatrix(res.canonical), "left": smatrix(res.left), "right": smatrix(res.right),
           "rank_data": {k: v for k, v in sorted(res.rank_data.items())},
           "row_blocks": {k: list(v) for k, v in sorted(res.row_blocks.items())},
           "col_blocks": {k: list(v) for k, v in sorted(res.col_blocks.items())},
           "reconstructs": True}
    return out, 0


# entry point ------------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    def globals_(suppress):
        g = argparse.ArgumentParser(add_help=False)
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        g.add_argument("--output", default=d(None), help="write the report to this file")
        g.add_argument("--format", choices=("json", "text"), default=d("json"))
        g.add_argument("--tolerance", type=float, default=d(1e-8))
        g.add_argument("--jobs", type=int, default=d(1))
        return g

    # flags are accepted before or after the subcommand
    common = globals_(True)
    p = _Parser(prog="artifact", description="Constrained Hamiltonian analysis toolkit",
                parents=[globals_(False)])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", parents=[common], help="constraint analysis of model files")
    a.add_argument("paths", nargs="+")
    a.set_defaults(func=cmd_analyze)

    b = sub.add_parser("bracket", parents=[common], help="Poisson or Dirac bracket of two expressions")
    b.add_argument("path")
    b.add_argument("--lhs", required=True)
    b.add_argument("--rhs", required=True)
    b.add_argument("--dirac", nargs="?", const="auto", default=None,
                   help="comma-separated second-class set; bare flag uses the model's")
    b.set_defaults(func=cmd_bracket)

    e = sub.add_parser("evolve", parents=[common], help="integrate the total Hamiltonian")
    e.add_argument("path")
    e.add_argument("--dt", type=float)
    e.add_argument("--steps", type=int)
    e.add_argument("--scheme", choices=("rk4", "exact-linear"))
    e.add_argument("--schedule", action="append", help="name=JSON schedule, repeatable")
    e.add_argument("--every", type=int, default=0, help="record every n steps")
    e.add_argument("--compare", action="store_true", help="gauge-difference table")
    e.add_argument("--observable")
    e.set_defaults(func=cmd_evolve)

    c = sub.add_parser("canon", parents=[common], help="supermatrix canonical forms")
    c.add_argument("matrix", help="JSON file, inline JSON, or a model file (uses its bracket matrix)")
    c.add_argument("--kind", choices=tuple(CANON), default="generic")
    c.set_defaults(func=cmd_canon)

    r = sub.add_parser("brst", parents=[common], help="BRST property checks")
    r.add_argument("path")
    r.add_argument("--check", choices=("nilpotency", "homotopy"), default="nilpotency")
    r.add_argument("--samples", type=int, default=50)
    r.set_defaults(func=cmd_brst)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result, code = args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except NonAffineResidual as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        print(f"residual: {exc.expression}", file=sys.stderr)
        return 2
    except NotPreserved as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        print(f"residual: {exc.residual}", file=sys.stderr)
        return 2
    except (AnalysisError, ConstraintError, SuperAlgebraError, ArithmeticError, ValueError) as exc:
        print(f"analysis error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    if isinstance(result, list):
        text = _stream(result, args)
    else:
        text = render(result, args.format)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
