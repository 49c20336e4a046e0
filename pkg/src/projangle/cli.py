"""Command-line front end.

Usage examples::

    projangle fixtures --out fx
    projangle analyze-pair fx/planar_pi3_p.json fx/planar_pi3_q.json
    projangle family-scan --kind counterexample --n-max 5 --format text
    projangle closure fx/commuting_1.json fx/commuting_2.json fx/commuting_3.json
    projangle extension fx/extension_system.json --action angle \\
        --p1 fx/extension_P1.json --p2 fx/extension_P2.json

Every report is a JSON object written with sorted keys, so identical
inputs and seed give byte-identical output.  Exit codes: 0 success,
2 invalid input, 3 numerical ill-conditioning.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .algebra_closure import angle_audit, center_of, span_closure, unit_of
from .errors import IllConditionedError, NotApplicableError, ValidationError
from .extension_model import (
    Block,
    BlockSystem,
    ExtensionElement,
    angle_in_extension,
    decompose_projection,
    elementary_family,
    forbidden_family_scan,
    lift_projection,
    make_projection,
    random_noise,
    self_adjoint_lift,
)
from .linalg_core import Tolerance, matrix_from_json, matrix_to_json
from .two_projections import (
    ProjectionMatrix,
    angle_c,
    canonical_form,
    equivalence_battery,
    join,
    meet,
    planar_pair,
    truncated_counterexample,
)

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class UsageError(ValidationError):
    pass


# -- io ---------------------------------------------------------------------

def _read_json(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})") from None


def _read_projection(path, tol):
    doc = _read_json(path)
    try:
        return ProjectionMatrix(matrix_from_json(doc), tol)
    except ValidationError as exc:
        raise type(exc)(f"{path}: {exc}", *_error_extras(exc)) from None


def _error_extras(exc):
    # keep residual fields on re-raised projection / Hermitian errors
    if hasattr(exc, "idempotent_residual"):
        return (exc.hermitian_residual, exc.idempotent_residual)
    if hasattr(exc, "asymmetry"):
        return (exc.asymmetry,)
    return ()


def _write_json(path, doc):
    Path(path).write_text(_dumps(doc) + "\n", encoding="utf-8")


def _plain(x):
    """JSON-ready copy: numpy scalars to Python, tuples to lists."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def _dumps(doc):
    return json.dumps(_plain(doc), sort_keys=True, indent=2)


def _is_matrix(v):
    return isinstance(v, dict) and set(v) == {"rows", "cols", "data"}


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _text_lines(doc, prefix=""):
    for k in sorted(doc):
        v = doc[k]
        key = f"{prefix}{k}"
        if _is_matrix(v):
            yield f"{key}: <{v['rows']}x{v['cols']} matrix>"
        elif isinstance(v, dict):
            yield from _text_lines(v, key + ".")
        elif isinstance(v, list) and v and all(isinstance(r, dict) for r in v):
            for i, r in enumerate(v):
                if _is_matrix(r):
                    yield f"{key}[{i}]: <{r['rows']}x{r['cols']} matrix>"
                else:
                    yield f"{key}[{i}]: " + ", ".join(f"{c}={_fmt(r[c])}" for c in sorted(r))
        elif isinstance(v, list):
            yield f"{key}: [" + ", ".join(_fmt(x) for x in v) + "]"
        else:
            yield f"{key}: {_fmt(v)}"


def _render(doc, fmt, tol):
    doc = _plain(doc)
    if fmt == "json":
        return _dumps(doc)
    lines = list(_text_lines(doc))
    gap = doc.get("spectral_gap_at_1")
    if isinstance(gap, float) and gap < tol.cluster_tol:
        lines.append("degenerate angle: spectral gap at 1 below cluster_tol")
    for row in doc.get("rows", []) if isinstance(doc.get("rows"), list) else []:
        g = row.get("spectral_gap_at_1") if isinstance(row, dict) else None
        if isinstance(g, float) and g < tol.cluster_tol:
            lines.append(f"degenerate angle in row {row.get('n', row.get('i'))}")
    return "\n".join(lines)


# -- commands -----------------------------------------------------------------

def cmd_analyze_pair(args, tol, rng):
    p = _read_projection(args.p_file, tol)
    q = _read_projection(args.q_file, tol)
    if p.dim != q.dim:
        raise ValidationError(f"dimension mismatch: p is {p.dim}x{p.dim}, q is {q.dim}x{q.dim}")
    form = canonical_form(p, q, tol)
    battery = equivalence_battery(p, q, tol)
    return {
        "dim": p.dim,
        "c_value": angle_c(p, q, tol),
        "spectral_gap_at_1": battery.spectral_gap_at_1,
        "rank_p": p.rank,
        "rank_q": q.rank,
        "meet_rank": meet(p, q, tol).rank,
        "join_rank": join(p, q, tol).rank,
        "canonical": {
            "dims": dict(zip(("meet", "p_only", "q_only", "neither"), form.dims)),
            "generic": [{"t": c.representative, "multiplicity": c.multiplicity}
                        for c in form.generic],
            "unitary": matrix_to_json(form.unitary),
        },
        "battery": battery.to_json(),
    }


def cmd_family_scan(args, tol, rng):
    rows = []
    for N in range(2, args.n_max + 1):
        if args.kind == "counterexample":
            _, _, rep = truncated_counterexample(N, tol)
            row = rep.to_json()
        else:
            p, pairs = elementary_family(N)
            scan = forbidden_family_scan(p, pairs, [math.cos(1.0 / k) for k in range(1, N + 1)], tol)
            row = scan.to_json()
            row["n"] = N
            row.pop("block_values")
        row["closed_form"] = math.cos(1.0 / N)
        rows.append(row)
    cs = [r["c_value"] for r in rows]
    return {
        "kind": args.kind,
        "n_max": args.n_max,
        "rows": rows,
        "monotone": all(b >= a for a, b in zip(cs, cs[1:])),
    }


def cmd_closure(args, tol, rng):
    ps = [_read_projection(f, tol) for f in args.files]
    if len({p.dim for p in ps}) > 1:
        raise ValidationError(f"dimension mismatch: {sorted({p.dim for p in ps})}")
    alg = span_closure([p.matrix for p in ps], tol)
    unit = unit_of(alg, tol)
    audit = angle_audit(ps, tol)
    out = {
        "ambient": alg.ambient_dim,
        "dim": alg.dim,
        "generators": len(ps),
        "unit_rank": None if unit is None else unit.rank,
        "audit": [r.to_json() for r in audit],
    }
    try:
        rep = center_of(alg, tol, rng=rng)
        out["center"] = {k: v for k, v in rep.to_json().items() if k != "central_projections"}
        out["abelian"] = rep.dim == alg.dim
    except NotApplicableError:
        out["center"] = None
        out["abelian"] = None
    if args.algebra_out:
        _write_json(args.algebra_out, alg.to_json())
    if args.audit_out:
        Path(args.audit_out).write_text(
            "".join(json.dumps(_plain(r.to_json()), sort_keys=True) + "\n" for r in audit),
            encoding="utf-8")
    return out


def _parse_bits(text, system):
    bits = {}
    for item in filter(None, (text or "").split(",")):
        key, sep, val = item.partition("=")
        if not sep or val.strip() not in ("0", "1"):
            raise UsageError(f"bits must look like 's1=1,s2=0', got {item!r}")
        bits[key.strip()] = int(val)
    unknown = set(bits) - set(system.spectrum)
    if unknown:
        raise ValidationError(f"bits reference unknown spectrum points {sorted(unknown)}")
    return bits


def _read_element(path, system):
    if path is None:
        raise UsageError("this action needs element files")
    return ExtensionElement.from_json(system, _read_json(path))


def _embed(system, label, mat):
    """Place a block matrix at its coordinates inside ``to_matrix`` layout."""
    n = sum(b.dim for b in system.blocks) + len(system.spectrum)
    out = np.zeros((n, n), dtype=np.complex128)
    i = 0
    for b in system.blocks:
        if b.label == label:
            out[i:i + b.dim, i:i + b.dim] = mat
            return out
        i += b.dim
    raise ValidationError(f"unknown block {label!r}")


def _extension_scan(args, system, tol):
    block = system.block(args.block) if args.block else max(system.blocks, key=lambda b: b.dim)
    if block.models_infinite:
        bits = {system.busby[block.label]: 0}
    else:
        bits = {}
    top = min(args.n_max, block.dim // 2)
    if top < 1:
        raise ValidationError(f"block {block.label!r} is too small for a family (dim {block.dim})")
    rows = []
    for N in range(1, top + 1):
        p, pairs = elementary_family(N)
        pad = block.dim - 2 * N
        p = np.pad(p, ((0, pad), (0, pad)))
        pairs = [tuple(np.pad(x, ((0, pad), (0, pad))) for x in t) for t in pairs]
        P = make_projection(system, bits, {block.label: p}, tol)
        big = [tuple(_embed(system, block.label, x) for x in t) for t in pairs]
        scan = forbidden_family_scan(P, big, [math.cos(1.0 / k) for k in range(1, N + 1)], tol)
        row = scan.to_json()
        row.pop("block_values")
        row["n"] = N
        row["closed_form"] = math.cos(1.0 / N)
        rows.append(row)
    return {"action": "scan", "block": block.label, "rows": rows}


def cmd_extension(args, tol, rng):
    system = BlockSystem.from_json(_read_json(args.system_file))
    if args.action == "lift":
        bits = _parse_bits(args.bits, system)
        noise = random_noise(system, rng, args.noise_norm) if args.noise_norm > 0 else None
        P = lift_projection(system, bits, noise, tol)
        a = self_adjoint_lift(system, bits, noise)
        return {
            "action": "lift",
            "noise_norm": args.noise_norm,
            "symbols": {j: P.blocks[j].scalar.real for j in P.blocks},
            "symbols_match_bits": all(P.blocks[b.label].scalar == a.blocks[b.label].scalar
                                      for b in system.blocks),
            "lift_distance": (P - a).norm(),
            "finite_ranks": {j: int(np.linalg.matrix_rank(P.blocks[j].finite, tol=tol.cluster_tol))
                             for j in P.blocks},
            "element": P.to_json(),
        }
    if args.action == "angle":
        P1 = _read_element(args.p1, system)
        P2 = _read_element(args.p2, system)
        return {"action": "angle", "c_value": angle_in_extension(P1, P2, tol)}
    if args.action == "decompose":
        P = _read_element(args.element, system)
        compact, central = decompose_projection(P, tol)
        return {
            "action": "decompose",
            "compact_norm": compact.norm(),
            "round_trip_error": ((compact + central) - P).norm(),
            "compact": compact.to_json(),
            "central": central.to_json(),
        }
    return _extension_scan(args, system, tol)


# -- fixtures -------------------------------------------------------------------

def fixture_documents():
    """Canonical inputs shared by tests and docs, keyed by file name."""
    docs = {}
    for name, theta in (("pi3", math.pi / 3), ("pi6", math.pi / 6), ("pi4", math.pi / 4)):
        p, q = planar_pair(theta)
        docs[f"planar_{name}_p.json"] = matrix_to_json(p.matrix)
        docs[f"planar_{name}_q.json"] = matrix_to_json(q.matrix)
    p, _ = planar_pair(0.0)
    docs["equal_p.json"] = docs["equal_q.json"] = matrix_to_json(p.matrix)
    p, q, _ = truncated_counterexample(5)
    docs["counterexample_5_p.json"] = matrix_to_json(p.matrix)
    docs["counterexample_5_q.json"] = matrix_to_json(q.matrix)
    for k, d in enumerate(([1, 1, 0, 0], [1, 0, 1, 0], [0, 0, 1, 1]), start=1):
        docs[f"commuting_{k}.json"] = matrix_to_json(np.diag(d).astype(float))

    system = BlockSystem(
        (Block("j1", 4), Block("j2", 4), Block("f1", 3, "finite")),
        ("s1", "s2"),
        {"j1": "s1", "j2": "s2"},
    )
    docs["extension_system.json"] = system.to_json()
    p6, q6 = planar_pair(math.pi / 6)
    p4, q4 = planar_pair(math.pi / 4)
    z2 = np.zeros((2, 2))
    hole = -np.diag([1.0, 0.0, 0.0, 0.0])
    P1 = make_projection(system, {"s1": 0, "s2": 1},
                         {"j1": np.block([[p6.matrix, z2], [z2, z2]]), "j2": hole})
    P2 = make_projection(system, {"s1": 0, "s2": 1},
                         {"j1": np.block([[q6.matrix, z2], [z2, z2]]),
                          "f1": np.pad(p4.matrix, ((0, 1), (0, 1)))})
    docs["extension_P1.json"] = P1.to_json()
    docs["extension_P2.json"] = P2.to_json()
    docs["extension_scalar.json"] = make_projection(system, {"s1": 1, "s2": 0}).to_json()
    return docs


def cmd_fixtures(args, tol, rng):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    docs = fixture_documents()
    for name in sorted(docs):
        _write_json(out / name, docs[name])
    return {"out": str(out), "files": sorted(docs)}


# -- parser ---------------------------------------------------------------------

def _n_max(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 2:
        raise argparse.ArgumentTypeError(f"must be >= 2, got {v}")
    return v


def _global_flags(ap, suppress):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    ap.add_argument("--eq-tol", type=float, default=d(1e-10), help="equality threshold")
    ap.add_argument("--cluster-tol", type=float, default=d(1e-6), help="eigenvalue clustering radius")
    ap.add_argument("--iter-max", type=int, default=d(10_000), help="iteration cap")
    ap.add_argument("--seed", type=int, default=d(0), help="seed for randomized steps (default 0)")
    ap.add_argument("--format", choices=("json", "text"), default=d("json"))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="projangle",
                                 description="Angles, lattices and algebras of projection matrices.")
    _global_flags(ap, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("analyze-pair", parents=[common], help="canonical form, angle and battery")
    sp.add_argument("p_file")
    sp.add_argument("q_file")

    sp = sub.add_parser("family-scan", parents=[common], help="c-values along a growing family")
    sp.add_argument("--kind", choices=("counterexample", "forbidden"), required=True)
    sp.add_argument("--n-max", type=_n_max, required=True)

    sp = sub.add_parser("closure", parents=[common], help="generated algebra, center and angle audit")
    sp.add_argument("files", nargs="+")
    sp.add_argument("--algebra-out", help="write the algebra basis as JSON")
    sp.add_argument("--audit-out", help="write the angle audit as JSON lines")

    sp = sub.add_parser("extension", parents=[common], help="operations in the extension model")
    sp.add_argument("system_file")
    sp.add_argument("--action", choices=("lift", "angle", "decompose", "scan"), required=True)
    sp.add_argument("--bits", default="", help="abelian bits, e.g. s1=1,s2=0 (lift)")
    sp.add_argument("--noise-norm", type=float, default=0.0, help="norm of random Hermitian noise (lift)")
    sp.add_argument("--p1", help="element file (angle)")
    sp.add_argument("--p2", help="element file (angle)")
    sp.add_argument("--element", help="element file (decompose)")
    sp.add_argument("--block", help="block holding the family (scan; default the largest)")
    sp.add_argument("--n-max", type=_n_max, default=8, help="largest family size (scan)")

    sp = sub.add_parser("fixtures", parents=[common], help="write canonical input files")
    sp.add_argument("--out", required=True)
    return ap


COMMANDS = {
    "analyze-pair": cmd_analyze_pair,
    "family-scan": cmd_family_scan,
    "closure": cmd_closure,
    "extension": cmd_extension,
    "fixtures": cmd_fixtures,
}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        tol = Tolerance(args.eq_tol, args.cluster_tol, args.iter_max)
        if args.command == "extension" and args.noise_norm < 0:
            raise UsageError("--noise-norm must be nonnegative")
        rng = np.random.default_rng(args.seed)
        report = COMMANDS[args.command](args, tol, rng)
    except IllConditionedError as exc:
        print(f"projangle: ill-conditioned: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValidationError as exc:
        print(f"projangle: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(_render(report, args.format, tol))
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
