"""Command-line front end.

Exit status: 0 on success, 1 on a negative result (no proof within budget,
rejected proof, no countermodel, no interpolant), 2 on bad input.  Machine
output is JSON on stdout; reasons for failure are JSON on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any

from .calculus import CheckError, Proof, check_proof, proof_from_json, proof_to_json, render
from .formula import AlphabetError, Char, Formula, Imp, ParseError, parse_formula, to_text
from .grammar import AxiomSet, reach
from .interpolate import InterpolationError, lyndon_interpolant, signature_ok
from .search import SearchBudget, prove
from .semantics import find_sequent_countermodel
from .sequent import Nested, SequentError, flat, parse_sequent, propagation_graph, to_sequent_text
from .transform import CutMonitor, TransformError, cut_conclusion, eliminate_cut

OK, NEGATIVE, BAD_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _emit(obj: Any) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def _fail(code: int, kind: str, message: str, **extra) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, **extra}) + "\n")
    return code


def _axioms(args) -> AxiomSet:
    if not args.axioms:
        return AxiomSet()
    try:
        return AxiomSet.from_json(Path(args.axioms).read_text())
    except OSError as e:
        raise InputError(f"cannot read axiom file: {e}") from None
    except (ValueError, AlphabetError) as e:
        raise InputError(f"bad axiom file: {e}") from None


def _goal(text: str, axioms: AxiomSet) -> Nested:
    """A sequent when the text contains '=>', otherwise a formula goal."""
    alphabet = axioms.alphabet or None
    try:
        if "=>" in text:
            return parse_sequent(text, alphabet)
        return flat((), (parse_formula(text, alphabet),))
    except (ParseError, AlphabetError, SequentError) as e:
        raise InputError(f"cannot parse {text!r}: {e}") from None


def _formula(text: str, axioms: AxiomSet) -> Formula:
    try:
        return parse_formula(text, axioms.alphabet or None)
    except (ParseError, AlphabetError) as e:
        raise InputError(f"cannot parse {text!r}: {e}") from None


def _budget(args) -> SearchBudget:
    try:
        return SearchBudget(
            max_noninvertible=args.max_branch,
            max_propagations_per_pair=args.max_prop,
            max_new_components=args.max_fresh,
            time_limit=args.time_limit,
        )
    except ValueError as e:
        raise InputError(str(e)) from None


def _load_proof(path: str, axioms: AxiomSet | None) -> tuple[Proof, AxiomSet | None]:
    """Read a proof file: either a bare proof or the object ``prove`` writes."""
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
        data = json.loads(text)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise InputError(f"{path} is not JSON: {e}") from None
    stored = None
    if isinstance(data, dict) and "proof" in data:
        if "axioms" in data:
            try:
                stored = AxiomSet.from_json(data["axioms"])
            except (ValueError, AlphabetError) as e:
                raise InputError(f"bad axioms in {path}: {e}") from None
        data = data["proof"]
    ax = axioms if axioms is not None else stored
    try:
        return proof_from_json(data, ax or AxiomSet()), ax
    except (ValueError, ParseError, SequentError) as e:
        raise InputError(f"malformed proof in {path}: {e}") from None


def _proof_doc(p: Proof, axioms: AxiomSet) -> dict:
    return {
        "conclusion": to_sequent_text(p.conclusion),
        "axioms": axioms.to_json(),
        "height": p.height,
        "size": p.size,
        "proof": proof_to_json(p),
    }


# -- commands -----------------------------------------------------------------


def cmd_prove(args) -> int:
    axioms = _axioms(args)
    goal = _goal(args.goal, axioms)
    result = prove(goal, axioms, _budget(args))
    if not result:
        return _fail(NEGATIVE, "no_proof", str(result), goal=to_sequent_text(goal),
                     nodes=result.nodes, timed_out=result.timed_out)
    if args.pretty:
        print(render(result))
    else:
        _emit(_proof_doc(result, axioms))
    return OK


def cmd_check(args) -> int:
    p, axioms = _load_proof(args.proof, _axioms(args) if args.axioms else None)
    axioms = axioms or AxiomSet()
    try:
        check_proof(p, axioms)
    except CheckError as e:
        return _fail(NEGATIVE, "check_failed", str(e), path=list(e.path), rule=e.rule, reason=e.reason)
    if args.pretty:
        print(f"valid: {to_sequent_text(p.conclusion)} (height {p.height}, size {p.size})")
    else:
        _emit({"valid": True, "conclusion": to_sequent_text(p.conclusion), "height": p.height, "size": p.size})
    return OK


def cmd_cutelim(args) -> int:
    given = _axioms(args) if args.axioms else None
    left, ax1 = _load_proof(args.left, given)
    right, ax2 = _load_proof(args.right, given)
    axioms = given or ax1 or ax2 or AxiomSet()
    cut = _formula(args.formula, axioms)
    for name, p in (("left", left), ("right", right)):
        try:
            check_proof(p, axioms)
        except CheckError as e:
            raise InputError(f"{name} proof is not valid: {e}") from None
    monitor = CutMonitor()
    try:
        out = eliminate_cut(left, right, args.at, cut, axioms, monitor)
    except (TransformError, SequentError) as e:
        raise InputError(f"cut does not apply: {e}") from None
    check_proof(out, axioms)
    want = cut_conclusion(right.conclusion, args.at, cut)
    if out.conclusion.shape != want.shape:
        return _fail(NEGATIVE, "conclusion_mismatch", "cut-free proof proves a different sequent")
    if args.pretty:
        print(render(out))
        return OK
    doc = _proof_doc(out, axioms)
    doc["cut"] = {
        "at": args.at,
        "formula": to_text(cut),
        "calls": len(monitor.calls),
        "max_depth": monitor.max_depth,
        "measure_violations": list(monitor.violations),
        "cases": dict(sorted(monitor.cases.items())),
    }
    _emit(doc)
    return OK


def cmd_interpolate(args) -> int:
    axioms = _axioms(args)
    f = _formula(args.formula, axioms)
    if not isinstance(f, Imp):
        raise InputError("interpolate needs an implication A -> B")
    p = prove(flat((), (f,)), axioms, _budget(args))
    if not p:
        return _fail(NEGATIVE, "no_proof", str(p), goal=to_text(f))
    try:
        i, pa, pb = lyndon_interpolant(p, axioms, args.mode, simplify=args.simplify)
    except InterpolationError as e:
        return _fail(NEGATIVE, "no_interpolant", str(e))
    # lyndon_interpolant checks both proofs; check again before reporting
    for q in (pa, pb):
        try:
            check_proof(q, axioms)
        except CheckError as e:
            return _fail(NEGATIVE, "side_proof_rejected", str(e))
    sig = "pass" if signature_ok(i, f.left, f.right) else "fail"
    if args.pretty:
        print(f"interpolant: {to_text(i)}  (signature {sig})")
        print(render(pa))
        print(render(pb))
    else:
        _emit({
            "interpolant": to_text(i),
            "proof_A_to_I": proof_to_json(pa),
            "proof_I_to_B": proof_to_json(pb),
            "signature_check": sig,
        })
    return OK if sig == "pass" else NEGATIVE


def cmd_countermodel(args) -> int:
    axioms = _axioms(args)
    goal = _goal(args.goal, axioms)
    try:
        cm = find_sequent_countermodel(goal, axioms, args.max_worlds)
    except ValueError as e:
        raise InputError(str(e)) from None
    if cm is None:
        if not args.pretty:
            _emit({"countermodel": None, "max_worlds": args.max_worlds})
        else:
            print(f"no countermodel with at most {args.max_worlds} worlds")
        return NEGATIVE
    doc = {
        "countermodel": cm.model.to_json(),
        "world": cm.world,
        "interpretation": dict(sorted(cm.interpretation.items())),
    }
    if args.pretty:
        m = cm.model
        print(f"worlds: {sorted(m.worlds)}")
        print(f"order: {sorted(m.leq)}")
        for x in sorted(m.rel, key=str):
            print(f"R[{x}]: {sorted(m.rel[x])}")
        print(f"valuation: { {w: sorted(v) for w, v in sorted(m.valuation.items())} }")
        print(f"interpretation: {doc['interpretation']}")
    else:
        _emit(doc)
    return OK


def cmd_grammar_reach(args) -> int:
    from .calculus import grammar_of

    axioms = _axioms(args)
    g = grammar_of(axioms)
    rows = [
        {"lhs": str(x), "rhs": [str(c) for c in s]}
        for x, s in sorted(g.productions, key=lambda p: (str(p[0]), [str(c) for c in p[1]]))
    ]
    doc: dict[str, Any] = {"productions": rows}
    if args.sequent:
        seq = _goal(args.sequent, axioms)
        if "=>" not in args.sequent:
            raise InputError("grammar-reach needs a sequent (text containing '=>')")
        pg = propagation_graph(seq)
        sources = [args.source] if args.source else sorted(seq.names)
        for s in sources:
            if s not in seq.names:
                raise InputError(f"no component named {s}")
        if args.char:
            try:
                cs = [Char.parse(args.char)]
            except (ParseError, ValueError) as e:
                raise InputError(str(e)) from None
        else:
            fwd = {c.forward for _, c, _ in seq.tree_edges()} | {c.forward for c in axioms.mentioned()}
            cs = sorted({c for f in fwd for c in (f, f.converse)}, key=str)
        doc["sequent"] = to_sequent_text(seq, names=True)
        doc["reach"] = [
            {"from": s, "char": str(c), "to": sorted(reach(g, pg, s, c))} for s in sources for c in cs
        ]
    if args.pretty:
        print(str(g) or "(no productions)")
        for r in doc.get("reach", []):
            print(f"{r['from']} ~{r['char']}~> {', '.join(r['to']) or '-'}")
    else:
        _emit(doc)
    return OK


# -- argument parsing -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--axioms", metavar="FILE", help="axiom set as JSON {alphabet, serial, paths}")
    common.add_argument("--pretty", action="store_true", help="human-readable text instead of JSON")

    budget = argparse.ArgumentParser(add_help=False)
    budget.add_argument("--max-branch", type=int, default=12, help="non-invertible choices per branch")
    budget.add_argument("--max-prop", type=int, default=1, help="box propagations per (formula, target)")
    budget.add_argument("--max-fresh", type=int, default=8, help="new components per branch")
    budget.add_argument("--time-limit", type=float, default=None, help="seconds")

    ap = argparse.ArgumentParser(prog="nestedigl", description="Nested sequent toolkit for grammar logics.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prove", parents=[common, budget], help="bounded proof search")
    p.add_argument("goal", help="formula, or nested sequent when it contains '=>'")
    p.set_defaults(fn=cmd_prove)

    p = sub.add_parser("check", parents=[common], help="check a proof file")
    p.add_argument("proof", help="proof JSON file, '-' for stdin")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("cutelim", parents=[common], help="eliminate a cut between two proofs")
    p.add_argument("left", help="proof of the context with the cut formula as output")
    p.add_argument("right", help="proof of the sequent with the cut formula in an antecedent")
    p.add_argument("--at", required=True, help="component holding the cut formula")
    p.add_argument("--formula", required=True, help="the cut formula")
    p.set_defaults(fn=cmd_cutelim)

    p = sub.add_parser("interpolate", parents=[common, budget], help="Lyndon interpolant of A -> B")
    p.add_argument("formula")
    p.add_argument("--mode", choices=("join", "meet"), default="meet")
    p.add_argument("--simplify", action="store_true", help="normalize T and bot units, then re-prove")
    p.set_defaults(fn=cmd_interpolate)

    p = sub.add_parser("countermodel", parents=[common], help="search small models")
    p.add_argument("goal", help="formula, or nested sequent when it contains '=>'")
    p.add_argument("--max-worlds", type=int, default=3)
    p.set_defaults(fn=cmd_countermodel)

    p = sub.add_parser("grammar-reach", parents=[common], help="grammar dump and reachability")
    p.add_argument("sequent", nargs="?", help="nested sequent with named components")
    p.add_argument("--from", dest="source", help="source component")
    p.add_argument("--char", help="character x; reach answers L(x)-paths")
    p.set_defaults(fn=cmd_grammar_reach)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return BAD_INPUT if e.code else OK
    try:
        return args.fn(args)
    except InputError as e:
        return _fail(BAD_INPUT, "input", str(e))


if __name__ == "__main__":
    sys.exit(main())
