"""``dcalc`` command-line frontend.

Each subcommand is a thin wrapper: it builds a payload dict, calls one handler,
and prints the result as canonical JSON (sorted keys).  ``dcalc run`` reads the
same payload from a JSON job file (or stdin), so both entry points share one
code path.

Exit codes: 0 ok, 2 parse error, 3 precondition violation, 4 invariant failure
(including a failed check when the job sets ``strict``).
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Callable, Dict, List

from .corpus import gen_corpus, write_corpus
from .dop import DiffOp, IdealSpec, apply, compose, horizontality_failures
from .errors import InvariantError, ParseError, PreconditionError
from .mpd import Envelope, env_change_level, phi_poly
from .poly import QQ, Zp, parse_polynomial
from .strat import (
    IsocSystem,
    StratModule,
    cocycle_failures,
    frobenius_comparison,
    frobenius_pullback,
    horizontal_hom,
    isoc_failures,
    pm_format,
    pm_parse,
)
from .tube import (
    FrobLift,
    TubeCtx,
    env_to_tube,
    find_witness,
    frobenius_tube_witness,
    incl_power_map,
    membership,
    tube_to_env,
    witness_normal_form,
)

EXIT_OK, EXIT_PARSE, EXIT_PRECONDITION, EXIT_INVARIANT = 0, 2, 3, 4


def _poly(text, d=None, ring=QQ):
    return parse_polynomial(str(text), nvars=d, ring=ring)


def _as_list(value) -> List[str]:
    if value is None:
        return []
    if isinstance(value, str):
        return [s for s in (t.strip() for t in value.split(";")) if s]
    return [str(v) for v in value]


def _vars(job, *texts) -> int:
    if job.get("vars"):
        return int(job["vars"])
    d = 1
    for t in texts:
        for s in _as_list(t):
            d = max(d, parse_polynomial(s).nvars)
    return d


def _json_arg(value):
    if isinstance(value, (dict, list)):
        return value
    text = str(value)
    if text.startswith("@"):
        with open(text[1:]) as fh:
            text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None


def _index(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(int(t) for t in text)
    return tuple(int(t) for t in str(text).replace("(", "").replace(")", "").split(",") if t.strip())


# ----------------------------------------------------------------------------
# handlers: payload dict -> result dict


def cmd_phi(job):
    p, m, r = int(job["p"]), int(job.get("m", 0)), int(job["r"])
    phi = phi_poly(r, m, p)
    terms = {f"eta^{{{K[0]}}}": c.format(["X1"]) for K, c in sorted(phi.terms.items())}
    return {"p": p, "m": m, "r": r, "phi": terms}


def cmd_dop_act(job):
    p, m = int(job["p"]), int(job.get("m", 0))
    d = _vars(job, job["f"])
    op = DiffOp.from_json(_json_arg(job["op"]), p, m, d)
    return {"result": apply(op, _poly(job["f"], d)).format()}


def cmd_dop_mul(job):
    p, m = int(job["p"]), int(job.get("m", 0))
    a, b = _json_arg(job["op1"]), _json_arg(job["op2"])
    d = int(job.get("vars") or len(_index(next(iter(a)))) if a else 1)
    P = DiffOp.from_json(a, p, m, d)
    Q = DiffOp.from_json(b, p, m, d)
    return {"product": compose(P, Q).to_json()}


def cmd_bilateral_check(job):
    p, m = int(job["p"]), int(job.get("m", 0))
    gens = _as_list(job.get("gens"))
    d = _vars(job, gens)
    J = IdealSpec([_poly(g, d, Zp(p)) for g in gens], p, d)
    fails = horizontality_failures(J, m)
    _strict(job, fails, "ideal is not horizontal")
    return {
        "horizontal": not fails,
        "failures": [{"generator": g.format(), "K": list(K)} for g, K in fails],
    }


def cmd_tube_member(job):
    p = int(job["p"])
    N = _as_list(job["N"])
    d = _vars(job, N, job["g"])
    ctx = TubeCtx(p, d, tuple(_poly(f, d, Zp(p)) for f in N))
    g = _poly(job["g"], d)
    member = membership(g, ctx)
    out = {"member": member, "shape": ctx.shape()}
    if member:
        out["witness"] = find_witness(g, ctx).format(ctx.witness_names())
    return out


def cmd_tube_frobenius(job):
    p, m, i, s = int(job["p"]), int(job.get("m", 0)), int(job["i"]), int(job.get("s", 1))
    F_text = _as_list(job["F"])
    d = _vars(job, F_text, job["g"])
    F = FrobLift(p, s, tuple(_poly(t, d, Zp(p)) for t in F_text))
    f = _poly(job["f"], d, Zp(p)) if job.get("f") else None
    h, w = frobenius_tube_witness(_poly(job["g"], d, Zp(p)), F, i, m, f)
    return {"h_prime": h.format(), "witness": w.witness.format(w.ctx.witness_names()),
            "image": w.image.format()}


def cmd_tube_compare(job):
    """Both comparison compositions on one envelope basis generator xi^{K}."""
    p, m = int(job["p"]), int(job.get("m", 0))
    K = _index(job["K"])
    d = len(K)
    n = int(job.get("order_bound") or sum(K))
    hi = Envelope(p, m + 1, d, (n,))
    lo = Envelope(p, m, d, (n,))
    e = hi.basis(K)
    via_tube = tube_to_env(env_to_tube(e), lo)
    first = via_tube == env_change_level(e, m)
    t = env_to_tube(lo.basis(K))
    upper = env_to_tube(hi.basis(K))
    back = env_to_tube(tube_to_env(upper, lo))
    incl = incl_power_map(upper, p, back.ctx)
    second = witness_normal_form(back.witness, back.ctx) == witness_normal_form(incl.witness, incl.ctx)
    return {
        "K": list(K),
        "env_to_tube": t.to_json(),
        "change_of_level_ok": first,
        "inclusion_ok": second,
    }


def _strict(job, fails, what):
    # --strict turns a negative verdict into an invariant failure (exit 4)
    if job.get("strict") and fails:
        raise InvariantError(f"{what}: {fails[0]}")


def _module(job, key="module"):
    return StratModule.from_json(_json_arg(job[key]))


def cmd_strat_check(job):
    M = _module(job)
    fails = cocycle_failures(M)
    _strict(job, fails, "cocycle condition fails")
    return {"cocycle": not fails, "failures": [[list(K), list(L), j] for K, L, j in fails if L is not None]}


def _lift(job, M, key="F"):
    s = int(job.get("s", 1))
    return FrobLift(M.p, s, tuple(_poly(t, M.d, Zp(M.p)) for t in _as_list(job[key])))


def cmd_strat_frobenius(job):
    M = _module(job)
    F = _lift(job, M)
    out = {}
    if job.get("F2"):
        N = int(job.get("prec") or 4)
        tau = frobenius_comparison(M, F, _lift(job, M, "F2"), N)
        out["tau"] = [[x.format() for x in row] for row in tau]
        out["prec"] = N
    pb = frobenius_pullback(M, F, int(job["order_bound"]) if job.get("order_bound") else None)
    out["pullback"] = pb.to_json()
    out["cocycle"] = not cocycle_failures(pb, first_only=True)
    return out


def cmd_strat_hom(job):
    M, M2 = _module(job), _module(job, "module2")
    D = int(job.get("degree_bound") or 2)
    basis = horizontal_hom(M, M2, D)
    return {"dimension": len(basis), "basis": [pm_format(b) for b in basis]}


def cmd_isoc_check(job):
    data = _json_arg(job["system"])
    p = int(data["p"])
    d = int(data.get("d", 1))
    J = IdealSpec([_poly(g, d, Zp(p)) for g in data["J"]], p, d)
    modules = {int(k): StratModule.from_json(v) for k, v in data["modules"].items()}
    transitions = {}
    for key, mat in data.get("transitions", {}).items():
        a, b = _index(key)
        transitions[(a, b)] = pm_parse(mat, d)
    fails = isoc_failures(IsocSystem(p, J, modules, transitions))
    _strict(job, fails, "Isoc compatibility fails")
    return {"compatible": not fails, "failures": fails}


def cmd_gen_corpus(job):
    sizes = {
        "p": int(job.get("p") or 2),
        "vars": int(job.get("vars") or 2),
        "degree": int(job["degree_bound"]) if job.get("degree_bound") is not None else 3,
        "order": int(job["order_bound"]) if job.get("order_bound") is not None else 2,
        "count": int(job.get("count") or 10),
        "level": int(job.get("m") or 0),
    }
    records = gen_corpus(int(job.get("seed") or 0), sizes)
    if job.get("out"):
        write_corpus(job["out"], records)
        return {"written": job["out"], "records": len(records)}
    return {"records": records}


DEMO_JOBS = [
    {"command": "phi", "p": 2, "m": 0, "r": 2},
    {"command": "phi", "p": 3, "m": 0, "r": 3},
    {"command": "dop-act", "p": 2, "m": 1, "op": {"2": "1"}, "f": "x^3"},
    {"command": "dop-mul", "p": 2, "m": 0, "op1": {"1": "1"}, "op2": {"0": "x"}},
    {"command": "bilateral-check", "p": 2, "m": 1, "gens": "x^4"},
    {"command": "bilateral-check", "p": 2, "m": 1, "gens": "x^2"},
    {"command": "tube-member", "p": 2, "N": "x^2", "g": "1/2*x^3"},
    {"command": "tube-member", "p": 2, "N": "x^2", "g": "1/2*x"},
    {"command": "tube-frobenius", "p": 2, "m": 0, "i": 1, "s": 1, "g": "x", "F": "x^2+2*x"},
    {"command": "tube-compare", "p": 2, "m": 0, "K": "3"},
    {"command": "strat-check", "module": {"p": 2, "level": 0, "rank": 1, "nmax": 2,
                                          "theta": {"1": [["1"]], "2": [["0"]]}}},
    {"command": "strat-frobenius", "module": {"p": 2, "level": 0, "rank": 1, "nmax": 3,
                                              "theta": {"1": [["1"]], "2": [["1"]], "3": [["1"]]}},
     "F": "x^2", "s": 1},
    {"command": "strat-hom", "module": {"p": 3, "level": 0, "rank": 1, "nmax": 2,
                                        "theta": {"1": [["1"]], "2": [["1"]]}},
     "module2": {"p": 3, "level": 0, "rank": 1, "nmax": 2, "theta": {"1": [["2"]], "2": [["4"]]}},
     "degree_bound": 3},
    {"command": "gen-corpus", "seed": 0, "vars": 2, "degree_bound": 2, "count": 2},
]


def cmd_demo(job):
    results = []
    for demo_job in DEMO_JOBS:
        code, doc = execute(dict(demo_job))
        results.append({"job": demo_job, "exit_code": code, "output": doc})
    return {"jobs": results}


COMMANDS: Dict[str, Callable] = {
    "phi": cmd_phi,
    "dop-act": cmd_dop_act,
    "dop-mul": cmd_dop_mul,
    "bilateral-check": cmd_bilateral_check,
    "tube-member": cmd_tube_member,
    "tube-frobenius": cmd_tube_frobenius,
    "tube-compare": cmd_tube_compare,
    "strat-check": cmd_strat_check,
    "strat-frobenius": cmd_strat_frobenius,
    "strat-hom": cmd_strat_hom,
    "isoc-check": cmd_isoc_check,
    "gen-corpus": cmd_gen_corpus,
    "demo": cmd_demo,
}


def execute(job: dict):
    """Run one job; returns (exit code, output document)."""
    name = job.get("command")
    if name not in COMMANDS:
        return EXIT_PARSE, _error(ParseError(f"unknown command {name!r}"), EXIT_PARSE)
    try:
        return EXIT_OK, COMMANDS[name](job)
    except ParseError as exc:
        return EXIT_PARSE, _error(exc, EXIT_PARSE)
    except PreconditionError as exc:
        return EXIT_PRECONDITION, _error(exc, EXIT_PRECONDITION)
    except InvariantError as exc:
        return EXIT_INVARIANT, _error(exc, EXIT_INVARIANT)
    except (KeyError, ValueError, TypeError) as exc:
        # missing or malformed payload fields
        return EXIT_PARSE, _error(ParseError(f"malformed job: {exc!r}"), EXIT_PARSE)


def _error(exc: Exception, code: int):
    return {"error": {"type": type(exc).__name__, "message": str(exc), "exit_code": code}}


def run(job: dict):
    """Library entry point mirroring the CLI: returns (exit code, JSON text)."""
    code, doc = execute(job)
    return code, dump(doc, job.get("format", "json"))


def dump(doc, fmt: str = "json") -> str:
    if fmt == "text":
        return _text(doc)
    return json.dumps(doc, sort_keys=True)


def _text(doc, indent: int = 0) -> str:
    pad = "  " * indent
    lines = []
    if isinstance(doc, dict):
        for k in sorted(doc):
            v = doc[k]
            if isinstance(v, (dict, list)):
                lines.append(f"{pad}{k}:")
                lines.append(_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {v}")
    elif isinstance(doc, list):
        for v in doc:
            if isinstance(v, (dict, list)):
                lines.append(f"{pad}-")
                lines.append(_text(v, indent + 1))
            else:
                lines.append(f"{pad}- {v}")
    else:
        lines.append(f"{pad}{doc}")
    return "\n".join(lines)


# ----------------------------------------------------------------------------
# argparse


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p", type=int, help="the prime")
    common.add_argument("--prec", type=int, help="precision N for mod p^N results")
    common.add_argument("--m", type=int, default=0, help="level")
    common.add_argument("--vars", type=int, help="number of variables")
    common.add_argument("--degree-bound", dest="degree_bound", type=int)
    common.add_argument("--order-bound", dest="order_bound", type=int)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=["json", "text"], default="json")
    common.add_argument("--strict", action="store_true", default=None,
                        help="exit 4 when a checked identity fails")

    ap = argparse.ArgumentParser(prog="dcalc", description="Level-m differential calculus toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, help_text, *args):
        sp = sub.add_parser(name, parents=[common], help=help_text)
        for a in args:
            sp.add_argument(f"--{a}", dest=a.replace("-", "_"))
        return sp

    add("phi", "phi polynomial with X2^r - X1^r = p phi", "r")
    add("dop-act", "apply an operator {K: coeff} to a polynomial", "op", "f")
    add("dop-mul", "compose two operators", "op1", "op2")
    sp = add("bilateral-check", "is (p, gens) stable under D^(m)?")
    sp.add_argument("--gens", action="append", default=[])
    sp = add("tube-member", "membership in A[N]", "g")
    sp.add_argument("--N", action="append", default=[])
    sp = add("tube-frobenius", "Frobenius tube witness", "g", "f", "i", "s")
    sp.add_argument("--F", action="append", default=[])
    add("tube-compare", "envelope/tube comparison compositions", "K")
    add("strat-check", "cocycle check of a module (JSON or @file)", "module")
    sp = add("strat-frobenius", "Frobenius pullback (and comparison with --F2)", "module", "s")
    sp.add_argument("--F", action="append", default=[])
    sp.add_argument("--F2", action="append", default=[])
    add("strat-hom", "horizontal homomorphisms", "module", "module2")
    add("isoc-check", "compatibility of an Isoc system (JSON or @file)", "system")
    add("gen-corpus", "write a seeded corpus (JSON-lines)", "out", "count")
    add("demo", "run the fixed demo job set")
    sp = sub.add_parser("run", help="run a JSON job from a file or stdin ('-')")
    sp.add_argument("job", nargs="?", default="-")
    sp.add_argument("--format", choices=["json", "text"], default=None)
    sp.add_argument("--strict", action="store_true", default=None)
    return ap


def _flatten(job: dict) -> dict:
    # repeated flags arrive as lists; single strings may hold ';'-separated items
    out = {}
    for k, v in job.items():
        if isinstance(v, list):
            items = []
            for x in v:
                items.extend(_as_list(x))
            out[k] = items
        else:
            out[k] = v
    return out


def main(argv=None) -> int:
    ap = _parser()
    args = ap.parse_args(argv)
    if args.command == "run":
        try:
            text = sys.stdin.read() if args.job == "-" else open(args.job).read()
            job = json.loads(text)
            if not isinstance(job, dict):
                raise ParseError("a job must be a JSON object")
        except (OSError, json.JSONDecodeError, ParseError) as exc:
            print(dump(_error(ParseError(str(exc)), EXIT_PARSE)))
            return EXIT_PARSE
        if args.format:
            job["format"] = args.format
        if args.strict:
            job["strict"] = True
    else:
        job = _flatten({k: v for k, v in vars(args).items() if v is not None})
    code, text = run(job)
    print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
