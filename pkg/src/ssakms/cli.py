"""Command-line front end.

Exit codes: 0 ok, 1 validation failure, 2 precondition failure or a closure
that is not finite, 3 inconclusive periodicity certificate.
"""
from __future__ import annotations

import argparse
import json
import math
import random
import sys

from . import document
from .automaton import AutomatonError
from .groupoid import GroupoidError, NotFiniteState
from .kgraph import KGraphError, Path
from .kms import KMS1State, KMSError, ToeplitzState, TraceSpec, c_g, check_kms_condition
from .periodicity import INCONCLUSIVE, Periodicity
from .spectral import SpectralError, compute_spectral
from .staralg import StarAlgebra, StarAlgebraError

OK, INVALID, PRECONDITION, INCONCLUSIVE_EXIT = 0, 1, 2, 3


class CLIError(Exception):
    def __init__(self, message: str, code: int = PRECONDITION):
        super().__init__(message)
        self.code = code


# -- text helpers -----------------------------------------------------------

def parse_degree(text: str, k: int) -> tuple[int, ...]:
    parts = [p for p in text.replace(",", " ").split() if p]
    try:
        deg = tuple(int(p) for p in parts)
    except ValueError:
        raise CLIError(f"bad degree {text!r}") from None
    if len(deg) != k or min(deg) < 0:
        raise CLIError(f"degree {text!r} needs {k} non-negative entries")
    return deg


def _split_word(token: str, edges) -> list[str] | None:
    """Split a run of concatenated edge ids, preferring longer ids first."""
    if not token:
        return []
    for n in range(len(token), 0, -1):
        head = token[:n]
        if head in edges:
            rest = _split_word(token[n:], edges)
            if rest is not None:
                return [head] + rest
    return None


def parse_path(graph, text: str) -> Path:
    text = text.strip()
    if text in graph.vertices:
        return graph.vertex(text)
    word: list[str] = []
    for tok in text.replace(",", " ").replace(".", " ").split():
        part = _split_word(tok, graph.edges)
        if part is None:
            raise CLIError(f"cannot read {tok!r} as a vertex or a string of edge ids")
        word.extend(part)
    if not word:
        raise CLIError("empty path")
    return graph.normalize(word)


def parse_triple(G, text: str):
    bits = text.split(";")
    if len(bits) != 3:
        raise CLIError(f"a triple is 'lambda;g;mu', got {text!r}")
    lam = parse_path(G.graph, bits[0])
    mu = parse_path(G.graph, bits[2])
    return lam, G.parse(bits[1]), mu


def _num(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    return float(x)


def emit(args, payload: dict, lines: list[str]) -> None:
    if args.json:
        sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")
    else:
        sys.stdout.write("\n".join(lines) + "\n")


# -- loading ------------------------------------------------------------------

def load(args) -> document.ActionDocument:
    if args.example and args.file:
        raise CLIError("give either a file or --example, not both")
    if args.example:
        return document.load_fixture(args.example)
    if not args.file:
        raise CLIError("no input: give a file or --example")
    return document.parse(args.file)


def _context(args):
    doc = load(args)
    return doc, doc.groupoid(args.bound)


# -- subcommands --------------------------------------------------------------

def cmd_validate(args) -> int:
    doc = load(args)
    g_rep = doc.graph.validate()
    a_rep = doc.automaton.validate()
    checks = doc.graph.structural_checks()
    ok = g_rep.ok and a_rep.ok and all(checks.values())
    payload = {"name": doc.name, "ok": ok, "graph": g_rep.to_dict(), "automaton": a_rep.to_dict(),
               "structure": checks}
    lines = [f"{doc.name}: {'valid' if ok else 'INVALID'}"]
    for label, rep in (("graph", g_rep), ("automaton", a_rep)):
        for cond, items in sorted(rep.failures.items()):
            for item in items:
                lines.append(f"  {label} {cond}: {item}")
    for name, val in sorted(checks.items()):
        lines.append(f"  {name}: {'yes' if val else 'no'}")
    emit(args, payload, lines)
    return OK if ok else INVALID


def cmd_paths(args) -> int:
    doc = load(args)
    K = doc.graph
    p = parse_degree(args.degree, K.k)
    found = K.paths(p, r=args.range, s=args.source)
    payload = {"degree": list(p), "count": len(found),
               "paths": [{"path": str(x), "word": list(x.word), "r": x.r, "s": x.s} for x in found]}
    lines = [f"{len(found)} paths of degree {p}"] + [f"  {x}  ({x.r} <- {x.s})" for x in found]
    emit(args, payload, lines)
    return OK


def cmd_act(args) -> int:
    doc, G = _context(args)
    g = G.parse(args.element)
    lam = parse_path(doc.graph, args.path)
    out, res = G.act_restrict(g, lam)
    res = G.canonical(res)
    payload = {"element": str(g), "path": str(lam), "image": str(out), "restriction": str(res)}
    emit(args, payload, [f"{g} . {lam} = {out}", f"{g} | {lam} = {res}"])
    return OK


def cmd_closure(args) -> int:
    doc, G = _context(args)
    if args.element:
        g = G.parse(args.element)
        what = f"restriction closure of {g}"
        els = G.restriction_closure(g, args.bound)
    else:
        what = "groupoid closure"
        els = G.groupoid_closure(bound=args.bound)
    payload = {"what": what, "size": len(els),
               "elements": [{"g": str(x), "dom": x.dom, "cod": x.cod} for x in els]}
    lines = [f"{what}: {len(els)} elements"] + [f"  {x}  ({x.dom} -> {x.cod})" for x in els]
    emit(args, payload, lines)
    return OK


def cmd_spectral(args) -> int:
    doc = load(args)
    spec = compute_spectral(doc.graph)
    payload = spec.to_dict()
    lines = ["colour  rho"] + [f"{i:>6}  {r:.10f}" for i, r in enumerate(spec.rho, start=1)]
    lines += ["vertex  x"] + [f"{v:>6}  {spec.x_at(v):.10f}" for v in doc.graph.vertices]
    emit(args, payload, lines)
    return OK


def cmd_periodicity(args) -> int:
    doc, G = _context(args)
    spec = compute_spectral(doc.graph)
    cert = Periodicity(G, spec).per_trivial_certificate(n_bound=args.n_bound, tol=args.tol)
    lines = [f"verdict: {cert.verdict}"] + [f"  {n}" for n in cert.notes]
    for w in cert.witnesses:
        lines.append(f"  witness {w.g} p={w.p} q={w.q} (depth {w.verified_depth})")
    emit(args, cert.to_dict(), lines)
    return INCONCLUSIVE_EXIT if cert.verdict == INCONCLUSIVE else OK


def cmd_cg(args) -> int:
    doc, G = _context(args)
    spec = compute_spectral(doc.graph)
    g = G.parse(args.element)
    res = c_g(G, spec, g, args.tol)
    payload = {"element": str(g), **res.to_dict()}
    emit(args, payload, [f"c_{g} = {res.value:.12g}  (error <= {res.error_bound:.3g}, {res.iterations} blocks)"])
    return OK


def cmd_measure(args) -> int:
    doc, G = _context(args)
    spec = compute_spectral(doc.graph)
    state = KMS1State(G, spec)
    lam, g, mu = parse_triple(G, args.triple)
    val = state.measure(lam, g, mu)
    payload = {"triple": args.triple, "value": val, "error_bound": _triple_bound(state, lam, g, mu), "iterations": None}
    emit(args, payload, [f"M(Z({lam}, {g}, {mu})) = {val:.12g}"])
    return OK


def _triple_bound(state: KMS1State, lam, g, mu) -> float:
    if lam != mu or _is_unit(state, g, mu):
        return 0.0
    return state.c(g, state.G.unit(mu.s)).error_bound / state.spec.rho_pow(mu.degree)


def _is_unit(state, g, mu) -> bool:
    return state.G.canonical(g) == state.G.canonical(state.G.unit(mu.s))


def _read_trace(G, path: str | None, doc) -> TraceSpec:
    if path is None:
        table = doc.trace
    else:
        with open(path) as fh:
            table = json.load(fh)
    if table is None:
        return TraceSpec.trivial(G)
    try:
        return TraceSpec.from_table(G, {k: float(v) for k, v in table.items()})
    except (GroupoidError, TypeError, ValueError) as exc:
        raise CLIError(f"bad trace table: {exc}", INVALID) from None


def cmd_kms(args) -> int:
    doc, G = _context(args)
    spec = compute_spectral(doc.graph)
    alg = StarAlgebra(G)
    if args.mode == "toeplitz":
        dyn = doc.dynamics or {}
        beta = args.beta if args.beta is not None else dyn.get("beta")
        if args.r is not None:
            r = [float(x) for x in args.r.replace(",", " ").split()]
        elif args.exp_r is not None:
            r = [math.log(float(x)) for x in args.exp_r.replace(",", " ").split()]
            beta = 1.0 if beta is None else beta
        else:
            r = dyn.get("r")
        if beta is None or r is None:
            raise CLIError("toeplitz needs --beta and --r (or --exp-r)")
        trace = _read_trace(G, args.trace, doc)
        problems = trace.check(G)
        if problems:
            raise CLIError("trace rejected: " + "; ".join(problems), INVALID)
        state = ToeplitzState(G, spec, beta, r, trace, tol=args.tol)
        Z = state.partition
        payload = {"partition": Z.to_dict()}
        lines = [f"Z = {Z.value:.12g}  (error <= {Z.error_bound:.3g}, truncation {Z.truncation})"]
        if args.triple:
            lam, g, mu = parse_triple(G, args.triple)
            val = state.triple(lam, g, mu)
            err = state.error_bound(lam, g, mu)
            it = state.inner(g).truncation if lam == mu and g.dom == g.cod else 0
            payload.update({"value": _num(val), "error_bound": err, "iterations": it})
            lines.append(f"phi({args.triple}) = {val:.12g}  (error <= {err:.3g})")
        emit(args, payload, lines)
        return OK
    if not args.triple:
        raise CLIError("kms op needs --triple")
    state = KMS1State(G, spec, tol=args.tol)
    lam, g, mu = parse_triple(G, args.triple)
    val = state.triple(lam, g, mu)
    payload = {"value": _num(val), "error_bound": _triple_bound(state, lam, g, mu),
               "iterations": None if lam != mu or _is_unit(state, g, mu) else state.c(g, G.unit(mu.s)).iterations}
    emit(args, payload, [f"{val:.9f}"])
    return OK


def cmd_relations(args) -> int:
    from .fockrep import FockError, TruncatedRep

    doc, G = _context(args)
    try:
        rep = TruncatedRep(G, args.level, cap=args.cap)
    except FockError as exc:
        raise CLIError(str(exc)) from None
    report = rep.relation_report()
    payload = {"basis": rep.size, "elements": len(rep.elements), **report.to_dict()}
    lines = [f"level {args.level}, basis {rep.size}, {len(rep.elements)} groupoid elements"]
    for rel in report.residuals:
        tag = "ok" if report.residuals[rel] == 0 else f"FAIL at {report.worst[rel]}"
        lines.append(f"  {rel:<5} checks {report.checked[rel]:>6}  max deviation {report.residuals[rel]}  {tag}")
    emit(args, payload, lines)
    return OK if report.ok else INVALID


def random_span(alg: StarAlgebra, rng: random.Random, elements, max_deg: int = 2):
    """A random spanning element with |d(lambda)|, |d(mu)| <= max_deg."""
    K, G = alg.graph, alg.G
    degs = [p for p in K.degrees_upto((max_deg,) * K.k) if sum(p) <= max_deg]
    while True:
        g = rng.choice(elements)
        lams = K.paths(rng.choice(degs), s=g.cod)
        mus = K.paths(rng.choice(degs), s=g.dom)
        if lams and mus:
            return alg.span(rng.choice(lams), g, rng.choice(mus))


def aligned_pair(alg: StarAlgebra, rng: random.Random, elements, max_deg: int = 2):
    """Spanning elements b, c whose product lands on the diagonal.

    With b = t_lam u_g t_mu^*, take c = t_{mu eta} u_h t_{lam (g.eta)}^* where
    h = (g|_eta)^-1 k for an isotropic k, so that bc = t_x u_k t_x^*.
    """
    K, G = alg.graph, alg.G
    while True:
        b = random_span(alg, rng, elements, max_deg)
        (lam, g, mu), = b.terms
        room = max_deg - max(sum(lam.degree), sum(mu.degree))
        degs = [p for p in K.degrees_upto((room,) * K.k) if sum(p) <= room]
        etas = K.paths(rng.choice(degs), r=mu.s)
        if not etas:
            continue
        eta = rng.choice(etas)
        geta, gres = G.act_restrict(g, eta)
        iso = [k for k in elements if k.dom == k.cod == geta.s] or [G.unit(geta.s)]
        h = G.compose(G.inverse(gres), rng.choice(iso))
        c = alg.span(K.compose(mu, eta), h, K.compose(lam, geta))
        return (b, c) if rng.random() < 0.5 else (c, b)


def kms_pairs(alg: StarAlgebra, rng: random.Random, elements, n: int, max_deg: int = 2):
    """n pairs, alternating between independent and aligned samples."""
    for i in range(n):
        if i % 2:
            yield aligned_pair(alg, rng, elements, max_deg)
        else:
            yield random_span(alg, rng, elements, max_deg), random_span(alg, rng, elements, max_deg)


def sample_elements(G, bound: int = 60):
    try:
        return G.groupoid_closure(bound=bound)
    except NotFiniteState:
        pass
    out = []
    for a in G.aut.generators:
        for x in (G.gen(a), G.inverse(G.gen(a))):
            for y in G.restriction_closure(x):
                if y not in out:
                    out.append(y)
    for v in G.graph.vertices:
        u = G.canonical(G.unit(v))
        if u not in out:
            out.append(u)
    return out


def cmd_check_kms(args) -> int:
    doc, G = _context(args)
    spec = compute_spectral(doc.graph)
    state = KMS1State(G, spec, tol=args.tol)
    alg = StarAlgebra(G)
    rng = random.Random(args.seed)
    els = sample_elements(G)
    worst = 0.0
    nonzero = 0
    for b, c in kms_pairs(alg, rng, els, args.samples):
        worst = max(worst, check_kms_condition(state, alg, b, c))
        nonzero += abs(state(alg.multiply(b, c))) > 1e-12
    ok = worst < args.threshold
    payload = {"samples": args.samples, "seed": args.seed, "max_residual": worst, "nonzero": nonzero,
               "threshold": args.threshold, "ok": ok}
    emit(args, payload, [f"{args.samples} pairs ({nonzero} with phi(bc) != 0), max residual {worst:.3g} "
                         f"({'ok' if ok else 'FAIL'})"])
    return OK if ok else INVALID


# -- wiring -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("file", nargs="?", help="action document (JSON)")
    common.add_argument("--example", choices=sorted(document.FIXTURES), help="use a bundled fixture")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--bound", type=int, default=None, help="closure bound")
    common.add_argument("--tol", type=float, default=1e-13)

    ap = argparse.ArgumentParser(prog="ssakms", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", parents=[common], help="check squares, associativity and automaton axioms")
    p = sub.add_parser("paths", parents=[common], help="list paths of a degree")
    p.add_argument("--degree", required=True)
    p.add_argument("--range", default=None)
    p.add_argument("--source", default=None)
    p = sub.add_parser("act", parents=[common], help="act on a path and restrict")
    p.add_argument("--element", required=True)
    p.add_argument("--path", required=True)
    p = sub.add_parser("closure", parents=[common], help="restriction or groupoid closure")
    p.add_argument("--element", default=None)
    sub.add_parser("spectral", parents=[common], help="spectral radii and Perron-Frobenius vector")
    p = sub.add_parser("periodicity", parents=[common], help="certificate for the periodicity group")
    p.add_argument("--n-bound", type=int, default=20)
    p.set_defaults(tol=1e-9)
    p = sub.add_parser("cg", parents=[common], help="the constant c_g for isotropy g")
    p.add_argument("--element", required=True)
    p = sub.add_parser("measure", parents=[common], help="Perron-Frobenius measure of Z(lambda, g, mu)")
    p.add_argument("--triple", required=True)
    kms = sub.add_parser("kms", help="evaluate a KMS state").add_subparsers(dest="mode", required=True)
    p = kms.add_parser("toeplitz", parents=[common], help="KMS_beta state from a trace, large beta")
    p.add_argument("--triple", default=None, help="'lambda;g;mu'")
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--r", default=None, help="comma separated r")
    p.add_argument("--exp-r", default=None, help="comma separated e^(beta r) at beta = 1")
    p.add_argument("--trace", default=None, help="JSON table element -> tau value")
    p = kms.add_parser("op", parents=[common], help="the KMS_1 state for the preferred dynamics")
    p.add_argument("--triple", default=None, help="'lambda;g;mu'")
    p = sub.add_parser("relations", parents=[common], help="check generator relations on a truncation")
    p.add_argument("--level", type=int, default=2)
    p.add_argument("--cap", type=int, default=5000)
    p = sub.add_parser("check-kms", parents=[common], help="sample the KMS condition")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=1e-8)
    return ap


COMMANDS = {
    "validate": cmd_validate, "paths": cmd_paths, "act": cmd_act, "closure": cmd_closure,
    "spectral": cmd_spectral, "periodicity": cmd_periodicity, "cg": cmd_cg, "measure": cmd_measure,
    "kms": cmd_kms, "relations": cmd_relations, "check-kms": cmd_check_kms,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except document.DocumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INVALID
    except (KGraphError, AutomatonError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return INVALID
    except NotFiniteState as exc:
        print(f"not finite: {exc}", file=sys.stderr)
        return PRECONDITION
    except (KMSError, SpectralError, GroupoidError, StarAlgebraError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
