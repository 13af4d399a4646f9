"""Periodicity of the action: witness checking, triviality certificates, theta and h."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

from .groupoid import GElem, Groupoid
from .kgraph import Degree, Path, deg_add, deg_join, deg_meet, deg_sub

TRIVIAL = "Trivial"
NONTRIVIAL = "NonTrivialWitnesses"
INCONCLUSIVE = "Inconclusive"


class PeriodicityError(ValueError):
    pass


@dataclass(frozen=True)
class PeriodicityWitness:
    g: GElem
    p: Degree
    q: Degree
    verified_depth: int = 0

    @property
    def n(self) -> Degree:
        return deg_sub(self.p, self.q)


@dataclass
class WitnessCheck:
    consistent: bool
    depth: int
    counterexample: Path | None = None

    def __str__(self) -> str:
        if self.consistent:
            return f"ConsistentToDepth({self.depth})"
        return f"Refuted({self.counterexample})"


@dataclass
class PerCertificate:
    verdict: str
    witnesses: list[PeriodicityWitness] = field(default_factory=list)
    n_bound: int = 20
    tol: float = 1e-9
    isotropic: bool = False
    candidates: list[tuple[int, ...]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "isotropic": self.isotropic,
            "n_bound": self.n_bound,
            "tol": self.tol,
            "candidates": [list(c) for c in self.candidates],
            "witnesses": [{"g": str(w.g), "p": list(w.p), "q": list(w.q), "depth": w.verified_depth} for w in self.witnesses],
            "notes": list(self.notes),
        }


def _primitive(n) -> tuple[int, ...]:
    """The generator of the ray through n, with its first nonzero entry positive."""
    g = math.gcd(*n)
    n = tuple(a // g for a in n)
    lead = next(a for a in n if a)
    return n if lead > 0 else tuple(-a for a in n)


class Periodicity:
    def __init__(self, groupoid: Groupoid, spectral=None):
        self.G = groupoid
        self.graph = groupoid.graph
        self.spectral = spectral

    # -- witnesses ------------------------------------------------------------
    def check_witness(self, g: GElem, p, q, depth: int = 2) -> WitnessCheck:
        """Compare x(p, p+m) with (g.x)(q, q+m) on finite x, for m = jN, j <= depth."""
        K = self.graph
        p, q = tuple(p), tuple(q)
        top = deg_join(p, q)
        for j in range(depth + 1):
            m = tuple(j for _ in range(K.k))
            for x in K.paths(deg_add(top, m), r=g.dom):
                gx = self.G.act(g, x)
                if K.segment(x, p, deg_add(p, m)) != K.segment(gx, q, deg_add(q, m)):
                    return WitnessCheck(False, j, x)
        return WitnessCheck(True, depth)

    def _vertex_witness(self, w: PeriodicityWitness, v: str) -> GElem:
        """An element g_v with dom v that witnesses the same (p, q)."""
        lam = self.graph.path_to(v, w.g.dom)
        return self.G.canonical(self.G.restrict(w.g, lam))

    def witness_at(self, w: PeriodicityWitness, P, Q, u: str) -> PeriodicityWitness:
        """A witness for (P, Q) with domain u, given one for (p, q) with P - Q = p - q."""
        P, Q = tuple(P), tuple(Q)
        if deg_sub(P, Q) != w.n:
            raise PeriodicityError(f"{P} - {Q} differs from {w.p} - {w.q}")
        if (P, Q) == (w.p, w.q) and u == w.g.dom:
            return w
        K = self.graph
        etas = K.paths(w.p, s=u)
        if not etas:
            raise PeriodicityError(f"no path of degree {w.p} with source {u}")
        eta = etas[0]
        g_r = self._vertex_witness(w, eta.r)
        h = self.G.canonical(self.G.restrict(g_r, eta))
        return PeriodicityWitness(h, P, Q, w.verified_depth)

    def negate(self, w: PeriodicityWitness) -> PeriodicityWitness:
        return PeriodicityWitness(self.G.canonical(self.G.inverse(w.g)), w.q, w.p, w.verified_depth)

    def add(self, w1: PeriodicityWitness, w2: PeriodicityWitness) -> PeriodicityWitness:
        w2c = self.witness_at(w2, w2.p, w2.q, w1.g.cod)
        h = self.G.canonical(self.G.compose(w2c.g, w1.g))
        return PeriodicityWitness(h, deg_add(w1.p, w2.p), deg_add(w1.q, w2.q),
                                  min(w1.verified_depth, w2.verified_depth))

    def zero_witness(self, v: str | None = None) -> PeriodicityWitness:
        v = self.graph.vertices[0] if v is None else v
        z = self.graph.zero
        return PeriodicityWitness(self.G.unit(v), z, z)

    # -- theta and h ------------------------------------------------------------
    def theta_h(self, w: PeriodicityWitness, mu: Path, verify_depth: int = 2) -> tuple[Path, GElem]:
        K, G = self.graph, self.G
        p, q = w.p, w.q
        if mu.degree != p:
            raise PeriodicityError(f"d({mu}) = {mu.degree} but the witness has p = {p}")
        etas = K.paths(q, s=mu.r)
        if not etas:
            raise PeriodicityError(f"no path of degree {q} with source {mu.r}")
        eta = etas[0]
        g = self._vertex_witness(w, eta.r)
        whole = K.compose(eta, mu)
        nu = K.segment(whole, p, deg_add(p, q))
        g_eta_inv = G.inverse(G.restrict(g, eta))
        theta, res = G.act_restrict(g_eta_inv, nu)
        h = G.canonical(G.inverse(res))
        if verify_depth:
            self._verify_theta(mu, theta, h, verify_depth)
        return theta, h

    def _verify_theta(self, mu: Path, theta: Path, h: GElem, depth: int) -> None:
        K, G = self.graph, self.G
        for j in range(1, depth + 1):
            D = tuple(j for _ in range(K.k))
            cut = deg_add(deg_meet(mu.degree, theta.degree), D)
            for x in K.paths(D, r=h.dom):
                left = K.compose(mu, G.act(h, x))
                right = K.compose(theta, x)
                if K.factorize(left, cut)[0] != K.factorize(right, cut)[0]:
                    raise PeriodicityError(f"witness refuted while building theta for {mu} (test path {x})")

    # -- certificates -----------------------------------------------------------
    def per_trivial_certificate(self, n_bound: int = 20, tol: float = 1e-9, depth: int = 2,
                                search_bound: int = 200, path_budget: float = 2e5) -> PerCertificate:
        if self.spectral is None:
            raise PeriodicityError("spectral data required")
        aut = self.G.aut
        non_iso = [a for a in aut.generators if aut.states[a].r != aut.states[a].s]
        cert = PerCertificate(INCONCLUSIVE, n_bound=n_bound, tol=tol, isotropic=not non_iso)
        if non_iso:
            cert.notes.append("non-isotropic states: " + ", ".join(non_iso))
            return cert
        cert.notes.append("every state is isotropic, hence so is every groupoid element")
        logs = [math.log(r) for r in self.spectral.rho]
        k = self.graph.k
        for n in itertools.product(range(-n_bound, n_bound + 1), repeat=k):
            if any(n) and abs(sum(a * b for a, b in zip(n, logs))) < tol:
                cert.candidates.append(n)
        if not cert.candidates:
            cert.verdict = TRIVIAL
            return cert
        # Per is a group, so a witness for a primitive direction covers its
        # multiples; search primitive directions only, smallest first
        prim = sorted({_primitive(n) for n in cert.candidates}, key=lambda n: (sum(map(abs, n)), n))
        for n in prim:
            if self._witness_cost(n, depth) > path_budget:
                cert.notes.append(f"candidate {n} skipped: witness check exceeds {path_budget} paths")
                continue
            w = self.search_witness(n, depth, search_bound)
            if w is not None:
                cert.witnesses.append(w)
        if cert.witnesses:
            cert.verdict = NONTRIVIAL
            cert.notes.append("witnesses are consistent to the stated depth, not proven")
        return cert

    def _witness_cost(self, n, depth: int) -> float:
        p = tuple(max(a, 0) for a in n)
        q = tuple(max(-a, 0) for a in n)
        top = deg_add(deg_join(p, q), (depth,) * self.graph.k)
        return len(self.graph.vertices) * self.spectral.rho_pow(top)

    def search_witness(self, n, depth: int = 2, bound: int = 200) -> PeriodicityWitness | None:
        p = tuple(max(a, 0) for a in n)
        q = tuple(max(-a, 0) for a in n)
        cands = [self.G.unit(v) for v in self.graph.vertices]
        for a in self.G.aut.generators:
            try:
                cands.extend(self.G.restriction_closure(self.G.gen(a), bound))
            except Exception:
                pass
        tried = set()
        for g in cands:
            if g in tried:
                continue
            tried.add(g)
            if self.check_witness(g, p, q, depth).consistent:
                return PeriodicityWitness(g, p, q, depth)
        return None

    def is_g_aperiodic(self, **kw):
        cert = self.per_trivial_certificate(**kw)
        if cert.verdict == TRIVIAL:
            return True
        if cert.verdict == NONTRIVIAL:
            return False
        return INCONCLUSIVE


class PerData:
    """User-supplied generators of the periodicity group, one witness each.

    Membership of n is decided inside the lattice spanned by the generators,
    searching integer coefficients up to ``coef_bound``.
    """

    def __init__(self, per: Periodicity, generators, character=None, coef_bound: int = 6):
        self.per = per
        self.generators: list[PeriodicityWitness] = list(generators)
        self.character = list(character) if character is not None else [1] * len(self.generators)
        if len(self.character) != len(self.generators):
            raise PeriodicityError("one character value per generator is required")
        self.coef_bound = coef_bound
        self._cache: dict[Degree, tuple[int, ...] | None] = {}

    def express(self, n) -> tuple[int, ...] | None:
        n = tuple(n)
        if n in self._cache:
            return self._cache[n]
        found = None
        if not any(n):
            found = (0,) * len(self.generators)
        else:
            rng = range(-self.coef_bound, self.coef_bound + 1)
            for coeffs in sorted(itertools.product(rng, repeat=len(self.generators)), key=lambda c: sum(map(abs, c))):
                tot = [0] * len(n)
                for c, w in zip(coeffs, self.generators):
                    tot = [t + c * x for t, x in zip(tot, w.n)]
                if tuple(tot) == n:
                    found = coeffs
                    break
        self._cache[n] = found
        return found

    def contains(self, n) -> bool:
        return self.express(n) is not None

    def chi(self, n):
        coeffs = self.express(n)
        if coeffs is None:
            raise PeriodicityError(f"{n} is not in the periodicity lattice")
        val = 1
        for c, z in zip(coeffs, self.character):
            val = val * (z ** c if c >= 0 else (1 / z) ** (-c))
        return val

    def witness_for(self, n) -> PeriodicityWitness:
        coeffs = self.express(n)
        if coeffs is None:
            raise PeriodicityError(f"{n} is not in the periodicity lattice")
        acc = self.per.zero_witness()
        for c, w in zip(coeffs, self.generators):
            step = w if c > 0 else self.per.negate(w)
            for _ in range(abs(c)):
                acc = self.per.add(acc, step)
        return acc

    def witness_pq(self, p, q) -> PeriodicityWitness:
        w = self.witness_for(deg_sub(tuple(p), tuple(q)))
        return self.per.witness_at(w, p, q, w.g.dom)
