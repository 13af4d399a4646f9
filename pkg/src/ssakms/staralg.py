"""The dense *-algebra spanned by t_lam u_g t_mu^* and its multiplication."""
from __future__ import annotations

import itertools
from fractions import Fraction
from numbers import Number

from .groupoid import GElem, Groupoid
from .kgraph import Path, deg_join, deg_sub

PRUNE = 1e-12

Triple = tuple[Path, GElem, Path]


class StarAlgebraError(ValueError):
    pass


def _is_zero(c) -> bool:
    if isinstance(c, (int, Fraction)):
        return c == 0
    return abs(c) < PRUNE


def _conj(c):
    return c.conjugate() if isinstance(c, complex) else c


class AlgElement:
    """A finite linear combination of spanning triples."""

    __slots__ = ("alg", "terms")

    def __init__(self, alg: "StarAlgebra", terms=None):
        self.alg = alg
        self.terms: dict[Triple, object] = {}
        for key, c in (terms or {}).items():
            self._add(key, c)

    def _add(self, key: Triple, c) -> None:
        new = self.terms.get(key, 0) + c
        if _is_zero(new):
            self.terms.pop(key, None)
        else:
            self.terms[key] = new

    def copy(self) -> "AlgElement":
        out = AlgElement(self.alg)
        out.terms = dict(self.terms)
        return out

    def __add__(self, other: "AlgElement") -> "AlgElement":
        out = self.copy()
        for key, c in other.terms.items():
            out._add(key, c)
        return out

    def __neg__(self) -> "AlgElement":
        return self.scale(-1)

    def __sub__(self, other: "AlgElement") -> "AlgElement":
        return self + (-other)

    def scale(self, c) -> "AlgElement":
        out = AlgElement(self.alg)
        for key, d in self.terms.items():
            out._add(key, c * d)
        return out

    def __mul__(self, other):
        if isinstance(other, AlgElement):
            return self.alg.multiply(self, other)
        if isinstance(other, Number):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, Number):
            return self.scale(other)
        return NotImplemented

    def adj(self) -> "AlgElement":
        return self.alg.adjoint(self)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, AlgElement):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    def __iter__(self):
        return iter(sorted(self.terms.items(), key=lambda kv: _sort_key(kv[0])))

    def __len__(self) -> int:
        return len(self.terms)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"{c}*{_fmt(key)}" for key, c in self)

    def to_json(self) -> list[dict]:
        out = []
        for (lam, g, mu), c in self:
            if isinstance(c, complex):
                val = [c.real, c.imag]
            elif isinstance(c, Fraction):
                val = str(c)
            else:
                val = c
            out.append({"lambda": str(lam), "g": str(g), "mu": str(mu), "coef": val})
        return out


def _sort_key(key: Triple):
    lam, g, mu = key
    return (lam.degree, lam.word, lam.r, g, mu.degree, mu.word, mu.r)


def _fmt(key: Triple) -> str:
    lam, g, mu = key
    return f"t[{lam}] u[{g}] t*[{mu}]"


class StarAlgebra:
    def __init__(self, groupoid: Groupoid):
        self.G = groupoid
        self.graph = groupoid.graph
        self._min_cache: dict[tuple[Path, Path], list[tuple[Path, Path]]] = {}

    # -- generators -------------------------------------------------------
    def span(self, lam: Path, g: GElem, mu: Path, coef=1) -> AlgElement:
        if g.cod != lam.s or g.dom != mu.s:
            raise StarAlgebraError(f"invalid triple ({lam}, {g}, {mu}): need cod(g) = s(lam) and dom(g) = s(mu)")
        return AlgElement(self, {(lam, self.G.canonical(g), mu): coef})

    def t(self, lam: Path) -> AlgElement:
        return self.span(lam, self.G.unit(lam.s), self.graph.vertex(lam.s))

    def tstar(self, lam: Path) -> AlgElement:
        return self.span(self.graph.vertex(lam.s), self.G.unit(lam.s), lam)

    def u(self, g: GElem) -> AlgElement:
        return self.span(self.graph.vertex(g.cod), g, self.graph.vertex(g.dom))

    def one(self) -> AlgElement:
        out = self.zero()
        for v in self.graph.vertices:
            out = out + self.t(self.graph.vertex(v))
        return out

    def zero(self) -> AlgElement:
        return AlgElement(self)

    # -- products ---------------------------------------------------------------
    def _lambda_min(self, mu: Path, nu: Path):
        key = (mu, nu)
        if key not in self._min_cache:
            self._min_cache[key] = self.graph.lambda_min(mu, nu)
        return self._min_cache[key]

    def multiply_triples(self, a: Triple, b: Triple) -> dict[Triple, int]:
        lam, g, mu = a
        nu, h, xi = b
        G, K = self.G, self.graph
        out: dict[Triple, int] = {}
        if mu.r != nu.r:
            return out
        hinv = G.inverse(h)
        for eta, zeta in self._lambda_min(mu, nu):
            geta, g_eta = G.act_restrict(g, eta)
            hz = G.act(hinv, zeta)
            h_res = G.restrict(h, hz)
            key = (K.compose(lam, geta), G.canonical(G.compose(g_eta, h_res)), K.compose(xi, hz))
            out[key] = out.get(key, 0) + 1
        return out

    def multiply(self, b: AlgElement, c: AlgElement) -> AlgElement:
        out = AlgElement(self)
        for ka, ca in b.terms.items():
            for kb, cb in c.terms.items():
                coef = ca * cb
                for key, n in self.multiply_triples(ka, kb).items():
                    out._add(key, coef * n)
        return out

    def adjoint(self, b: AlgElement) -> AlgElement:
        out = AlgElement(self)
        for (lam, g, mu), c in b.terms.items():
            out._add((mu, self.G.canonical(self.G.inverse(g)), lam), _conj(c))
        return out

    # -- distinguished elements -------------------------------------------
    def defect_projection(self) -> AlgElement:
        """Sum over v of the product over colours of (t_v - sum t_e t_e^*), expanded."""
        K = self.graph
        out = self.zero()
        for v in K.vertices:
            for size in range(K.k + 1):
                for J in itertools.combinations(range(1, K.k + 1), size):
                    p = tuple(int(i in J) for i in range(1, K.k + 1))
                    sign = -1 if size % 2 else 1
                    for mu in K.paths(p, r=v):
                        out = out + self.span(mu, self.G.unit(mu.s), mu, sign)
        return out

    def ck_defect(self, v: str, p) -> AlgElement:
        K = self.graph
        out = self.t(K.vertex(v))
        for lam in K.paths(tuple(p), r=v):
            out = out - self.span(lam, self.G.unit(lam.s), lam)
        return out

    def check_triple(self, key: Triple) -> bool:
        lam, g, mu = key
        return g.cod == lam.s and g.dom == mu.s

    # -- the Cuntz-Krieger quotient ----------------------------------------
    def ck_lift(self, b: AlgElement, D=None) -> AlgElement:
        """Rewrite b so every term has d(mu) = D, using t_v = sum_nu t_nu t_nu^*.

        The result equals b in the Cuntz-Krieger quotient.  D defaults to the
        join of the degrees d(mu) occurring in b.
        """
        K, G = self.graph, self.G
        if D is None:
            D = K.zero
            for _, _, mu in b.terms:
                D = deg_join(D, mu.degree)
        out = AlgElement(self)
        for (lam, g, mu), c in b.terms.items():
            m = deg_sub(tuple(D), mu.degree)
            if min(m) < 0:
                raise StarAlgebraError(f"cannot lift {mu} to degree {tuple(D)}")
            for nu in K.paths(m, r=mu.s):
                gnu, gres = G.act_restrict(g, nu)
                out._add((K.compose(lam, gnu), G.canonical(gres), K.compose(mu, nu)), c)
        return out

    def ck_equal(self, b: AlgElement, c: AlgElement) -> bool:
        """Sufficient test for b = c in the Cuntz-Krieger quotient."""
        return self.ck_lift(b - c).is_zero()
