"""Equilibrium-state numerics: c-constants, measures of Z-sets, Toeplitz and KMS_1 states."""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .groupoid import GElem, Groupoid
from .kgraph import Path, deg_sub
from .periodicity import TRIVIAL, PerData, Periodicity
from .spectral import SpectralData
from .staralg import AlgElement, StarAlgebra


class KMSError(ValueError):
    pass


class NoKMS1State(KMSError):
    """x is not invariant under the groupoid, so no KMS_1 state exists."""

    def __init__(self, g: GElem, xd: float, xc: float):
        super().__init__(f"x(dom {g}) = {xd:.12g} differs from x(cod {g}) = {xc:.12g}; no KMS_1 state exists")
        self.element = g


@dataclass
class CResult:
    value: float
    error_bound: float
    iterations: int
    history: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"value": self.value, "error_bound": self.error_bound, "iterations": self.iterations}


# -- pair machine ------------------------------------------------------------

class PairMachine:
    """Pairs (g', h') of restrictions along paths where g' and h' agree on edges.

    A pair whose components are equal is absorbed: every extension then stays
    in the fixed set, so it carries its whole cylinder.
    """

    def __init__(self, groupoid: Groupoid):
        self.G = groupoid
        self.graph = groupoid.graph
        self._moves: dict[tuple[GElem, GElem, int], list[tuple[str, GElem, GElem]]] = {}

    def moves(self, g: GElem, h: GElem, colour: int):
        key = (g, h, colour)
        out = self._moves.get(key)
        if out is None:
            out = []
            for e in self.graph.edges_into(g.dom, colour):
                ge, rg = self.G.step(g, e)
                he, rh = self.G.step(h, e)
                if ge == he:
                    out.append((self.graph.edges[e].s, self.G.canonical(rg), self.G.canonical(rh)))
            self._moves[key] = out
        return out

    def start(self, g: GElem, h: GElem) -> tuple[GElem, GElem]:
        if (g.dom, g.cod) != (h.dom, h.cod):
            raise KMSError(f"{g} and {h} must share domain and codomain")
        g, h = self.G.canonical(g), self.G.canonical(h)
        if g == h:
            raise KMSError(f"{g} equals {h}; the constant is only defined for distinct elements")
        return g, h

    def block(self, live: dict, absorbed: dict, weights=None):
        """Advance by one degree-N block: colour 1, then 2, ..., then k."""
        K = self.graph
        for c in range(1, K.k + 1):
            w = 1 if weights is None else weights[c - 1]
            nlive: dict = defaultdict(int)
            nabs: dict = defaultdict(int)
            for u, cnt in absorbed.items():
                for e in K.edges_into(u, c):
                    nabs[K.edges[e].s] += cnt * w
            for (g, h), cnt in live.items():
                for s, rg, rh in self.moves(g, h, c):
                    if rg == rh:
                        nabs[s] += cnt * w
                    else:
                        nlive[(rg, rh)] += cnt * w
            live, absorbed = dict(nlive), dict(nabs)
        return live, absorbed


def f_counts(groupoid: Groupoid, g: GElem, h: GElem, l: int) -> dict[str, int]:
    """|F^l(v)| for every vertex v, as exact integers."""
    pm = PairMachine(groupoid)
    g, h = pm.start(g, h)
    live: dict = {(g, h): 1}
    absorbed: dict = {}
    for _ in range(l):
        live, absorbed = pm.block(live, absorbed)
    return {v: int(absorbed.get(v, 0)) for v in groupoid.graph.vertices}


def c_rel(groupoid: Groupoid, spec: SpectralData, g: GElem, h: GElem, tol: float = 1e-13,
          max_blocks: int = 100_000) -> CResult:
    """lim_l rho^(-lN) sum_v |F^l(v)| x(v), with a certified remaining-mass bound.

    The sequence is increasing and the mass still carried by live pairs bounds
    what it can still gain.
    """
    pm = PairMachine(groupoid)
    g, h = pm.start(g, h)
    weights = [1.0 / float(r) for r in spec.rho]
    xv = spec.xv
    live: dict = {(g, h): 1.0}
    absorbed: dict = {}
    history: list[float] = []
    it = 0
    remaining = xv[g.dom]
    while it < max_blocks:
        it += 1
        live, absorbed = pm.block(live, absorbed, weights)
        value = sum(w * xv[u] for u, w in absorbed.items())
        remaining = sum(w * xv[a.dom] for (a, _), w in live.items())
        if history and value < history[-1] - 1e-15:
            raise KMSError("approximants decreased; the machine is inconsistent")
        history.append(value)
        if remaining < tol:
            break
    return CResult(float(history[-1]), float(remaining), it, history)


def c_g(groupoid: Groupoid, spec: SpectralData, g: GElem, tol: float = 1e-13) -> CResult:
    if g.dom != g.cod:
        raise KMSError(f"{g} is not isotropic")
    return c_rel(groupoid, spec, g, groupoid.unit(g.dom), tol)


# -- traces and series -------------------------------------------------------

@dataclass
class TraceSpec:
    values: dict[GElem, complex | float]

    @classmethod
    def trivial(cls, groupoid: Groupoid, weights: dict[str, float] | None = None) -> "TraceSpec":
        vs = groupoid.graph.vertices
        weights = weights or {v: 1.0 / len(vs) for v in vs}
        return cls({groupoid.canonical(groupoid.unit(v)): float(weights[v]) for v in vs})

    @classmethod
    def from_table(cls, groupoid: Groupoid, table: dict[str, float]) -> "TraceSpec":
        return cls({groupoid.canonical(groupoid.parse(k)): v for k, v in table.items()})

    def value(self, groupoid: Groupoid, g: GElem):
        return self.values.get(groupoid.canonical(g), 0.0)

    def check(self, groupoid: Groupoid, elements=None, tol: float = 1e-10) -> list[str]:
        """List violated trace conditions; the Gram test runs only on finite element lists."""
        G = groupoid
        problems = []
        for g, val in self.values.items():
            if g.dom != g.cod and abs(val) > tol:
                problems.append(f"tau({g}) != 0 off isotropy")
        total = sum(self.value(G, G.unit(v)) for v in G.graph.vertices)
        if abs(total - 1) > tol:
            problems.append(f"sum of tau over units is {total}")
        if elements is None:
            return problems
        els = [G.canonical(x) for x in elements]
        for g in els:
            if abs(self.value(G, G.inverse(g)) - np.conj(self.value(G, g))) > tol:
                problems.append(f"tau({g}^-1) != conj tau({g})")
            for h in els:
                if g.dom == h.cod and h.dom == g.cod:
                    if abs(self.value(G, G.compose(g, h)) - self.value(G, G.compose(h, g))) > tol:
                        problems.append(f"tau({g}{h}) != tau({h}{g})")
        for v in G.graph.vertices:
            iso = [g for g in els if g.dom == v and g.cod == v]
            if not iso:
                continue
            gram = np.array([[self.value(G, G.compose(G.inverse(a), b)) for b in iso] for a in iso], dtype=complex)
            if np.min(np.linalg.eigvalsh((gram + gram.conj().T) / 2)) < -tol:
                problems.append(f"Gram matrix at {v} is not positive semidefinite")
        return problems


def _norm_inf(A: np.ndarray) -> float:
    return float(np.max(np.sum(np.abs(A), axis=1))) if A.size else 0.0


def _colour_series(A: np.ndarray, tol: float, max_power: int = 20_000):
    """Norms a_n = |A^n| and a contraction index m with a_m < 1."""
    norms = [_norm_inf(np.eye(A.shape[0]))]
    P = np.eye(A.shape[0])
    for n in range(1, max_power + 1):
        P = P @ A
        norms.append(_norm_inf(P))
        if norms[-1] < 1:
            return norms, n
    raise KMSError("matrix series does not contract; inverse temperature too small")


def geometric_series(mats: list[np.ndarray], left: np.ndarray, right: np.ndarray, tol: float,
                     start: int = 16, max_P: int = 1 << 16):
    """left^T (prod_i sum_n A_i^n) right with a certified truncation bound.

    Returns (value, bound, P) where the partial sums run over n <= P per colour.
    """
    k = len(mats)
    scale = float(np.sum(np.abs(left))) * float(np.max(np.abs(right))) if right.size else 0.0
    info = [_colour_series(A, tol) for A in mats]
    P = start
    while True:
        tails, tots = [], []
        for A, (norms, m) in zip(mats, info):
            am = norms[m]
            while len(norms) <= P + m:
                norms.append(_norm_inf(np.linalg.matrix_power(A, len(norms))))
            tots.append(sum(norms[:m]) / (1 - am))
            tails.append(sum(norms[P + 1: P + m + 1]) / (1 - am))
        bound = scale * sum(tails[i] * math.prod(tots[j] for j in range(k) if j != i) for i in range(k))
        if bound < tol or P >= max_P:
            break
        P *= 2
    M = None
    for A in mats:
        S = np.zeros_like(A)
        term = np.eye(A.shape[0])
        for _ in range(P + 1):
            S = S + term
            term = term @ A
        M = S if M is None else M @ S
    value = float(left @ M @ right) if not np.iscomplexobj(right) else complex(left @ M @ right)
    return value, bound, P


@dataclass
class SeriesResult:
    value: float
    error_bound: float
    truncation: int

    def to_dict(self) -> dict:
        v = self.value
        return {"value": [v.real, v.imag] if isinstance(v, complex) else v,
                "error_bound": self.error_bound, "iterations": self.truncation}


class ToeplitzState:
    """The KMS_beta state built from a trace for beta above the critical value."""

    def __init__(self, groupoid: Groupoid, spec: SpectralData, beta: float, r, trace: TraceSpec,
                 tol: float = 1e-12):
        self.G = groupoid
        self.graph = groupoid.graph
        self.spec = spec
        self.beta = float(beta)
        self.r = [float(x) for x in r]
        if len(self.r) != self.graph.k:
            raise KMSError(f"r must have {self.graph.k} entries")
        for i, (ri, rho) in enumerate(zip(self.r, spec.rho), start=1):
            if self.beta * ri <= math.log(rho):
                raise KMSError(f"beta*r_{i} = {self.beta * ri:.6g} is not above ln rho_{i} = {math.log(rho):.6g}")
        self.trace = trace
        self.tol = tol
        self.t = [math.exp(-self.beta * ri) for ri in self.r]
        self._inner: dict[GElem, SeriesResult] = {}
        self.partition = self._partition()

    def _partition(self) -> SeriesResult:
        mats = [ti * b.astype(float) for ti, b in zip(self.t, self.spec.B)]
        tau = np.array([self.trace.value(self.G, self.G.unit(v)) for v in self.graph.vertices])
        if np.iscomplexobj(tau) and np.allclose(tau.imag, 0):
            tau = tau.real
        left = np.ones(len(self.graph.vertices))
        val, bound, P = geometric_series(mats, left, tau, self.tol)
        return SeriesResult(val, bound, P)

    def inner(self, g: GElem) -> SeriesResult:
        """sum_q e^(-beta r.q) sum over nu of degree q fixed by g of tau(g|_nu)."""
        g = self.G.canonical(g)
        if g in self._inner:
            return self._inner[g]
        states = self.G.restriction_closure(g)
        idx = {x: i for i, x in enumerate(states)}
        n = len(states)
        mats = []
        for c, ti in enumerate(self.t, start=1):
            T = np.zeros((n, n))
            for x in states:
                for e in self.graph.edges_into(x.dom, c):
                    xe, rx = self.G.step(x, e)
                    if xe == e:
                        T[idx[x], idx[self.G.canonical(rx)]] += ti
            mats.append(T)
        right = np.array([self.trace.value(self.G, x) for x in states])
        if np.iscomplexobj(right) and np.allclose(right.imag, 0):
            right = right.real
        left = np.zeros(n)
        left[idx[g]] = 1.0
        val, bound, P = geometric_series(mats, left, right, self.tol)
        res = SeriesResult(val, bound, P)
        self._inner[g] = res
        return res

    def triple(self, lam: Path, g: GElem, mu: Path):
        if lam != mu or g.dom != g.cod:
            return 0.0
        weight = math.exp(-self.beta * sum(ri * d for ri, d in zip(self.r, lam.degree)))
        return weight * self.inner(g).value / self.partition.value

    def error_bound(self, lam: Path, g: GElem, mu: Path) -> float:
        if lam != mu or g.dom != g.cod:
            return 0.0
        Z, inn = self.partition, self.inner(g)
        return (inn.error_bound + abs(inn.value) * Z.error_bound / Z.value) / (Z.value - Z.error_bound)

    def __call__(self, b: AlgElement):
        return sum((c * self.triple(*key) for key, c in b.terms.items()), 0.0)

    def dynamics_factor(self, lam: Path, mu: Path) -> float:
        n = deg_sub(lam.degree, mu.degree)
        return math.exp(-self.beta * sum(ri * d for ri, d in zip(self.r, n)))


def toeplitz_partition(groupoid, spec, beta, r, trace, tol=1e-12) -> SeriesResult:
    return ToeplitzState(groupoid, spec, beta, r, trace, tol).partition


# -- KMS_1 states on the Cuntz-Pimsner algebra ------------------------------

class KMS1State:
    """The KMS_1 state for the preferred dynamics.

    Without ``per_data`` the periodicity group must be certified trivial and
    the state is the unique one.  With ``per_data`` the state attached to the
    supplied character of the periodicity group is evaluated.
    """

    def __init__(self, groupoid: Groupoid, spec: SpectralData, per_data: PerData | None = None,
                 tol: float = 1e-13, n_bound: int = 20, check_tol: float = 1e-10):
        self.G = groupoid
        self.graph = groupoid.graph
        self.spec = spec
        self.tol = tol
        ok, bad = spec.g_invariance(groupoid, tol=check_tol)
        if not ok:
            raise NoKMS1State(bad, spec.x_at(bad.dom), spec.x_at(bad.cod))
        self.per = Periodicity(groupoid, spec)
        self.per_data = per_data
        self.certificate = None
        if per_data is None:
            self.certificate = self.per.per_trivial_certificate(n_bound=n_bound)
            if self.certificate.verdict != TRIVIAL:
                raise KMSError(f"periodicity certificate is {self.certificate.verdict}; supply periodicity data")
        self._c: dict[tuple[GElem, GElem], CResult] = {}
        self._theta: dict[Path, tuple[Path, GElem]] = {}

    def c(self, g: GElem, h: GElem) -> CResult:
        key = (self.G.canonical(g), self.G.canonical(h))
        if key not in self._c:
            self._c[key] = c_rel(self.G, self.spec, g, h, self.tol)
        return self._c[key]

    def _theta_h(self, lam: Path, q) -> tuple[Path, GElem]:
        key = (lam, tuple(q))
        if key not in self._theta:
            w = self.per_data.witness_pq(lam.degree, q)
            self._theta[key] = self.per.theta_h(w, lam)
        return self._theta[key]

    def measure(self, lam: Path, g: GElem, mu: Path) -> float:
        """M(Z(lam, g, mu)) by the three-case formula."""
        if g.cod != lam.s or g.dom != mu.s:
            raise KMSError(f"invalid triple ({lam}, {g}, {mu})")
        n = deg_sub(lam.degree, mu.degree)
        if self.per_data is None:
            if lam != mu:
                return 0.0
            h = self.G.unit(mu.s)
        else:
            if not self.per_data.contains(n):
                return 0.0
            theta, h = self._theta_h(lam, mu.degree)
            if theta != mu:
                return 0.0
        scale = 1.0 / self.spec.rho_pow(mu.degree)
        if self.G.canonical(g) == self.G.canonical(h):
            return scale * self.spec.x_at(mu.s)
        return scale * self.c(g, h).value

    def triple(self, lam: Path, g: GElem, mu: Path):
        val = self.measure(lam, g, mu)
        if self.per_data is None or val == 0:
            return val
        return val * self.per_data.chi(deg_sub(lam.degree, mu.degree))

    def __call__(self, b: AlgElement):
        return sum((c * self.triple(*key) for key, c in b.terms.items()), 0.0)

    def dynamics_factor(self, lam: Path, mu: Path) -> float:
        return 1.0 / self.spec.rho_pow(deg_sub(lam.degree, mu.degree))


def check_kms_condition(state, alg: StarAlgebra, b: AlgElement, c: AlgElement) -> float:
    """|phi(bc) - phi(c sigma_{i beta}(b))| for the state's own dynamics."""
    lhs = state(alg.multiply(b, c))
    rhs = 0.0
    for (lam, g, mu), coef in b.terms.items():
        term = AlgElement(alg, {(lam, g, mu): coef})
        rhs = rhs + state.dynamics_factor(lam, mu) * state(alg.multiply(c, term))
    return abs(lhs - rhs)


def central_element_V(alg: StarAlgebra, per: Periodicity, witness) -> AlgElement:
    """V_{p-q} = sum over lam of degree p of t_lam u_h(lam) t*_theta(lam)."""
    out = alg.zero()
    for lam in alg.graph.paths(witness.p):
        theta, h = per.theta_h(witness, lam)
        out = out + alg.span(lam, h, theta)
    return out
