"""Truncated path-space representation used to check the generator relations."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .groupoid import GElem, Groupoid, NotFiniteState
from .kgraph import Path, deg_add, deg_join, deg_le

RELATIONS = ("U1", "U2", "U3", "TCK1", "TCK2", "TCK3", "UT", "CK")


class FockError(ValueError):
    pass


@dataclass
class RelationReport:
    level: int
    residuals: dict[str, int]
    checked: dict[str, int]
    worst: dict[str, str]

    @property
    def ok(self) -> bool:
        return all(v == 0 for v in self.residuals.values())

    def to_dict(self) -> dict:
        return {"level": self.level, "ok": self.ok, "residuals": dict(self.residuals),
                "checked": dict(self.checked), "worst": dict(self.worst)}


class TruncatedRep:
    """Operators on span{delta_mu : d(mu) <= (L, ..., L)}.

    T_lam sends delta_mu to delta_{lam mu}, or to 0 when the product leaves the
    truncation; U_g sends delta_mu to delta_{g.mu} when dom(g) = r(mu).
    """

    def __init__(self, groupoid: Groupoid, level: int, cap: int = 5000, elements=None):
        if level < 1:
            raise FockError("level must be at least 1")
        self.G = groupoid
        self.graph = groupoid.graph
        self.L = level
        self.top = (level,) * self.graph.k
        self.basis: list[Path] = [mu for p in self.graph.degrees_upto(self.top) for mu in self.graph.paths(p)]
        if len(self.basis) > cap:
            raise FockError(f"basis of size {len(self.basis)} exceeds the cap {cap}")
        self.index = {mu: i for i, mu in enumerate(self.basis)}
        self.elements = self._elements() if elements is None else [groupoid.canonical(g) for g in elements]
        self._T: dict[Path, np.ndarray] = {}
        self._U: dict[GElem, np.ndarray] = {}

    def _elements(self) -> list[GElem]:
        G = self.G
        try:
            return G.groupoid_closure(bound=60)
        except NotFiniteState:
            pass
        out: list[GElem] = []
        for a in G.aut.generators:
            for x in (G.gen(a), G.inverse(G.gen(a))):
                for y in G.restriction_closure(x):
                    if y not in out:
                        out.append(y)
        for v in self.graph.vertices:
            u = G.canonical(G.unit(v))
            if u not in out:
                out.append(u)
        return out

    @property
    def size(self) -> int:
        return len(self.basis)

    def T(self, lam: Path) -> np.ndarray:
        if lam not in self._T:
            M = np.zeros((self.size, self.size), dtype=float)
            for mu, j in self.index.items():
                if mu.r == lam.s and deg_le(deg_add(lam.degree, mu.degree), self.top):
                    M[self.index[self.graph.compose(lam, mu)], j] = 1
            self._T[lam] = M
        return self._T[lam]

    def U(self, g: GElem) -> np.ndarray:
        g = self.G.canonical(g)
        if g not in self._U:
            M = np.zeros((self.size, self.size), dtype=float)
            for mu, j in self.index.items():
                if mu.r == g.dom:
                    M[self.index[self.G.act(g, mu)], j] = 1
            self._U[g] = M
        return self._U[g]

    def relation_report(self) -> RelationReport:
        K, G = self.graph, self.G
        res = {r: 0 for r in RELATIONS}
        cnt = {r: 0 for r in RELATIONS}
        worst = {r: "" for r in RELATIONS}

        def note(rel: str, diff: np.ndarray, what: str) -> None:
            cnt[rel] += 1
            d = int(np.max(np.abs(diff))) if diff.size else 0
            if d > res[rel]:
                res[rel] = d
                worst[rel] = what

        I = np.eye(self.size, dtype=float)
        verts = [K.vertex(v) for v in K.vertices]
        for v in verts:
            Uv = self.U(G.unit(v.r))
            note("U1", Uv @ Uv - Uv, f"U_{v} idempotent")
            note("U1", Uv.T - Uv, f"U_{v} selfadjoint")
            note("U1", Uv - self.T(v), f"U_{v} = T_{v}")
            for w in verts:
                if w != v:
                    note("U1", Uv @ self.U(G.unit(w.r)), f"U_{v} U_{w}")
        note("U1", sum(self.U(G.unit(v.r)) for v in verts) - I, "sum of U_v")
        for g in self.elements:
            note("U2", self.U(g).T - self.U(G.inverse(g)), f"U_{g}*")
            for h in self.elements:
                lhs = self.U(g) @ self.U(h)
                rhs = self.U(G.compose(g, h)) if g.dom == h.cod else 0 * lhs
                note("U3", lhs - rhs, f"U_{g} U_{h}")
        for v in verts:
            Tv = self.T(v)
            note("TCK1", Tv @ Tv - Tv, f"T_{v} idempotent")
            note("TCK1", Tv.T - Tv, f"T_{v} selfadjoint")
            for w in verts:
                if w != v:
                    note("TCK1", Tv @ self.T(w), f"T_{v} T_{w}")
        paths = self.basis
        for lam in paths:
            for mu in paths:
                if mu.r == lam.s and deg_le(deg_add(lam.degree, mu.degree), self.top):
                    note("TCK2", self.T(lam) @ self.T(mu) - self.T(K.compose(lam, mu)), f"T_{lam} T_{mu}")
        for lam, mu in itertools.product(paths, repeat=2):
            if not deg_le(deg_join(lam.degree, mu.degree), self.top):
                continue
            lhs = self.T(lam).T @ self.T(mu)
            rhs = np.zeros_like(lhs)
            for eta, zeta in K.lambda_min(lam, mu):
                rhs += self.T(eta) @ self.T(zeta).T
            cols = [j for nu, j in self.index.items() if deg_le(deg_add(mu.degree, nu.degree), self.top)]
            note("TCK3", (lhs - rhs)[:, cols], f"T_{lam}* T_{mu}")
        for g in self.elements:
            for lam in paths:
                lhs = self.U(g) @ self.T(lam)
                if g.dom == lam.r:
                    glam, glres = G.act_restrict(g, lam)
                    rhs = self.T(glam) @ self.U(glres)
                else:
                    rhs = 0 * lhs
                note("UT", lhs - rhs, f"U_{g} T_{lam}")
        for p in K.degrees_upto(self.top):
            cols = [j for nu, j in self.index.items() if deg_le(p, nu.degree)]
            for v in verts:
                rhs = sum((self.T(lam) @ self.T(lam).T for lam in K.paths(p, r=v.r)),
                          np.zeros((self.size, self.size), dtype=float))
                note("CK", (self.T(v) - rhs)[:, cols], f"CK at {v}, degree {p}")
        return RelationReport(self.L, res, cnt, worst)


def build(groupoid: Groupoid, level: int, cap: int = 5000) -> TruncatedRep:
    return TruncatedRep(groupoid, level, cap)
