"""The groupoid generated by an automaton, with equality decided by bisimulation.

Elements are reduced words over letters ``(state, +1)`` and ``(state, -1)``.
A word ``l1 l2 ... ln`` acts as ``l1 o l2 o ... o ln``, so the last letter is
applied first.  Vertex states never occur as letters; a unit is an empty word.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

from .automaton import Automaton
from .kgraph import Path

DEFAULT_BOUND = 10_000
SIGNATURE_BUDGET = 256

Letter = tuple[str, int]


class GroupoidError(ValueError):
    pass


class NotFiniteState(RuntimeError):
    """A closure grew past its bound."""

    def __init__(self, bound: int, what: str = "closure"):
        super().__init__(f"{what} exceeded the bound of {bound} elements")
        self.bound = bound


@dataclass(frozen=True, order=True)
class GElem:
    dom: str
    cod: str
    word: tuple[Letter, ...] = ()

    @property
    def is_unit_word(self) -> bool:
        return not self.word

    def __str__(self) -> str:
        if not self.word:
            return self.dom
        return " * ".join(a if sign > 0 else f"{a}^-1" for a, sign in self.word)


def _reduce(word) -> tuple[Letter, ...]:
    out: list[Letter] = []
    for letter in word:
        if out and out[-1][0] == letter[0] and out[-1][1] == -letter[1]:
            out.pop()
        else:
            out.append(letter)
    return tuple(out)


class Groupoid:
    """Element arithmetic plus a closure table of canonical representatives."""

    def __init__(self, automaton: Automaton, bound: int = DEFAULT_BOUND):
        self.aut = automaton
        self.graph = automaton.graph
        self.bound = bound
        self._inv: dict[str, dict[str, str]] = {}
        for a, st in automaton.states.items():
            inv = {}
            for e in self.graph.edges_into(st.s):
                inv[automaton.act_edge(a, e)] = e
            self._inv[a] = inv
        # closure table: canonical elements, bucket index and alias map
        self._canon: list[GElem] = []
        self._index: dict[GElem, int] = {}
        self._alias: dict[GElem, int] = {}
        self._buckets: dict[tuple, list[int]] = defaultdict(list)
        self._step_cache: dict[tuple[GElem, str], tuple[str, GElem]] = {}
        for v in self.graph.vertices:
            self.canonical(self.unit(v))

    # -- construction -----------------------------------------------------
    def unit(self, v: str) -> GElem:
        if v not in self.graph.vertices:
            raise GroupoidError(f"unknown vertex {v!r}")
        return GElem(v, v, ())

    def gen(self, a: str) -> GElem:
        if a not in self.aut.states:
            raise GroupoidError(f"unknown state {a!r}")
        st = self.aut.states[a]
        if self.aut.is_vertex(a):
            return self.unit(a)
        return GElem(st.s, st.r, ((a, 1),))

    def compose(self, g: GElem, h: GElem) -> GElem:
        """The product gh, acting by h first."""
        if g.dom != h.cod:
            raise GroupoidError(f"cannot compose: dom({g}) = {g.dom} but cod({h}) = {h.cod}")
        return GElem(h.dom, g.cod, _reduce(g.word + h.word))

    def inverse(self, g: GElem) -> GElem:
        return GElem(g.cod, g.dom, tuple((a, -s) for a, s in reversed(g.word)))

    def parse(self, text: str) -> GElem:
        """Parse ``"a_v * a_w^-1"``; a bare vertex id is its unit."""
        text = text.strip()
        if text in self.graph.vertices:
            return self.unit(text)
        result = None
        for tok in text.split("*"):
            tok = tok.strip()
            inv = tok.endswith("^-1")
            name = tok[:-3].strip() if inv else tok
            if name not in self.aut.states:
                raise GroupoidError(f"unknown state {name!r} in {text!r}")
            x = self.gen(name)
            if inv:
                x = self.inverse(x)
            result = x if result is None else self.compose(result, x)
        if result is None:
            raise GroupoidError("empty element")
        return result

    # -- action ---------------------------------------------------------------
    def _letter_step(self, letter: Letter, e: str) -> tuple[str, GElem]:
        a, sign = letter
        if sign > 0:
            oe, b = self.aut.table[(a, e)]
            return oe, self.gen(b)
        ep = self._inv[a].get(e)
        if ep is None:
            raise GroupoidError(f"{a} is not a bijection on edges: {e} has no preimage")
        b = self.aut.restrict_edge(a, ep)
        return ep, self.inverse(self.gen(b))

    def step(self, g: GElem, e: str) -> tuple[str, GElem]:
        """(g.e, g|_e) for an edge e with r(e) = dom(g)."""
        key = (g, e)
        hit = self._step_cache.get(key)
        if hit is not None:
            return hit
        E = self.graph.edges
        if e not in E or E[e].r != g.dom:
            raise GroupoidError(f"{g} cannot act on {e}: dom is {g.dom}")
        if not g.word:
            res = (e, self.unit(E[e].s))
        else:
            cur = e
            parts: list[GElem] = []
            for letter in reversed(g.word):
                cur, r = self._letter_step(letter, cur)
                parts.append(r)
            word: list[Letter] = []
            for r in reversed(parts):
                word.extend(r.word)
            res = (cur, GElem(E[e].s, E[cur].s, _reduce(word)))
        self._step_cache[key] = res
        return res

    def act(self, g: GElem, lam: Path) -> Path:
        return self.act_restrict(g, lam)[0]

    def restrict(self, g: GElem, lam: Path) -> GElem:
        return self.act_restrict(g, lam)[1]

    def act_restrict(self, g: GElem, lam: Path) -> tuple[Path, GElem]:
        if lam.r != g.dom:
            raise GroupoidError(f"dom({g}) = {g.dom} but r({lam}) = {lam.r}")
        if lam.is_vertex:
            return self.graph.vertex(g.cod), g
        out = []
        for e in lam.word:
            oe, g = self.step(g, e)
            out.append(oe)
        return Path(self.graph.edges[out[0]].r, g.cod, lam.degree, tuple(out)), g

    def edge_action(self, g: GElem) -> tuple[str, ...]:
        return tuple(self.step(g, e)[0] for e in self.graph.edges_into(g.dom))

    def signature(self, g: GElem, budget: int = SIGNATURE_BUDGET) -> tuple[str, ...]:
        """Outputs of g along edge strings, level by level, until budget strings are seen.

        Equal elements have equal signatures, so it is a sound bucket key.
        """
        out: list[str] = []
        frontier = [g]
        while frontier and len(out) < budget:
            nxt = []
            for x in frontier:
                for e in self.graph.edges_into(x.dom):
                    f, r = self.step(x, e)
                    out.append(f)
                    nxt.append(r)
            frontier = nxt
        return tuple(out)

    # -- equality ---------------------------------------------------------
    def equal(self, g: GElem, h: GElem) -> bool:
        """Coinductive check that g and h act identically on dom(g)Lambda.

        Restrictions never lengthen a word, so the set of pairs explored is
        finite and the check always terminates.
        """
        if (g.dom, g.cod) != (h.dom, h.cod):
            return False
        ig, ih = self._alias.get(g), self._alias.get(h)
        if ig is not None and ih is not None:
            return ig == ih
        seen = {(g, h)}
        todo = [(g, h)]
        while todo:
            x, y = todo.pop()
            if x == y:
                continue
            if (x.dom, x.cod) != (y.dom, y.cod):
                return False
            for e in self.graph.edges_into(x.dom):
                ex, rx = self.step(x, e)
                ey, ry = self.step(y, e)
                if ex != ey:
                    return False
                if (rx, ry) not in seen:
                    seen.add((rx, ry))
                    todo.append((rx, ry))
        return True

    def is_unit(self, g: GElem) -> bool:
        return g.dom == g.cod and self.equal(g, self.unit(g.dom))

    # -- closure table --------------------------------------------------------
    def canonical(self, g: GElem) -> GElem:
        """The first-discovered element equal to g."""
        idx = self._alias.get(g)
        if idx is not None:
            return self._canon[idx]
        key = (g.dom, g.cod, self.signature(g))
        for idx in self._buckets[key]:
            if self.equal(g, self._canon[idx]):
                self._alias[g] = idx
                return self._canon[idx]
        idx = len(self._canon)
        self._canon.append(g)
        self._index[g] = idx
        self._alias[g] = idx
        self._buckets[key].append(idx)
        return g

    def canon_id(self, g: GElem) -> int:
        return self._alias[self.canonical(g)]

    @property
    def known(self) -> list[GElem]:
        return list(self._canon)

    def restriction_closure(self, g: GElem, bound: int | None = None) -> list[GElem]:
        bound = self.bound if bound is None else bound
        start = self.canonical(g)
        seen = {start}
        order = [start]
        i = 0
        while i < len(order):
            x = order[i]
            i += 1
            for e in self.graph.edges_into(x.dom):
                y = self.canonical(self.step(x, e)[1])
                if y not in seen:
                    seen.add(y)
                    order.append(y)
                    if len(order) > bound:
                        raise NotFiniteState(bound, f"restriction closure of {g}")
        return order

    def groupoid_closure(self, generators=None, bound: int | None = None) -> list[GElem]:
        """Closure of the units and generators under products, inverses and restriction.

        Since (gh)|_e = g|_{h.e} h|_e, it suffices to close the generators under
        inverse and restriction (the set S below) and then right-multiply by S.
        """
        bound = self.bound if bound is None else bound
        if generators is None:
            generators = [self.gen(a) for a in self.aut.generators]
        seen: list[GElem] = []
        member: set[GElem] = set()
        S: list[GElem] = []
        in_S: set[GElem] = set()

        def add(x: GElem) -> GElem:
            c = self.canonical(x)
            if c not in member:
                member.add(c)
                seen.append(c)
                if len(seen) > bound:
                    raise NotFiniteState(bound, "groupoid closure")
            return c

        for v in self.graph.vertices:
            add(self.unit(v))
        todo = [add(x) for x in generators]
        while todo:
            s = todo.pop(0)
            if s in in_S:
                continue
            in_S.add(s)
            S.append(s)
            todo.append(add(self.inverse(s)))
            for e in self.graph.edges_into(s.dom):
                todo.append(add(self.step(s, e)[1]))
        i = 0
        done = 0
        while i < len(seen) or done < len(S):
            # products of every element with every member of S, new S members included
            if done < len(S):
                s = S[done]
                done += 1
                for x in list(seen[:i]):
                    if x.dom == s.cod:
                        add(self.compose(x, s))
                continue
            x = seen[i]
            i += 1
            for s in S:
                if x.dom == s.cod:
                    add(self.compose(x, s))
        return seen

    def is_finite_state(self, bound: int | None = None) -> bool:
        try:
            for a in self.aut.generators:
                self.restriction_closure(self.gen(a), bound)
                self.restriction_closure(self.inverse(self.gen(a)), bound)
        except NotFiniteState:
            return False
        return True

    def to_str(self, g: GElem) -> str:
        return str(g)

