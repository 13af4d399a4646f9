"""Automata over a coloured graph with squares, and their action on paths."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from .kgraph import KGraph, KGraphError, Path, ValidationReport, colour_sequence

AXIOMS = ("A1", "A2", "A3", "A4", "A5", "A6")


class AutomatonError(ValueError):
    pass


@dataclass(frozen=True)
class State:
    id: str
    r: str
    s: str


class Automaton:
    """States A over E^0 with a transition table (a, e) -> (a.e, a|_e).

    Vertex states are implicit: v.e = e and v|_e = s(e).  Explicit entries for
    vertex states are accepted so that A4 can be checked against them.
    """

    def __init__(self, graph: KGraph, states, trans):
        self.graph = graph
        self.states: dict[str, State] = {v: State(v, v, v) for v in graph.vertices}
        for st in states:
            if not isinstance(st, State):
                try:
                    st = State(str(st["id"]), str(st["r"]), str(st["s"]))
                except KeyError as exc:
                    raise AutomatonError(f"state {st!r} is missing field {exc.args[0]!r}") from None
            if st.id in graph.edges:
                raise AutomatonError(f"state id {st.id!r} clashes with an edge id")
            if st.id in graph.vertices:
                if (st.r, st.s) != (st.id, st.id):
                    raise AutomatonError(f"vertex state {st.id!r} must have range and source {st.id!r}")
                continue
            if st.id in self.states:
                raise AutomatonError(f"duplicate state {st.id!r}")
            if st.r not in graph.vertices or st.s not in graph.vertices:
                raise AutomatonError(f"state {st.id!r} has an undeclared range or source")
            self.states[st.id] = st
        self.table: dict[tuple[str, str], tuple[str, str]] = {}
        for t in trans:
            try:
                a, e, oe, os_ = (str(t[x]) for x in ("state", "edge", "out_edge", "out_state"))
            except KeyError as exc:
                raise AutomatonError(f"transition {t!r} is missing field {exc.args[0]!r}") from None
            if a not in self.states:
                raise AutomatonError(f"transition for unknown state {a!r}")
            if e not in graph.edges or oe not in graph.edges:
                raise AutomatonError(f"transition ({a}, {e}) mentions an unknown edge")
            if os_ not in self.states:
                raise AutomatonError(f"transition ({a}, {e}) restricts to unknown state {os_!r}")
            if self.states[a].s != graph.edges[e].r:
                raise AutomatonError(f"transition ({a}, {e}) defined although s_A({a}) != r({e})")
            if (a, e) in self.table:
                raise AutomatonError(f"transition ({a}, {e}) given twice")
            self.table[(a, e)] = (oe, os_)
        for v in graph.vertices:
            for e in graph.edges_into(v):
                self.table.setdefault((v, e), (e, graph.edges[e].s))
        for a, st in self.states.items():
            for e in graph.edges_into(st.s):
                if (a, e) not in self.table:
                    raise AutomatonError(f"missing transition for ({a}, {e})")

    @property
    def generators(self) -> list[str]:
        """Non-vertex states in declaration order."""
        return [a for a in self.states if a not in self.graph.vertices]

    def is_vertex(self, a: str) -> bool:
        return a in self.graph.vertices

    def act_edge(self, a: str, e: str) -> str:
        return self.table[(a, e)][0]

    def restrict_edge(self, a: str, e: str) -> str:
        return self.table[(a, e)][1]

    def act_word(self, a: str, word) -> tuple[tuple[str, ...], str]:
        out = []
        for e in word:
            try:
                oe, a = self.table[(a, e)]
            except KeyError:
                raise AutomatonError(f"state {a!r} cannot act on edge {e!r}") from None
            out.append(oe)
        return tuple(out), a

    def _check_domain(self, a: str, x: Path) -> None:
        if a not in self.states:
            raise AutomatonError(f"unknown state {a!r}")
        if self.states[a].s != x.r:
            raise AutomatonError(f"s_A({a}) = {self.states[a].s} but r({x}) = {x.r}")

    def act_path(self, a: str, x: Path) -> Path:
        self._check_domain(a, x)
        if x.is_vertex:
            return self.graph.vertex(self.states[a].r)
        word, b = self.act_word(a, x.word)
        # colours are preserved, so the image word is already colour-sorted
        return Path(self.states[a].r, self.states[b].s, x.degree, word)

    def restrict_path(self, a: str, x: Path) -> str:
        self._check_domain(a, x)
        return self.act_word(a, x.word)[1]

    def traversals(self, x: Path):
        """Every edge sequence traversing x, one per ordering of its colours."""
        cols = colour_sequence(x.degree)
        for order in sorted(set(itertools.permutations(cols))):
            yield tuple(self.graph._reorder(list(x.word), order))

    def traversal_invariance_check(self, a: str, x: Path) -> bool:
        self._check_domain(a, x)
        results = set()
        for word in self.traversals(x):
            try:
                out, b = self.act_word(a, word)
                results.add((self.graph.normalize(out).word if out else (), b))
            except (AutomatonError, KGraphError):
                return False
        return len(results) <= 1

    def validate(self) -> ValidationReport:
        g = self.graph
        E = g.edges
        rep = ValidationReport({ax: [] for ax in AXIOMS})
        for a, st in self.states.items():
            dom = g.edges_into(st.s)
            image = [self.act_edge(a, e) for e in dom]
            if len(set(image)) != len(image) or sorted(image) != sorted(g.edges_into(st.r)):
                rep.add("A1", f"{a}: e -> {a}.e is not a bijection {st.s}E1 -> {st.r}E1")
            for e in dom:
                oe, b = self.table[(a, e)]
                if E[oe].colour != E[e].colour:
                    rep.add("A2", f"{a}.{e} = {oe} changes colour")
                if self.states[b].s != E[e].s:
                    rep.add("A3", f"s_A({a}|_{e}) = {self.states[b].s} but s({e}) = {E[e].s}")
            if self.is_vertex(a):
                for e in dom:
                    if self.table[(a, e)] != (e, E[e].s):
                        rep.add("A4", f"vertex {a} moves or restricts {e} nontrivially")
        for a, st in self.states.items():
            for e, f, fp, ep in g.squares:
                if E[e].r != st.s:
                    continue
                try:
                    x1, a1 = self.table[(a, e)]
                    y1, _ = self.table[(a1, f)]
                    x2, a2 = self.table[(a, fp)]
                    y2, _ = self.table[(a2, ep)]
                except KeyError:
                    continue  # a domain failure already reported under A3
                try:
                    same = g.normalize([x1, y1]) == g.normalize([x2, y2])
                except KGraphError:
                    same = False
                if not same:
                    rep.add("A5", f"{a} on square {e}{f}~{fp}{ep}: {x1}{y1} vs {x2}{y2}")
                r1 = self.table[(a1, f)][1]
                r2 = self.table[(a2, ep)][1]
                if r1 != r2:
                    rep.add("A6", f"{a} on square {e}{f}~{fp}{ep}: {r1} vs {r2}")
        return rep

    def to_dict(self) -> dict:
        return {
            "states": [{"id": a, "r": st.r, "s": st.s} for a, st in self.states.items() if not self.is_vertex(a)],
            "trans": [
                {"state": a, "edge": e, "out_edge": oe, "out_state": b}
                for (a, e), (oe, b) in self.table.items()
                if not self.is_vertex(a)
            ],
        }
