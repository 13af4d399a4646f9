"""Coloured graphs with commuting squares and the k-graph they determine.

Paths are stored in colour-sorted normal form: every colour-1 edge first,
then colour 2, and so on.  Rewriting between traversals uses the squares.
"""
from __future__ import annotations

import itertools
from collections import defaultdict, deque
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class KGraphError(ValueError):
    """Malformed graph data or an operation outside its domain."""


Degree = tuple[int, ...]


def deg_le(p: Degree, q: Degree) -> bool:
    return all(a <= b for a, b in zip(p, q))


def deg_add(p: Degree, q: Degree) -> Degree:
    return tuple(a + b for a, b in zip(p, q))


def deg_sub(p: Degree, q: Degree) -> Degree:
    return tuple(a - b for a, b in zip(p, q))


def deg_join(p: Degree, q: Degree) -> Degree:
    return tuple(max(a, b) for a, b in zip(p, q))


def deg_meet(p: Degree, q: Degree) -> Degree:
    return tuple(min(a, b) for a, b in zip(p, q))


def colour_sequence(p: Degree) -> tuple[int, ...]:
    """Colours (1-based) of a normal-form word of degree p."""
    return tuple(c for i, n in enumerate(p, start=1) for c in [i] * n)


@dataclass(frozen=True)
class Edge:
    id: str
    r: str
    s: str
    colour: int


@dataclass(frozen=True, order=True)
class Path:
    r: str
    s: str
    degree: Degree
    word: tuple[str, ...]

    @property
    def is_vertex(self) -> bool:
        return not self.word

    def __len__(self) -> int:
        return len(self.word)

    def __str__(self) -> str:
        return self.r if not self.word else "".join(self.word)


@dataclass
class ValidationReport:
    failures: dict[str, list[str]] = field(default_factory=dict)

    def add(self, condition: str, message: str) -> None:
        self.failures.setdefault(condition, []).append(message)

    @property
    def ok(self) -> bool:
        return not any(self.failures.values())

    def failed(self) -> list[str]:
        return sorted(k for k, v in self.failures.items() if v)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "failures": {k: list(v) for k, v in sorted(self.failures.items()) if v}}


class KGraph:
    """A finite k-graph presented by a coloured graph and a set of squares.

    ``squares`` holds quadruples ``(e, f, fp, ep)`` meaning ef ~ fp ep.
    Construction only checks that ids resolve; call :meth:`validate` for
    completeness and associativity.
    """

    def __init__(self, k: int, vertices, edges, squares=()):
        if not isinstance(k, int) or k < 1:
            raise KGraphError(f"k must be a positive integer, got {k!r}")
        self.k = k
        self.vertices: tuple[str, ...] = tuple(str(v) for v in vertices)
        if len(set(self.vertices)) != len(self.vertices):
            raise KGraphError("duplicate vertex id")
        self.edges: dict[str, Edge] = {}
        for e in edges:
            if isinstance(e, Edge):
                edge = e
            else:
                try:
                    edge = Edge(str(e["id"]), str(e["r"]), str(e["s"]), int(e["colour"]))
                except KeyError as exc:
                    raise KGraphError(f"edge {e!r} is missing field {exc.args[0]!r}") from None
            if edge.id in self.edges or edge.id in self.vertices:
                raise KGraphError(f"duplicate id {edge.id!r}")
            if edge.r not in self.vertices or edge.s not in self.vertices:
                raise KGraphError(f"edge {edge.id!r} has an undeclared endpoint")
            if not 1 <= edge.colour <= k:
                raise KGraphError(f"edge {edge.id!r} has colour {edge.colour} outside 1..{k}")
            self.edges[edge.id] = edge
        self.squares: tuple[tuple[str, str, str, str], ...] = tuple(tuple(str(x) for x in sq) for sq in squares)
        for sq in self.squares:
            if len(sq) != 4:
                raise KGraphError(f"square {sq!r} must list four edges")
            for x in sq:
                if x not in self.edges:
                    raise KGraphError(f"square {sq!r} mentions unknown edge {x!r}")
        # both orientations; duplicates are reported by validate()
        self._swap: dict[tuple[str, str], tuple[str, str]] = {}
        for e, f, fp, ep in self.squares:
            self._swap.setdefault((e, f), (fp, ep))
            self._swap.setdefault((fp, ep), (e, f))
        self._order = {eid: i for i, eid in enumerate(sorted(self.edges, key=lambda x: (self.edges[x].colour, x)))}
        self._paths_cache: dict[Degree, list[Path]] = {}

    # -- basic data -------------------------------------------------------
    def colour(self, e: str) -> int:
        return self.edges[e].colour

    def unit_degree(self, i: int) -> Degree:
        return tuple(int(j == i) for j in range(1, self.k + 1))

    @property
    def zero(self) -> Degree:
        return (0,) * self.k

    @property
    def N(self) -> Degree:
        return (1,) * self.k

    def vertex(self, v: str) -> Path:
        if v not in self.vertices:
            raise KGraphError(f"unknown vertex {v!r}")
        return Path(v, v, self.zero, ())

    @cached_property
    def _in_edges(self) -> dict[tuple[str, int], list[str]]:
        table: dict[tuple[str, int], list[str]] = defaultdict(list)
        for eid in sorted(self.edges, key=self._order.__getitem__):
            e = self.edges[eid]
            table[(e.r, e.colour)].append(eid)
        return table

    def edges_into(self, v: str, colour: int | None = None) -> list[str]:
        """Edges with range v, optionally of one colour, in canonical order."""
        if colour is not None:
            return list(self._in_edges.get((v, colour), ()))
        return [e for c in range(1, self.k + 1) for e in self._in_edges.get((v, c), ())]

    def swap(self, e: str, f: str) -> tuple[str, str]:
        try:
            return self._swap[(e, f)]
        except KeyError:
            raise KGraphError(f"no square contains the path {e}{f}") from None

    # -- validation -------------------------------------------------------
    def validate(self) -> ValidationReport:
        rep = ValidationReport({"shape": [], "completeness": [], "associativity": []})
        E = self.edges
        seen: dict[tuple[str, str], int] = defaultdict(int)
        for sq in self.squares:
            e, f, fp, ep = (E[x] for x in sq)
            if e.colour == f.colour or e.colour != ep.colour or f.colour != fp.colour:
                rep.add("shape", f"square {sq}: colours do not pair up")
            if e.s != f.r or fp.s != ep.r or e.r != fp.r or f.s != ep.s:
                rep.add("shape", f"square {sq}: endpoints do not match")
            seen[(sq[0], sq[1])] += 1
            seen[(sq[2], sq[3])] += 1
        for (e, f), n in sorted(seen.items()):
            if n > 1:
                rep.add("completeness", f"path {e}{f} lies in {n} squares")
        for e in sorted(E, key=self._order.__getitem__):
            for f in self.edges_into(E[e].s):
                if E[f].colour != E[e].colour and seen.get((e, f), 0) == 0:
                    rep.add("completeness", f"path {e}{f} is not covered by any square")
        if self.k >= 3 and not rep.failures["completeness"] and not rep.failures["shape"]:
            for x in E:
                for y in self.edges_into(E[x].s):
                    for z in self.edges_into(E[y].s):
                        if len({E[x].colour, E[y].colour, E[z].colour}) == 3 and not self._hexagon(x, y, z):
                            rep.add("associativity", f"triple {x}{y}{z}")
        return rep

    def _hexagon(self, x: str, y: str, z: str) -> bool:
        y1, x1 = self.swap(x, y)
        z1, x2 = self.swap(x1, z)
        z2, y2 = self.swap(y1, z1)
        zb, yb = self.swap(y, z)
        zc, xb = self.swap(x, zb)
        yc, xc = self.swap(xb, yb)
        return (z2, y2, x2) == (zc, yc, xc)

    def structural_checks(self) -> dict[str, bool]:
        no_sources = all(self.edges_into(v, c) for v in self.vertices for c in range(1, self.k + 1))
        return {"has_no_sources": no_sources, "strongly_connected": self._strongly_connected()}

    def _strongly_connected(self) -> bool:
        if not self.vertices:
            return False
        fwd, back = defaultdict(set), defaultdict(set)
        for e in self.edges.values():
            fwd[e.s].add(e.r)
            back[e.r].add(e.s)

        def reach(adj):
            start = self.vertices[0]
            seen, todo = {start}, [start]
            while todo:
                for w in adj[todo.pop()]:
                    if w not in seen:
                        seen.add(w)
                        todo.append(w)
            return len(seen) == len(self.vertices)

        return reach(fwd) and reach(back)

    # -- paths --------------------------------------------------------------
    def _check_composable(self, word) -> None:
        for a, b in zip(word, word[1:]):
            if self.edges[a].s != self.edges[b].r:
                raise KGraphError(f"edges {a} and {b} do not compose")

    def _degree_of(self, word) -> Degree:
        d = [0] * self.k
        for e in word:
            d[self.edges[e].colour - 1] += 1
        return tuple(d)

    def _reorder(self, word: list[str], target: tuple[int, ...]) -> list[str]:
        """Rewrite a composable word so its colour sequence equals target."""
        w = list(word)
        for i, c in enumerate(target):
            if self.edges[w[i]].colour == c:
                continue
            j = next(j for j in range(i + 1, len(w)) if self.edges[w[j]].colour == c)
            while j > i:
                w[j - 1], w[j] = self.swap(w[j - 1], w[j])
                j -= 1
        return w

    def normalize(self, traversal) -> Path:
        word = [str(e) for e in traversal]
        if not word:
            raise KGraphError("empty traversal; use vertex() for vertices")
        for e in word:
            if e not in self.edges:
                raise KGraphError(f"unknown edge {e!r}")
        self._check_composable(word)
        deg = self._degree_of(word)
        w = self._reorder(word, colour_sequence(deg))
        return Path(self.edges[w[0]].r, self.edges[w[-1]].s, deg, tuple(w))

    def path(self, spec) -> Path:
        """Path from a vertex id, an edge id, or a sequence of edge ids."""
        if isinstance(spec, Path):
            return spec
        if isinstance(spec, str):
            if spec in self.vertices:
                return self.vertex(spec)
            spec = [spec]
        return self.normalize(spec)

    def compose(self, lam: Path, mu: Path) -> Path:
        if lam.s != mu.r:
            raise KGraphError(f"cannot compose: s({lam}) = {lam.s} but r({mu}) = {mu.r}")
        if lam.is_vertex:
            return mu
        if mu.is_vertex:
            return lam
        return self.normalize(lam.word + mu.word)

    def factorize(self, lam: Path, p: Degree) -> tuple[Path, Path]:
        p = tuple(p)
        if len(p) != self.k or min(p) < 0 or not deg_le(p, lam.degree):
            raise KGraphError(f"degree {p} is not below d({lam}) = {lam.degree}")
        rest = deg_sub(lam.degree, p)
        w = self._reorder(list(lam.word), colour_sequence(p) + colour_sequence(rest))
        n = sum(p)
        head, tail = w[:n], w[n:]
        mid = self.edges[head[-1]].s if head else lam.r
        first = Path(lam.r, mid, p, tuple(head)) if head else self.vertex(lam.r)
        second = Path(mid, lam.s, rest, tuple(tail)) if tail else self.vertex(lam.s)
        return first, second

    def segment(self, lam: Path, m: Degree, n: Degree) -> Path:
        """The piece lam(m, n) of degree n - m."""
        _, tail = self.factorize(lam, m)
        head, _ = self.factorize(tail, deg_sub(n, m))
        return head

    def paths(self, p: Degree, r: str | None = None, s: str | None = None) -> list[Path]:
        p = tuple(p)
        if len(p) != self.k or min(p) < 0:
            raise KGraphError(f"bad degree {p}")
        if p not in self._paths_cache:
            self._paths_cache[p] = self._enumerate(p)
        out = self._paths_cache[p]
        if r is not None:
            out = [x for x in out if x.r == r]
        if s is not None:
            out = [x for x in out if x.s == s]
        return out

    def _enumerate(self, p: Degree) -> list[Path]:
        cols = colour_sequence(p)
        if not cols:
            return [self.vertex(v) for v in self.vertices]
        by_colour: dict[int, list[str]] = defaultdict(list)
        for eid in sorted(self.edges, key=self._order.__getitem__):
            by_colour[self.edges[eid].colour].append(eid)
        out: list[Path] = []

        def grow(word: list[str]) -> None:
            if len(word) == len(cols):
                out.append(Path(self.edges[word[0]].r, self.edges[word[-1]].s, p, tuple(word)))
                return
            c = cols[len(word)]
            cands = by_colour[c] if not word else self.edges_into(self.edges[word[-1]].s, c)
            for e in cands:
                word.append(e)
                grow(word)
                word.pop()

        grow([])
        return out

    def paths_into(self, w: str, p: Degree) -> list[Path]:
        return self.paths(p, s=w)

    def degrees_upto(self, bound: Degree):
        return itertools.product(*(range(b + 1) for b in bound))

    def lambda_min(self, lam: Path, mu: Path) -> list[tuple[Path, Path]]:
        """Minimal common extensions: pairs (eta, zeta) with lam eta = mu zeta."""
        if lam.r != mu.r:
            return []
        m = deg_join(lam.degree, mu.degree)
        out = []
        for eta in self.paths(deg_sub(m, lam.degree), r=lam.s):
            whole = self.compose(lam, eta)
            head, zeta = self.factorize(whole, mu.degree)
            if head == mu:
                out.append((eta, zeta))
        return out

    def adjacency(self, i: int) -> np.ndarray:
        if not 1 <= i <= self.k:
            raise KGraphError(f"colour {i} outside 1..{self.k}")
        idx = {v: n for n, v in enumerate(self.vertices)}
        B = np.zeros((len(self.vertices), len(self.vertices)), dtype=np.int64)
        for e in self.edges.values():
            if e.colour == i:
                B[idx[e.r], idx[e.s]] += 1
        return B

    def path_to(self, start: str, target: str) -> Path:
        """Some path with source start and range target (BFS on the skeleton)."""
        if start == target:
            return self.vertex(start)
        prev: dict[str, str] = {start: ""}
        todo = deque([start])
        while todo:
            u = todo.popleft()
            for e in sorted(self.edges.values(), key=lambda x: self._order[x.id]):
                if e.s == u and e.r not in prev:
                    prev[e.r] = e.id
                    if e.r == target:
                        word = []
                        cur = target
                        while cur != start:
                            word.append(prev[cur])
                            cur = self.edges[prev[cur]].s
                        return self.normalize(word)
                    todo.append(e.r)
        raise KGraphError(f"no path from {start} to {target}")

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "vertices": list(self.vertices),
            "edges": [{"id": e.id, "r": e.r, "s": e.s, "colour": e.colour} for e in self.edges.values()],
            "squares": [list(sq) for sq in self.squares],
        }
