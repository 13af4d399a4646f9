"""Input documents: JSON schema, parsing, canonical serialisation and bundled fixtures."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path as FsPath

import jsonschema

from .automaton import Automaton
from .groupoid import Groupoid
from .kgraph import KGraph

FIXTURES = {"single-vertex": "single_vertex.json", "basilica": "basilica.json"}

_ID = {"type": "string", "minLength": 1}

SCHEMA = {
    "type": "object",
    "required": ["k", "vertices", "edges", "squares", "states", "trans"],
    "properties": {
        "name": {"type": "string"},
        "k": {"type": "integer", "minimum": 1},
        "vertices": {"type": "array", "items": _ID, "minItems": 1},
        "edges": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "r", "s", "colour"],
                "properties": {"id": _ID, "r": _ID, "s": _ID, "colour": {"type": "integer", "minimum": 1}},
                "additionalProperties": False,
            },
        },
        "squares": {"type": "array", "items": {"type": "array", "items": _ID, "minItems": 4, "maxItems": 4}},
        "states": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "r", "s"],
                "properties": {"id": _ID, "r": _ID, "s": _ID},
                "additionalProperties": False,
            },
        },
        "trans": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["state", "edge", "out_edge", "out_state"],
                "properties": {"state": _ID, "edge": _ID, "out_edge": _ID, "out_state": _ID},
                "additionalProperties": False,
            },
        },
        "dynamics": {
            "type": "object",
            "required": ["beta", "r"],
            "properties": {"beta": {"type": "number"}, "r": {"type": "array", "items": {"type": "number"}}},
        },
        "trace": {"type": "object", "additionalProperties": {"type": "number"}},
        "tolerances": {"type": "object", "additionalProperties": {"type": "number"}},
    },
    "additionalProperties": False,
}


class DocumentError(ValueError):
    pass


@dataclass
class ActionDocument:
    name: str
    graph: KGraph
    automaton: Automaton
    dynamics: dict | None = None
    trace: dict[str, float] | None = None
    tolerances: dict[str, float] = field(default_factory=dict)

    def groupoid(self, bound: int | None = None) -> Groupoid:
        return Groupoid(self.automaton) if bound is None else Groupoid(self.automaton, bound)


def _where(path) -> str:
    out = "$"
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def from_dict(data, name: str = "document") -> ActionDocument:
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise DocumentError(f"{name}: schema error at {_where(exc.absolute_path)}: {exc.message}") from None
    graph = KGraph(data["k"], data["vertices"], data["edges"], data["squares"])
    aut = Automaton(graph, data["states"], data["trans"])
    return ActionDocument(data.get("name", name), graph, aut, data.get("dynamics"), data.get("trace"),
                          dict(data.get("tolerances", {})))


def loads(text: str, name: str = "document") -> ActionDocument:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{name}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return from_dict(data, name)


def parse(file) -> ActionDocument:
    p = FsPath(file)
    return loads(p.read_text(), str(p))


def fixture_text(name: str) -> str:
    if name not in FIXTURES:
        raise DocumentError(f"unknown example {name!r}; choose from {', '.join(sorted(FIXTURES))}")
    return resources.files("ssakms").joinpath("fixtures").joinpath(FIXTURES[name]).read_text()


def load_fixture(name: str) -> ActionDocument:
    return loads(fixture_text(name), name)


def to_dict(doc: ActionDocument) -> dict:
    out = {"name": doc.name, "k": doc.graph.k}
    out.update(doc.graph.to_dict())
    out.update(doc.automaton.to_dict())
    if doc.dynamics is not None:
        out["dynamics"] = doc.dynamics
    if doc.trace is not None:
        out["trace"] = doc.trace
    if doc.tolerances:
        out["tolerances"] = doc.tolerances
    return canonical(out)


def canonical(data: dict) -> dict:
    """Canonical form of a document.

    Vertex, edge and state order is meaningful (it fixes vector and generator
    order) and is kept.  Squares form a set and transitions a table, so both
    are sorted.
    """
    out = dict(data)
    out["squares"] = sorted(list(sq) for sq in data["squares"])
    out["trans"] = sorted(data["trans"], key=lambda t: (t["state"], t["edge"]))
    return out


def serialize(doc: ActionDocument) -> str:
    return json.dumps(to_dict(doc), indent=1, sort_keys=True) + "\n"
