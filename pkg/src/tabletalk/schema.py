"""Annotated schema graph: relations, attributes, join edges, templates.

The graph is loaded once from a JSON annotation file and treated as
immutable afterwards; it is the knowledge base both for narrating table
contents and for wording query translations.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import Optional

from . import templates
from .errors import (
    BadTemplate,
    DanglingReference,
    MalformedDocument,
    MissingHeading,
    TemplateError,
)

SUBJECT_SLOT = "SUBJECT"


@dataclass
class RelationNode:
    name: str
    noun_singular: str
    noun_plural: str
    heading_attribute: str
    weight: float = 1.0
    short_template: Optional[str] = None
    long_template: Optional[str] = None
    alt_names: tuple[str, ...] = ()


@dataclass
class AttributeNode:
    relation: str
    name: str
    is_heading: bool = False
    weight: float = 1.0
    noun_singular: str = ""
    noun_plural: str = ""
    temporal: bool = False


@dataclass
class ProjectionEdge:
    relation: str
    attribute: str
    template: str
    is_default: bool = False


@dataclass
class JoinEdge:
    from_relation: str
    to_relation: str
    from_key: str
    to_key: str
    template: Optional[str] = None
    relative_clause_template: Optional[str] = None
    procedural_template: Optional[str] = None


@dataclass
class JoinPathTemplate:
    path: list[str]
    template: str
    procedural_template: Optional[str] = None


@dataclass
class PhraseEntry:
    """Translation wording for a join route (see docs/templates.md)."""

    route: list[str]
    text: str


@dataclass
class SchemaGraph:
    relations: list[RelationNode] = field(default_factory=list)
    attributes: list[AttributeNode] = field(default_factory=list)
    projections: list[ProjectionEdge] = field(default_factory=list)
    joins: list[JoinEdge] = field(default_factory=list)
    join_paths: list[JoinPathTemplate] = field(default_factory=list)
    phrases: list[PhraseEntry] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    # -- lookups --------------------------------------------------------

    def relation(self, name: str) -> RelationNode:
        rel = self.find_relation(name)
        if rel is None:
            raise DanglingReference(f"unknown relation {name!r}")
        return rel

    def find_relation(self, name: str) -> Optional[RelationNode]:
        key = name.upper()
        for rel in self.relations:
            if rel.name.upper() == key or key in (a.upper() for a in rel.alt_names):
                return rel
        return None

    def attributes_of(self, relation: str) -> list[AttributeNode]:
        key = self.relation(relation).name
        return [a for a in self.attributes if a.relation == key]

    def find_attribute(self, relation: str, name: str) -> Optional[AttributeNode]:
        rel = self.find_relation(relation)
        if rel is None:
            return None
        for attr in self.attributes:
            if attr.relation == rel.name and attr.name.upper() == name.upper():
                return attr
        return None

    def attribute(self, relation: str, name: str) -> AttributeNode:
        attr = self.find_attribute(relation, name)
        if attr is None:
            raise DanglingReference(f"unknown attribute {relation}.{name}")
        return attr

    def projection(self, relation: str, attribute: str) -> Optional[ProjectionEdge]:
        rel = self.relation(relation).name
        for edge in self.projections:
            if edge.relation == rel and edge.attribute.upper() == attribute.upper():
                return edge
        return None

    def key_attributes(self, relation: str) -> set[str]:
        """Attributes that serve as a key on either side of a join edge."""
        rel = self.relation(relation).name
        keys = set()
        for edge in self.joins:
            if edge.from_relation == rel:
                keys.add(edge.from_key)
            if edge.to_relation == rel:
                keys.add(edge.to_key)
        return keys

    def joins_between(self, a: str, b: str) -> list[JoinEdge]:
        a = self.relation(a).name
        b = self.relation(b).name
        return [
            e
            for e in self.joins
            if {e.from_relation, e.to_relation} == {a, b}
            or (a == b and e.from_relation == e.to_relation == a)
        ]

    def fk_backed(self, rel_a: str, attr_a: str, rel_b: str, attr_b: str) -> bool:
        """True when the attribute pair matches a declared join edge."""
        ra = self.find_relation(rel_a)
        rb = self.find_relation(rel_b)
        if ra is None or rb is None:
            return False
        for e in self.joins:
            pairs = {
                (e.from_relation, e.from_key.upper(), e.to_relation, e.to_key.upper()),
                (e.to_relation, e.to_key.upper(), e.from_relation, e.from_key.upper()),
            }
            if (ra.name, attr_a.upper(), rb.name, attr_b.upper()) in pairs:
                return True
        return False


# --- loading -----------------------------------------------------------

def load_schema(source) -> SchemaGraph:
    """Load and validate an annotation document (path, bytes, or stream)."""
    doc = _read_document(source)
    graph = _build_graph(doc)
    _check_references(graph)
    _check_templates(graph)
    if len(graph.relations) == 0:
        graph.warnings.append("annotation document declares no relations")
    else:
        graph.warnings.extend(_connectivity_warnings(graph))
    return graph


def _read_document(source) -> dict:
    if hasattr(source, "read"):
        raw = source.read()
    elif isinstance(source, (bytes, bytearray)):
        raw = bytes(source)
    elif isinstance(source, str) and source.lstrip().startswith("{"):
        raw = source
    else:
        with open(source, "rb") as fh:
            raw = fh.read()
    if isinstance(raw, (bytes, bytearray)):
        raw = raw.decode("utf-8")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedDocument("top level must be a JSON object")
    return doc


def _build_graph(doc: dict) -> SchemaGraph:
    graph = SchemaGraph()
    seen = set()
    for rel_doc in doc.get("relations", []):
        rel, attrs, projections = _build_relation(rel_doc)
        if rel.name.upper() in seen:
            raise MalformedDocument(f"duplicate relation {rel.name}")
        seen.add(rel.name.upper())
        graph.relations.append(rel)
        graph.attributes.extend(attrs)
        graph.projections.extend(projections)
    for join_doc in doc.get("joins", []):
        if "path" in join_doc:
            graph.join_paths.append(
                JoinPathTemplate(
                    path=list(join_doc["path"]),
                    template=join_doc.get("template", ""),
                    procedural_template=join_doc.get("procedural_template"),
                )
            )
        else:
            graph.joins.append(
                JoinEdge(
                    from_relation=_require(join_doc, "from"),
                    to_relation=_require(join_doc, "to"),
                    from_key=_require(join_doc, "from_key"),
                    to_key=_require(join_doc, "to_key"),
                    template=join_doc.get("template"),
                    relative_clause_template=join_doc.get("relative_clause"),
                    procedural_template=join_doc.get("procedural_template"),
                )
            )
    for phrase_doc in doc.get("phrases", []):
        graph.phrases.append(
            PhraseEntry(
                route=list(_require(phrase_doc, "route")),
                text=_require(phrase_doc, "text"),
            )
        )
    return graph


def _require(doc: dict, key: str):
    if key not in doc:
        raise MalformedDocument(f"missing required key {key!r} in {doc!r}")
    return doc[key]


def _build_relation(doc: dict):
    name = _require(doc, "name")
    noun = doc.get("noun", {})
    singular = noun.get("singular", name.lower())
    plural = noun.get("plural", singular + "s")
    weight = doc.get("weight", 1)
    if weight < 0:
        raise MalformedDocument(f"relation {name}: negative weight")
    heading = doc.get("heading")
    if not heading:
        raise MissingHeading(f"relation {name} declares no heading attribute")
    attrs = []
    projections = []
    seen = set()
    for attr_doc in doc.get("attributes", []):
        attr_name = _require(attr_doc, "name")
        if attr_name.upper() in seen:
            raise MalformedDocument(f"duplicate attribute {name}.{attr_name}")
        seen.add(attr_name.upper())
        attr_noun = attr_doc.get("noun", {})
        attr_weight = attr_doc.get("weight", 1)
        if attr_weight < 0:
            raise MalformedDocument(f"attribute {name}.{attr_name}: negative weight")
        attrs.append(
            AttributeNode(
                relation=name,
                name=attr_name,
                is_heading=attr_name.upper() == heading.upper(),
                weight=attr_weight,
                noun_singular=attr_noun.get("singular", attr_name.lower()),
                noun_plural=attr_noun.get(
                    "plural", attr_noun.get("singular", attr_name.lower()) + "s"
                ),
                temporal=attr_doc.get("temporal", False),
            )
        )
        template = attr_doc.get("template")
        if template is None:
            template = f'"the {attrs[-1].noun_singular} of a {singular}"'
            projections.append(ProjectionEdge(name, attr_name, template, True))
        else:
            projections.append(ProjectionEdge(name, attr_name, template, False))
    if not any(a.is_heading for a in attrs):
        raise MissingHeading(
            f"relation {name}: heading {heading!r} names no declared attribute"
        )
    rel = RelationNode(
        name=name,
        noun_singular=singular,
        noun_plural=plural,
        heading_attribute=heading,
        weight=weight,
        short_template=doc.get("short_template"),
        long_template=doc.get("long_template"),
        alt_names=tuple(doc.get("aliases", ())),
    )
    return rel, attrs, projections


def _check_references(graph: SchemaGraph):
    for edge in graph.joins:
        for rel_name, key in (
            (edge.from_relation, edge.from_key),
            (edge.to_relation, edge.to_key),
        ):
            rel = graph.find_relation(rel_name)
            if rel is None:
                raise DanglingReference(f"join edge names unknown relation {rel_name!r}")
            if graph.find_attribute(rel.name, key) is None:
                raise DanglingReference(
                    f"join edge names unknown attribute {rel_name}.{key}"
                )
    for path in graph.join_paths:
        if len(path.path) < 3:
            raise MalformedDocument(
                f"join path {path.path} too short (interior relays required)"
            )
        _check_route(graph, path.path, "join path")
    for phrase in graph.phrases:
        if len(phrase.route) < 2:
            raise MalformedDocument(f"phrase route {phrase.route} too short")
        _check_route(graph, phrase.route, "phrase route")


def _check_route(graph: SchemaGraph, route: list[str], what: str):
    for name in route:
        if graph.find_relation(name) is None:
            raise DanglingReference(f"{what} names unknown relation {name!r}")
    for a, b in zip(route, route[1:]):
        if not graph.joins_between(a, b):
            raise MalformedDocument(
                f"{what} {route}: no join edge between {a} and {b}"
            )


def _iter_templates(graph: SchemaGraph):
    for rel in graph.relations:
        if rel.short_template:
            yield f"relation {rel.name} short_template", rel.short_template, None
        if rel.long_template:
            yield f"relation {rel.name} long_template", rel.long_template, None
    for proj in graph.projections:
        yield f"projection {proj.relation}.{proj.attribute}", proj.template, None
    for edge in graph.joins:
        where = f"join {edge.from_relation}->{edge.to_relation}"
        for label, text in (
            ("template", edge.template),
            ("relative_clause", edge.relative_clause_template),
            ("procedural_template", edge.procedural_template),
        ):
            if text:
                yield f"{where} {label}", text, None
    for path in graph.join_paths:
        where = f"join path {'-'.join(path.path)}"
        if path.template:
            yield f"{where} template", path.template, None
        if path.procedural_template:
            yield f"{where} procedural_template", path.procedural_template, None
    for phrase in graph.phrases:
        yield f"phrase {'-'.join(phrase.route)}", phrase.text, set(phrase.route)


def _check_templates(graph: SchemaGraph):
    for where, text, allowed in _iter_templates(graph):
        try:
            expr = templates.parse_template(text)
        except TemplateError as exc:
            raise BadTemplate(f"{where}: {exc}") from exc
        for ph in expr.placeholders():
            if ph.alias.upper() == SUBJECT_SLOT:
                continue
            if allowed is not None and not any(
                r.upper() == ph.alias.upper() for r in allowed
            ):
                raise DanglingReference(
                    f"{where}: placeholder alias {ph.alias!r} is not on the route"
                )
            rel = graph.find_relation(ph.alias)
            if rel is None:
                raise DanglingReference(
                    f"{where}: placeholder names unknown relation {ph.alias!r}"
                )
            if ph.attribute and graph.find_attribute(rel.name, ph.attribute) is None:
                raise DanglingReference(
                    f"{where}: placeholder names unknown attribute "
                    f"{ph.alias}.{ph.attribute}"
                )


def _connectivity_warnings(graph: SchemaGraph) -> list[str]:
    if not graph.relations:
        return []
    adjacency = {rel.name: set() for rel in graph.relations}
    for edge in graph.joins:
        a = graph.relation(edge.from_relation).name
        b = graph.relation(edge.to_relation).name
        adjacency[a].add(b)
        adjacency[b].add(a)
    start = graph.relations[0].name
    seen = {start}
    stack = [start]
    while stack:
        for nxt in adjacency[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    unreachable = sorted(set(adjacency) - seen)
    if unreachable:
        return [
            "join-edge graph is not connected; unreachable from "
            f"{start}: {', '.join(unreachable)}"
        ]
    return []


# --- validation as diagnostics ----------------------------------------

def validate(graph: SchemaGraph) -> list[str]:
    """Re-check every structural invariant; one diagnostic per violation."""
    diags: list[str] = []
    seen = set()
    for rel in graph.relations:
        if rel.name.upper() in seen:
            diags.append(f"duplicate relation name {rel.name}")
        seen.add(rel.name.upper())
        if rel.weight < 0:
            diags.append(f"relation {rel.name}: negative weight")
        headings = [
            a for a in graph.attributes if a.relation == rel.name and a.is_heading
        ]
        if len(headings) != 1:
            diags.append(
                f"relation {rel.name}: expected exactly one heading attribute, "
                f"found {len(headings)}"
            )
        elif headings[0].name.upper() != rel.heading_attribute.upper():
            diags.append(
                f"relation {rel.name}: heading_attribute "
                f"{rel.heading_attribute!r} does not match flagged attribute"
            )
    seen_attrs = set()
    for attr in graph.attributes:
        key = (attr.relation.upper(), attr.name.upper())
        if key in seen_attrs:
            diags.append(f"duplicate attribute {attr.relation}.{attr.name}")
        seen_attrs.add(key)
        if graph.find_relation(attr.relation) is None:
            diags.append(
                f"attribute {attr.relation}.{attr.name} names unknown relation"
            )
        if attr.weight < 0:
            diags.append(f"attribute {attr.relation}.{attr.name}: negative weight")
    projected = set()
    for proj in graph.projections:
        key = (proj.relation.upper(), proj.attribute.upper())
        if key in projected:
            diags.append(
                f"multiple projection edges for {proj.relation}.{proj.attribute}"
            )
        projected.add(key)
        if key not in seen_attrs:
            diags.append(
                f"projection edge names unknown attribute "
                f"{proj.relation}.{proj.attribute}"
            )
    for key in seen_attrs - projected:
        diags.append(f"attribute {key[0]}.{key[1]} has no projection edge")
    for edge in graph.joins:
        for rel_name, attr_name in (
            (edge.from_relation, edge.from_key),
            (edge.to_relation, edge.to_key),
        ):
            if graph.find_relation(rel_name) is None:
                diags.append(f"join edge names unknown relation {rel_name}")
            elif graph.find_attribute(rel_name, attr_name) is None:
                diags.append(f"join edge names unknown attribute {rel_name}.{attr_name}")
    for path in graph.join_paths:
        if len(path.path) < 3:
            diags.append(f"join path {path.path} shorter than 3 relations")
        for a, b in zip(path.path, path.path[1:]):
            if (
                graph.find_relation(a) is None
                or graph.find_relation(b) is None
                or not graph.joins_between(a, b)
            ):
                diags.append(f"join path {path.path}: {a} and {b} are not joined")
    if graph.relations:
        diags.extend(_connectivity_warnings(graph))
    return diags


# --- output ------------------------------------------------------------

def emit_dot(graph: SchemaGraph) -> str:
    """Render relations and join edges as a deterministic DOT digraph."""
    lines = ["digraph schema {", "  rankdir=LR;", '  node [shape=box];']
    for rel in sorted(graph.relations, key=lambda r: r.name):
        label = f"{rel.name}|{rel.heading_attribute}"
        lines.append(f'  "{rel.name}" [label="{label}"];')
    edges = sorted(
        graph.joins,
        key=lambda e: (e.from_relation, e.to_relation, e.from_key, e.to_key),
    )
    for edge in edges:
        lines.append(
            f'  "{edge.from_relation}" -> "{edge.to_relation}" '
            f'[label="{edge.from_key}={edge.to_key}"];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def serialize(graph: SchemaGraph) -> str:
    """Inverse of load_schema for validated graphs (round-trip identity)."""
    doc = {"relations": [], "joins": [], "phrases": []}
    for rel in graph.relations:
        rel_doc = {
            "name": rel.name,
            "noun": {"singular": rel.noun_singular, "plural": rel.noun_plural},
            "heading": rel.heading_attribute,
            "weight": rel.weight,
            "attributes": [],
        }
        if rel.alt_names:
            rel_doc["aliases"] = list(rel.alt_names)
        if rel.short_template:
            rel_doc["short_template"] = rel.short_template
        if rel.long_template:
            rel_doc["long_template"] = rel.long_template
        for attr in graph.attributes:
            if attr.relation != rel.name:
                continue
            attr_doc = {
                "name": attr.name,
                "weight": attr.weight,
                "noun": {"singular": attr.noun_singular, "plural": attr.noun_plural},
            }
            if attr.temporal:
                attr_doc["temporal"] = True
            proj = graph.projection(rel.name, attr.name)
            if proj is not None and not proj.is_default:
                attr_doc["template"] = proj.template
            rel_doc["attributes"].append(attr_doc)
        doc["relations"].append(rel_doc)
    for edge in graph.joins:
        edge_doc = {
            "from": edge.from_relation,
            "to": edge.to_relation,
            "from_key": edge.from_key,
            "to_key": edge.to_key,
        }
        if edge.template:
            edge_doc["template"] = edge.template
        if edge.relative_clause_template:
            edge_doc["relative_clause"] = edge.relative_clause_template
        if edge.procedural_template:
            edge_doc["procedural_template"] = edge.procedural_template
        doc["joins"].append(edge_doc)
    for path in graph.join_paths:
        path_doc = {"path": list(path.path), "template": path.template}
        if path.procedural_template:
            path_doc["procedural_template"] = path.procedural_template
        doc["joins"].append(path_doc)
    for phrase in graph.phrases:
        doc["phrases"].append({"route": list(phrase.route), "text": phrase.text})
    return json.dumps(doc, indent=2)


def loads(text: str) -> SchemaGraph:
    return load_schema(io.BytesIO(text.encode("utf-8")))
