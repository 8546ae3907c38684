"""Graph document serialization and DOT export.

The JSON form is canonical: nodes are renumbered in a stable sort order and
keys are sorted, so equal graphs serialize to identical bytes and
serialize/parse round-trips are exact.
"""

from __future__ import annotations

import json

from .cfrontend import STATEMENT_KINDS
from .cpg import CpgEdge, CpgNode
from .repodep import RepoCpg

GRAPH_FORMAT = "repocpg-1"

_NODE_COLOR = {"pre": "red", "post": "green", "common": "gray"}
_EDGE_STYLE = {"AST": "dotted", "CFG": "solid", "CDG": "bold", "DDG": "solid", "CALL": "dashed"}


def _node_sort_key(node: CpgNode):
    return (node.file, node.line if node.line is not None else -1, node.kind, node.code, node.id)


def graph_to_document(g: RepoCpg, meta: dict | None = None) -> dict:
    order = sorted(g.nodes.values(), key=_node_sort_key)
    remap = {node.id: k for k, node in enumerate(order)}
    nodes = [
        {
            "id": remap[n.id],
            "kind": n.kind,
            "code": n.code,
            "line": n.line,
            "file": n.file,
            "function": n.function,
            "version": n.version,
        }
        for n in order
    ]
    edges = sorted(
        (
            {
                "src": remap[e.src],
                "dst": remap[e.dst],
                "etype": e.etype,
                "label": e.label,
                "version": e.version,
            }
            for e in g.edges
        ),
        key=lambda d: (d["src"], d["dst"], d["etype"], d["label"] or "", d["version"] or ""),
    )
    return {
        "format_version": GRAPH_FORMAT,
        "meta": meta or {},
        "nodes": nodes,
        "edges": edges,
    }


def serialize_graph(g: RepoCpg, meta: dict | None = None) -> str:
    return json.dumps(graph_to_document(g, meta), sort_keys=True, indent=2) + "\n"


def parse_graph(text: str) -> tuple[RepoCpg, dict]:
    """Inverse of serialize_graph.

    Statement ids are recovered from node kinds, CALL edges from edge types;
    attachment bookkeeping is not part of the document format.
    """
    doc = json.loads(text)
    if doc.get("format_version") != GRAPH_FORMAT:
        raise ValueError(f"unsupported graph format: {doc.get('format_version')}")
    nodes = {
        n["id"]: CpgNode(
            id=n["id"],
            kind=n["kind"],
            code=n["code"],
            line=n["line"],
            file=n["file"],
            function=n["function"],
            version=n["version"],
        )
        for n in doc["nodes"]
    }
    edges = [
        CpgEdge(src=e["src"], dst=e["dst"], etype=e["etype"], label=e["label"], version=e["version"])
        for e in doc["edges"]
    ]
    ast_children: dict[int, tuple[int, ...]] = {}
    for e in edges:
        if e.etype == "AST":
            ast_children[e.src] = ast_children.get(e.src, ()) + (e.dst,)
    g = RepoCpg(
        nodes=nodes,
        edges=edges,
        origin={},
        stmts=[nid for nid in sorted(nodes) if nodes[nid].kind in STATEMENT_KINDS],
        calls={},
        ast_children=ast_children,
        call_edges=[e for e in edges if e.etype == "CALL"],
        attachments=[],
    )
    return g, doc.get("meta", {})


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def export_dot(g: RepoCpg) -> str:
    """DOT digraph, node color by version (pre=red, post=green, common=gray),
    edge style by type (CALL dashed, AST dotted)."""
    lines = ["digraph repocpg {"]
    order = sorted(g.nodes.values(), key=_node_sort_key)
    for n in order:
        code = n.code if len(n.code) <= 40 else n.code[:37] + "..."
        label = _dot_escape(f"{n.kind}: {code}" if code else n.kind)
        color = _NODE_COLOR.get(n.version or "common", "gray")
        lines.append(f'  n{n.id} [label="{label}", color={color}];')
    for e in sorted(g.edges, key=lambda e: (e.src, e.dst, e.etype, e.label or "")):
        style = _EDGE_STYLE.get(e.etype, "solid")
        attrs = [f"style={style}"]
        if e.etype == "DDG" and e.label:
            attrs.append(f'label="{_dot_escape(e.label)}"')
        if e.etype == "CALL":
            attrs.append('color="blue"')
        lines.append(f"  n{e.src} -> n{e.dst} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
