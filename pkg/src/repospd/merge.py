"""Fuse pre-patch and post-patch CPGs into one graph with version labels.

Matching is diff-anchored: statement nodes match when their lines correspond
under the file's line map and their normalized code is equal; token nodes
match positionally under matched statements; Entry/Exit match by role.
Matched elements become `common`, everything else keeps its side's label.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .cpg import Cpg, CpgEdge, CpgNode
from .ingest import FileChange


@dataclass
class NodeMatch:
    """Injective partial mapping pre-node-id <-> post-node-id."""

    pairs: dict[int, int]

    def __post_init__(self) -> None:
        values = list(self.pairs.values())
        if len(set(values)) != len(values):
            raise ValueError("node match is not injective")


@dataclass
class MergeCpg:
    nodes: dict[int, CpgNode]
    edges: list[CpgEdge]
    origin: dict[int, tuple[int | None, int | None]]
    stmts: list[int]
    calls: dict[int, tuple[str, ...]]
    ast_children: dict[int, tuple[int, ...]] = field(default_factory=dict)


def match_nodes(pre: Cpg, post: Cpg, change: FileChange | None) -> NodeMatch:
    """Diff-anchored matching for one function pair.

    `change=None` means the file is unchanged (identity line map).
    """
    if change is None:
        line_map = None  # identity
    else:
        line_map = dict(change.line_map)

    def mapped(line: int | None) -> int | None:
        if line is None:
            return None
        if line_map is None:
            return line
        return line_map.get(line)

    pairs: dict[int, int] = {pre.entry: post.entry, pre.exit: post.exit}

    unclaimed: dict[tuple[int, str, str], deque[int]] = {}
    for sid in post.stmts:
        node = post.nodes[sid]
        unclaimed.setdefault((node.line, node.kind, node.code), deque()).append(sid)

    for sid in pre.stmts:
        node = pre.nodes[sid]
        target_line = mapped(node.line)
        if target_line is None:
            continue
        bucket = unclaimed.get((target_line, node.kind, node.code))
        if not bucket:
            continue
        tid = bucket.popleft()
        pairs[sid] = tid
        _match_subtrees(pre, post, sid, tid, pairs)
    return NodeMatch(pairs=pairs)


def _match_subtrees(pre: Cpg, post: Cpg, a: int, b: int, pairs: dict[int, int]) -> None:
    ka = pre.ast_children.get(a, ())
    kb = post.ast_children.get(b, ())
    if len(ka) != len(kb):
        return
    for ca, cb in zip(ka, kb):
        if pre.nodes[ca].kind != post.nodes[cb].kind or pre.nodes[ca].code != post.nodes[cb].code:
            continue
        pairs[ca] = cb
        _match_subtrees(pre, post, ca, cb, pairs)


def merge_graphs(pre: Cpg, post: Cpg, match: NodeMatch) -> MergeCpg:
    """One merged graph: matched nodes collapse to `common`; an edge is
    common only when both endpoints are common and the same edge exists on
    both sides."""
    pre_map: dict[int, int] = {}
    post_map: dict[int, int] = {}
    nodes: dict[int, CpgNode] = {}
    origin: dict[int, tuple[int | None, int | None]] = {}
    counter = 0

    for nid in sorted(pre.nodes):
        node = pre.nodes[nid]
        matched = nid in match.pairs
        version = "common" if matched else "pre"
        nodes[counter] = CpgNode(
            id=counter,
            kind=node.kind,
            code=node.code,
            line=node.line,
            file=node.file,
            function=node.function,
            version=version,
        )
        origin[counter] = (nid, match.pairs.get(nid))
        pre_map[nid] = counter
        if matched:
            post_map[match.pairs[nid]] = counter
        counter += 1

    for nid in sorted(post.nodes):
        if nid in post_map:
            continue
        node = post.nodes[nid]
        nodes[counter] = CpgNode(
            id=counter,
            kind=node.kind,
            code=node.code,
            line=node.line,
            file=node.file,
            function=node.function,
            version="post",
        )
        origin[counter] = (None, nid)
        post_map[nid] = counter
        counter += 1

    pre_keys = {(pre_map[e.src], pre_map[e.dst], e.etype, e.label) for e in pre.edges}
    post_keys = {(post_map[e.src], post_map[e.dst], e.etype, e.label) for e in post.edges}
    edges = []
    for key in sorted(pre_keys | post_keys, key=lambda k: (k[0], k[1], k[2], k[3] or "")):
        src, dst, etype, label = key
        if key in pre_keys and key in post_keys:
            version = "common"
        elif key in pre_keys:
            version = "pre"
        else:
            version = "post"
        edges.append(CpgEdge(src=src, dst=dst, etype=etype, label=label, version=version))

    from_pre = set(pre_map.values())
    stmts = [pre_map[s] for s in pre.stmts] + [
        post_map[s] for s in post.stmts if post_map[s] not in from_pre
    ]
    calls = {pre_map[s]: pre.calls[s] for s in pre.stmts}
    for s in post.stmts:
        calls.setdefault(post_map[s], post.calls[s])
    ast_children: dict[int, tuple[int, ...]] = {}
    for nid, kids in pre.ast_children.items():
        ast_children[pre_map[nid]] = tuple(pre_map[k] for k in kids)
    for nid, kids in post.ast_children.items():
        ast_children.setdefault(post_map[nid], tuple(post_map[k] for k in kids))

    return MergeCpg(
        nodes=nodes,
        edges=edges,
        origin=origin,
        stmts=stmts,
        calls=calls,
        ast_children=ast_children,
    )


def merge_functions(
    pre_cpgs: list[Cpg], post_cpgs: list[Cpg], change: FileChange | None
) -> list[MergeCpg]:
    """Pair one file's function CPGs by name (in order, for duplicates) and
    merge each pair; unpaired functions merge against an empty counterpart."""
    empty_pre = _empty_like()
    by_name: dict[str, list[Cpg]] = {}
    for cpg in post_cpgs:
        by_name.setdefault(cpg.function, []).append(cpg)
    merged = []
    for cpg in pre_cpgs:
        bucket = by_name.get(cpg.function)
        if bucket:
            other = bucket.pop(0)
            merged.append(merge_graphs(cpg, other, match_nodes(cpg, other, change)))
        else:
            merged.append(merge_graphs(cpg, empty_pre, NodeMatch(pairs={})))
    for bucket in by_name.values():
        for cpg in bucket:
            merged.append(merge_graphs(empty_pre, cpg, NodeMatch(pairs={})))
    return merged


def _empty_like() -> Cpg:
    return Cpg(
        nodes={},
        edges=[],
        entry=-10,
        exit=-11,
        function="",
        file="",
        stmts=[],
        defs={},
        uses={},
        calls={},
        ast_children={},
    )


def combine_merges(parts: list[MergeCpg]) -> MergeCpg:
    """Disjoint union of per-function merges (id-shifted)."""
    nodes: dict[int, CpgNode] = {}
    edges: list[CpgEdge] = []
    origin: dict[int, tuple[int | None, int | None]] = {}
    stmts: list[int] = []
    calls: dict[int, tuple[str, ...]] = {}
    ast_children: dict[int, tuple[int, ...]] = {}
    offset = 0
    for part in parts:
        remap = {}
        for nid in sorted(part.nodes):
            node = part.nodes[nid]
            new_id = offset + nid
            remap[nid] = new_id
            nodes[new_id] = CpgNode(
                id=new_id,
                kind=node.kind,
                code=node.code,
                line=node.line,
                file=node.file,
                function=node.function,
                version=node.version,
            )
            origin[new_id] = part.origin.get(nid, (None, None))
        edges.extend(
            CpgEdge(src=remap[e.src], dst=remap[e.dst], etype=e.etype, label=e.label, version=e.version)
            for e in part.edges
        )
        stmts.extend(remap[s] for s in part.stmts)
        calls.update({remap[s]: c for s, c in part.calls.items()})
        ast_children.update({remap[n]: tuple(remap[k] for k in kids) for n, kids in part.ast_children.items()})
        offset += (max(part.nodes) + 1) if part.nodes else 0
    return MergeCpg(
        nodes=nodes, edges=edges, origin=origin, stmts=stmts, calls=calls, ast_children=ast_children
    )
