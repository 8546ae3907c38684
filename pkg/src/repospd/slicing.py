"""Change-seeded slicing of the dependency-attached merged graph.

The final graph is the union of a deleted-based slice (seeded on pre-only
statements, blind to post-only elements) and an added-based slice (the
mirror image).  Context joins a slice through CDG/DDG proximity to a seed,
attached callee subgraphs join through CALL edges from retained call
statements, and retained statements keep their expression subtrees.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .repodep import Attachment, RepoCpg

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SliceConfig:
    hops: int = 1
    include_ast_subtrees: bool = True

    def __post_init__(self) -> None:
        if self.hops < 1:
            raise ValueError("hops must be >= 1")


def change_node_set(g: RepoCpg) -> tuple[set[int], set[int]]:
    """Seed sets: (pre-only statements, post-only statements), excluding
    attached dependency subgraphs."""
    attached = g.attached_ids()
    deleted = {s for s in g.stmts if s not in attached and g.nodes[s].version == "pre"}
    added = {s for s in g.stmts if s not in attached and g.nodes[s].version == "post"}
    return deleted, added


def slice_nodes(g: RepoCpg, direction: str, cfg: SliceConfig) -> set[int]:
    """One directional slice.  `deleted` sees only the pre-patch world
    (post-only nodes and edges do not exist for it) and vice versa."""
    if direction not in ("deleted", "added"):
        raise ValueError(f"unknown slice direction: {direction}")
    excluded = "post" if direction == "deleted" else "pre"
    deleted, added = change_node_set(g)
    seeds = deleted if direction == "deleted" else added

    allowed = {n for n, node in g.nodes.items() if node.version != excluded}
    adj: dict[int, set[int]] = {}
    for e in g.edges:
        if e.etype not in ("CDG", "DDG") or e.version == excluded:
            continue
        if e.src in allowed and e.dst in allowed:
            adj.setdefault(e.src, set()).add(e.dst)
            adj.setdefault(e.dst, set()).add(e.src)

    stmt_set = set(g.stmts)
    retained = set(seeds)
    frontier = set(seeds)
    for _ in range(cfg.hops):
        nxt: set[int] = set()
        for n in frontier:
            nxt |= adj.get(n, set())
        nxt -= frontier
        retained |= {n for n in nxt if n in stmt_set}
        frontier = nxt  # non-statement nodes (Entry) pass hops through
        if not frontier:
            break

    # Attachment token nodes are governed by the AST-subtree rule below.
    by_entry: dict[int, Attachment] = {att.entry: att for att in g.attachments}
    while True:
        grew = False
        for e in g.call_edges:
            if e.version == excluded or e.src not in retained:
                continue
            att = by_entry.get(e.dst)
            if att is None:
                continue
            members = {
                n
                for n in att.node_ids
                if n in allowed and (n in stmt_set or g.nodes[n].kind in ("Entry", "Exit"))
            }
            if not members <= retained:
                retained |= members
                grew = True
        if not grew:
            break

    if cfg.include_ast_subtrees:
        stack = [n for n in retained if n in stmt_set]
        while stack:
            for child in g.ast_children.get(stack.pop(), ()):
                if child in allowed and child not in retained:
                    retained.add(child)
                    stack.append(child)
    return retained


def finalize_repocpg(g: RepoCpg, cfg: SliceConfig) -> RepoCpg:
    """Union of the two slices with induced edges; isolated synthetic nodes
    are dropped.  An empty result (nothing parseable changed) is valid."""
    retained = slice_nodes(g, "deleted", cfg) | slice_nodes(g, "added", cfg)
    edges = [e for e in g.edges if e.src in retained and e.dst in retained]
    degree: dict[int, int] = {}
    for e in edges:
        degree[e.src] = degree.get(e.src, 0) + 1
        degree[e.dst] = degree.get(e.dst, 0) + 1
    retained = {
        n
        for n in retained
        if g.nodes[n].kind not in ("Entry", "Exit") or degree.get(n, 0) > 0
    }
    edges = [e for e in edges if e.src in retained and e.dst in retained]
    if not retained:
        log.warning("slice produced an empty graph (no change-related nodes)")

    call_edges = [e for e in g.call_edges if e.src in retained and e.dst in retained]
    attachments = []
    for att in g.attachments:
        kept = tuple(n for n in att.node_ids if n in retained)
        if kept:
            attachments.append(Attachment(key=att.key, entry=att.entry, node_ids=kept))
    return RepoCpg(
        nodes={n: g.nodes[n] for n in sorted(retained)},
        edges=edges,
        origin={n: g.origin.get(n, (None, None)) for n in sorted(retained)},
        stmts=[s for s in g.stmts if s in retained],
        calls={s: c for s, c in g.calls.items() if s in retained},
        ast_children={
            n: tuple(k for k in kids if k in retained)
            for n, kids in g.ast_children.items()
            if n in retained
        },
        call_edges=call_edges,
        attachments=attachments,
    )
