"""Independent reference implementations used to cross-check the analyses.

Nothing here shares code with the production algorithms: post-dominance comes
from literal enumeration of simple CFG paths (or node-deletion reachability),
and reaching definitions from a chaotic full-sweep fixpoint over immutable
sets.  The selftest command and the acceptance suite run these against the
real implementations.
"""

from __future__ import annotations


def _succ_map(node_ids, edges) -> dict[int, list[int]]:
    succs: dict[int, list[int]] = {v: [] for v in node_ids}
    for a, b in edges:
        succs[a].append(b)
    return succs


def postdom_sets_by_paths(node_ids, edges, exit_id) -> dict[int, set[int]]:
    """Post-dominator sets from exhaustive enumeration of simple paths.

    postdom(a) is the intersection of the node sets of every simple path from
    `a` to the exit.  Enumeration stops early once the intersection cannot
    shrink further ({a, exit}).  Exponential in principle; callers keep the
    graphs small.
    """
    succs = _succ_map(node_ids, edges)
    floor_size = 2

    out: dict[int, set[int]] = {}
    for a in node_ids:
        if a == exit_id:
            out[a] = {exit_id}
            continue
        inter: set[int] | None = None

        def dfs(v: int, on_path: set[int]) -> bool:
            nonlocal inter
            if v == exit_id:
                inter = set(on_path) if inter is None else inter & on_path
                return len(inter) <= floor_size
            for s in succs.get(v, []):
                if s in on_path:
                    continue
                on_path.add(s)
                done = dfs(s, on_path)
                on_path.discard(s)
                if done:
                    return True
            return False

        dfs(a, {a})
        # No path to exit means post-dominance holds vacuously.
        out[a] = set(node_ids) if inter is None else inter
    return out


def postdominates_by_deletion(node_ids, edges, exit_id, b, a) -> bool:
    """b post-dominates a iff a cannot reach the exit once b is deleted."""
    if a == b:
        return True
    if b == exit_id:
        return True
    if a == exit_id:
        return False
    succs = _succ_map(node_ids, edges)
    seen = {a, b}
    stack = [a]
    while stack:
        for s in succs.get(stack.pop(), []):
            if s == exit_id:
                return False
            if s not in seen:
                seen.add(s)
                stack.append(s)
    return True


def _cdg_from_postdom(node_ids, edges, postdom_of) -> set[tuple[int, int]]:
    """Apply the control-dependence criterion given a post-dominance test:
    A -> B iff B post-dominates some successor of A and does not strictly
    post-dominate A."""
    out = set()
    for a, s in edges:
        for b in node_ids:
            if not postdom_of(b, s):
                continue
            if b == a or not postdom_of(b, a):
                out.add((a, b))
    return out


def cdg_by_path_enumeration(node_ids, edges, exit_id) -> set[tuple[int, int]]:
    sets = postdom_sets_by_paths(node_ids, edges, exit_id)
    return _cdg_from_postdom(node_ids, edges, lambda b, x: b in sets[x] or b == x)


def cdg_by_deletion(node_ids, edges, exit_id) -> set[tuple[int, int]]:
    return _cdg_from_postdom(
        node_ids, edges, lambda b, x: postdominates_by_deletion(node_ids, edges, exit_id, b, x)
    )


def naive_reaching_definitions(node_ids, cfg_edges, defs, uses) -> set[tuple[int, int, str]]:
    """Def-use edges by chaotic full-sweep iteration to convergence.

    Recomputes every node's in/out set each sweep with immutable frozensets;
    no worklist, no bit packing.
    """
    preds: dict[int, list[int]] = {v: [] for v in node_ids}
    for a, b in cfg_edges:
        preds[b].append(a)

    gen = {v: frozenset((v, x) for x in defs.get(v, frozenset())) for v in node_ids}
    out_sets = {v: frozenset() for v in node_ids}
    in_sets = {v: frozenset() for v in node_ids}
    while True:
        changed = False
        for v in node_ids:
            new_in = frozenset().union(*(out_sets[p] for p in preds[v])) if preds[v] else frozenset()
            killed = defs.get(v, frozenset())
            new_out = gen[v] | frozenset((d, x) for (d, x) in new_in if x not in killed)
            if new_in != in_sets[v] or new_out != out_sets[v]:
                changed = True
                in_sets[v] = new_in
                out_sets[v] = new_out
        if not changed:
            break

    return {
        (d, u, x)
        for u in node_ids
        for (d, x) in in_sets[u]
        if x in uses.get(u, frozenset())
    }


def check_projection(merged, original, side) -> None:
    """Projecting a merged graph to {side, common} must reproduce the input
    CPG of that side up to id renaming (kinds, codes, edge types, labels).

    Raises AssertionError with a description on any mismatch.
    """
    allowed = {side, "common"}
    pos = 0 if side == "pre" else 1
    node_map = {}
    for nid, node in merged.nodes.items():
        if node.version not in allowed:
            continue
        orig = merged.origin[nid][pos]
        assert orig is not None, f"{side} node {nid} has no {side}-side origin"
        node_map[nid] = orig
    assert sorted(node_map.values()) == sorted(original.nodes), "node sets differ"
    for mid, oid in node_map.items():
        m, o = merged.nodes[mid], original.nodes[oid]
        # Lines shift under the diff; common nodes keep the pre-side line.
        assert (m.kind, m.code, m.function) == (o.kind, o.code, o.function), (
            f"node {mid} does not correspond to original {oid}"
        )
    proj = {
        (node_map[e.src], node_map[e.dst], e.etype, e.label)
        for e in merged.edges
        if e.version in allowed
    }
    orig_edges = {(e.src, e.dst, e.etype, e.label) for e in original.edges}
    assert proj == orig_edges, f"edge sets differ: {proj ^ orig_edges}"


def check_slice_soundness(g, retained, seeds, hops, excluded_version) -> None:
    """Every retained node must be justified: a seed, a statement with a
    CDG/DDG path of length <= hops to a seed, an attachment member whose
    CALL edge source is retained, or a token under a retained statement.
    Verified per node by breadth-first search from that node.

    Raises AssertionError naming the first unjustified node.
    """
    allowed = {n for n, node in g.nodes.items() if node.version != excluded_version}
    adj: dict[int, set[int]] = {}
    for e in g.edges:
        if e.etype not in ("CDG", "DDG") or e.version == excluded_version:
            continue
        if e.src in allowed and e.dst in allowed:
            adj.setdefault(e.src, set()).add(e.dst)
            adj.setdefault(e.dst, set()).add(e.src)

    stmt_set = set(g.stmts)
    member_of = {}
    for att in g.attachments:
        for n in att.node_ids:
            member_of[n] = att
    parent_of = {}
    for n, kids in g.ast_children.items():
        for k in kids:
            parent_of[k] = n

    def bfs_hits_seed(start: int) -> bool:
        frontier = {start}
        seen = {start}
        for _ in range(hops):
            nxt = set()
            for v in frontier:
                nxt |= adj.get(v, set())
            nxt -= seen
            if nxt & seeds:
                return True
            seen |= nxt
            frontier = nxt
        return False

    for n in sorted(retained):
        node = g.nodes[n]
        assert node.version != excluded_version, f"node {n} violates version safety"
        if n in member_of:
            att = member_of[n]
            assert any(
                e.dst == att.entry and e.src in retained and e.version != excluded_version
                for e in g.call_edges
            ), f"attachment node {n} not reachable via a retained CALL edge"
        elif n in stmt_set:
            assert n in seeds or bfs_hits_seed(n), (
                f"statement {n} has no qualifying path to a seed"
            )
        elif node.kind in ("Entry", "Exit"):
            raise AssertionError(f"synthetic node {n} retained outside an attachment")
        else:
            # Token node: climb to the owning statement.
            cur = n
            while cur in parent_of and cur not in stmt_set:
                cur = parent_of[cur]
            assert cur in stmt_set and cur in retained, f"token node {n} has no retained statement"


def reaches_by_def_clear_path(node_ids, cfg_edges, defs, d, u, var) -> bool:
    """The definition of `var` at d reaches u iff some CFG path from a
    successor of d arrives at u without an intermediate redefinition."""
    succs = _succ_map(node_ids, cfg_edges)
    frontier = [s for s in succs.get(d, [])]
    seen = set()
    while frontier:
        v = frontier.pop()
        if v == u:
            return True
        if v in seen or var in defs.get(v, frozenset()):
            continue
        seen.add(v)
        frontier.extend(succs.get(v, []))
    return False
