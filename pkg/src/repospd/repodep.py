"""Repository-level dependencies: function index, call graph, and attachment
of callee subgraphs to the merged patch graph.

Call sites inside change-related statements are resolved by name against the
snapshot-appropriate index (same file beats same directory beats
path-lexicographic order) and the callee's CPG is attached once per
(file, function, version class), with a CALL edge from each call statement to
the callee's Entry node.
"""

from __future__ import annotations

import logging
import posixpath
from dataclasses import dataclass, field

from .cfrontend import Ast, FunctionDef, collect_functions, parse_text
from .cpg import Cpg, CpgEdge, CpgNode, analyze_statement, assemble_cpg, statements_in
from .ingest import FileChange, RepoSnapshot, diff_lines
from .merge import MergeCpg, match_nodes, merge_graphs

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FunctionLocation:
    name: str
    file: str
    line_span: tuple[int, int]
    ordinal: int  # position among same-name definitions in the same file


@dataclass
class FunctionIndex:
    version: str
    by_name: dict[str, list[FunctionLocation]]
    functions: dict[str, list[FunctionDef]]  # per file, source order
    asts: dict[str, Ast]
    files: dict[str, list[str]]  # raw lines, for cross-snapshot comparison


@dataclass(frozen=True)
class CallSite:
    caller: str  # "<file>::<function>"
    callee: str
    site: int  # statement node id within the caller file's parse tree


@dataclass
class CallGraph:
    edges: list[CallSite]


def index_repository(snapshot: RepoSnapshot) -> tuple[FunctionIndex, CallGraph]:
    """Parse every file (totally) and record all function definitions plus
    one call edge per call site, including calls to names with no definition
    in the repository."""
    by_name: dict[str, list[FunctionLocation]] = {}
    functions: dict[str, list[FunctionDef]] = {}
    asts: dict[str, Ast] = {}
    call_edges: list[CallSite] = []
    for path in sorted(snapshot.files):
        ast = parse_text("\n".join(snapshot.files[path]), file=path)
        asts[path] = ast
        fns = collect_functions(ast)
        functions[path] = fns
        seen: dict[str, int] = {}
        for fn in fns:
            ordinal = seen.get(fn.name, 0)
            seen[fn.name] = ordinal + 1
            by_name.setdefault(fn.name, []).append(
                FunctionLocation(name=fn.name, file=path, line_span=fn.line_span, ordinal=ordinal)
            )
            for stmt in statements_in(ast, fn.body):
                _, _, calls = analyze_statement(ast, stmt)
                for callee in calls:
                    call_edges.append(CallSite(caller=f"{path}::{fn.name}", callee=callee, site=stmt))
    index = FunctionIndex(
        version=snapshot.version,
        by_name=by_name,
        functions=functions,
        asts=asts,
        files=dict(snapshot.files),
    )
    return index, CallGraph(edges=call_edges)


def index_to_json(index: FunctionIndex, callgraph: CallGraph) -> dict:
    return {
        "format_version": "repospd-index-1",
        "snapshot_version": index.version,
        "functions": {
            name: [{"file": loc.file, "line_span": list(loc.line_span)} for loc in locs]
            for name, locs in sorted(index.by_name.items())
        },
        "calls": [[c.caller, c.callee, c.site] for c in callgraph.edges],
    }


@dataclass(frozen=True)
class ResolvedCall:
    site: int  # merged statement id
    loc: FunctionLocation
    version: str  # pre | post | common


def _resolve_name(name: str, caller_file: str, index: FunctionIndex) -> FunctionLocation | None:
    candidates = index.by_name.get(name)
    if not candidates:
        return None

    caller_dir = posixpath.dirname(caller_file)

    def priority(loc: FunctionLocation) -> tuple:
        if loc.file == caller_file:
            rank = 0
        elif posixpath.dirname(loc.file) == caller_dir:
            rank = 1
        else:
            rank = 2
        return (rank, loc.file, loc.line_span[0])

    ranked = sorted(candidates, key=priority)
    if len(ranked) > 1:
        log.debug("ambiguous callee %s from %s: chose %s", name, caller_file, ranked[0].file)
    return ranked[0]


def change_related_statements(g: MergeCpg) -> set[int]:
    """Changed statements plus common statements CDG/DDG-adjacent to one."""
    stmt_set = set(g.stmts)
    changed = {s for s in g.stmts if g.nodes[s].version in ("pre", "post")}
    related = set(changed)
    for e in g.edges:
        if e.etype not in ("CDG", "DDG"):
            continue
        for a, b in ((e.src, e.dst), (e.dst, e.src)):
            if a in changed and b in stmt_set and g.nodes[b].version == "common":
                related.add(b)
    return related


def resolve_call_sites(
    g: MergeCpg, idx_pre: FunctionIndex, idx_post: FunctionIndex
) -> list[ResolvedCall]:
    """Resolve callee names of change-related statements.  A pre statement
    resolves against the pre index, post against post, common against both
    (one common entry when both sides agree)."""
    resolved: list[ResolvedCall] = []
    for site in sorted(change_related_statements(g)):
        node = g.nodes[site]
        for callee in g.calls.get(site, ()):
            if node.version == "pre":
                loc = _resolve_name(callee, node.file, idx_pre)
                if loc is not None:
                    resolved.append(ResolvedCall(site=site, loc=loc, version="pre"))
            elif node.version == "post":
                loc = _resolve_name(callee, node.file, idx_post)
                if loc is not None:
                    resolved.append(ResolvedCall(site=site, loc=loc, version="post"))
            else:
                pre_loc = _resolve_name(callee, node.file, idx_pre)
                post_loc = _resolve_name(callee, node.file, idx_post)
                if pre_loc is not None and post_loc is not None and pre_loc.file == post_loc.file:
                    resolved.append(ResolvedCall(site=site, loc=pre_loc, version="common"))
                else:
                    if pre_loc is not None:
                        resolved.append(ResolvedCall(site=site, loc=pre_loc, version="pre"))
                    if post_loc is not None:
                        resolved.append(ResolvedCall(site=site, loc=post_loc, version="post"))
    return resolved


@dataclass
class Attachment:
    key: tuple[str, str, str]  # (file, function, version class)
    entry: int
    node_ids: tuple[int, ...]


@dataclass
class RepoCpg:
    nodes: dict[int, CpgNode]
    edges: list[CpgEdge]
    origin: dict[int, tuple[int | None, int | None]]
    stmts: list[int]
    calls: dict[int, tuple[str, ...]]
    ast_children: dict[int, tuple[int, ...]] = field(default_factory=dict)
    call_edges: list[CpgEdge] = field(default_factory=list)
    attachments: list[Attachment] = field(default_factory=list)

    def attached_ids(self) -> set[int]:
        out: set[int] = set()
        for att in self.attachments:
            out.update(att.node_ids)
        return out


def from_merge(g: MergeCpg) -> RepoCpg:
    return RepoCpg(
        nodes=dict(g.nodes),
        edges=list(g.edges),
        origin=dict(g.origin),
        stmts=list(g.stmts),
        calls=dict(g.calls),
        ast_children=dict(g.ast_children),
    )


def _find_function(index: FunctionIndex, file: str, name: str, ordinal: int) -> FunctionDef | None:
    matches = [fn for fn in index.functions.get(file, []) if fn.name == name]
    if ordinal < len(matches):
        return matches[ordinal]
    return matches[0] if matches else None


def _uniform(cpg: Cpg, version: str) -> MergeCpg:
    nodes = {}
    for nid, n in cpg.nodes.items():
        nodes[nid] = CpgNode(
            id=nid, kind=n.kind, code=n.code, line=n.line, file=n.file,
            function=n.function, version=version,
        )
    edges = [
        CpgEdge(src=e.src, dst=e.dst, etype=e.etype, label=e.label, version=version)
        for e in cpg.edges
    ]
    return MergeCpg(
        nodes=nodes,
        edges=edges,
        origin={nid: (nid, nid) for nid in nodes},
        stmts=list(cpg.stmts),
        calls=dict(cpg.calls),
        ast_children=dict(cpg.ast_children),
    )


def _project(g: MergeCpg, allowed: set[str]) -> MergeCpg:
    nodes = {nid: n for nid, n in g.nodes.items() if n.version in allowed}
    edges = [e for e in g.edges if e.version in allowed and e.src in nodes and e.dst in nodes]
    return MergeCpg(
        nodes=nodes,
        edges=edges,
        origin={nid: g.origin.get(nid, (None, None)) for nid in nodes},
        stmts=[s for s in g.stmts if s in nodes],
        calls={s: c for s, c in g.calls.items() if s in nodes},
        ast_children={
            n: tuple(k for k in kids if k in nodes)
            for n, kids in g.ast_children.items()
            if n in nodes
        },
    )


def _callee_subgraph(
    rc: ResolvedCall, idx_pre: FunctionIndex, idx_post: FunctionIndex
) -> tuple[str, MergeCpg] | None:
    """Build the callee's labeled subgraph and its version class.

    Byte-identical callee files attach once as common; a callee whose file
    changed under the patch is itself merged and projected to the site's
    side (full merged graph for common sites)."""
    file, name, ordinal = rc.loc.file, rc.loc.name, rc.loc.ordinal
    pre_fn = _find_function(idx_pre, file, name, ordinal)
    post_fn = _find_function(idx_post, file, name, ordinal)
    identical = idx_pre.files.get(file) is not None and idx_pre.files.get(file) == idx_post.files.get(file)

    if identical and pre_fn is not None:
        return "common", _uniform(assemble_cpg(idx_pre.asts[file], pre_fn), "common")
    if pre_fn is not None and post_fn is not None:
        pre_cpg = assemble_cpg(idx_pre.asts[file], pre_fn)
        post_cpg = assemble_cpg(idx_post.asts[file], post_fn)
        deleted, added, line_map = diff_lines(idx_pre.files[file], idx_post.files[file])
        change = FileChange(path=file, deleted=deleted, added=added, line_map=line_map)
        merged = merge_graphs(pre_cpg, post_cpg, match_nodes(pre_cpg, post_cpg, change))
        if rc.version == "pre":
            return "pre", _project(merged, {"pre", "common"})
        if rc.version == "post":
            return "post", _project(merged, {"post", "common"})
        return "common", merged
    if pre_fn is not None:
        return "pre", _uniform(assemble_cpg(idx_pre.asts[file], pre_fn), "pre")
    if post_fn is not None:
        return "post", _uniform(assemble_cpg(idx_post.asts[file], post_fn), "post")
    return None


def attach_dependencies(
    g: MergeCpg,
    resolved: list[ResolvedCall],
    idx_pre: FunctionIndex,
    idx_post: FunctionIndex,
    dep_depth: int = 1,
) -> RepoCpg:
    """Attach one level (or `dep_depth` levels) of callee subgraphs, sharing
    attachments across call sites of the same (callee, version class)."""
    repo = from_merge(g)
    next_id = (max(repo.nodes) + 1) if repo.nodes else 0
    cache: dict[tuple[str, str, str], Attachment] = {}
    frontier = list(resolved)

    for depth in range(max(1, dep_depth)):
        new_attachments: list[Attachment] = []
        for rc in sorted(frontier, key=lambda r: (r.site, r.loc.file, r.loc.name, r.version)):
            built = _callee_subgraph(rc, idx_pre, idx_post)
            if built is None:
                continue
            version_class, sub = built
            key = (rc.loc.file, rc.loc.name, version_class)
            att = cache.get(key)
            if att is None:
                remap = {}
                for nid in sorted(sub.nodes):
                    remap[nid] = next_id
                    node = sub.nodes[nid]
                    repo.nodes[next_id] = CpgNode(
                        id=next_id, kind=node.kind, code=node.code, line=node.line,
                        file=node.file, function=node.function, version=node.version,
                    )
                    next_id += 1
                repo.edges.extend(
                    CpgEdge(
                        src=remap[e.src], dst=remap[e.dst], etype=e.etype,
                        label=e.label, version=e.version,
                    )
                    for e in sub.edges
                )
                repo.stmts.extend(remap[s] for s in sub.stmts)
                repo.calls.update({remap[s]: c for s, c in sub.calls.items()})
                repo.ast_children.update(
                    {remap[n]: tuple(remap[k] for k in kids) for n, kids in sub.ast_children.items()}
                )
                entry = next(remap[nid] for nid in sorted(sub.nodes) if sub.nodes[nid].kind == "Entry")
                att = Attachment(key=key, entry=entry, node_ids=tuple(remap[n] for n in sorted(sub.nodes)))
                cache[key] = att
                repo.attachments.append(att)
                new_attachments.append(att)
            call_edge = CpgEdge(
                src=rc.site, dst=att.entry, etype="CALL", label=rc.loc.name, version=rc.version
            )
            repo.edges.append(call_edge)
            repo.call_edges.append(call_edge)

        if depth + 1 >= max(1, dep_depth):
            break
        frontier = []
        for att in new_attachments:
            for sid in att.node_ids:
                for callee in repo.calls.get(sid, ()):
                    node = repo.nodes[sid]
                    if node.version == "common":
                        pre_loc = _resolve_name(callee, node.file, idx_pre)
                        post_loc = _resolve_name(callee, node.file, idx_post)
                        if pre_loc and post_loc and pre_loc.file == post_loc.file:
                            frontier.append(ResolvedCall(site=sid, loc=pre_loc, version="common"))
                        else:
                            if pre_loc:
                                frontier.append(ResolvedCall(site=sid, loc=pre_loc, version="pre"))
                            if post_loc:
                                frontier.append(ResolvedCall(site=sid, loc=post_loc, version="post"))
                    else:
                        idx = idx_pre if node.version == "pre" else idx_post
                        loc = _resolve_name(callee, node.file, idx)
                        if loc:
                            frontier.append(ResolvedCall(site=sid, loc=loc, version=node.version))
    return repo
